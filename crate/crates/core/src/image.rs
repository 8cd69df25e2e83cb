use crate::{Error, Result, Scalar};

/// Pixel array in `[0, 1]`, row-major with interleaved channels (HWC).
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    height: usize,
    width: usize,
    channels: usize,
    pixels: Vec<T>,
}

impl<T: Scalar> Image<T> {
    pub fn new(height: usize, width: usize, channels: usize, pixels: Vec<T>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::domain(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        let expected = height * width * channels;
        if pixels.len() != expected {
            return Err(Error::shape(
                format!("{height}x{width}x{channels} = {expected} values"),
                pixels.len(),
            ));
        }
        if let Some(i) = pixels
            .iter()
            .position(|p| !(*p >= T::zero() && *p <= T::one()))
        {
            return Err(Error::domain(format!(
                "pixel {i} = {} outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            pixels,
        })
    }

    /// Flat vector image (height 1, one channel), as used for toy inputs.
    pub fn from_vec(pixels: Vec<T>) -> Result<Self> {
        let n = pixels.len();
        Self::new(1, n, 1, pixels)
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: T) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    /// Builds an image from arbitrary values, clamping each into `[0, 1]`.
    pub fn from_clamped(
        height: usize,
        width: usize,
        channels: usize,
        mut pixels: Vec<T>,
    ) -> Result<Self> {
        for p in &mut pixels {
            *p = if p.is_nan() { T::zero() } else { p.clamp_unit() };
        }
        Self::new(height, width, channels, pixels)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<T> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, channel: usize) -> T {
        self.pixels[(row * self.width + col) * self.channels + channel]
    }

    /// RGB triple at `(row, col)`; panics on grayscale images.
    #[inline]
    pub fn rgb(&self, row: usize, col: usize) -> [T; 3] {
        assert_eq!(self.channels, 3, "rgb() on a grayscale image");
        let i = (row * self.width + col) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub(crate) fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(self.shape_string(), other.shape_string()))
        }
    }

    pub fn shape_string(&self) -> String {
        format!("{}x{}x{}", self.height, self.width, self.channels)
    }

    /// Same shape, new pixel values. Values must already lie in `[0, 1]`.
    pub fn with_pixels(&self, pixels: Vec<T>) -> Result<Self> {
        Self::new(self.height, self.width, self.channels, pixels)
    }

    /// Applies `f` pointwise; the result is clamped into `[0, 1]`.
    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        let pixels = self.pixels.iter().map(|&p| f(p).clamp_unit()).collect();
        Self {
            height: self.height,
            width: self.width,
            channels: self.channels,
            pixels,
        }
    }

    pub fn linf_distance(&self, other: &Self) -> T {
        self.pixels
            .iter()
            .zip(&other.pixels)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    /// Converts the pixel type (e.g. `f64` → `f32`).
    pub fn cast<U: Scalar>(&self) -> Image<U> {
        Image {
            height: self.height,
            width: self.width,
            channels: self.channels,
            pixels: self
                .pixels
                .iter()
                .map(|p| U::lit(p.as_f64()).clamp_unit())
                .collect(),
        }
    }
}
