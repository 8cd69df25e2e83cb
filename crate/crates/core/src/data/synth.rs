//! Synthetic traffic-sign fixtures.
//!
//! A sign is a filled convex shape centred in a square image over a flat
//! background, optionally carrying a white glyph drawn on a 3×3 cell grid in
//! the middle of the sign. Uniform per-channel noise is added to every pixel
//! and the result is clamped into `[0, 1]`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{rng, Error, Image, Result, Scalar};

pub const MIN_SIGN_SIZE: usize = 16;
pub const MAX_NOISE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignShape {
    Octagon,
    Circle,
    Triangle,
    Square,
    /// Square rotated by 45°.
    Diamond,
}

impl SignShape {
    /// Whether the point `(x, y)` (image coordinates scaled to `[0, 1]`) lies
    /// inside the shape.
    fn contains(self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - 0.5, y - 0.5);
        match self {
            SignShape::Circle => dx * dx + dy * dy <= 0.45 * 0.45,
            SignShape::Square => dx.abs() <= 0.4 && dy.abs() <= 0.4,
            SignShape::Diamond => dx.abs() + dy.abs() <= 0.46,
            SignShape::Octagon => {
                // regular octagon with flat sides, apothem a
                let a = 0.42;
                dx.abs() <= a
                    && dy.abs() <= a
                    && dx.abs() + dy.abs() <= a * std::f64::consts::SQRT_2
            }
            SignShape::Triangle => {
                // apex (0.5, 0.1), base from (0.04, 0.9) to (0.96, 0.9)
                if !(0.1..=0.9).contains(&y) {
                    return false;
                }
                let half = 0.46 * (y - 0.1) / 0.8;
                dx.abs() <= half
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignSpec {
    pub shape: SignShape,
    pub fill: [f64; 3],
    pub background: [f64; 3],
    pub size: usize,
    pub noise_amplitude: f64,
    pub seed: u64,
    /// 9-bit mask over a 3×3 grid (bit 8 = top-left, row-major) painted white.
    #[serde(default)]
    pub glyph: Option<u16>,
}

impl SignSpec {
    pub fn new(shape: SignShape, fill: [f64; 3], background: [f64; 3], size: usize) -> Self {
        Self {
            shape,
            fill,
            background,
            size,
            noise_amplitude: 0.0,
            seed: 0,
            glyph: None,
        }
    }

    pub fn noise(mut self, amplitude: f64, seed: u64) -> Self {
        self.noise_amplitude = amplitude;
        self.seed = seed;
        self
    }

    pub fn glyph(mut self, mask: u16) -> Self {
        self.glyph = Some(mask);
        self
    }
}

/// A rendered sign together with its ground-truth shape mask.
#[derive(Debug, Clone)]
pub struct SynthSign<T> {
    pub image: Image<T>,
    /// Row-major, `true` on pixels inside the sign shape.
    pub sign_mask: Vec<bool>,
}

impl<T> SynthSign<T> {
    pub fn sign_fraction(&self) -> f64 {
        self.sign_mask.iter().filter(|&&b| b).count() as f64 / self.sign_mask.len() as f64
    }
}

pub fn synth_sign<T: Scalar>(spec: &SignSpec) -> Result<SynthSign<T>> {
    if spec.size < MIN_SIGN_SIZE {
        return Err(Error::domain(format!(
            "sign size {} px is below the minimum of {MIN_SIGN_SIZE}",
            spec.size
        )));
    }
    let in_unit = |c: &[f64; 3]| c.iter().all(|v| (0.0..=1.0).contains(v));
    if !in_unit(&spec.fill) || !in_unit(&spec.background) {
        return Err(Error::domain("sign colors must lie in [0, 1]^3"));
    }
    if !(0.0..=MAX_NOISE).contains(&spec.noise_amplitude) {
        return Err(Error::domain(format!(
            "noise amplitude {} outside [0, {MAX_NOISE}]",
            spec.noise_amplitude
        )));
    }

    let n = spec.size;
    let mut rng = rng::rng_from(spec.seed, &[0x5167]);
    let mut pixels = Vec::with_capacity(n * n * 3);
    let mut sign_mask = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let x = (col as f64 + 0.5) / n as f64;
            let y = (row as f64 + 0.5) / n as f64;
            let inside = spec.shape.contains(x, y);
            sign_mask.push(inside);
            let color = if inside && glyph_covers(spec.glyph, x, y) {
                [1.0; 3]
            } else if inside {
                spec.fill
            } else {
                spec.background
            };
            for c in color {
                let noise = if spec.noise_amplitude > 0.0 {
                    rng.gen_range(-spec.noise_amplitude..=spec.noise_amplitude)
                } else {
                    0.0
                };
                pixels.push(T::lit((c + noise).clamp(0.0, 1.0)));
            }
        }
    }
    Ok(SynthSign {
        image: Image::new(n, n, 3, pixels)?,
        sign_mask,
    })
}

fn glyph_covers(glyph: Option<u16>, x: f64, y: f64) -> bool {
    let Some(mask) = glyph else { return false };
    // 3×3 grid over the central square [0.26, 0.74]²
    let (lo, hi) = (0.26, 0.74);
    if !(lo..hi).contains(&x) || !(lo..hi).contains(&y) {
        return false;
    }
    let cell = (hi - lo) / 3.0;
    let cx = ((x - lo) / cell) as u16;
    let cy = ((y - lo) / cell) as u16;
    let bit = 8 - (cy * 3 + cx);
    mask >> bit & 1 == 1
}

/// Class catalogue of the desk-scale sign task.
pub const SIGN_CLASSES: [&str; 11] = [
    "stop",
    "doNotEnter",
    "mandatoryRightTurn",
    "mandatoryLeftTurn",
    "mandatoryAhead",
    "mandatoryAheadOrRight",
    "mandatoryAheadOrLeft",
    "keepRight",
    "keepLeft",
    "trafficCircle",
    "yellowSigns",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignPalette {
    Red,
    Blue,
    Yellow,
}

/// Appearance of each class in [`SIGN_CLASSES`].
pub fn class_appearance(label: usize) -> (SignShape, SignPalette, Option<u16>) {
    const BLUE_GLYPHS: [u16; 8] = [
        0b001_011_001, // right turn
        0b100_110_100, // left turn
        0b010_010_010, // ahead
        0b010_011_010, // ahead or right
        0b010_110_010, // ahead or left
        0b000_001_011, // keep right
        0b000_100_110, // keep left
        0b111_101_111, // circle
    ];
    match label {
        0 => (SignShape::Octagon, SignPalette::Red, None),
        1 => (SignShape::Circle, SignPalette::Red, Some(0b000_111_000)),
        2..=9 => (SignShape::Circle, SignPalette::Blue, Some(BLUE_GLYPHS[label - 2])),
        _ => (SignShape::Diamond, SignPalette::Yellow, None),
    }
}

/// Saturated fill color of a palette, jittered by up to `jitter` per channel.
pub fn palette_color<R: Rng>(palette: SignPalette, jitter: f64, rng: &mut R) -> [f64; 3] {
    let base = match palette {
        SignPalette::Red => [0.85, 0.08, 0.08],
        SignPalette::Blue => [0.08, 0.2, 0.8],
        SignPalette::Yellow => [0.95, 0.85, 0.08],
    };
    let mut out = base;
    if jitter > 0.0 {
        for v in &mut out {
            *v = (*v + rng.gen_range(-jitter..=jitter)).clamp(0.0, 1.0);
        }
    }
    out
}

/// Labelled synthetic sign dataset over [`SIGN_CLASSES`], with varied fill
/// jitter, gray background level and noise amplitude in `[0, max_noise]`.
pub fn sign_dataset<T: Scalar>(
    per_class: usize,
    size: usize,
    max_noise: f64,
    seed: u64,
) -> Result<Dataset<T>> {
    let mut images = Vec::with_capacity(per_class * SIGN_CLASSES.len());
    let mut labels = Vec::with_capacity(images.capacity());
    for i in 0..per_class {
        for label in 0..SIGN_CLASSES.len() {
            let mut rng = rng::rng_from(seed, &[label as u64, i as u64]);
            let (shape, palette, glyph) = class_appearance(label);
            let fill = palette_color(palette, 0.07, &mut rng);
            let g = rng.gen_range(0.3..0.7);
            let noise = if max_noise > 0.0 {
                rng.gen_range(0.0..=max_noise)
            } else {
                0.0
            };
            let mut spec = SignSpec::new(shape, fill, [g, g, g], size).noise(noise, rng.gen());
            spec.glyph = glyph;
            images.push(synth_sign(&spec)?.image);
            labels.push(label);
        }
    }
    Dataset::new(images, labels, SIGN_CLASSES.len())
}
