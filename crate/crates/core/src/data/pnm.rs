//! Binary portable any-maps: P5 (grayscale) and P6 (RGB), maxval 255.

use std::fs;
use std::path::Path;

use crate::{Error, Image, ParseError, Result, Scalar};

#[inline]
pub(crate) fn quantize<T: Scalar>(p: T) -> u8 {
    (p.as_f64() * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn encode_pnm<T: Scalar>(img: &Image<T>) -> Vec<u8> {
    let magic = if img.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|&p| quantize(p)));
    out
}

pub fn decode_pnm<T: Scalar>(bytes: &[u8]) -> Result<Image<T>> {
    let mut pos = 0usize;
    let mut tokens = Vec::with_capacity(4);
    while tokens.len() < 4 {
        // whitespace and comments
        while pos < bytes.len() {
            match bytes[pos] {
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(ParseError::Header("unexpected end of header".into()).into());
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(ParseError::Header("missing separator after maxval".into()).into());
    }
    pos += 1;

    let channels = match tokens[0].as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(ParseError::Header(format!("unsupported magic {other:?}")).into()),
    };
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| ParseError::Header(format!("bad {what} {s:?}")).into())
    };
    let width = num(&tokens[1], "width")?;
    let height = num(&tokens[2], "height")?;
    let maxval = num(&tokens[3], "maxval")?;
    if maxval != 255 {
        return Err(ParseError::Header(format!("maxval {maxval} (only 255 supported)")).into());
    }
    let n = width * height * channels;
    let raster = bytes.get(pos..pos + n).ok_or(ParseError::Truncated {
        needed: pos + n,
        have: bytes.len(),
    })?;
    let full = T::lit(255.0);
    let px = raster
        .iter()
        .map(|&b| (T::lit(b as f64) / full).min(T::one()))
        .collect();
    Image::new(height, width, channels, px)
}

pub fn load_image<T: Scalar>(path: impl AsRef<Path>) -> Result<Image<T>> {
    let bytes = fs::read(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    decode_pnm(&bytes)
}

pub fn save_image<T: Scalar>(img: &Image<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path.as_ref(), encode_pnm(img)).map_err(|e| Error::io(path, e))
}
