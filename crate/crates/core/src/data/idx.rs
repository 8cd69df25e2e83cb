//! MNIST IDX files: big-endian `u32` magic, `u32` dimensions, then `u8` data.

use std::fs;
use std::path::Path;

use super::Dataset;
use crate::{Error, Image, ParseError, Result, Scalar};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
const MNIST_CLASSES: usize = 10;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn u32(&mut self) -> Result<u32, ParseError> {
        let end = self.pos + 4;
        let chunk = self.bytes.get(self.pos..end).ok_or(ParseError::Truncated {
            needed: end,
            have: self.bytes.len(),
        })?;
        self.pos = end;
        Ok(u32::from_be_bytes(chunk.try_into().expect("4 bytes")))
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ParseError> {
        let end = self.pos + n;
        let chunk = self.bytes.get(self.pos..end).ok_or(ParseError::Truncated {
            needed: end,
            have: self.bytes.len(),
        })?;
        self.pos = end;
        Ok(chunk)
    }
}

fn check_magic(found: u32, expected: u32) -> Result<(), ParseError> {
    if found != expected {
        return Err(ParseError::BadMagic { expected, found });
    }
    Ok(())
}

/// Decodes an image file into grayscale images with pixels `byte / 255`.
pub fn parse_idx_images<T: Scalar>(bytes: &[u8]) -> Result<Vec<Image<T>>> {
    let mut r = Reader { bytes, pos: 0 };
    check_magic(r.u32()?, IMAGE_MAGIC)?;
    let count = r.u32()? as usize;
    let rows = r.u32()? as usize;
    let cols = r.u32()? as usize;
    let data = r.take(count * rows * cols)?;
    let full = T::lit(255.0);
    let per = rows * cols;
    (0..count)
        .map(|i| {
            let px = data[i * per..(i + 1) * per]
                .iter()
                .map(|&b| T::lit(b as f64) / full)
                .map(|v| v.min(T::one()))
                .collect();
            Image::new(rows, cols, 1, px)
        })
        .collect()
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let mut r = Reader { bytes, pos: 0 };
    check_magic(r.u32()?, LABEL_MAGIC)?;
    let count = r.u32()? as usize;
    Ok(r.take(count)?.to_vec())
}

pub fn load_mnist_idx<T: Scalar>(
    image_path: impl AsRef<Path>,
    label_path: impl AsRef<Path>,
) -> Result<Dataset<T>> {
    let img_bytes = fs::read(image_path.as_ref()).map_err(|e| Error::io(&image_path, e))?;
    let lbl_bytes = fs::read(label_path.as_ref()).map_err(|e| Error::io(&label_path, e))?;
    mnist_from_bytes(&img_bytes, &lbl_bytes)
}

pub(crate) fn mnist_from_bytes<T: Scalar>(img_bytes: &[u8], lbl_bytes: &[u8]) -> Result<Dataset<T>> {
    let images = parse_idx_images(img_bytes)?;
    let labels = parse_idx_labels(lbl_bytes)?;
    if images.len() != labels.len() {
        return Err(ParseError::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        }
        .into());
    }
    if let Some((index, &label)) = labels
        .iter()
        .enumerate()
        .find(|(_, &l)| l as usize >= MNIST_CLASSES)
    {
        return Err(ParseError::LabelOutOfRange {
            index,
            label,
            classes: MNIST_CLASSES,
        }
        .into());
    }
    Dataset::new(
        images,
        labels.into_iter().map(usize::from).collect(),
        MNIST_CLASSES,
    )
}

/// Re-encodes grayscale images at 8-bit depth (`round(p · 255)`).
pub fn encode_idx_images<T: Scalar>(images: &[Image<T>]) -> Result<Vec<u8>> {
    let (rows, cols) = images.first().map_or((0, 0), |im| (im.height(), im.width()));
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IMAGE_MAGIC.to_be_bytes());
    out.extend_from_slice(&(images.len() as u32).to_be_bytes());
    out.extend_from_slice(&(rows as u32).to_be_bytes());
    out.extend_from_slice(&(cols as u32).to_be_bytes());
    for im in images {
        if im.channels() != 1 || im.height() != rows || im.width() != cols {
            return Err(Error::shape(format!("{rows}x{cols}x1"), im.shape_string()));
        }
        out.extend(im.pixels().iter().map(|p| super::pnm::quantize(*p)));
    }
    Ok(out)
}

pub fn encode_idx_labels(labels: &[usize]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend(labels.iter().map(|&l| l as u8));
    out
}
