//! Datasets: MNIST IDX files, portable pixmaps, synthetic traffic signs.

mod idx;
mod pnm;
pub mod synth;

use std::path::Path;

use ndarray::Array2;

use crate::{Error, Image, Result, Scalar};

pub use idx::{
    encode_idx_images, encode_idx_labels, load_mnist_idx, parse_idx_images, parse_idx_labels,
    IMAGE_MAGIC, LABEL_MAGIC,
};
pub use pnm::{decode_pnm, encode_pnm, load_image, save_image};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    images: Vec<Image<T>>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(images: Vec<Image<T>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::shape(
                format!("{} labels", images.len()),
                labels.len(),
            ));
        }
        if let Some((i, y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::domain(format!(
                "label {y} at index {i} out of range for {num_classes} classes"
            )));
        }
        if let Some(first) = images.first() {
            if let Some(bad) = images.iter().position(|im| !im.same_shape(first)) {
                return Err(Error::shape(first.shape_string(), images[bad].shape_string()));
            }
        }
        Ok(Self {
            images,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn images(&self) -> &[Image<T>] {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn get(&self, i: usize) -> (&Image<T>, usize) {
        (&self.images[i], self.labels[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Image<T>, usize)> {
        self.images.iter().zip(self.labels.iter().copied())
    }

    /// Flattened pixel count of one sample (0 for an empty dataset).
    pub fn input_dim(&self) -> usize {
        self.images.first().map_or(0, |im| im.len())
    }

    /// Samples at the given indices, in order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            images: indices.iter().map(|&i| self.images[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// The first `n` samples (or all of them).
    pub fn take(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            images: self.images[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
            num_classes: self.num_classes,
        }
    }

    /// Rows = flattened images at `indices`.
    pub fn batch_matrix(&self, indices: &[usize]) -> Array2<T> {
        let d = self.input_dim();
        let mut m = Array2::zeros((indices.len(), d));
        for (row, &i) in m.rows_mut().into_iter().zip(indices) {
            for (dst, src) in row.into_iter().zip(self.images[i].pixels()) {
                *dst = *src;
            }
        }
        m
    }
}

/// Fractions of all pixels that are "near 0", in between, and "near 1".
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PixelMass {
    pub low: f64,
    pub mid: f64,
    pub high: f64,
}

/// Pixel-mass statistic: a pixel is low when `p ≤ low_cut`, high when
/// `p ≥ high_cut`, mid otherwise.
pub fn pixel_mass_stats<T: Scalar>(ds: &Dataset<T>, low_cut: f64, high_cut: f64) -> Result<PixelMass> {
    if !(0.0 <= low_cut && low_cut < high_cut && high_cut <= 1.0) {
        return Err(Error::domain(format!(
            "cuts must satisfy 0 <= low < high <= 1, got ({low_cut}, {high_cut})"
        )));
    }
    let (lo, hi) = (T::lit(low_cut), T::lit(high_cut));
    let (mut n_low, mut n_high, mut total) = (0u64, 0u64, 0u64);
    for img in &ds.images {
        for &p in img.pixels() {
            if p <= lo {
                n_low += 1;
            } else if p >= hi {
                n_high += 1;
            }
        }
        total += img.len() as u64;
    }
    if total == 0 {
        return Err(Error::domain("pixel statistics of an empty dataset"));
    }
    let n_mid = total - n_low - n_high;
    let t = total as f64;
    Ok(PixelMass {
        low: n_low as f64 / t,
        mid: n_mid as f64 / t,
        high: n_high as f64 / t,
    })
}

/// Loads `root/<class name>/*.ppm|*.pgm`, labelling each file with the index
/// of its directory name in `class_names`. Unknown directories are skipped.
pub fn load_labeled_dir<T: Scalar>(root: impl AsRef<Path>, class_names: &[String]) -> Result<Dataset<T>> {
    let root = root.as_ref();
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (label, name) in class_names.iter().enumerate() {
        let dir = root.join(name);
        if !dir.is_dir() {
            continue;
        }
        let mut entries: Vec<_> = std::fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("ppm") | Some("pgm") | Some("pnm")
                )
            })
            .collect();
        entries.sort();
        for path in entries {
            images.push(load_image(&path)?);
            labels.push(label);
        }
    }
    Dataset::new(images, labels, class_names.len())
}
