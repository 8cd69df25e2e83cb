//! Binarizers: maps from the input space onto a small set of points.
//!
//! * [`ThresholdBinarizer`] rounds each coordinate to `{0, 1}` at `τ`
//!   (`x_i ≥ τ ↦ 1`).
//! * [`LatticeBinarizer`] snaps each coordinate to the uniform grid
//!   `{0, 1/(L−1), …, 1}`, midpoints rounding up.
//! * [`NearestNeighborBinarizer`] returns the closest anchor point under L∞
//!   or L2, ties toward the lowest anchor index.
//!
//! Inside an attacked pipeline a binarizer is differentiated with the
//! straight-through rule of [`bpda_backward`].

use serde::{Deserialize, Serialize};

use crate::{Error, Image, Result, Scalar};

pub trait Binarizer<T: Scalar> {
    fn binarize(&self, x: &Image<T>) -> Result<Image<T>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdBinarizer<T> {
    tau: T,
}

impl<T: Scalar> ThresholdBinarizer<T> {
    pub fn new(tau: T) -> Result<Self> {
        if !(tau > T::zero() && tau < T::one()) {
            return Err(Error::domain(format!("threshold τ = {tau} must lie in (0, 1)")));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    #[inline]
    pub fn bit(&self, v: T) -> T {
        if v >= self.tau {
            T::one()
        } else {
            T::zero()
        }
    }

    pub fn apply(&self, x: &Image<T>) -> Image<T> {
        x.map(|v| self.bit(v))
    }

    pub fn apply_slice(&self, xs: &mut [T]) {
        for v in xs {
            *v = self.bit(*v);
        }
    }
}

impl<T: Scalar> Binarizer<T> for ThresholdBinarizer<T> {
    fn binarize(&self, x: &Image<T>) -> Result<Image<T>> {
        Ok(self.apply(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatticeBinarizer {
    levels: usize,
}

impl LatticeBinarizer {
    pub fn new(levels: usize) -> Result<Self> {
        if levels < 2 {
            return Err(Error::domain(format!("lattice needs at least 2 levels, got {levels}")));
        }
        Ok(Self { levels })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Nearest grid level to `v`; exact midpoints round up.
    #[inline]
    pub fn snap<T: Scalar>(&self, v: T) -> T {
        let steps = T::lit((self.levels - 1) as f64);
        let k = (v * steps + T::lit(0.5)).floor().max(T::zero()).min(steps);
        k / steps
    }

    pub fn apply<T: Scalar>(&self, x: &Image<T>) -> Image<T> {
        x.map(|v| self.snap(v))
    }

    pub fn apply_slice<T: Scalar>(&self, xs: &mut [T]) {
        for v in xs {
            *v = self.snap(*v);
        }
    }
}

impl<T: Scalar> Binarizer<T> for LatticeBinarizer {
    fn binarize(&self, x: &Image<T>) -> Result<Image<T>> {
        Ok(self.apply(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    LInf,
    L2,
}

impl Metric {
    pub fn distance<T: Scalar>(self, a: &[T], b: &[T]) -> T {
        match self {
            Metric::LInf => a
                .iter()
                .zip(b)
                .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs())),
            Metric::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (*x - *y) * (*x - *y))
                .sum::<T>()
                .sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearestNeighborBinarizer<T> {
    anchors: Vec<Vec<T>>,
    metric: Metric,
}

impl<T: Scalar> NearestNeighborBinarizer<T> {
    pub fn new(anchors: Vec<Vec<T>>, metric: Metric) -> Result<Self> {
        let dim = anchors
            .first()
            .ok_or_else(|| Error::domain("nearest-neighbor binarizer needs at least one anchor"))?
            .len();
        if let Some(i) = anchors.iter().position(|a| a.len() != dim) {
            return Err(Error::shape(format!("anchors of length {dim}"), anchors[i].len()));
        }
        if anchors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::domain("anchors must be finite"));
        }
        Ok(Self { anchors, metric })
    }

    pub fn anchors(&self) -> &[Vec<T>] {
        &self.anchors
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn dim(&self) -> usize {
        self.anchors[0].len()
    }

    /// Index of the nearest anchor (lowest index among ties).
    pub fn nearest_index(&self, x: &[T]) -> Result<usize> {
        if x.len() != self.dim() {
            return Err(Error::shape(format!("point of length {}", self.dim()), x.len()));
        }
        let mut best = 0;
        let mut best_d = self.metric.distance(x, &self.anchors[0]);
        for (i, a) in self.anchors.iter().enumerate().skip(1) {
            let d = self.metric.distance(x, a);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        Ok(best)
    }

    pub fn nearest(&self, x: &[T]) -> Result<&[T]> {
        Ok(&self.anchors[self.nearest_index(x)?])
    }
}

impl<T: Scalar> Binarizer<T> for NearestNeighborBinarizer<T> {
    fn binarize(&self, x: &Image<T>) -> Result<Image<T>> {
        let anchor = self.nearest(x.pixels())?.to_vec();
        Image::from_clamped(x.height(), x.width(), x.channels(), anchor)
    }
}

/// Outcome of the margin check of [`certify_threshold`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate<T> {
    pub certified: bool,
    /// Pixels within `ε` of the threshold; empty iff certified.
    pub witness_pixels: Vec<usize>,
    pub epsilon: T,
}

/// Certifies that the threshold binarizer is constant on the L∞ ball
/// `B(x, ε)`: every pixel must satisfy `x_i − ε ≥ τ` or `x_i + ε < τ`.
///
/// The comparisons are evaluated exactly as written, so any `z = x_i + u` with
/// `|u| ≤ ε` computed in floating point lands on the same side of `τ`.
pub fn certify_threshold<T: Scalar>(
    x: &Image<T>,
    b: &ThresholdBinarizer<T>,
    epsilon: T,
) -> Result<Certificate<T>> {
    if epsilon.is_nan() || epsilon < T::zero() {
        return Err(Error::domain(format!("ε = {epsilon} must be non-negative")));
    }
    let tau = b.tau();
    let witness_pixels: Vec<usize> = x
        .pixels()
        .iter()
        .enumerate()
        .filter(|(_, &v)| !(v - epsilon >= tau || v + epsilon < tau))
        .map(|(i, _)| i)
        .collect();
    Ok(Certificate {
        certified: witness_pixels.is_empty(),
        witness_pixels,
        epsilon,
    })
}

/// Straight-through backward rule: the binarizer's Jacobian is taken to be
/// the identity.
pub fn bpda_backward<T: Scalar>(upstream: &[T]) -> Vec<T> {
    upstream.to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn img(v: &[f64]) -> Image<f64> {
        Image::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn threshold_ties_go_up() {
        let b = ThresholdBinarizer::new(0.5).unwrap();
        assert_eq!(b.apply(&img(&[0.0, 0.49, 0.5, 1.0])).pixels(), &[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(b.apply(&img(&[0.0; 4])).pixels(), &[0.0; 4]);
    }

    #[test]
    fn threshold_must_be_interior() {
        assert!(ThresholdBinarizer::new(0.0).is_err());
        assert!(ThresholdBinarizer::new(1.0).is_err());
        assert!(ThresholdBinarizer::new(f64::NAN).is_err());
    }

    #[test]
    fn threshold_is_idempotent() {
        let b = ThresholdBinarizer::new(0.5).unwrap();
        let mut r = rng::rng_from(1, &[]);
        for _ in 0..100 {
            let x = img(&(0..16).map(|_| r.gen::<f64>()).collect::<Vec<_>>());
            let once = b.apply(&x);
            assert_eq!(b.apply(&once), once);
        }
    }

    #[test]
    fn lattice_snaps_to_nearest_level() {
        let l = LatticeBinarizer::new(5).unwrap();
        assert_eq!(l.snap(0.24f64), 0.25);
        assert_eq!(l.snap(0.125f64), 0.25);
        assert_eq!(l.snap(1.0f64), 1.0);
        assert!(LatticeBinarizer::new(1).is_err());
    }

    #[test]
    fn nearest_neighbor_examples() {
        let nn = NearestNeighborBinarizer::new(vec![vec![0.0, 0.0], vec![1.0, 1.0]], Metric::LInf).unwrap();
        assert_eq!(nn.nearest(&[0.1, 0.2]).unwrap(), &[0.0, 0.0]);
        assert_eq!(nn.nearest(&[0.5, 0.5]).unwrap(), &[0.0, 0.0]);
        assert!(NearestNeighborBinarizer::<f64>::new(vec![], Metric::L2).is_err());
        assert!(nn.nearest(&[0.0]).is_err());
    }

    #[test]
    fn nearest_neighbor_matches_exhaustive_scan() {
        let mut r = rng::rng_from(2, &[]);
        for metric in [Metric::LInf, Metric::L2] {
            for _ in 0..50 {
                let anchors: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| r.gen()).collect()).collect();
                let nn = NearestNeighborBinarizer::new(anchors.clone(), metric).unwrap();
                let x: Vec<f64> = (0..3).map(|_| r.gen()).collect();
                // oracle: full scan, minimum distance, first occurrence
                let dists: Vec<f64> = anchors
                    .iter()
                    .map(|a| match metric {
                        Metric::LInf => a.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max),
                        Metric::L2 => a.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt(),
                    })
                    .collect();
                let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
                let expected = dists.iter().position(|&d| d == min).unwrap();
                assert_eq!(nn.nearest_index(&x).unwrap(), expected);
            }
        }
    }

    #[test]
    fn certificate_margin_arithmetic() {
        let b = ThresholdBinarizer::new(0.5).unwrap();
        let c = certify_threshold(&img(&[0.9, 0.1]), &b, 0.3).unwrap();
        assert!(c.certified && c.witness_pixels.is_empty());
        let c = certify_threshold(&img(&[0.6]), &b, 0.3).unwrap();
        assert!(!c.certified);
        assert_eq!(c.witness_pixels, vec![0]);
        assert!(certify_threshold(&img(&[0.6]), &b, -0.1).is_err());
    }

    #[test]
    fn bpda_is_identity() {
        assert_eq!(bpda_backward(&[0.3, -0.2]), vec![0.3, -0.2]);
        assert_eq!(bpda_backward(&[0.0f64; 3]), vec![0.0; 3]);
    }

    proptest! {
        #[test]
        fn lattice_two_levels_equals_threshold_half(v in proptest::collection::vec(0.0f64..=1.0, 1..32)) {
            let x = img(&v);
            let t = ThresholdBinarizer::new(0.5).unwrap().apply(&x);
            prop_assert_eq!(LatticeBinarizer::new(2).unwrap().apply(&x), t);
        }

        #[test]
        fn lattice_output_is_on_grid_and_within_half_step(
            v in proptest::collection::vec(0.0f64..=1.0, 1..32), levels in 2usize..12,
        ) {
            let l = LatticeBinarizer::new(levels).unwrap();
            let out = l.apply(&img(&v));
            let step = 1.0 / (levels - 1) as f64;
            for (o, x) in out.pixels().iter().zip(&v) {
                // oracle: scan every level for the closest one
                let best = (0..levels)
                    .map(|k| k as f64 * step)
                    .fold(f64::INFINITY, |acc, g| if (g - x).abs() < (acc - x).abs() { g } else { acc });
                prop_assert!((o - x).abs() <= step / 2.0 + 1e-12);
                prop_assert!((o - best).abs() < 1e-12 || ((o - x).abs() - (best - x).abs()).abs() < 1e-12);
            }
        }

        #[test]
        fn threshold_output_is_binary(v in proptest::collection::vec(0.0f64..=1.0, 1..32), tau in 0.01f64..0.99) {
            let out = ThresholdBinarizer::new(tau).unwrap().apply(&img(&v));
            prop_assert!(out.pixels().iter().all(|&p| p == 0.0 || p == 1.0));
        }

        #[test]
        fn certified_inputs_are_invariant(
            v in proptest::collection::vec(0.0f64..=1.0, 1..16), eps in 0.0f64..0.3, seed in any::<u64>(),
        ) {
            let b = ThresholdBinarizer::new(0.5).unwrap();
            let x = img(&v);
            let c = certify_threshold(&x, &b, eps).unwrap();
            let base = b.apply(&x);
            if c.certified {
                let mut r = rng::rng_from(seed, &[]);
                for _ in 0..200 {
                    let z: Vec<f64> = v.iter().map(|p| (p + r.gen_range(-eps..=eps)).clamp(0.0, 1.0)).collect();
                    prop_assert_eq!(b.apply(&img(&z)), base.clone());
                }
            } else {
                for &i in &c.witness_pixels {
                    let mut z = v.clone();
                    z[i] = if base.pixels()[i] == 1.0 { v[i] - eps } else { v[i] + eps }.clamp(0.0, 1.0);
                    prop_assert_ne!(b.apply(&img(&z)).pixels()[i], base.pixels()[i]);
                }
            }
        }
    }
}
