//! Robust feature augmentation for image classifiers.
//!
//! The crate provides "shock-absorbing" front ends for classifiers
//! (threshold, lattice and nearest-neighbor binarizers, and a dominant-color
//! group feature extractor), the L∞ PGD attack with BPDA support used to
//! measure their effect, and natural / adversarial training of a small dense
//! network.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`). The `*64`
//! and `*32` aliases at the crate root fix the scalar.

pub mod attack;
pub mod augment;
pub mod binarize;
pub mod data;
mod error;
pub mod groupfeat;
mod image;
pub mod maxmargin;
pub mod netcore;
pub mod pipeline;
pub mod rng;
mod scalar;
pub mod train;

pub use error::{Error, ParseError, Result};
pub use image::Image;
pub use scalar::Scalar;

pub type Image64 = Image<f64>;
pub type Image32 = Image<f32>;
pub type Network64 = netcore::Network<f64>;
pub type Network32 = netcore::Network<f32>;
pub type Dataset64 = data::Dataset<f64>;
pub type Pipeline64 = pipeline::ModelPipeline<f64>;
pub type AttackConfig64 = attack::AttackConfig<f64>;
pub type ThresholdBinarizer64 = binarize::ThresholdBinarizer<f64>;
pub type LinearClassifier64 = maxmargin::LinearClassifier<f64>;
pub type PurePointSet64 = maxmargin::PurePointSet<f64>;
