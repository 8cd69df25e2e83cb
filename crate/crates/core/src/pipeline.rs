//! Model pipelines: an optional binarizer stage in front of a network.

use ndarray::{Array2, ArrayView2};

use crate::binarize::{bpda_backward, LatticeBinarizer, NearestNeighborBinarizer, ThresholdBinarizer};
use crate::netcore::{BatchGradients, Network};
use crate::{Error, Image, Result, Scalar};

/// Anything that maps an image to a single label.
pub trait Classify<T: Scalar> {
    fn classify(&self, x: &Image<T>) -> Result<usize>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum Preprocess<T> {
    Identity,
    Threshold(ThresholdBinarizer<T>),
    Lattice(LatticeBinarizer),
    NearestNeighbor(NearestNeighborBinarizer<T>),
}

impl<T: Scalar> Preprocess<T> {
    pub fn is_identity(&self) -> bool {
        matches!(self, Preprocess::Identity)
    }

    pub fn apply_slice(&self, xs: &mut [T]) -> Result<()> {
        match self {
            Preprocess::Identity => {}
            Preprocess::Threshold(b) => b.apply_slice(xs),
            Preprocess::Lattice(b) => b.apply_slice(xs),
            Preprocess::NearestNeighbor(b) => {
                let anchor = b.nearest(xs)?;
                xs.copy_from_slice(anchor);
            }
        }
        Ok(())
    }

    fn apply_rows(&self, xs: &mut Array2<T>) -> Result<()> {
        if self.is_identity() {
            return Ok(());
        }
        for mut row in xs.rows_mut() {
            self.apply_slice(row.as_slice_mut().expect("standard layout rows"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelPipeline<T> {
    pub preprocess: Preprocess<T>,
    pub net: Network<T>,
}

impl<T: Scalar> ModelPipeline<T> {
    pub fn new(preprocess: Preprocess<T>, net: Network<T>) -> Self {
        Self { preprocess, net }
    }

    pub fn bare(net: Network<T>) -> Self {
        Self::new(Preprocess::Identity, net)
    }

    pub fn num_classes(&self) -> usize {
        self.net.num_classes()
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    /// The input as seen by the network.
    pub fn network_input(&self, x: &Image<T>) -> Result<Vec<T>> {
        let mut v = x.pixels().to_vec();
        self.preprocess.apply_slice(&mut v)?;
        Ok(v)
    }

    pub fn logits(&self, x: &Image<T>) -> Result<Vec<T>> {
        self.net.forward(&self.network_input(x)?)
    }

    pub fn predict(&self, x: &Image<T>) -> Result<usize> {
        self.net.predict(&self.network_input(x)?)
    }

    /// Predictions for a batch of flattened images (rows).
    pub fn predict_rows(&self, xs: ArrayView2<T>) -> Result<Vec<usize>> {
        if self.preprocess.is_identity() {
            return self.net.predict_batch(xs);
        }
        let mut m = xs.to_owned();
        self.preprocess.apply_rows(&mut m)?;
        self.net.predict_batch(m.view())
    }

    /// Cross-entropy toward `target` and its gradient with respect to the raw
    /// input. Binarizer stages are differentiated with the BPDA identity rule,
    /// so the result is the network's input gradient at the binarized point.
    pub fn loss_and_input_gradient(&self, x: &Image<T>, target: usize) -> Result<(T, Vec<T>)> {
        let g = self.net.loss_and_gradients(&self.network_input(x)?, target)?;
        let grad = if self.preprocess.is_identity() {
            g.input_grad
        } else {
            bpda_backward(&g.input_grad)
        };
        Ok((g.loss, grad))
    }

    /// Batched form of [`Self::loss_and_input_gradient`]; `with_params` also
    /// returns the mean-loss parameter gradient for training.
    pub fn batch_gradients(
        &self,
        xs: ArrayView2<T>,
        targets: &[usize],
        with_params: bool,
    ) -> Result<BatchGradients<T>> {
        if self.preprocess.is_identity() {
            return self.net.batch_gradients(xs, targets, with_params);
        }
        if xs.ncols() != self.input_dim() {
            return Err(Error::shape(format!("rows of length {}", self.input_dim()), xs.ncols()));
        }
        let mut m = xs.to_owned();
        self.preprocess.apply_rows(&mut m)?;
        // straight-through: input_grads are passed back unchanged
        self.net.batch_gradients(m.view(), targets, with_params)
    }
}

impl<T: Scalar> Classify<T> for ModelPipeline<T> {
    fn classify(&self, x: &Image<T>) -> Result<usize> {
        self.predict(x)
    }
}
