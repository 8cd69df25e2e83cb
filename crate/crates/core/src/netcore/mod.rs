//! Dense feed-forward classifier with softmax cross-entropy.
//!
//! Weights of each layer are stored `outputs × inputs`, so a batch of row
//! vectors `X` is propagated as `X · Wᵀ + b`. Every gradient is computed
//! analytically by reverse accumulation; the ReLU derivative at 0 is 0.

mod checkpoint;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{rng, Error, Result, Scalar};

pub use checkpoint::{CHECKPOINT_FORMAT, CHECKPOINT_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu if z > T::zero() => T::one(),
            Activation::Relu => T::zero(),
            Activation::Identity => T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense<T> {
    /// `outputs × inputs`.
    pub weights: Array2<T>,
    pub bias: Array1<T>,
    pub activation: Activation,
}

impl<T: Scalar> Dense<T> {
    pub fn new(weights: Array2<T>, bias: Array1<T>, activation: Activation) -> Result<Self> {
        if weights.nrows() != bias.len() {
            return Err(Error::shape(
                format!("bias of length {}", weights.nrows()),
                bias.len(),
            ));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(self.bias.iter()).all(|v| v.is_finite())
    }
}

/// Gradient of the loss with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle<T> {
    pub param_grads: Vec<LayerGrad<T>>,
    pub input_grad: Vec<T>,
    pub loss: T,
}

/// Result of a batched backward pass.
#[derive(Debug, Clone)]
pub struct BatchGradients<T> {
    pub logits: Array2<T>,
    /// Per-sample cross-entropy.
    pub losses: Vec<T>,
    /// Row `i` is the gradient of `losses[i]` with respect to input row `i`.
    pub input_grads: Array2<T>,
    /// Gradient of the *mean* loss over the batch; present when requested.
    pub param_grads: Option<Vec<LayerGrad<T>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    layers: Vec<Dense<T>>,
}

impl<T: Scalar> Network<T> {
    pub fn new(layers: Vec<Dense<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::domain("a network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::shape(
                    format!("layer {} input dim {}", i + 1, pair[0].outputs()),
                    pair[1].inputs(),
                ));
            }
        }
        if let Some(i) = layers.iter().position(|l| !l.is_finite()) {
            return Err(Error::domain(format!("layer {i} has non-finite parameters")));
        }
        if layers.iter().any(|l| l.inputs() == 0 || l.outputs() == 0) {
            return Err(Error::domain("layer dimensions must be positive"));
        }
        Ok(Self { layers })
    }

    /// He-uniform initialised MLP: ReLU hidden layers, identity output layer.
    ///
    /// `dims = [input, hidden..., classes]`.
    pub fn random(dims: &[usize], seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::domain("need at least input and output dimensions"));
        }
        let mut rng = rng::rng_from(seed, &[0x6e_6574]);
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, d)| {
                let (fan_in, fan_out) = (d[0], d[1]);
                let limit = (6.0 / fan_in as f64).sqrt();
                let weights = Array2::from_shape_fn((fan_out, fan_in), |_| {
                    T::lit(rng.gen_range(-limit..limit))
                });
                let activation = if i == last {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                Dense::new(weights, Array1::zeros(fan_out), activation)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Dense<T>] {
        &self.layers
    }

    /// Mutable access to parameters. Shapes must not be changed.
    pub fn layers_mut(&mut self) -> &mut [Dense<T>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(format!("input of length {}", self.input_dim()), x.len()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("input contains non-finite values"));
        }
        Ok(())
    }

    fn check_label(&self, y: usize) -> Result<()> {
        if y >= self.num_classes() {
            return Err(Error::domain(format!(
                "label {y} out of range for {} classes",
                self.num_classes()
            )));
        }
        Ok(())
    }

    /// Raw logits for a single input.
    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_input(x)?;
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        Ok(self.propagate(view).into_raw_vec_and_offset().0)
    }

    /// Logits for a batch whose rows are inputs.
    pub fn forward_batch(&self, xs: ArrayView2<T>) -> Result<Array2<T>> {
        if xs.ncols() != self.input_dim() {
            return Err(Error::shape(
                format!("rows of length {}", self.input_dim()),
                xs.ncols(),
            ));
        }
        Ok(self.propagate(xs))
    }

    fn propagate(&self, xs: ArrayView2<T>) -> Array2<T> {
        let mut a = affine(xs, &self.layers[0]);
        let act = self.layers[0].activation;
        a.mapv_inplace(|z| act.apply(z));
        for layer in &self.layers[1..] {
            a = affine(a.view(), layer);
            let act = layer.activation;
            a.mapv_inplace(|z| act.apply(z));
        }
        a
    }

    /// Argmax of the logits, ties toward the lowest index.
    pub fn predict(&self, x: &[T]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    pub fn predict_batch(&self, xs: ArrayView2<T>) -> Result<Vec<usize>> {
        let logits = self.forward_batch(xs)?;
        Ok(logits
            .rows()
            .into_iter()
            .map(|r| argmax(r.as_slice().expect("contiguous logits")))
            .collect())
    }

    /// Cross-entropy loss of `softmax(forward(x))` against `y`, with exact
    /// parameter and input gradients.
    pub fn loss_and_gradients(&self, x: &[T], y: usize) -> Result<GradientBundle<T>> {
        self.check_input(x)?;
        self.check_label(y)?;
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        let g = self.backward(view, &[y], true);
        Ok(GradientBundle {
            param_grads: g.param_grads.expect("requested"),
            input_grad: g.input_grads.into_raw_vec_and_offset().0,
            loss: g.losses[0],
        })
    }

    /// Batched backward pass. `targets[i]` is the label whose cross-entropy is
    /// differentiated for row `i`.
    pub fn batch_gradients(
        &self,
        xs: ArrayView2<T>,
        targets: &[usize],
        with_params: bool,
    ) -> Result<BatchGradients<T>> {
        if xs.ncols() != self.input_dim() {
            return Err(Error::shape(
                format!("rows of length {}", self.input_dim()),
                xs.ncols(),
            ));
        }
        if xs.nrows() != targets.len() {
            return Err(Error::shape(
                format!("{} targets", xs.nrows()),
                targets.len(),
            ));
        }
        for &y in targets {
            self.check_label(y)?;
        }
        Ok(self.backward(xs, targets, with_params))
    }

    fn backward(&self, xs: ArrayView2<T>, targets: &[usize], with_params: bool) -> BatchGradients<T> {
        let n = xs.nrows();
        // inputs[l] feeds layer l; pre[l] is its pre-activation.
        let mut inputs: Vec<Array2<T>> = Vec::with_capacity(self.layers.len());
        let mut pre: Vec<Array2<T>> = Vec::with_capacity(self.layers.len());
        let mut a = xs.to_owned();
        for layer in &self.layers {
            let z = affine(a.view(), layer);
            let act = layer.activation;
            let next = z.mapv(|v| act.apply(v));
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        let logits = a;

        let mut losses = Vec::with_capacity(n);
        let mut delta = Array2::<T>::zeros(logits.raw_dim());
        for (i, row) in logits.rows().into_iter().enumerate() {
            let (loss, probs) = softmax_cross_entropy(row, targets[i]);
            losses.push(loss);
            let mut drow = delta.row_mut(i);
            for (d, p) in drow.iter_mut().zip(probs) {
                *d = p;
            }
            drow[targets[i]] -= T::one();
        }

        let scale = T::one() / T::lit(n as f64);
        let mut param_grads = with_params.then(|| Vec::with_capacity(self.layers.len()));
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let act = layer.activation;
            if act != Activation::Identity {
                ndarray::Zip::from(&mut delta)
                    .and(&pre[l])
                    .for_each(|d, &z| *d *= act.derivative(z));
            }
            if let Some(grads) = param_grads.as_mut() {
                let gw = delta.t().dot(&inputs[l]) * scale;
                let gb = delta.sum_axis(Axis(0)) * scale;
                grads.push(LayerGrad {
                    weights: gw,
                    bias: gb,
                });
            }
            delta = delta.dot(&layer.weights);
        }
        if let Some(g) = param_grads.as_mut() {
            g.reverse();
        }
        BatchGradients {
            logits,
            losses,
            input_grads: delta,
            param_grads,
        }
    }

    /// Plain gradient-descent update `θ ← θ − lr · g`.
    pub fn apply_gradients(&mut self, grads: &[LayerGrad<T>], learning_rate: T) -> Result<()> {
        if grads.len() != self.layers.len() {
            return Err(Error::shape(format!("{} layer grads", self.layers.len()), grads.len()));
        }
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            if layer.weights.dim() != g.weights.dim() || layer.bias.dim() != g.bias.dim() {
                return Err(Error::shape(
                    format!("{:?}", layer.weights.dim()),
                    format!("{:?}", g.weights.dim()),
                ));
            }
            layer.weights.scaled_add(-learning_rate, &g.weights);
            layer.bias.scaled_add(-learning_rate, &g.bias);
        }
        Ok(())
    }
}

fn affine<T: Scalar>(a: ArrayView2<T>, layer: &Dense<T>) -> Array2<T> {
    let mut z = a.dot(&layer.weights.t());
    z += &layer.bias;
    z
}

/// Index of the largest value, ties toward the lowest index.
pub fn argmax<T: Scalar>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let exps: Vec<T> = logits.iter().map(|&z| (z - m).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `-ln softmax(logits)[y]` computed through log-sum-exp.
pub fn cross_entropy<T: Scalar>(logits: &[T], y: usize) -> T {
    softmax_cross_entropy(ArrayView1::from(logits), y).0
}

fn softmax_cross_entropy<T: Scalar>(logits: ArrayView1<T>, y: usize) -> (T, Vec<T>) {
    let m = logits.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
    let exps: Vec<T> = logits.iter().map(|&z| (z - m).exp()).collect();
    let total: T = exps.iter().copied().sum();
    let loss = total.ln() + m - logits[y];
    (loss, exps.into_iter().map(|e| e / total).collect())
}
