//! Natural and adversarial training with plain minibatch gradient descent.
//!
//! Adversarial training replaces each minibatch by PGD examples against the
//! current model before the descent step. When the pipeline has a binarizer
//! stage the inner attack differentiates through it with BPDA and the
//! network is updated on the binarized adversarial batch.

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::attack::{adversarial_rows, attack_dataset, AttackConfig, Preset};
use crate::binarize::ThresholdBinarizer;
use crate::data::Dataset;
use crate::netcore::Network;
use crate::pipeline::{ModelPipeline, Preprocess};
use crate::{rng, Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<T> {
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: T,
    pub seed: u64,
    /// Inner maximisation; `None` trains on clean batches.
    #[serde(default)]
    pub adversarial: Option<AttackConfig<T>>,
    /// Evaluate every this many iterations; 0 only evaluates at the end.
    #[serde(default)]
    pub checkpoint_every: usize,
    /// Stop once a checkpoint reaches this adversarial accuracy.
    #[serde(default)]
    pub stop_at_adv_acc: Option<f64>,
}

impl<T: Scalar> TrainConfig<T> {
    pub fn new(iterations: usize, batch_size: usize, learning_rate: T, seed: u64) -> Self {
        Self {
            iterations,
            batch_size,
            learning_rate,
            seed,
            adversarial: None,
            checkpoint_every: 0,
            stop_at_adv_acc: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.batch_size == 0 {
            return Err(Error::domain("iterations and batch size must be >= 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= T::zero()) {
            return Err(Error::domain("learning rate must be finite and >= 0"));
        }
        if let Some(a) = &self.adversarial {
            a.validate(None)?;
            if a.target.is_some() {
                return Err(Error::domain("the inner attack must be untargeted"));
            }
        }
        Ok(())
    }
}

/// Held-out data and the attack used at checkpoints.
#[derive(Debug, Clone)]
pub struct Evaluation<'a, T> {
    pub data: &'a Dataset<T>,
    pub attack: AttackConfig<T>,
}

impl<'a, T: Scalar> Evaluation<'a, T> {
    /// Checkpoints attacked with ε = 0.3, 100 iterations, α = 0.0075.
    pub fn standard(data: &'a Dataset<T>) -> Self {
        Self {
            data,
            attack: Preset::TrainingEval.config(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub clean_acc: f64,
    pub adv_acc: f64,
    /// Cumulative training time, excluding evaluation.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct TrainingTrace {
    pub points: Vec<TracePoint>,
    pub iterations_run: usize,
    pub final_clean_accuracy: Option<f64>,
    pub training_seconds: f64,
}

impl TrainingTrace {
    pub const CSV_HEADER: &'static str = "iteration,clean_acc,adv_acc,seconds";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for p in &self.points {
            let _ = writeln!(s, "{},{},{},{:.6}", p.iteration, p.clean_acc, p.adv_acc, p.seconds);
        }
        s
    }

    /// Training seconds at the first checkpoint with `adv_acc >= level`.
    pub fn time_to(&self, level: f64) -> Option<f64> {
        self.points.iter().find(|p| p.adv_acc >= level).map(|p| p.seconds)
    }
}

/// Fraction of `ds` classified correctly by `pipe`.
pub fn accuracy<T: Scalar>(pipe: &ModelPipeline<T>, ds: &Dataset<T>) -> Result<f64> {
    if ds.is_empty() {
        return Ok(0.0);
    }
    let idx: Vec<usize> = (0..ds.len()).collect();
    let mut correct = 0;
    for chunk in idx.chunks(1024) {
        let preds = pipe.predict_rows(ds.batch_matrix(chunk).view())?;
        correct += chunk.iter().zip(preds).filter(|(&i, p)| ds.labels()[i] == *p).count();
    }
    Ok(correct as f64 / ds.len() as f64)
}

/// Trains on clean batches. Any `adversarial` setting is rejected.
pub fn train_natural<T: Scalar>(
    pipe: &mut ModelPipeline<T>,
    ds: &Dataset<T>,
    cfg: &TrainConfig<T>,
    eval: Option<&Evaluation<'_, T>>,
) -> Result<TrainingTrace> {
    if cfg.adversarial.is_some() {
        return Err(Error::domain("natural training takes no inner attack"));
    }
    run(pipe, ds, cfg, eval)
}

/// Trains on PGD examples generated by `cfg.adversarial` for every batch.
pub fn train_adversarial<T: Scalar>(
    pipe: &mut ModelPipeline<T>,
    ds: &Dataset<T>,
    cfg: &TrainConfig<T>,
    eval: Option<&Evaluation<'_, T>>,
) -> Result<TrainingTrace> {
    if cfg.adversarial.is_none() {
        return Err(Error::domain("adversarial training needs an inner attack"));
    }
    run(pipe, ds, cfg, eval)
}

fn checkpoint<T: Scalar>(
    pipe: &ModelPipeline<T>,
    eval: &Evaluation<'_, T>,
    iteration: usize,
    seconds: f64,
) -> Result<TracePoint> {
    let rep = attack_dataset(pipe, eval.data, &eval.attack)?;
    Ok(TracePoint {
        iteration,
        clean_acc: rep.clean_accuracy,
        adv_acc: rep.adversarial_accuracy,
        seconds,
    })
}

fn run<T: Scalar>(
    pipe: &mut ModelPipeline<T>,
    ds: &Dataset<T>,
    cfg: &TrainConfig<T>,
    eval: Option<&Evaluation<'_, T>>,
) -> Result<TrainingTrace> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::domain("training set is empty"));
    }
    if ds.input_dim() != pipe.input_dim() || ds.num_classes() > pipe.num_classes() {
        return Err(Error::shape(
            format!("{} inputs, <= {} classes", pipe.input_dim(), pipe.num_classes()),
            format!("{} inputs, {} classes", ds.input_dim(), ds.num_classes()),
        ));
    }
    let mut trace = TrainingTrace::default();
    let mut elapsed = 0.0f64;
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut pos = order.len();
    let mut epoch = 0u64;
    let batch = cfg.batch_size.min(ds.len());
    let mut iteration = 0;
    while iteration < cfg.iterations {
        let started = Instant::now();
        if pos + batch > order.len() {
            order.sort_unstable();
            order.shuffle(&mut rng::rng_from(cfg.seed, &[0, epoch]));
            epoch += 1;
            pos = 0;
        }
        let idx = &order[pos..pos + batch];
        pos += batch;
        let labels: Vec<usize> = idx.iter().map(|&i| ds.labels()[i]).collect();
        let mut xs = ds.batch_matrix(idx);
        if let Some(attack) = &cfg.adversarial {
            let inner = attack.with_seed(rng::derive_seed(cfg.seed, &[1, iteration as u64]));
            let ids: Vec<u64> = idx.iter().map(|&i| i as u64).collect();
            xs = adversarial_rows(pipe, &xs, &labels, &ids, &inner)?;
        }
        let g = pipe.batch_gradients(xs.view(), &labels, true)?;
        let mean_loss = g.losses.iter().fold(T::zero(), |a, &l| a + l) / T::lit(batch as f64);
        if !mean_loss.is_finite() {
            return Err(Error::Divergence {
                iteration,
                loss: mean_loss.as_f64(),
            });
        }
        pipe.net
            .apply_gradients(g.param_grads.as_deref().expect("requested"), cfg.learning_rate)?;
        iteration += 1;
        elapsed += started.elapsed().as_secs_f64();

        let at_checkpoint = cfg.checkpoint_every > 0 && iteration % cfg.checkpoint_every == 0;
        if let Some(ev) = eval {
            if at_checkpoint || iteration == cfg.iterations {
                let p = checkpoint(pipe, ev, iteration, elapsed)?;
                trace.points.push(p);
                if cfg.stop_at_adv_acc.is_some_and(|level| p.adv_acc >= level) {
                    break;
                }
            }
        }
    }
    trace.iterations_run = iteration;
    trace.training_seconds = elapsed;
    if let Some(ev) = eval {
        trace.final_clean_accuracy = Some(accuracy(pipe, ev.data)?);
    }
    Ok(trace)
}

/// The four model variants compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Natural training, no binarizer.
    Natural,
    /// Natural training through a threshold binarizer.
    Bin,
    /// Adversarial training, no binarizer.
    Mat,
    /// Adversarial training through a threshold binarizer.
    Bat,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Natural, ModelKind::Bin, ModelKind::Mat, ModelKind::Bat];

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "natural" => Some(ModelKind::Natural),
            "bin" => Some(ModelKind::Bin),
            "mat" => Some(ModelKind::Mat),
            "bat" => Some(ModelKind::Bat),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Natural => "natural",
            ModelKind::Bin => "bin",
            ModelKind::Mat => "mat",
            ModelKind::Bat => "bat",
        }
    }

    pub fn binarized(self) -> bool {
        matches!(self, ModelKind::Bin | ModelKind::Bat)
    }

    pub fn adversarial(self) -> bool {
        matches!(self, ModelKind::Mat | ModelKind::Bat)
    }
}

/// BIN and BAT put a threshold binarizer at `τ` in front of the network.
pub fn build_pipeline<T: Scalar>(kind: ModelKind, net: Network<T>, tau: T) -> Result<ModelPipeline<T>> {
    Ok(if kind.binarized() {
        ModelPipeline::new(Preprocess::Threshold(ThresholdBinarizer::new(tau)?), net)
    } else {
        ModelPipeline::bare(net)
    })
}

/// Trains `pipe` as `kind` prescribes: adversarial kinds use `attack` for
/// the inner maximisation.
pub fn train_kind<T: Scalar>(
    kind: ModelKind,
    pipe: &mut ModelPipeline<T>,
    ds: &Dataset<T>,
    cfg: &TrainConfig<T>,
    attack: &AttackConfig<T>,
    eval: Option<&Evaluation<'_, T>>,
) -> Result<TrainingTrace> {
    let mut cfg = cfg.clone();
    if kind.adversarial() {
        cfg.adversarial = Some(*attack);
        train_adversarial(pipe, ds, &cfg, eval)
    } else {
        cfg.adversarial = None;
        train_natural(pipe, ds, &cfg, eval)
    }
}
