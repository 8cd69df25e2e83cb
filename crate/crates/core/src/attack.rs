//! L∞ projected gradient descent.
//!
//! Each step is `x ← Π(x + α · sgn(∇ₓ L))`, where `Π` clamps every
//! coordinate to `[x₀ − ε, x₀ + ε] ∩ [0, 1]` ([`clip_ball`]). Untargeted
//! attacks ascend the cross-entropy of the true label; targeted attacks
//! descend the cross-entropy of the target label. Restart 1 starts at `x₀`,
//! later restarts at a uniform random point of the ball. An input is broken
//! when any iterate of any restart is misclassified (untargeted) or
//! classified as the target (targeted).

use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::netcore::argmax;
use crate::pipeline::ModelPipeline;
use crate::{rng, Error, Image, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig<T> {
    /// L∞ radius in `[0, 1]` pixel units.
    pub epsilon: T,
    pub step: T,
    pub iterations: usize,
    pub restarts: usize,
    #[serde(default)]
    pub target: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

impl<T: Scalar> AttackConfig<T> {
    pub fn new(epsilon: T, step: T, iterations: usize, restarts: usize) -> Result<Self> {
        let cfg = Self {
            epsilon,
            step,
            iterations,
            restarts,
            target: None,
            seed: 0,
        };
        cfg.validate(None)?;
        Ok(cfg)
    }

    pub fn targeted(mut self, target: usize) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self, num_classes: Option<usize>) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= T::zero()) {
            return Err(Error::domain(format!("ε = {} must be finite and >= 0", self.epsilon)));
        }
        if !(self.step.is_finite() && self.step > T::zero()) {
            return Err(Error::domain(format!("step α = {} must be finite and > 0", self.step)));
        }
        if self.iterations == 0 || self.restarts == 0 {
            return Err(Error::domain("iterations and restarts must be >= 1"));
        }
        if let (Some(t), Some(k)) = (self.target, num_classes) {
            if t >= k {
                return Err(Error::domain(format!("target {t} out of range for {k} classes")));
            }
        }
        Ok(())
    }
}

/// Named attack settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// ε = 0.3, 100 iterations, α = 0.0075, 20 restarts.
    Full,
    /// ε = 0.3, 100 iterations, α = 0.0075, no random restarts.
    TrainingEval,
    /// ε = 0.3, 40 iterations, α = 0.01, no random restarts.
    Fast,
}

impl Preset {
    pub fn config<T: Scalar>(self) -> AttackConfig<T> {
        let (iters, step, restarts) = match self {
            Preset::Full => (100, 0.0075, 20),
            Preset::TrainingEval => (100, 0.0075, 1),
            Preset::Fast => (40, 0.01, 1),
        };
        AttackConfig::new(T::lit(0.3), T::lit(step), iters, restarts).expect("valid preset")
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "full" => Some(Preset::Full),
            "training-eval" => Some(Preset::TrainingEval),
            "fast" => Some(Preset::Fast),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestartOutcome<T> {
    pub success: bool,
    pub loss: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult<T> {
    pub adversarial_example: Image<T>,
    pub success: bool,
    /// Cross-entropy at the returned example: toward the true label for
    /// untargeted attacks, toward the target for targeted ones.
    pub achieved_loss: T,
    pub restart_outcomes: Vec<RestartOutcome<T>>,
}

#[inline]
fn clip_coord<T: Scalar>(x0: T, x: T, epsilon: T) -> T {
    let lo = (x0 - epsilon).max(T::zero());
    let hi = (x0 + epsilon).min(T::one());
    x.max(lo).min(hi)
}

/// Coordinate-wise projection of `x` onto `B(x₀, ε) ∩ [0, 1]ⁿ`.
pub fn clip_ball<T: Scalar>(x0: &Image<T>, x: &Image<T>, epsilon: T) -> Result<Image<T>> {
    x0.check_same_shape(x)?;
    let px = x0
        .pixels()
        .iter()
        .zip(x.pixels())
        .map(|(&a, &b)| clip_coord(a, b, epsilon))
        .collect();
    x0.with_pixels(px)
}

/// Best point found for one input.
struct Outcome<T> {
    best: Vec<T>,
    best_loss: T,
    best_success: bool,
    restarts: Vec<RestartOutcome<T>>,
}

impl<T: Scalar> Outcome<T> {
    fn success(&self) -> bool {
        self.best_success
    }
}

/// Candidate ordering: successful beats unsuccessful, then larger objective.
#[inline]
fn better<T: Scalar>(success: bool, objective: T, best_success: bool, best_objective: T) -> bool {
    (success && !best_success) || (success == best_success && objective > best_objective)
}

/// Runs PGD on every row of `x0s`. `ids[i]` selects the random stream of
/// row `i`; with `stop_on_success` a row stops as soon as it is broken.
fn run<T: Scalar>(
    pipe: &ModelPipeline<T>,
    x0s: &Array2<T>,
    labels: &[usize],
    ids: &[u64],
    cfg: &AttackConfig<T>,
    stop_on_success: bool,
) -> Result<Vec<Outcome<T>>> {
    cfg.validate(Some(pipe.num_classes()))?;
    let n = x0s.nrows();
    let d = x0s.ncols();
    let targeted = cfg.target;
    let targets: Vec<usize> = labels.iter().map(|&y| targeted.unwrap_or(y)).collect();
    // objective = loss (untargeted) or −loss (targeted)
    let sign = if targeted.is_some() { -T::one() } else { T::one() };

    let mut out: Vec<Outcome<T>> = (0..n)
        .map(|i| Outcome {
            best: x0s.row(i).to_vec(),
            best_loss: T::neg_infinity(),
            best_success: false,
            restarts: Vec::with_capacity(cfg.restarts),
        })
        .collect();
    let mut best_objective = vec![T::neg_infinity(); n];

    for r in 0..cfg.restarts {
        let mut active: Vec<usize> = (0..n)
            .filter(|&i| !(stop_on_success && out[i].success()))
            .collect();
        if active.is_empty() {
            break;
        }
        let mut x = x0s.select(Axis(0), &active);
        if r > 0 {
            for (row_idx, mut row) in x.rows_mut().into_iter().enumerate() {
                let i = active[row_idx];
                let mut rng = rng::rng_from(cfg.seed, &[ids[i], r as u64]);
                for (j, v) in row.iter_mut().enumerate() {
                    let u = if cfg.epsilon > T::zero() {
                        T::lit(rng.gen_range(-1.0..=1.0)) * cfg.epsilon
                    } else {
                        T::zero()
                    };
                    *v = clip_coord(x0s[[i, j]], x0s[[i, j]] + u, cfg.epsilon);
                }
            }
        }
        let mut restart_best: Vec<(bool, T, T)> =
            vec![(false, T::neg_infinity(), T::neg_infinity()); active.len()];

        for it in 0..=cfg.iterations {
            let act_targets: Vec<usize> = active.iter().map(|&i| targets[i]).collect();
            let g = pipe.batch_gradients(x.view(), &act_targets, false)?;
            let mut keep = Vec::with_capacity(active.len());
            for (row_idx, &i) in active.iter().enumerate() {
                let logits = g.logits.row(row_idx);
                let pred = argmax(logits.as_slice().expect("contiguous"));
                let success = match targeted {
                    Some(t) => pred == t,
                    None => pred != labels[i],
                };
                let loss = g.losses[row_idx];
                let objective = sign * loss;
                let rb = &mut restart_best[row_idx];
                if better(success, objective, rb.0, rb.1) {
                    *rb = (success, objective, loss);
                }
                if better(success, objective, out[i].best_success, best_objective[i]) {
                    out[i].best_success = success;
                    out[i].best_loss = loss;
                    best_objective[i] = objective;
                    out[i].best.copy_from_slice(x.row(row_idx).as_slice().expect("contiguous"));
                }
                keep.push(!(stop_on_success && success));
            }
            if it == cfg.iterations {
                break;
            }
            for (row_idx, &i) in active.iter().enumerate() {
                let grad = g.input_grads.row(row_idx);
                let mut row = x.row_mut(row_idx);
                for j in 0..d {
                    let stepped = row[j] + sign * cfg.step * grad[j].sgn();
                    row[j] = clip_coord(x0s[[i, j]], stepped, cfg.epsilon);
                }
            }
            if keep.iter().any(|k| !k) {
                // finished rows leave the batch and record their restart now
                let mut next_active = Vec::with_capacity(active.len());
                let mut next_rows = Vec::with_capacity(active.len());
                let mut next_best = Vec::with_capacity(active.len());
                for (row_idx, &i) in active.iter().enumerate() {
                    if keep[row_idx] {
                        next_active.push(i);
                        next_rows.push(row_idx);
                        next_best.push(restart_best[row_idx]);
                    } else {
                        let (s, _, l) = restart_best[row_idx];
                        out[i].restarts.push(RestartOutcome { success: s, loss: l });
                    }
                }
                x = x.select(Axis(0), &next_rows);
                active = next_active;
                restart_best = next_best;
                if active.is_empty() {
                    break;
                }
            }
        }
        for (row_idx, &i) in active.iter().enumerate() {
            let (s, _, l) = restart_best[row_idx];
            out[i].restarts.push(RestartOutcome { success: s, loss: l });
        }
    }
    Ok(out)
}

/// PGD on a single input. All restarts and iterations run to completion.
pub fn pgd<T: Scalar>(
    pipe: &ModelPipeline<T>,
    x0: &Image<T>,
    y: usize,
    cfg: &AttackConfig<T>,
) -> Result<AttackResult<T>> {
    if x0.len() != pipe.input_dim() {
        return Err(Error::shape(format!("input of length {}", pipe.input_dim()), x0.len()));
    }
    if y >= pipe.num_classes() {
        return Err(Error::domain(format!("label {y} out of range")));
    }
    let row = Array2::from_shape_vec((1, x0.len()), x0.pixels().to_vec()).expect("row");
    let mut outcome = run(pipe, &row, &[y], &[0], cfg, false)?
        .pop()
        .expect("one outcome");
    let adversarial_example = x0.with_pixels(std::mem::take(&mut outcome.best))?;
    Ok(AttackResult {
        adversarial_example,
        success: outcome.best_success,
        achieved_loss: outcome.best_loss,
        restart_outcomes: outcome.restarts,
    })
}

/// Adversarial versions of a batch of rows (no early stopping), as used for
/// the inner maximisation of adversarial training.
pub fn adversarial_rows<T: Scalar>(
    pipe: &ModelPipeline<T>,
    xs: &Array2<T>,
    labels: &[usize],
    ids: &[u64],
    cfg: &AttackConfig<T>,
) -> Result<Array2<T>> {
    let outcomes = run(pipe, xs, labels, ids, cfg, false)?;
    let mut m = Array2::zeros(xs.raw_dim());
    for (mut row, o) in m.rows_mut().into_iter().zip(outcomes) {
        row.assign(&ndarray::ArrayView1::from(&o.best[..]));
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdversarialAccuracyReport {
    pub samples: usize,
    pub clean_correct: usize,
    pub robust_correct: usize,
    pub clean_accuracy: f64,
    pub adversarial_accuracy: f64,
    pub epsilon: f64,
    pub step: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub wall_seconds: f64,
}

/// Per-sample outcome of [`attack_dataset_detailed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleVerdict {
    pub clean_correct: bool,
    pub broken: bool,
}

impl SampleVerdict {
    pub fn robust_correct(&self) -> bool {
        self.clean_correct && !self.broken
    }
}

const ATTACK_CHUNK: usize = 256;

/// Adversarial accuracy of `pipe` on `ds`: a sample survives when its clean
/// prediction is correct and no restart breaks it.
pub fn attack_dataset<T: Scalar>(
    pipe: &ModelPipeline<T>,
    ds: &Dataset<T>,
    cfg: &AttackConfig<T>,
) -> Result<AdversarialAccuracyReport> {
    Ok(attack_dataset_detailed(pipe, ds, cfg)?.0)
}

pub fn attack_dataset_detailed<T: Scalar>(
    pipe: &ModelPipeline<T>,
    ds: &Dataset<T>,
    cfg: &AttackConfig<T>,
) -> Result<(AdversarialAccuracyReport, Vec<SampleVerdict>)> {
    cfg.validate(Some(pipe.num_classes()))?;
    if !ds.is_empty() && ds.input_dim() != pipe.input_dim() {
        return Err(Error::shape(format!("inputs of length {}", pipe.input_dim()), ds.input_dim()));
    }
    let start = Instant::now();
    let mut verdicts = Vec::with_capacity(ds.len());
    let all: Vec<usize> = (0..ds.len()).collect();
    for chunk in all.chunks(ATTACK_CHUNK) {
        let xs = ds.batch_matrix(chunk);
        let labels: Vec<usize> = chunk.iter().map(|&i| ds.labels()[i]).collect();
        let clean = pipe.predict_rows(xs.view())?;
        let correct: Vec<usize> = (0..chunk.len()).filter(|&k| clean[k] == labels[k]).collect();
        let mut broken = vec![true; chunk.len()];
        if !correct.is_empty() {
            let sub = xs.select(Axis(0), &correct);
            let sub_labels: Vec<usize> = correct.iter().map(|&k| labels[k]).collect();
            let ids: Vec<u64> = correct.iter().map(|&k| chunk[k] as u64).collect();
            let outcomes = run(pipe, &sub, &sub_labels, &ids, cfg, true)?;
            for (&k, o) in correct.iter().zip(&outcomes) {
                broken[k] = o.success();
            }
        }
        for k in 0..chunk.len() {
            verdicts.push(SampleVerdict {
                clean_correct: clean[k] == labels[k],
                broken: broken[k],
            });
        }
    }
    let n = ds.len();
    let clean_correct = verdicts.iter().filter(|v| v.clean_correct).count();
    let robust_correct = verdicts.iter().filter(|v| v.robust_correct()).count();
    let frac = |c: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    Ok((
        AdversarialAccuracyReport {
            samples: n,
            clean_correct,
            robust_correct,
            clean_accuracy: frac(clean_correct),
            adversarial_accuracy: frac(robust_correct),
            epsilon: cfg.epsilon.as_f64(),
            step: cfg.step.as_f64(),
            iterations: cfg.iterations,
            restarts: cfg.restarts,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
        verdicts,
    ))
}

/// One row of an ε sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub clean_accuracy: f64,
    pub adversarial_accuracy: f64,
}

/// Adversarial accuracy over increasing radii. Because `B(x, ε) ⊆ B(x, ε′)`
/// for `ε ≤ ε′`, a sample broken at a smaller radius is counted as broken at
/// every larger one (its adversarial example remains feasible). The step is
/// raised to at least `1.25 ε / iterations` so every radius is reachable.
pub fn sweep_epsilon<T: Scalar>(
    pipe: &ModelPipeline<T>,
    ds: &Dataset<T>,
    base: &AttackConfig<T>,
    epsilons: &[T],
) -> Result<Vec<SweepPoint>> {
    let mut order: Vec<usize> = (0..epsilons.len()).collect();
    order.sort_by(|&a, &b| epsilons[a].partial_cmp(&epsilons[b]).expect("finite radii"));
    let mut broken_so_far = vec![false; ds.len()];
    let mut points = vec![None; epsilons.len()];
    for &e in &order {
        let mut cfg = base.with_epsilon(epsilons[e]);
        cfg.step = cfg.step.max(T::lit(1.25) * epsilons[e] / T::lit(base.iterations as f64));
        let (_, verdicts) = attack_dataset_detailed(pipe, ds, &cfg)?;
        let mut robust = 0usize;
        let mut clean = 0usize;
        for (i, v) in verdicts.iter().enumerate() {
            broken_so_far[i] |= v.broken;
            clean += v.clean_correct as usize;
            robust += (v.clean_correct && !broken_so_far[i]) as usize;
        }
        let n = ds.len().max(1) as f64;
        points[e] = Some(SweepPoint {
            epsilon: epsilons[e].as_f64(),
            clean_accuracy: clean as f64 / n,
            adversarial_accuracy: robust as f64 / n,
        });
    }
    Ok(points.into_iter().map(|p| p.expect("filled")).collect())
}
