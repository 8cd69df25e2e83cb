//! Max-margin linear classifiers over pure point sets, and the exactness
//! harness for nearest-neighbor binarization followed by a linear rule.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::binarize::{LatticeBinarizer, Metric, NearestNeighborBinarizer};
use crate::{rng, Error, Result, Scalar};

/// Labeled reference points, labels in {−1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct PurePointSet<T> {
    points: Vec<Vec<T>>,
    labels: Vec<i8>,
    metric: Metric,
    separation: T,
}

impl<T: Scalar> PurePointSet<T> {
    /// Validates the set and checks linear separability by training.
    pub fn new(points: Vec<Vec<T>>, labels: Vec<i8>, metric: Metric) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::shape(format!("{} labels", points.len()), labels.len()));
        }
        let dim = points.first().map(|p| p.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::domain("point set must be non-empty with dimension >= 1"));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::shape(format!("points of dimension {dim}"), p.len()));
        }
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::domain("point coordinates must be finite"));
        }
        if let Some(l) = labels.iter().find(|&&l| l != 1 && l != -1) {
            return Err(Error::domain(format!("label {l} is not ±1")));
        }
        if !labels.contains(&1) || !labels.contains(&-1) {
            return Err(Error::domain("both classes must be present"));
        }
        let mut separation = T::infinity();
        for (i, a) in points.iter().enumerate() {
            for (j, b) in points.iter().enumerate().skip(i + 1) {
                if labels[i] != labels[j] {
                    separation = separation.min(metric.distance(a, b));
                }
            }
        }
        let set = Self {
            points,
            labels,
            metric,
            separation,
        };
        train_max_margin(&set)?;
        Ok(set)
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Minimum distance between points of opposite labels.
    pub fn separation(&self) -> T {
        self.separation
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Random separable 2D set: `n` points in `[0, 1]²` labeled by a random
/// line, with points closer than `gap / 2` to the line discarded.
pub fn random_separable_fixture<T: Scalar>(n: usize, gap: f64, seed: u64) -> Result<PurePointSet<T>> {
    if n < 2 || !(gap > 0.0 && gap < 0.5) {
        return Err(Error::domain("need n >= 2 and gap in (0, 0.5)"));
    }
    let mut r = rng::rng_from(seed, &[]);
    loop {
        let theta: f64 = r.gen_range(0.0..std::f64::consts::TAU);
        let (ux, uy) = (theta.cos(), theta.sin());
        let c = ux * 0.5 + uy * 0.5 + r.gen_range(-0.15..0.15);
        let mut pts = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        let mut tries = 0;
        while pts.len() < n && tries < 100 * n {
            tries += 1;
            let (x, y): (f64, f64) = (r.gen(), r.gen());
            let s = ux * x + uy * y - c;
            if s.abs() < gap / 2.0 {
                continue;
            }
            pts.push(vec![T::lit(x), T::lit(y)]);
            labels.push(if s > 0.0 { 1 } else { -1 });
        }
        if pts.len() == n && labels.contains(&1) && labels.contains(&-1) {
            return PurePointSet::new(pts, labels, Metric::LInf);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearClassifier<T> {
    pub w: Vec<T>,
    pub b: T,
}

impl<T: Scalar> LinearClassifier<T> {
    pub fn new(w: Vec<T>, b: T) -> Result<Self> {
        if w.iter().all(|v| *v == T::zero()) || w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(Error::domain("w must be finite and non-zero"));
        }
        Ok(Self { w, b })
    }

    pub fn decision(&self, x: &[T]) -> T {
        self.w.iter().zip(x).fold(self.b, |acc, (&w, &v)| acc + w * v)
    }

    /// `+1` when `w·x + b > 0`, else `−1`.
    pub fn classify(&self, x: &[T]) -> i8 {
        if self.decision(x) > T::zero() {
            1
        } else {
            -1
        }
    }

    /// `min_i y_i (w·x_i + b) / ‖w‖₂`; negative when some point is misclassified.
    pub fn geometric_margin(&self, set: &PurePointSet<T>) -> T {
        let norm = self.w.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
        set.points
            .iter()
            .zip(&set.labels)
            .map(|(x, &y)| T::lit(y as f64) * self.decision(x) / norm)
            .fold(T::infinity(), T::min)
    }
}

const C_SCHEDULE: [f64; 6] = [1e0, 1e1, 1e2, 1e3, 1e4, 1e5];
const MAX_EPOCHS: usize = 3000;
const DUAL_TOL: f64 = 1e-9;

/// Hinge-loss SVM with L2 regularization `1/(2C)`, solved by dual
/// coordinate descent while `C` is annealed upward. After each stage the
/// bias is recentred midway between the classes along `w` and the solution
/// with the largest geometric margin is kept.
pub fn train_max_margin<T: Scalar>(set: &PurePointSet<T>) -> Result<LinearClassifier<T>> {
    let n = set.points.len();
    let d = set.dim();
    let mut mean = vec![0.0; d];
    for p in &set.points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v.as_f64() / n as f64;
        }
    }
    let xs: Vec<Vec<f64>> = set
        .points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(v, m)| v.as_f64() - m).collect())
        .collect();
    let ys: Vec<f64> = set.labels.iter().map(|&l| l as f64).collect();
    let bias_scale = xs
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
        .max(1e-12);
    // augmented feature vectors (x, B)
    let aug: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| {
            let mut a = x.clone();
            a.push(bias_scale);
            a
        })
        .collect();
    let qdiag: Vec<f64> = aug.iter().map(|a| a.iter().map(|v| v * v).sum()).collect();
    let mut alpha = vec![0.0; n];
    let mut wt = vec![0.0; d + 1];
    let mut order: Vec<usize> = (0..n).collect();
    let mut r = rng::rng_from(0x5eed, &[n as u64]);

    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for &c in &C_SCHEDULE {
        for _ in 0..MAX_EPOCHS {
            order.shuffle(&mut r);
            let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
            for &i in &order {
                let g = ys[i] * dot(&wt, &aug[i]) - 1.0;
                let pg = if alpha[i] <= 0.0 {
                    g.min(0.0)
                } else if alpha[i] >= c {
                    g.max(0.0)
                } else {
                    g
                };
                pg_max = pg_max.max(pg);
                pg_min = pg_min.min(pg);
                if pg.abs() > 1e-14 {
                    let old = alpha[i];
                    alpha[i] = (old - g / qdiag[i]).clamp(0.0, c);
                    let delta = (alpha[i] - old) * ys[i];
                    for (w, a) in wt.iter_mut().zip(&aug[i]) {
                        *w += delta * a;
                    }
                }
            }
            if pg_max - pg_min < DUAL_TOL {
                break;
            }
        }
        let w = &wt[..d];
        if let Some((margin, b)) = recentred(w, &xs, &ys) {
            if best.as_ref().is_none_or(|(m, _, _)| margin > *m) {
                best = Some((margin, w.to_vec(), b));
            }
        }
    }
    match best {
        Some((_, w, b_centered)) => {
            // undo centering: w·(x − μ) + b = w·x + (b − w·μ)
            let b = b_centered - dot(&w, &mean);
            LinearClassifier::new(w.iter().map(|&v| T::lit(v)).collect(), T::lit(b))
        }
        None => {
            let w = &wt[..d];
            let b = wt[d] * bias_scale;
            let violating = xs
                .iter()
                .zip(&ys)
                .enumerate()
                .filter(|(_, (x, &y))| y * (dot(w, x) + b) <= 0.0)
                .map(|(i, _)| i)
                .collect();
            Err(Error::TrainingFailed { violating })
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Midpoint bias and geometric margin for direction `w`, if it separates.
fn recentred(w: &[f64], xs: &[Vec<f64>], ys: &[f64]) -> Option<(f64, f64)> {
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    let mut min_pos = f64::INFINITY;
    let mut max_neg = f64::NEG_INFINITY;
    for (x, &y) in xs.iter().zip(ys) {
        let s = dot(w, x);
        if y > 0.0 {
            min_pos = min_pos.min(s);
        } else {
            max_neg = max_neg.max(s);
        }
    }
    (min_pos > max_neg).then(|| ((min_pos - max_neg) / (2.0 * norm), -(min_pos + max_neg) / 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactnessReport {
    pub epsilon: f64,
    pub separation: f64,
    pub samples: usize,
    pub errors: usize,
    /// `2ε < separation`; when false errors are permitted.
    pub hypothesis_holds: bool,
}

impl ExactnessReport {
    pub fn status(&self) -> &'static str {
        if self.hypothesis_holds {
            "exact"
        } else {
            "hypothesis-violated"
        }
    }
}

/// Draws `samples` points from `∪ B(x, ε)` (a uniform pure point, then a
/// uniform offset in the ball of the set's metric) and counts how often
/// `L(b_NN(z))` disagrees with the label of the point the sample came from.
/// The anchors of `b_NN` are the pure points themselves.
pub fn theorem1_harness<T: Scalar>(
    set: &PurePointSet<T>,
    classifier: &LinearClassifier<T>,
    epsilon: T,
    samples: usize,
    seed: u64,
) -> Result<ExactnessReport> {
    if !(epsilon.is_finite() && epsilon >= T::zero()) {
        return Err(Error::domain("ε must be finite and >= 0"));
    }
    if classifier.w.len() != set.dim() {
        return Err(Error::shape(format!("classifier of dimension {}", set.dim()), classifier.w.len()));
    }
    let nn = NearestNeighborBinarizer::new(set.points.clone(), set.metric)?;
    let mut r = rng::rng_from(seed, &[]);
    let mut errors = 0;
    let mut z = vec![T::zero(); set.dim()];
    for _ in 0..samples {
        let i = r.gen_range(0..set.len());
        sample_ball(&mut r, &set.points[i], epsilon, set.metric, &mut z);
        let snapped = nn.nearest(&z)?;
        if classifier.classify(snapped) != set.labels[i] {
            errors += 1;
        }
    }
    Ok(ExactnessReport {
        epsilon: epsilon.as_f64(),
        separation: set.separation.as_f64(),
        samples,
        errors,
        hypothesis_holds: T::lit(2.0) * epsilon < set.separation,
    })
}

fn sample_ball<T: Scalar, R: Rng>(r: &mut R, center: &[T], eps: T, metric: Metric, out: &mut [T]) {
    let e = eps.as_f64();
    loop {
        let offs: Vec<f64> = center.iter().map(|_| if e > 0.0 { r.gen_range(-e..=e) } else { 0.0 }).collect();
        if metric == Metric::L2 && offs.iter().map(|o| o * o).sum::<f64>() > e * e {
            continue;
        }
        for ((o, &c), off) in out.iter_mut().zip(center).zip(offs) {
            *o = c + T::lit(off);
        }
        return;
    }
}

/// Preprocessing applied before `L` in [`adversarial_region_area`].
#[derive(Debug, Clone, PartialEq)]
pub enum RegionBinarizer {
    /// Nearest pure point.
    NearestNeighbor,
    Lattice(LatticeBinarizer),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionAreas {
    pub area_raw: f64,
    pub area_binarized: f64,
    pub region_area: f64,
}

/// Grid scan of `∪ B(x, ε)` over a `resolution × resolution` grid of cell
/// centres on its bounding box. A cell is adversarial when some ball that
/// contains it carries a label other than the classifier's output there.
pub fn adversarial_region_area<T: Scalar>(
    classifier: &LinearClassifier<T>,
    set: &PurePointSet<T>,
    epsilon: T,
    resolution: usize,
    binarizer: &RegionBinarizer,
) -> Result<RegionAreas> {
    if set.dim() != 2 || classifier.w.len() != 2 {
        return Err(Error::domain("region areas are defined for 2D point sets only"));
    }
    if resolution == 0 || !(epsilon.is_finite() && epsilon >= T::zero()) {
        return Err(Error::domain("resolution must be >= 1 and ε >= 0"));
    }
    let zero = RegionAreas {
        area_raw: 0.0,
        area_binarized: 0.0,
        region_area: 0.0,
    };
    if epsilon == T::zero() {
        return Ok(zero);
    }
    let nn = NearestNeighborBinarizer::new(set.points.clone(), set.metric)?;
    let mut lo = [T::infinity(); 2];
    let mut hi = [T::neg_infinity(); 2];
    for p in &set.points {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a] - epsilon);
            hi[a] = hi[a].max(p[a] + epsilon);
        }
    }
    let res = T::lit(resolution as f64);
    let step = [(hi[0] - lo[0]) / res, (hi[1] - lo[1]) / res];
    let cell = (step[0] * step[1]).as_f64();
    let half = T::lit(0.5);
    let (mut raw, mut bin, mut inside) = (0usize, 0usize, 0usize);
    for i in 0..resolution {
        for j in 0..resolution {
            let z = [
                lo[0] + (T::lit(i as f64) + half) * step[0],
                lo[1] + (T::lit(j as f64) + half) * step[1],
            ];
            let mut has = [false; 2];
            for (p, &l) in set.points.iter().zip(&set.labels) {
                if set.metric.distance(p, &z) <= epsilon {
                    has[(l > 0) as usize] = true;
                }
            }
            if !(has[0] || has[1]) {
                continue;
            }
            inside += 1;
            let wrong = |pred: i8| has[(pred < 0) as usize];
            if wrong(classifier.classify(&z)) {
                raw += 1;
            }
            let pred = match binarizer {
                RegionBinarizer::NearestNeighbor => classifier.classify(nn.nearest(&z)?),
                RegionBinarizer::Lattice(l) => {
                    let mut s = z;
                    l.apply_slice(&mut s);
                    classifier.classify(&s)
                }
            };
            if wrong(pred) {
                bin += 1;
            }
        }
    }
    Ok(RegionAreas {
        area_raw: raw as f64 * cell,
        area_binarized: bin as f64 * cell,
        region_area: inside as f64 * cell,
    })
}
