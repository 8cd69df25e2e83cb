//! One pass/fail line per acceptance criterion, written straight to stderr so
//! it shows up without `--nocapture`. Needs the MNIST IDX files (see README).

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::Rng;
use robustfeat::attack::{attack_dataset, pgd, sweep_epsilon, AttackConfig, Preset};
use robustfeat::augment::{intersect_groups, AugmentedClassifier, LabelGroup};
use robustfeat::binarize::{certify_threshold, ThresholdBinarizer};
use robustfeat::data::synth::{class_appearance, palette_color, sign_dataset, synth_sign, SignPalette, SignShape, SignSpec};
use robustfeat::data::{load_mnist_idx, Dataset};
use robustfeat::groupfeat::{verify_color_robustness, ColorExtractor, ColorName};
use robustfeat::maxmargin::{random_separable_fixture, theorem1_harness, train_max_margin};
use robustfeat::netcore::{cross_entropy, Activation, Dense, Network};
use robustfeat::pipeline::{Classify, ModelPipeline};
use robustfeat::rng::rng_from;
use robustfeat::train::{build_pipeline, train_kind, Evaluation, ModelKind, TrainConfig, TrainingTrace};
use robustfeat::{augment, Image, Result};

type Pipe = ModelPipeline<f32>;

fn report(n: u32, pass: bool, secs: f64, limit: f64, detail: &str) -> bool {
    let ok = pass && secs < limit;
    let line = format!(
        "criterion {n:>2} [{}] {detail} ({secs:.1}s, limit {limit:.0}s)\n",
        if ok { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    ok
}

fn mnist_dir() -> PathBuf {
    std::env::var_os("ROBUSTFEAT_MNIST_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist"))
}

fn mnist(train: bool) -> &'static Dataset<f32> {
    static TRAIN: OnceLock<Dataset<f32>> = OnceLock::new();
    static TEST: OnceLock<Dataset<f32>> = OnceLock::new();
    let (cell, img, lbl) = if train {
        (&TRAIN, "train-images-idx3-ubyte", "train-labels-idx1-ubyte")
    } else {
        (&TEST, "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte")
    };
    cell.get_or_init(|| {
        let d = mnist_dir();
        load_mnist_idx(d.join(img), d.join(lbl))
            .unwrap_or_else(|e| panic!("MNIST not found under {} ({e}); see README", d.display()))
    })
}

fn mlp(seed: u64) -> Network<f32> {
    Network::random(&[784, 256, 10], seed).unwrap()
}

// ---------------------------------------------------------------- 1

fn pixel_mass() -> bool {
    let tmp = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_robustfeat"))
        .arg("--output-dir")
        .arg(tmp.path())
        .arg("--mnist-dir")
        .arg(mnist_dir())
        .args(["stats", "--split", "train", "--low", "0.1", "--high", "0.9"])
        .output()
        .unwrap();
    let secs = t.elapsed().as_secs_f64();
    let csv = std::fs::read_to_string(tmp.path().join("stats.csv")).unwrap_or_default();
    let row: Vec<f64> = csv
        .lines()
        .nth(1)
        .map(|l| l.split(',').skip(6).map(|v| v.parse().unwrap()).collect())
        .unwrap_or_default();
    let pass = out.status.success()
        && row.len() == 3
        && (0.79..=0.85).contains(&row[0])
        && (0.05..=0.11).contains(&row[2]);
    report(1, pass, secs, 10.0, &format!("frac_low/mid/high = {row:?}"))
}

// ---------------------------------------------------------------- 2

fn gradients() -> bool {
    let t = Instant::now();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let mut r = rng_from(seed, &[20]);
        let d = r.gen_range(2..10);
        let k = r.gen_range(2..6);
        let net = Network::<f64>::random(&[d, r.gen_range(2..10), k], seed).unwrap();
        let x: Vec<f64> = (0..d).map(|_| r.gen()).collect();
        let y = r.gen_range(0..k);
        let g = net.loss_and_gradients(&x, y).unwrap();
        let loss = |net: &Network<f64>, x: &[f64]| cross_entropy(&net.forward(x).unwrap(), y);
        let mut check = |a: f64, n: f64| worst = worst.max((a - n).abs() / a.abs().max(n.abs()).max(1e-6));
        for j in 0..d {
            let (mut p, mut m) = (x.clone(), x.clone());
            p[j] += h;
            m[j] -= h;
            check(g.input_grad[j], (loss(&net, &p) - loss(&net, &m)) / (2.0 * h));
        }
        for (li, lg) in g.param_grads.iter().enumerate() {
            for ((i, j), &a) in lg.weights.indexed_iter() {
                let (mut p, mut m) = (net.clone(), net.clone());
                p.layers_mut()[li].weights[[i, j]] += h;
                m.layers_mut()[li].weights[[i, j]] -= h;
                check(a, (loss(&p, &x) - loss(&m, &x)) / (2.0 * h));
            }
        }
    }
    report(2, worst < 1e-4, t.elapsed().as_secs_f64(), 30.0, &format!("max relative error {worst:.2e}"))
}

// ---------------------------------------------------------------- 3

fn linear_oracle() -> bool {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for seed in 0..50u64 {
        let mut r = rng_from(seed, &[30]);
        let d = 8;
        let w = Array2::from_shape_fn((2, d), |_| r.gen_range(-1.0..1.0));
        let b = Array1::from_shape_fn(2, |_| r.gen_range(-0.5..0.5));
        let pipe = ModelPipeline::bare(Network::new(vec![Dense::new(w.clone(), b, Activation::Identity).unwrap()]).unwrap());
        let x0: Vec<f64> = (0..d).map(|_| r.gen()).collect();
        let y = r.gen_range(0..2);
        let eps = r.gen_range(0.05..0.3);
        let cfg = AttackConfig::new(eps, eps / 20.0, 25, 1).unwrap();
        let res = pgd(&pipe, &Image::from_vec(x0.clone()).unwrap(), y, &cfg).unwrap();
        for j in 0..d {
            let want = x0[j] + eps * (w[[1 - y, j]] - w[[y, j]]).signum();
            if (0.0..=1.0).contains(&want) {
                worst = worst.max((res.adversarial_example.pixels()[j] - want).abs());
                checked += 1;
            }
        }
    }
    report(3, worst < 1e-6, t.elapsed().as_secs_f64(), 5.0, &format!("{checked} coordinates, max deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- 4

fn ball_scan_max(net: &Network<f64>, x0: &[f64], y: usize, eps: f64, per_axis: usize) -> f64 {
    let axes: Vec<Vec<f64>> = x0
        .iter()
        .map(|&c| {
            let (lo, hi) = ((c - eps).max(0.0), (c + eps).min(1.0));
            (0..per_axis).map(|k| lo + (hi - lo) * k as f64 / (per_axis - 1) as f64).collect()
        })
        .collect();
    let mut z = vec![0.0; x0.len()];
    let mut best = f64::NEG_INFINITY;
    for mut code in 0..per_axis.pow(x0.len() as u32) {
        for (a, axis) in axes.iter().enumerate() {
            z[a] = axis[code % per_axis];
            code /= per_axis;
        }
        best = best.max(cross_entropy(&net.forward(&z).unwrap(), y));
    }
    best
}

fn brute_force_oracle() -> bool {
    let t = Instant::now();
    let mut worst = f64::INFINITY;
    for seed in 0..20u64 {
        let net = Network::<f64>::random(&[4, 6, 3], 400 + seed).unwrap();
        let mut r = rng_from(seed, &[40]);
        let x0: Vec<f64> = (0..4).map(|_| r.gen()).collect();
        let y = r.gen_range(0..3);
        let eps = 0.25;
        let brute = ball_scan_max(&net, &x0, y, eps, 15);
        let pipe = ModelPipeline::bare(net);
        let cfg = AttackConfig::new(eps, 0.01, 100, 10).unwrap().with_seed(seed);
        let got = pgd(&pipe, &Image::from_vec(x0).unwrap(), y, &cfg).unwrap().achieved_loss;
        worst = worst.min(got / brute);
    }
    report(4, worst >= 0.98, t.elapsed().as_secs_f64(), 120.0, &format!("min PGD / scan loss ratio {worst:.4}"))
}

// ---------------------------------------------------------------- 5

fn nearest_neighbor_exactness() -> bool {
    let t = Instant::now();
    let mut errors = 0;
    let mut hypothesis = true;
    for seed in 0..20u64 {
        let set = random_separable_fixture::<f64>(30, 0.1, 500 + seed).unwrap();
        let l = train_max_margin(&set).unwrap();
        let rep = theorem1_harness(&set, &l, 0.49 * set.separation(), 10_000, seed).unwrap();
        hypothesis &= rep.hypothesis_holds;
        errors += rep.errors;
    }
    report(5, hypothesis && errors == 0, t.elapsed().as_secs_f64(), 60.0, &format!("20 fixtures x 1e4 samples, {errors} errors"))
}

// ---------------------------------------------------------------- 6

fn certified_soundness() -> bool {
    let t = Instant::now();
    let test = mnist(false);
    let b = ThresholdBinarizer::new(0.5f32).unwrap();
    let eps = 0.05f32;
    let mut r = rng_from(6, &[]);
    let (mut certified, mut violations) = (0, 0);
    for (x, _) in test.iter() {
        if !certify_threshold(x, &b, eps).unwrap().certified {
            continue;
        }
        certified += 1;
        let bx = b.apply(x);
        for _ in 0..1000 {
            let z: Vec<f32> = x.pixels().iter().map(|&v| (v + r.gen_range(-eps..=eps)).clamp(0.0, 1.0)).collect();
            violations += (b.apply(&x.with_pixels(z).unwrap()) != bx) as usize;
        }
        if certified == 100 {
            break;
        }
    }
    report(
        6,
        certified == 100 && violations == 0,
        t.elapsed().as_secs_f64(),
        60.0,
        &format!("{certified} certified images at eps {eps}, {violations} violations"),
    )
}

// ---------------------------------------------------------------- 7

fn natural_models() -> &'static (Pipe, Pipe, f64) {
    static CELL: OnceLock<(Pipe, Pipe, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = Instant::now();
        let train = mnist(true);
        let cfg = TrainConfig::new(3750, 32, 0.1f32, 7);
        let unused = Preset::Fast.config();
        let fit = |kind| {
            let mut p = build_pipeline(kind, mlp(70), 0.5).unwrap();
            train_kind(kind, &mut p, train, &cfg, &unused, None).unwrap();
            p
        };
        let nat = fit(ModelKind::Natural);
        let bin = fit(ModelKind::Bin);
        (nat, bin, t.elapsed().as_secs_f64())
    })
}

fn binarizer_gap() -> bool {
    let t = Instant::now();
    let (nat, bin, _) = natural_models();
    let test = mnist(false);
    let atk = Preset::Fast.config();
    let n = attack_dataset(nat, test, &atk).unwrap();
    let b = attack_dataset(bin, test, &atk).unwrap();
    let pass = n.adversarial_accuracy <= 0.10
        && b.adversarial_accuracy >= n.adversarial_accuracy + 0.40
        && n.clean_accuracy >= 0.95
        && b.clean_accuracy >= 0.95;
    report(
        7,
        pass,
        t.elapsed().as_secs_f64(),
        900.0,
        &format!(
            "natural clean {:.4} adv {:.4}; bin clean {:.4} adv {:.4}",
            n.clean_accuracy, n.adversarial_accuracy, b.clean_accuracy, b.adversarial_accuracy
        ),
    )
}

// ---------------------------------------------------------------- 9

const MILESTONE: f64 = 0.70;

struct SpeedRun {
    bat: Vec<(TrainingTrace, Pipe)>,
    mat: Vec<(TrainingTrace, Pipe)>,
    seconds: f64,
}

fn adversarial_run(kind: ModelKind, seed: u64, cap: usize) -> (TrainingTrace, Pipe) {
    let train = mnist(true);
    let eval_data = mnist(false).take(500);
    let eval = Evaluation::standard(&eval_data);
    let cfg = TrainConfig {
        checkpoint_every: 200,
        stop_at_adv_acc: Some(MILESTONE),
        ..TrainConfig::new(cap, 64, 0.1f32, 900 + seed)
    };
    let inner = AttackConfig::new(0.3, 0.05, 10, 1).unwrap();
    let mut p = build_pipeline(kind, mlp(90 + seed), 0.5).unwrap();
    let trace = train_kind(kind, &mut p, train, &cfg, &inner, Some(&eval)).unwrap();
    (trace, p)
}

fn speed_runs() -> &'static SpeedRun {
    static CELL: OnceLock<SpeedRun> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = Instant::now();
        let mut bat = Vec::new();
        let mut mat = Vec::new();
        for seed in 0..3 {
            bat.push(adversarial_run(ModelKind::Bat, seed, 3000));
            mat.push(adversarial_run(ModelKind::Mat, seed, 1500));
        }
        SpeedRun {
            bat,
            mat,
            seconds: t.elapsed().as_secs_f64(),
        }
    })
}

/// `Some(true)` when BAT is strictly faster to the milestone. A MAT run that
/// never reached it counts as slower once its training time exceeds BAT's.
fn bat_faster(bat: &TrainingTrace, mat: &TrainingTrace) -> Option<bool> {
    let tb = bat.time_to(MILESTONE)?;
    match mat.time_to(MILESTONE) {
        Some(tm) => Some(tb < tm),
        None if mat.training_seconds > tb => Some(true),
        None => None,
    }
}

fn training_speed() -> bool {
    let runs = speed_runs();
    let mut wins = 0;
    let mut detail = Vec::new();
    for (seed, ((b, _), (m, _))) in runs.bat.iter().zip(&runs.mat).enumerate() {
        let v = bat_faster(b, m);
        wins += (v == Some(true)) as usize;
        let fmt = |t: &TrainingTrace| match t.time_to(MILESTONE) {
            Some(s) => format!("{s:.1}s"),
            None => format!(
                ">{:.1}s (best adv {:.3})",
                t.training_seconds,
                t.points.iter().map(|p| p.adv_acc).fold(0.0, f64::max)
            ),
        };
        detail.push(format!("seed {seed}: bat {} mat {}", fmt(b), fmt(m)));
    }
    report(9, wins >= 2, runs.seconds, 3600.0, &detail.join("; "))
}

// ---------------------------------------------------------------- 8

fn sweep_shape() -> bool {
    let t = Instant::now();
    let (nat, bin, _) = natural_models();
    let runs = speed_runs();
    let test = mnist(false).take(1000);
    let eps: Vec<f32> = (0..=10).map(|i| i as f32 / 20.0).collect();
    let base = Preset::Fast.config();
    let curve = |p: &Pipe| sweep_epsilon(p, &test, &base, &eps).unwrap();
    let models = [("natural", nat), ("bin", bin), ("mat", &runs.mat[0].1), ("bat", &runs.bat[0].1)];
    let curves: Vec<_> = models.iter().map(|(n, p)| (*n, curve(p))).collect();
    let monotone = curves
        .iter()
        .all(|(_, c)| c.windows(2).all(|w| w[1].adversarial_accuracy <= w[0].adversarial_accuracy));
    let bin_above = curves[0].1.iter().zip(&curves[1].1).all(|(n, b)| {
        let in_range = n.epsilon >= 0.1 - 1e-6 && n.epsilon <= 0.4 + 1e-6;
        !in_range || b.adversarial_accuracy > n.adversarial_accuracy
    });
    let detail: Vec<String> = curves
        .iter()
        .map(|(name, c)| {
            let accs: Vec<String> = c.iter().map(|p| format!("{:.2}", p.adversarial_accuracy)).collect();
            format!("{name} [{}]", accs.join(" "))
        })
        .collect();
    report(8, monotone && bin_above, t.elapsed().as_secs_f64(), 1200.0, &detail.join("; "))
}

// ---------------------------------------------------------------- 10

fn palette_name(p: SignPalette) -> ColorName {
    match p {
        SignPalette::Red => ColorName::Red,
        SignPalette::Blue => ColorName::Blue,
        SignPalette::Yellow => ColorName::Yellow,
    }
}

fn color_fixtures() -> bool {
    let t = Instant::now();
    let ex = ColorExtractor::default();
    let (mut correct, mut robust, mut total) = (0, 0, 0);
    for (pi, palette) in [SignPalette::Red, SignPalette::Yellow, SignPalette::Blue].into_iter().enumerate() {
        let shape = [SignShape::Octagon, SignShape::Diamond, SignShape::Circle][pi];
        for k in 0..10u64 {
            let mut r = rng_from(pi as u64, &[100, k]);
            let size = 16 + 4 * k as usize;
            let bg = r.gen_range(0.3..0.7);
            let spec = SignSpec::new(shape, palette_color(palette, 0.05, &mut r), [bg; 3], size)
                .noise(r.gen_range(0.0..=0.02), k);
            let img = synth_sign::<f64>(&spec).unwrap().image;
            total += 1;
            correct += (ex.extract(&img).ok() == Some(palette_name(palette))) as usize;
            robust += verify_color_robustness(&ex, &img, 8.0 / 255.0).map(|v| v.robust).unwrap_or(false) as usize;
        }
    }

    // Targeted cross-color PGD against a sign classifier: red signs pushed
    // toward blue labels, then checked against the color extractor.
    let train = sign_dataset::<f32>(30, 32, 0.02, 101).unwrap();
    let test = sign_dataset::<f32>(10, 32, 0.02, 102).unwrap();
    let mut pipe = ModelPipeline::bare(Network::random(&[train.input_dim(), 64, train.num_classes()], 103).unwrap());
    let cfg = TrainConfig::new(1500, 32, 0.05f32, 104);
    train_kind(ModelKind::Natural, &mut pipe, &train, &cfg, &Preset::Fast.config(), None).unwrap();
    let clean = robustfeat::train::accuracy(&pipe, &test).unwrap();
    let blue: Vec<usize> = (0..11).filter(|&l| class_appearance(l).1 == SignPalette::Blue).collect();
    let campaign = |eps: f32| {
        let mut produced = Vec::new();
        let mut successes = Vec::new();
        for (i, (x, y)) in test.iter().enumerate() {
            if class_appearance(y).1 != SignPalette::Red {
                continue;
            }
            let target = blue[i % blue.len()];
            let atk = AttackConfig::new(eps, eps / 8.0, 40, 1).unwrap().targeted(target);
            let res = pgd(&pipe, x, y, &atk).unwrap();
            if res.success {
                successes.push((res.adversarial_example.clone(), ColorName::Red));
            }
            produced.push((res.adversarial_example, ColorName::Red));
        }
        (produced, successes)
    };
    let (produced, successes) = campaign(8.0 / 255.0);
    let rate = augment::correction_rate(&ex, &produced).unwrap();
    // informational: a radius at which the classifier is actually fooled
    let (_, wide) = campaign(0.2);
    let wide_rate = if wide.is_empty() { 0.0 } else { augment::correction_rate(&ex, &wide).unwrap() };
    let pass = correct == total && robust as f64 >= 0.9 * total as f64 && rate >= 0.9;
    report(
        10,
        pass,
        t.elapsed().as_secs_f64(),
        600.0,
        &format!(
            "extract {correct}/{total}, robust {robust}/{total}; classifier clean {clean:.3}; \
             eps 8/255: correction rate {rate:.3} over {} examples, {} fooled the classifier; \
             eps 0.2: {} fooled, correction rate {wide_rate:.3}",
            produced.len(),
            successes.len(),
            wide.len()
        ),
    )
}

// ---------------------------------------------------------------- 11

const CLASSES: usize = 6;

/// Stub extractor: which side of `tau` coordinate `coord` falls on, mapped
/// to a label set. Robust with radius `|x[coord] − tau|`.
struct SideGroup {
    coord: usize,
    tau: f64,
    below: BTreeSet<usize>,
    above: BTreeSet<usize>,
}

impl LabelGroup<f64> for SideGroup {
    fn name(&self) -> &str {
        "side"
    }

    fn labels(&self, x: &Image<f64>) -> Result<BTreeSet<usize>> {
        Ok(if x.pixels()[self.coord] >= self.tau { self.above.clone() } else { self.below.clone() })
    }
}

struct Fixed(usize);

impl Classify<f64> for Fixed {
    fn classify(&self, _: &Image<f64>) -> Result<usize> {
        Ok(self.0)
    }
}

fn random_labels<R: Rng>(r: &mut R) -> BTreeSet<usize> {
    (0..CLASSES).filter(|_| r.gen_bool(0.5)).collect()
}

fn random_group<R: Rng>(r: &mut R, coord: usize) -> SideGroup {
    SideGroup {
        coord,
        tau: r.gen_range(0.05..0.95),
        below: random_labels(r),
        above: random_labels(r),
    }
}

fn in_ball<R: Rng>(r: &mut R, x: &[f64], radius: f64) -> Image<f64> {
    Image::from_vec(x.iter().map(|v| (v + r.gen_range(-radius..=radius)).clamp(0.0, 1.0)).collect()).unwrap()
}

fn group_properties() -> bool {
    let t = Instant::now();
    let trials = 10_000u64;
    let mut r = rng_from(11, &[]);

    // composition: a network behind a binarizer is robust with the binarizer's radius
    let mut composition = 0;
    for i in 0..trials {
        let tau = r.gen_range(0.2..0.8);
        let b = ThresholdBinarizer::new(tau).unwrap();
        let x: Vec<f64> = (0..6).map(|_| r.gen()).collect();
        let gamma = x.iter().map(|v| (v - tau).abs()).fold(f64::INFINITY, f64::min) * 0.999;
        let img = Image::from_vec(x.clone()).unwrap();
        assert!(certify_threshold(&img, &b, gamma).unwrap().certified);
        let net = Network::<f64>::random(&[6, 8, CLASSES], i).unwrap();
        let pipe = ModelPipeline::new(robustfeat::pipeline::Preprocess::Threshold(b), net);
        let z = in_ball(&mut r, &x, gamma);
        composition += (pipe.predict(&z).unwrap() != pipe.predict(&img).unwrap()) as usize;
    }

    // intersection: robust with the smallest stage radius
    let mut intersection = 0;
    for _ in 0..trials {
        let groups: Vec<SideGroup> = (0..3).map(|c| random_group(&mut r, c)).collect();
        let x: Vec<f64> = (0..4).map(|_| r.gen()).collect();
        let gamma = groups.iter().map(|g| (x[g.coord] - g.tau).abs()).fold(f64::INFINITY, f64::min) * 0.999;
        let stages: Vec<&dyn LabelGroup<f64>> = groups.iter().map(|g| g as &dyn LabelGroup<f64>).collect();
        let img = Image::from_vec(x.clone()).unwrap();
        let z = in_ball(&mut r, &x, gamma);
        intersection += (intersect_groups(&z, &stages).unwrap() != intersect_groups(&img, &stages).unwrap()) as usize;
    }

    // flagged exactly when the base label is outside every consistent set
    let mut biconditional = 0;
    for _ in 0..trials {
        let groups: Vec<SideGroup> = (0..2).map(|c| random_group(&mut r, c)).collect();
        let base = Fixed(r.gen_range(0..CLASSES));
        let stages: Vec<&dyn LabelGroup<f64>> = groups.iter().map(|g| g as &dyn LabelGroup<f64>).collect();
        let ac = AugmentedClassifier::new(&base, stages.clone()).unwrap();
        let x = Image::from_vec((0..2).map(|_| r.gen()).collect()).unwrap();
        let v = ac.classify(&x).unwrap();
        let consistent = intersect_groups(&x, &stages).unwrap().contains(&base.0);
        biconditional += (v.flagged == consistent) as usize;
    }

    report(
        11,
        composition + intersection + biconditional == 0,
        t.elapsed().as_secs_f64(),
        60.0,
        &format!("1e4 trials each; counterexamples composition {composition}, intersection {intersection}, flag {biconditional}"),
    )
}

#[test]
fn acceptance() {
    let results = [
        pixel_mass(),
        gradients(),
        linear_oracle(),
        brute_force_oracle(),
        nearest_neighbor_exactness(),
        certified_soundness(),
        binarizer_gap(),
        training_speed(),
        sweep_shape(),
        color_fixtures(),
        group_properties(),
    ];
    let failed = results.iter().filter(|&&ok| !ok).count();
    let _ = std::io::stderr().write_all(format!("acceptance: {} passed, {failed} failed\n", results.len() - failed).as_bytes());
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
