use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use robustfeat::attack::{attack_dataset, sweep_epsilon};
use robustfeat::binarize::{LatticeBinarizer, Metric};
use robustfeat::data::synth::{sign_dataset, SIGN_CLASSES};
use robustfeat::data::{load_image, load_mnist_idx, pixel_mass_stats, Dataset};
use robustfeat::groupfeat::{verify_color_robustness, ColorExtractor, GroupLabelMap, HueCenters};
use robustfeat::maxmargin::{
    adversarial_region_area, random_separable_fixture, theorem1_harness, train_max_margin, PurePointSet,
    RegionBinarizer,
};
use robustfeat::netcore::Network;
use robustfeat::pipeline::ModelPipeline;
use robustfeat::rng::derive_seed;
use robustfeat::train::{build_pipeline, train_kind, Evaluation, TrainConfig};
use robustfeat::Scalar;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::CliError;

pub const STATS_HEADER: &str = "config_hash,split,images,pixels,low_cut,high_cut,frac_low,frac_mid,frac_high";
pub const ATTACK_HEADER: &str =
    "config_hash,kind,samples,clean_accuracy,adversarial_accuracy,epsilon,step,iterations,restarts,wall_seconds";
pub const SWEEP_HEADER: &str = "config_hash,kind,epsilon,clean_accuracy,adversarial_accuracy";
pub const TRACE_HEADER: &str = "config_hash,iteration,clean_acc,adv_acc,seconds";
pub const THEOREM1_HEADER: &str =
    "config_hash,fixture,metric,epsilon,separation,samples,errors,status,area_raw,area_nearest,area_lattice";

pub struct Context {
    cfg: ExperimentConfig,
    hash: String,
}

const MNIST_FILES: [(&str, &str); 2] = [
    ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
];

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn jsonl(values: &[serde_json::Value]) -> String {
    values.iter().map(|v| format!("{v}\n")).collect()
}

impl Context {
    /// Creates the output directory and echoes the resolved config into it.
    pub fn create(cfg: ExperimentConfig) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.output_dir).map_err(|e| CliError::Io(cfg.output_dir.clone(), e))?;
        write(&cfg.output_dir.join("config.toml"), &cfg.to_toml())?;
        let hash = cfg.hash();
        Ok(Self { cfg, hash })
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    fn checkpoint_path(&self, given: Option<PathBuf>) -> PathBuf {
        given.unwrap_or_else(|| self.out("model.json"))
    }

    fn mnist_split<T: Scalar>(&self, split: usize) -> Result<Dataset<T>, CliError> {
        let dir = &self.cfg.data.mnist_dir;
        let (img, lbl) = MNIST_FILES[split];
        Ok(load_mnist_idx(dir.join(img), dir.join(lbl))?)
    }

    /// (train, test) per `data.source`, truncated to the configured limits.
    fn datasets<T: Scalar>(&self) -> Result<(Dataset<T>, Dataset<T>), CliError> {
        let d = &self.cfg.data;
        let (train, test) = if d.source == "signs" {
            let mk = |stream| sign_dataset(d.signs_per_class, d.signs_size, d.signs_max_noise, derive_seed(self.cfg.seed, &[stream]));
            (mk(10)?, mk(11)?)
        } else {
            (self.mnist_split(0)?, self.mnist_split(1)?)
        };
        let cut = |ds: Dataset<T>, limit: Option<usize>| match limit {
            Some(n) => ds.take(n),
            None => ds,
        };
        Ok((cut(train, d.train_limit), cut(test, d.test_limit)))
    }

    fn pipeline<T: Scalar>(&self, net: Network<T>) -> Result<ModelPipeline<T>, CliError> {
        Ok(build_pipeline(self.cfg.kind(), net, T::lit(self.cfg.model.tau))?)
    }

    fn load_pipeline<T: Scalar>(&self, checkpoint: Option<PathBuf>) -> Result<ModelPipeline<T>, CliError> {
        let net = Network::<f64>::load_checkpoint(self.checkpoint_path(checkpoint))?;
        self.pipeline(cast_network(&net)?)
    }

    fn f32(&self) -> bool {
        self.cfg.model.precision == "f32"
    }

    pub fn train(&self) -> Result<(), CliError> {
        if self.f32() {
            self.train_as::<f32>()
        } else {
            self.train_as::<f64>()
        }
    }

    fn train_as<T: Scalar>(&self) -> Result<(), CliError> {
        let (train, test) = self.datasets::<T>()?;
        let mut dims = vec![train.input_dim()];
        dims.extend(&self.cfg.model.hidden);
        dims.push(train.num_classes());
        let net = Network::<T>::random(&dims, derive_seed(self.cfg.seed, &[1]))?;
        let mut pipe = self.pipeline(net)?;
        let t = &self.cfg.train;
        let cfg = TrainConfig {
            checkpoint_every: t.checkpoint_every,
            stop_at_adv_acc: t.stop_at_adv_acc,
            ..TrainConfig::new(t.iterations, t.batch_size, T::lit(t.learning_rate), derive_seed(self.cfg.seed, &[2]))
        };
        let eval_data = test.take(t.eval_limit);
        let eval = Evaluation {
            data: &eval_data,
            attack: t.eval.build()?,
        };
        let trace = train_kind(self.cfg.kind(), &mut pipe, &train, &cfg, &t.inner.build()?, Some(&eval))?;
        let as64 = cast_network::<T, f64>(&pipe.net)?;
        as64.save_checkpoint(self.out("model.json"))?;
        let mut csv = format!("{TRACE_HEADER}\n");
        for p in &trace.points {
            let _ = writeln!(csv, "{},{},{},{},{:.6}", self.hash, p.iteration, p.clean_acc, p.adv_acc, p.seconds);
        }
        write(&self.out("trace.csv"), &csv)?;
        let summary = json!({
            "config_hash": self.hash,
            "kind": self.cfg.model.kind,
            "iterations_run": trace.iterations_run,
            "final_clean_accuracy": trace.final_clean_accuracy,
            "training_seconds": trace.training_seconds,
        });
        write(&self.out("train.json"), &format!("{summary:#}\n"))?;
        println!("{summary}");
        Ok(())
    }

    pub fn attack(&self, checkpoint: Option<PathBuf>) -> Result<(), CliError> {
        if self.f32() {
            self.attack_as::<f32>(checkpoint)
        } else {
            self.attack_as::<f64>(checkpoint)
        }
    }

    fn attack_as<T: Scalar>(&self, checkpoint: Option<PathBuf>) -> Result<(), CliError> {
        let pipe = self.load_pipeline::<T>(checkpoint)?;
        let (_, test) = self.datasets::<T>()?;
        let rep = attack_dataset(&pipe, &test, &self.cfg.attack.build()?)?;
        let row = format!(
            "{},{},{},{},{},{},{},{},{},{:.3}",
            self.hash,
            self.cfg.model.kind,
            rep.samples,
            rep.clean_accuracy,
            rep.adversarial_accuracy,
            rep.epsilon,
            rep.step,
            rep.iterations,
            rep.restarts,
            rep.wall_seconds
        );
        write(&self.out("attack.csv"), &format!("{ATTACK_HEADER}\n{row}\n"))?;
        println!("{ATTACK_HEADER}\n{row}");
        Ok(())
    }

    pub fn sweep(&self, checkpoint: Option<PathBuf>) -> Result<(), CliError> {
        if self.f32() {
            self.sweep_as::<f32>(checkpoint)
        } else {
            self.sweep_as::<f64>(checkpoint)
        }
    }

    fn sweep_as<T: Scalar>(&self, checkpoint: Option<PathBuf>) -> Result<(), CliError> {
        let pipe = self.load_pipeline::<T>(checkpoint)?;
        let (_, test) = self.datasets::<T>()?;
        let eps: Vec<T> = self.cfg.sweep.epsilons.iter().map(|&e| T::lit(e)).collect();
        let points = sweep_epsilon(&pipe, &test, &self.cfg.attack.build()?, &eps)?;
        let mut csv = format!("{SWEEP_HEADER}\n");
        for p in &points {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                self.hash, self.cfg.model.kind, p.epsilon, p.clean_accuracy, p.adversarial_accuracy
            );
        }
        write(&self.out("sweep.csv"), &csv)?;
        print!("{csv}");
        Ok(())
    }

    fn extractor(&self) -> Result<ColorExtractor, CliError> {
        let g = &self.cfg.groups;
        let centers = HueCenters::new(g.hue_red, g.hue_yellow, g.hue_blue)
            .map_err(|e| CliError::Usage(format!("groups: {e}")))?;
        Ok(ColorExtractor::new(centers))
    }

    fn group_map(&self) -> Result<GroupLabelMap, CliError> {
        if self.cfg.groups.map.is_empty() {
            return Ok(GroupLabelMap::default_signs());
        }
        GroupLabelMap::from_names(&self.cfg.groups.map, &SIGN_CLASSES)
            .map_err(|e| CliError::Usage(format!("groups.map: {e}")))
    }

    pub fn extract_color(&self, paths: &[PathBuf]) -> Result<(), CliError> {
        let ex = self.extractor()?;
        let map = self.group_map()?;
        let mut rows = Vec::new();
        let mut first_error = None;
        for p in paths {
            let result = load_image::<f64>(p).and_then(|img| ex.extract_with_votes(&img));
            rows.push(match result {
                Ok((color, votes)) => json!({
                    "config_hash": self.hash,
                    "path": p.display().to_string(),
                    "color": color,
                    "votes": votes,
                    "labels": map.group_labels(color).iter().map(|&l| SIGN_CLASSES.get(l).copied().unwrap_or("?")).collect::<Vec<_>>(),
                }),
                Err(e) => {
                    let row = json!({"config_hash": self.hash, "path": p.display().to_string(), "error": e.to_string()});
                    first_error.get_or_insert(e);
                    row
                }
            });
        }
        let text = jsonl(&rows);
        write(&self.out("extract-color.jsonl"), &text)?;
        print!("{text}");
        first_error.map_or(Ok(()), |e| Err(e.into()))
    }

    pub fn verify(&self, epsilon: f64, paths: &[PathBuf]) -> Result<(), CliError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(CliError::Usage(format!("--epsilon {epsilon} is outside [0, 1]")));
        }
        let ex = self.extractor()?;
        let mut rows = Vec::new();
        let mut first_error = None;
        for p in paths {
            let result = load_image::<f64>(p).and_then(|img| verify_color_robustness(&ex, &img, epsilon));
            rows.push(match result {
                Ok(v) => {
                    let failures: Vec<_> = v
                        .failures
                        .iter()
                        .map(|f| {
                            json!({
                                "shift": f.shift.map(|s| s as f64 * epsilon),
                                "color": f.color,
                                "error": f.error,
                            })
                        })
                        .collect();
                    json!({
                        "config_hash": self.hash,
                        "path": p.display().to_string(),
                        "epsilon": epsilon,
                        "reference": v.reference,
                        "robust": v.robust,
                        "failures": failures,
                    })
                }
                Err(e) => {
                    let row = json!({"config_hash": self.hash, "path": p.display().to_string(), "error": e.to_string()});
                    first_error.get_or_insert(e);
                    row
                }
            });
        }
        let text = jsonl(&rows);
        write(&self.out("verify.jsonl"), &text)?;
        print!("{text}");
        first_error.map_or(Ok(()), |e| Err(e.into()))
    }

    pub fn theorem1(&self) -> Result<(), CliError> {
        let t = &self.cfg.theorem1;
        let metric = if t.metric == "l2" { Metric::L2 } else { Metric::LInf };
        let mut fixtures: Vec<(String, PurePointSet<f64>)> = vec![("four-point".into(), four_point_fixture(metric)?)];
        for i in 0..t.fixtures {
            let s = random_separable_fixture::<f64>(t.points, t.gap, derive_seed(self.cfg.seed, &[3, i as u64]))?;
            let s = PurePointSet::new(s.points().to_vec(), s.labels().to_vec(), metric)?;
            fixtures.push((format!("random-{i}"), s));
        }
        let lattice = RegionBinarizer::Lattice(LatticeBinarizer::new(2)?);
        let mut csv = format!("{THEOREM1_HEADER}\n");
        for (i, (name, set)) in fixtures.iter().enumerate() {
            let l = train_max_margin(set)?;
            let eps = t.epsilon_fraction * set.separation();
            let rep = theorem1_harness(set, &l, eps, t.samples, derive_seed(self.cfg.seed, &[4, i as u64]))?;
            let nn = adversarial_region_area(&l, set, eps, t.resolution, &RegionBinarizer::NearestNeighbor)?;
            let lat = adversarial_region_area(&l, set, eps, t.resolution, &lattice)?;
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{}",
                self.hash,
                name,
                t.metric,
                rep.epsilon,
                rep.separation,
                rep.samples,
                rep.errors,
                rep.status(),
                nn.area_raw,
                nn.area_binarized,
                lat.area_binarized
            );
        }
        write(&self.out("theorem1.csv"), &csv)?;
        print!("{csv}");
        Ok(())
    }

    pub fn stats(&self, split: &str, low: f64, high: f64) -> Result<(), CliError> {
        let idx = match split {
            "train" => 0,
            "test" => 1,
            other => return Err(CliError::Usage(format!("--split: expected `train` or `test`, got `{other}`"))),
        };
        let ds = self.mnist_split::<f32>(idx)?;
        let m = pixel_mass_stats(&ds, low, high)?;
        let row = format!(
            "{},{},{},{},{},{},{},{},{}",
            self.hash,
            split,
            ds.len(),
            ds.len() * ds.input_dim(),
            low,
            high,
            m.low,
            m.mid,
            m.high
        );
        write(&self.out("stats.csv"), &format!("{STATS_HEADER}\n{row}\n"))?;
        println!("{STATS_HEADER}\n{row}");
        Ok(())
    }
}

/// Two negatives on a horizontal line, two positives above the gap between
/// them, scaled into `[0, 1]²`.
fn four_point_fixture(metric: Metric) -> robustfeat::Result<PurePointSet<f64>> {
    PurePointSet::new(
        vec![vec![0.1, 0.1], vec![0.9, 0.1], vec![0.5, 0.3], vec![0.5, 0.7]],
        vec![-1, -1, 1, 1],
        metric,
    )
}

fn cast_network<A: Scalar, B: Scalar>(net: &Network<A>) -> robustfeat::Result<Network<B>> {
    use robustfeat::netcore::Dense;
    let layers = net
        .layers()
        .iter()
        .map(|l| Dense::new(l.weights.mapv(|v| B::lit(v.as_f64())), l.bias.mapv(|v| B::lit(v.as_f64())), l.activation))
        .collect::<robustfeat::Result<Vec<_>>>()?;
    Network::new(layers)
}
