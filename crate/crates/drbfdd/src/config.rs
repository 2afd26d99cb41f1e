//! Run configuration: a flat `key = value` text format with optional
//! `[grid]` blocks for hyper-parameter search.
//!
//! Base keys set one run; each `[grid]` block lists comma-separated
//! candidates per key and expands to the cross product of its lists applied
//! over the base config. Several blocks concatenate in file order, which is
//! also the tie-break order for grid search.
//!
//! ```text
//! model = rbfdd
//! csv = data/blob.csv
//! normal = 0
//! anomaly = 1
//! seed = 42
//!
//! [grid]
//! h = 4, 8, 16
//! beta = 1e-3, 1e-2
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use crate::data::{build_scenario, build_scenario_from_beats, load_csv_dataset, load_ecg_sidecar,
                  load_idx, segment_heartbeats, Scenario};
use crate::error::{Error, Result};
use crate::eval::{EvalConfig, ModelKind};
use crate::optim::{OptimizerKind, TrainConfig};

/// Where the instances come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSpec {
    /// IDX image/label file pair.
    Idx { images: PathBuf, labels: PathBuf },
    /// ECG sidecar pair: samples file + `peak_index,label` file.
    Ecg { signal: PathBuf, peaks: PathBuf },
    /// CSV with an integer label column first.
    Csv { path: PathBuf },
}

/// A fully parsed run: dataset, scenario labels, and one evaluation cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: DatasetSpec,
    pub normal: String,
    pub anomalies: Vec<String>,
    pub eval: EvalConfig,
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Loads and partitions the dataset this config names.
    pub fn load_scenario(&self) -> Result<Scenario> {
        match &self.dataset {
            DatasetSpec::Idx { images, labels } => {
                let set = load_idx(images, labels)?;
                let normal = parse_int_label(&self.normal)?;
                let anomalies = self
                    .anomalies
                    .iter()
                    .map(|a| parse_int_label(a))
                    .collect::<Result<Vec<_>>>()?;
                build_scenario(&set, normal, &anomalies)
            }
            DatasetSpec::Csv { path } => {
                let set = load_csv_dataset(path)?;
                let normal = parse_int_label(&self.normal)?;
                let anomalies = self
                    .anomalies
                    .iter()
                    .map(|a| parse_int_label(a))
                    .collect::<Result<Vec<_>>>()?;
                build_scenario(&set, normal, &anomalies)
            }
            DatasetSpec::Ecg { signal, peaks } => {
                let (sig, pk, labels) = load_ecg_sidecar(signal, peaks)?;
                let subject = signal
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "signal".into());
                let beats = segment_heartbeats(&sig, &pk, &labels, &subject)?;
                build_scenario_from_beats(&beats, &self.normal, &self.anomalies)
            }
        }
    }
}

fn parse_int_label(s: &str) -> Result<i64> {
    s.parse().map_err(|_| {
        Error::InvalidArgument(format!("label {:?} is not an integer class label", s))
    })
}

const KNOWN_KEYS: &[&str] = &[
    "model", "seed", "images", "labels", "signal", "peaks", "csv", "normal", "anomaly",
    "optimizer", "lr", "momentum", "adam_beta1", "adam_beta2", "adam_epsilon", "epochs", "batch",
    "h", "beta", "lambda", "n_estimators", "subsample", "iterations", "train_fraction", "out",
];

/// Keys a `[grid]` block may vary.
const GRID_KEYS: &[&str] = &["h", "beta", "lambda", "lr", "epochs", "n_estimators"];

#[derive(Debug, Clone, Default)]
struct RawConfig {
    base: Vec<(String, String, usize)>,          // key, value, line
    grids: Vec<Vec<(String, Vec<String>, usize)>>, // per block: key, candidates, line
}

fn parse_raw(text: &str, path: &str) -> Result<RawConfig> {
    let mut raw = RawConfig::default();
    let mut in_grid = false;
    for (ln0, line) in text.lines().enumerate() {
        let ln = ln0 + 1;
        let line = match line.find('#') {
            Some(p) => &line[..p],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line == "[grid]" {
            raw.grids.push(Vec::new());
            in_grid = true;
            continue;
        }
        if line.starts_with('[') {
            return Err(Error::Config {
                path: path.into(),
                line: ln,
                detail: format!("unknown section {:?}", line),
            });
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            path: path.into(),
            line: ln,
            detail: format!("expected key = value, got {:?}", line),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(Error::Config {
                path: path.into(),
                line: ln,
                detail: format!("unknown key {:?}", key),
            });
        }
        if in_grid {
            if !GRID_KEYS.contains(&key.as_str()) {
                return Err(Error::Config {
                    path: path.into(),
                    line: ln,
                    detail: format!(
                        "key {:?} cannot be grid-searched (allowed: {})",
                        key,
                        GRID_KEYS.join(", ")
                    ),
                });
            }
            let candidates: Vec<String> = value
                .split(',')
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty())
                .collect();
            if candidates.is_empty() {
                return Err(Error::Config {
                    path: path.into(),
                    line: ln,
                    detail: format!("grid key {:?} lists no values", key),
                });
            }
            raw.grids.last_mut().unwrap().push((key, candidates, ln));
        } else {
            raw.base.push((key, value, ln));
        }
    }
    Ok(raw)
}

struct Builder<'a> {
    path: &'a str,
}

impl<'a> Builder<'a> {
    fn err(&self, line: usize, detail: String) -> Error {
        Error::Config {
            path: self.path.into(),
            line,
            detail,
        }
    }

    fn parse_num<T: std::str::FromStr>(&self, key: &str, value: &str, line: usize) -> Result<T> {
        value
            .parse()
            .map_err(|_| self.err(line, format!("bad value {:?} for {}", value, key)))
    }

    fn apply(&self, cfg: &mut PartialConfig, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "model" => {
                cfg.model = Some(match value {
                    "rbfdd" => ModelKind::Rbfdd,
                    "drbfdd-2d" => ModelKind::Drbfdd2d,
                    "drbfdd-1d" => ModelKind::Drbfdd1d,
                    "iforest" => ModelKind::IForest,
                    other => {
                        return Err(self.err(
                            line,
                            format!(
                                "unknown model {:?} (expected rbfdd, drbfdd-2d, drbfdd-1d, iforest)",
                                other
                            ),
                        ))
                    }
                })
            }
            "seed" => cfg.train.seed = self.parse_num(key, value, line)?,
            "images" => cfg.images = Some(PathBuf::from(value)),
            "labels" => cfg.labels = Some(PathBuf::from(value)),
            "signal" => cfg.signal = Some(PathBuf::from(value)),
            "peaks" => cfg.peaks = Some(PathBuf::from(value)),
            "csv" => cfg.csv = Some(PathBuf::from(value)),
            "normal" => cfg.normal = Some(value.to_string()),
            "anomaly" => {
                cfg.anomalies = value
                    .split(',')
                    .map(|v| v.trim().to_string())
                    .filter(|v| !v.is_empty())
                    .collect();
                if cfg.anomalies.is_empty() {
                    return Err(self.err(line, "anomaly lists no labels".into()));
                }
            }
            "optimizer" => {
                cfg.optimizer_name = Some(match value {
                    "adam" | "sgd" => value.to_string(),
                    other => {
                        return Err(
                            self.err(line, format!("unknown optimizer {:?} (adam or sgd)", other))
                        )
                    }
                })
            }
            "lr" => cfg.train.learning_rate = self.parse_num(key, value, line)?,
            "momentum" => cfg.momentum = self.parse_num(key, value, line)?,
            "adam_beta1" => cfg.adam_beta1 = self.parse_num(key, value, line)?,
            "adam_beta2" => cfg.adam_beta2 = self.parse_num(key, value, line)?,
            "adam_epsilon" => cfg.adam_epsilon = self.parse_num(key, value, line)?,
            "epochs" => cfg.train.epochs = self.parse_num(key, value, line)?,
            "batch" => cfg.train.batch_size = self.parse_num(key, value, line)?,
            "h" => cfg.train.kernels = self.parse_num(key, value, line)?,
            "beta" => cfg.train.beta = self.parse_num(key, value, line)?,
            "lambda" => cfg.train.lambda = self.parse_num(key, value, line)?,
            "n_estimators" => cfg.n_estimators = self.parse_num(key, value, line)?,
            "subsample" => cfg.subsample = self.parse_num(key, value, line)?,
            "iterations" => cfg.iterations = self.parse_num(key, value, line)?,
            "train_fraction" => cfg.train_fraction = self.parse_num(key, value, line)?,
            "out" => cfg.out_dir = Some(PathBuf::from(value)),
            _ => unreachable!("key checked against KNOWN_KEYS"),
        }
        Ok(())
    }

    fn finish(&self, cfg: PartialConfig) -> Result<RunConfig> {
        let dataset = match (&cfg.images, &cfg.labels, &cfg.signal, &cfg.peaks, &cfg.csv) {
            (Some(i), Some(l), None, None, None) => DatasetSpec::Idx {
                images: i.clone(),
                labels: l.clone(),
            },
            (None, None, Some(s), Some(p), None) => DatasetSpec::Ecg {
                signal: s.clone(),
                peaks: p.clone(),
            },
            (None, None, None, None, Some(c)) => DatasetSpec::Csv { path: c.clone() },
            _ => {
                return Err(self.err(
                    0,
                    "exactly one dataset must be given: images+labels, signal+peaks, or csv".into(),
                ))
            }
        };
        let normal = cfg
            .normal
            .clone()
            .ok_or_else(|| self.err(0, "missing required key \"normal\"".into()))?;
        if cfg.anomalies.is_empty() {
            return Err(self.err(0, "missing required key \"anomaly\"".into()));
        }
        let model = cfg
            .model
            .ok_or_else(|| self.err(0, "missing required key \"model\"".into()))?;

        let mut train = cfg.train.clone();
        train.optimizer = match cfg.optimizer_name.as_deref() {
            Some("sgd") => OptimizerKind::Sgd {
                momentum: cfg.momentum,
            },
            _ => OptimizerKind::Adam {
                beta1: cfg.adam_beta1,
                beta2: cfg.adam_beta2,
                epsilon: cfg.adam_epsilon,
            },
        };
        train.validate().map_err(|e| self.err(0, e.to_string()))?;

        if cfg.iterations == 0 {
            return Err(self.err(0, "iterations must be at least 1".into()));
        }
        if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
            return Err(self.err(
                0,
                format!("train_fraction must lie in (0, 1), got {}", cfg.train_fraction),
            ));
        }

        Ok(RunConfig {
            dataset,
            normal,
            anomalies: cfg.anomalies.clone(),
            eval: EvalConfig {
                model,
                train,
                n_estimators: cfg.n_estimators,
                subsample: cfg.subsample,
                iterations: cfg.iterations,
                train_fraction: cfg.train_fraction,
            },
            out_dir: cfg.out_dir.clone(),
        })
    }
}

#[derive(Debug, Clone)]
struct PartialConfig {
    model: Option<ModelKind>,
    images: Option<PathBuf>,
    labels: Option<PathBuf>,
    signal: Option<PathBuf>,
    peaks: Option<PathBuf>,
    csv: Option<PathBuf>,
    normal: Option<String>,
    anomalies: Vec<String>,
    optimizer_name: Option<String>,
    momentum: f64,
    adam_beta1: f64,
    adam_beta2: f64,
    adam_epsilon: f64,
    train: TrainConfig,
    n_estimators: usize,
    subsample: usize,
    iterations: u32,
    train_fraction: f64,
    out_dir: Option<PathBuf>,
}

impl Default for PartialConfig {
    fn default() -> Self {
        let defaults = EvalConfig::default();
        PartialConfig {
            model: None,
            images: None,
            labels: None,
            signal: None,
            peaks: None,
            csv: None,
            normal: None,
            anomalies: Vec::new(),
            optimizer_name: None,
            momentum: 0.9,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            train: defaults.train,
            n_estimators: defaults.n_estimators,
            subsample: defaults.subsample,
            iterations: defaults.iterations,
            train_fraction: defaults.train_fraction,
            out_dir: None,
        }
    }
}

/// The parsed config plus its grid expansion (just the base run when no
/// `[grid]` blocks are present).
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub base: RunConfig,
    pub grid: Vec<RunConfig>,
}

/// Parses a config file, validating keys and values with line positions.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let spath = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(&spath, e))?;
    parse_config(&text, &spath)
}

/// Parses config text; `path` is only used in error messages.
pub fn parse_config(text: &str, path: &str) -> Result<LoadedConfig> {
    let raw = parse_raw(text, path)?;
    let builder = Builder { path };

    let mut base_partial = PartialConfig::default();
    for (key, value, line) in &raw.base {
        builder.apply(&mut base_partial, key, value, *line)?;
    }
    let base = builder.finish(base_partial.clone())?;

    let mut grid = Vec::new();
    for block in &raw.grids {
        // cross product of this block's candidate lists, earlier keys outermost
        let mut combos: Vec<Vec<(String, String, usize)>> = vec![Vec::new()];
        for (key, candidates, line) in block {
            let mut next = Vec::with_capacity(combos.len() * candidates.len());
            for combo in &combos {
                for cand in candidates {
                    let mut c = combo.clone();
                    c.push((key.clone(), cand.clone(), *line));
                    next.push(c);
                }
            }
            combos = next;
        }
        for combo in combos {
            let mut partial = base_partial.clone();
            for (key, value, line) in &combo {
                builder.apply(&mut partial, key, value, *line)?;
            }
            grid.push(builder.finish(partial)?);
        }
    }
    if grid.is_empty() {
        grid.push(base.clone());
    }

    Ok(LoadedConfig { base, grid })
}
