//! Command-line entry points: train, score, eval, and gridsearch. Each
//! command is a plain function over file paths so it can be driven from
//! tests as easily as from `main`.
//!
//! Output files are deterministic byte-for-byte given the same inputs and
//! seed; anything that varies run to run (timings) goes to stdout only.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{load_config, DatasetSpec, RunConfig};
use crate::data::{load_csv_dataset, Modality, Scenario};
use crate::deep::{build_extractor_1d, build_extractor_2d, DrbfddModel, FeatureExtractor};
use crate::error::{Error, Result};
use crate::eval::{evaluate, grid_search, EvalReport, ModelKind};
use crate::model_io::{load_model, save_model};
use crate::optim::train;
use crate::tensor::Tensor;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
    }
    fs::write(path, contents).map_err(|e| Error::io(path.display().to_string(), e))
}

fn resolve_out_dir(config: &RunConfig, out_flag: Option<&Path>) -> PathBuf {
    out_flag
        .map(Path::to_path_buf)
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."))
}

fn build_model_for(config: &RunConfig, scenario: &Scenario, init_seed: u64) -> Result<DrbfddModel> {
    let shape = scenario.normal.shape()[1..].to_vec();
    let extractor = match config.eval.model {
        ModelKind::Rbfdd => FeatureExtractor::identity(shape),
        ModelKind::Drbfdd2d => {
            if scenario.modality != Modality::Image2d || shape != [1, 28, 28] {
                return Err(Error::InvalidArgument(format!(
                    "drbfdd-2d expects 1x28x28 image data, got {} samples of {:?}",
                    scenario.modality, shape
                )));
            }
            build_extractor_2d(init_seed)
        }
        ModelKind::Drbfdd1d => {
            if scenario.modality != Modality::Signal1d || shape.len() != 2 || shape[0] != 1 {
                return Err(Error::InvalidArgument(format!(
                    "drbfdd-1d expects 1xL signal data, got {} samples of {:?}",
                    scenario.modality, shape
                )));
            }
            build_extractor_1d(init_seed, shape[1])
        }
        ModelKind::IForest => {
            return Err(Error::InvalidArgument(
                "model kind iforest cannot be trained to a model file; use eval or gridsearch"
                    .into(),
            ))
        }
    };
    Ok(DrbfddModel::with_placeholder_head(extractor))
}

/// Trains on every normal instance of the configured scenario and writes
/// `model.drbf` plus `train_report.csv` into the output directory.
pub fn cmd_train(config_path: &Path, out_flag: Option<&Path>) -> Result<()> {
    let loaded = load_config(config_path)?;
    let config = loaded.base;
    let scenario = config.load_scenario()?;
    let out_dir = resolve_out_dir(&config, out_flag);

    let init_seed = crate::derive_seed(config.eval.train.seed, 0x696e_6974);
    let mut model = build_model_for(&config, &scenario, init_seed)?;
    let report = train(&mut model, &scenario.normal, &config.eval.train)?;

    let model_path = out_dir.join("model.drbf");
    save_model(&model, &model_path)?;

    let mut csv = String::from("epoch,mean_loss\n");
    for (i, l) in report.epoch_loss.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 1, l));
    }
    write_file(&out_dir.join("train_report.csv"), &csv)?;

    println!(
        "trained {} on {} normal instances in {:.2}s -> {}",
        config.eval.model,
        scenario.normal.shape()[0],
        report.wall_seconds,
        model_path.display()
    );
    Ok(())
}

/// Reads instances from `data_path` (IDX images by magic, otherwise CSV
/// rows of feature values), scores them with a saved model, and writes
/// `scores.csv` (`id,score`, one row per instance).
pub fn cmd_score(model_path: &Path, data_path: &Path, out_flag: Option<&Path>) -> Result<()> {
    let model = load_model(model_path)?;
    let batch = read_score_input(data_path, model.extractor().input_shape())?;

    let mut csv = String::from("id,score\n");
    if let Some(batch) = batch {
        let scores = model.score_batch(&batch)?;
        for (i, s) in scores.iter().enumerate() {
            csv.push_str(&format!("{},{}\n", i, s));
        }
    }
    let out_dir = out_flag.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    let out_path = out_dir.join("scores.csv");
    write_file(&out_path, &csv)?;
    println!("scores -> {}", out_path.display());
    Ok(())
}

/// Parses score input into a batch matching the model's input spec.
/// Returns None for an empty file.
fn read_score_input(path: &Path, input_shape: &[usize]) -> Result<Option<Tensor>> {
    let spath = path.display().to_string();
    let bytes = fs::read(path).map_err(|e| Error::io(&spath, e))?;
    if bytes.is_empty() {
        return Ok(None);
    }
    let per_sample: usize = input_shape.iter().product();

    // IDX images file? (big-endian magic 0x00000803)
    if bytes.len() >= 4 && u32::from_be_bytes(bytes[..4].try_into().unwrap()) == 0x0000_0803 {
        if bytes.len() < 16 {
            return Err(Error::MalformedData {
                path: spath,
                detail: "truncated IDX header".into(),
            });
        }
        let count = u32::from_be_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let rows = u32::from_be_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let cols = u32::from_be_bytes(bytes[12..16].try_into().unwrap()) as usize;
        if bytes.len() != 16 + count * rows * cols {
            return Err(Error::MalformedData {
                path: spath,
                detail: "IDX payload does not match header".into(),
            });
        }
        if rows * cols != per_sample {
            return Err(Error::InvalidArgument(format!(
                "model expects {} values per instance, images have {}x{}",
                per_sample, rows, cols
            )));
        }
        let data: Vec<f64> = bytes[16..].iter().map(|&b| b as f64 / 255.0).collect();
        let mut shape = vec![count];
        shape.extend_from_slice(input_shape);
        return Ok(Some(Tensor::new(shape, data)?));
    }

    // otherwise: CSV rows of features
    let text = String::from_utf8(bytes).map_err(|_| Error::MalformedData {
        path: spath.clone(),
        detail: "not an IDX file and not UTF-8 text".into(),
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let row = match row {
            Ok(r) => r,
            Err(_) if ln == 0 => continue, // header
            Err(_) => {
                return Err(Error::MalformedData {
                    path: spath,
                    detail: format!("line {}: expected comma-separated numbers", ln + 1),
                })
            }
        };
        if row.len() != per_sample {
            return Err(Error::InvalidArgument(format!(
                "line {}: model expects {} values per instance, got {}",
                ln + 1,
                per_sample,
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Ok(None);
    }
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let n = refs.len();
    let mut shape = vec![n];
    shape.extend_from_slice(input_shape);
    Ok(Some(Tensor::stack(&refs, &[per_sample])?.reshape(shape)?))
}

/// Runs the bootstrap evaluation protocol and writes `eval_report.csv`.
pub fn cmd_eval(config_path: &Path, out_flag: Option<&Path>) -> Result<()> {
    let loaded = load_config(config_path)?;
    let config = loaded.base;
    let scenario = config.load_scenario()?;
    let report = evaluate(&scenario, &config.eval)?;

    let out_dir = resolve_out_dir(&config, out_flag);
    let out_path = out_dir.join("eval_report.csv");
    write_file(&out_path, &report.to_csv())?;
    println!(
        "{}: mean AUC {:.4} over {} iterations -> {}",
        scenario.name,
        report.mean_auc,
        report.aucs.len(),
        out_path.display()
    );
    Ok(())
}

fn grid_table_csv(reports: &[EvalReport]) -> String {
    let mut csv = String::from("config_index,config,mean_auc\n");
    for (i, r) in reports.iter().enumerate() {
        csv.push_str(&format!("{},{},{}\n", i, r.config.describe(), r.mean_auc));
    }
    csv
}

/// Evaluates every grid cell (optionally on several worker threads), then
/// writes `grid_table.csv`, the winning cell's `best_config.txt`, and the
/// winner's full `eval_report.csv`.
pub fn cmd_gridsearch(config_path: &Path, out_flag: Option<&Path>, workers: usize) -> Result<()> {
    let loaded = load_config(config_path)?;
    let scenario = loaded.base.load_scenario()?;
    let grid: Vec<_> = loaded.grid.iter().map(|g| g.eval.clone()).collect();
    let (best, reports) = grid_search(&scenario, &grid, workers)?;

    let out_dir = resolve_out_dir(&loaded.base, out_flag);
    write_file(&out_dir.join("grid_table.csv"), &grid_table_csv(&reports))?;

    let best_report = reports
        .iter()
        .find(|r| r.config == best)
        .expect("best config has a report");
    write_file(&out_dir.join("eval_report.csv"), &best_report.to_csv())?;

    let mut best_txt = String::new();
    best_txt.push_str(&format!("model = {}\n", best.model));
    best_txt.push_str(&format!("h = {}\n", best.train.kernels));
    best_txt.push_str(&format!("beta = {}\n", best.train.beta));
    best_txt.push_str(&format!("lambda = {}\n", best.train.lambda));
    best_txt.push_str(&format!("lr = {}\n", best.train.learning_rate));
    best_txt.push_str(&format!("epochs = {}\n", best.train.epochs));
    best_txt.push_str(&format!("batch = {}\n", best.train.batch_size));
    best_txt.push_str(&format!("n_estimators = {}\n", best.n_estimators));
    best_txt.push_str(&format!("mean_auc = {}\n", best_report.mean_auc));
    write_file(&out_dir.join("best_config.txt"), &best_txt)?;

    println!(
        "grid of {} cells: best {} with mean AUC {:.4}",
        reports.len(),
        best.describe(),
        best_report.mean_auc
    );
    Ok(())
}

const USAGE: &str = "usage: drbfdd <train|score|eval|gridsearch> <args> [--out DIR] [--workers N]
  train      <config>          train on all normal instances, write model.drbf
  score      <model> <data>    score instances (IDX images or CSV rows), write scores.csv
  eval       <config>          bootstrap evaluation, write eval_report.csv
  gridsearch <config>          evaluate every [grid] cell, write grid_table.csv";

/// Parses argv-style arguments and dispatches. Returns the process exit
/// code: 0 success, 1 usage/config error, 2 data error, 3 numeric abort.
pub fn run(args: &[String]) -> i32 {
    match run_inner(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e);
            if matches!(e, Error::Usage(_)) {
                eprintln!("{}", USAGE);
            }
            e.exit_code()
        }
    }
}

fn run_inner(args: &[String]) -> Result<()> {
    let mut positional: Vec<&str> = Vec::new();
    let mut out_dir: Option<PathBuf> = None;
    let mut workers = 1usize;
    let mut i = 0;
    while i < args.len() {
        match args[i].as_str() {
            "--out" => {
                i += 1;
                let v = args.get(i).ok_or(Error::Usage("--out needs a directory".into()))?;
                out_dir = Some(PathBuf::from(v));
            }
            "--workers" => {
                i += 1;
                let v = args.get(i).ok_or(Error::Usage("--workers needs a count".into()))?;
                workers = v
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad worker count {:?}", v)))?;
                if workers == 0 {
                    return Err(Error::Usage("--workers must be at least 1".into()));
                }
            }
            flag if flag.starts_with("--") => {
                return Err(Error::Usage(format!("unknown flag {:?}", flag)))
            }
            p => positional.push(p),
        }
        i += 1;
    }

    match positional.as_slice() {
        ["train", config] => cmd_train(Path::new(config), out_dir.as_deref()),
        ["score", model, data] => cmd_score(Path::new(model), Path::new(data), out_dir.as_deref()),
        ["eval", config] => cmd_eval(Path::new(config), out_dir.as_deref()),
        ["gridsearch", config] => cmd_gridsearch(Path::new(config), out_dir.as_deref(), workers),
        [] => Err(Error::Usage("no command given".into())),
        other => Err(Error::Usage(format!("unrecognized command line {:?}", other))),
    }
}

/// Convenience used by tests: score a CSV/IDX file against a scenario-less
/// model file and return the parsed (id, score) rows.
pub fn read_scores_csv(path: &Path) -> Result<Vec<(usize, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let (id, score) = line.split_once(',').ok_or_else(|| Error::MalformedData {
            path: path.display().to_string(),
            detail: format!("bad score row {:?}", line),
        })?;
        out.push((
            id.parse().map_err(|_| Error::MalformedData {
                path: path.display().to_string(),
                detail: format!("bad id {:?}", id),
            })?,
            score.parse().map_err(|_| Error::MalformedData {
                path: path.display().to_string(),
                detail: format!("bad score {:?}", score),
            })?,
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(&[]), 1);
        assert_eq!(run(&["frobnicate".into()]), 1);
        assert_eq!(run(&["train".into()]), 1);
        assert_eq!(run(&["--workers".into(), "x".into(), "eval".into(), "c".into()]), 1);
    }

    #[test]
    fn missing_config_file_is_a_data_error() {
        assert_eq!(run(&["eval".into(), "/nonexistent/config".into()]), 2);
    }
}
