//! The evaluation protocol: repeated bootstrap splits (80% of normals to
//! train, the rest plus every anomaly to test), ROC-AUC per iteration,
//! averaging, hyper-parameter grid search, and cross-method rank tables.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Modality, Scenario};
use crate::deep::{build_extractor_1d, build_extractor_2d, DrbfddModel, FeatureExtractor};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::iforest::IsolationForest;
use crate::optim::{train, TrainConfig};
use crate::tensor::Tensor;

/// Index plan of one bootstrap iteration. `train` and `test_normal`
/// partition the scenario's normal instances; the test set is
/// `test_normal` plus every anomalous instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub test_normal: Vec<usize>,
    pub seed: u64,
    pub iteration: u32,
}

/// Seeded sampling without replacement of `floor(train_fraction * N)`
/// normal indices; the per-iteration stream is derived from (seed,
/// iteration), so every iteration reshuffles differently but reproducibly.
pub fn bootstrap_split(
    scenario: &Scenario,
    train_fraction: f64,
    seed: u64,
    iteration: u32,
) -> Result<SplitPlan> {
    if !(0.0..1.0).contains(&train_fraction) || train_fraction <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {}",
            train_fraction
        )));
    }
    let n = scenario.normal.shape()[0];
    if n < 2 {
        return Err(Error::TooFewPoints { points: n, k: 2 });
    }
    let n_train = ((n as f64) * train_fraction).floor() as usize;
    let n_train = n_train.clamp(1, n - 1);

    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng =
        ChaCha8Rng::seed_from_u64(derive_seed(derive_seed(seed, 0x7370_6c69), iteration as u64));
    indices.shuffle(&mut rng);
    let mut train: Vec<usize> = indices[..n_train].to_vec();
    let mut test_normal: Vec<usize> = indices[n_train..].to_vec();
    train.sort_unstable();
    test_normal.sort_unstable();
    Ok(SplitPlan {
        train,
        test_normal,
        seed,
        iteration,
    })
}

/// ROC-AUC via the Mann-Whitney statistic: the probability that a random
/// anomaly outranks a random normal, counting ties as half. Computed with
/// average ranks over one sort, which matches all-pairs counting exactly.
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            op: "roc_auc",
            detail: format!("{} scores vs {} labels", scores.len(), truth.len()),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("roc_auc: NaN score".into()));
    }
    let n_pos = truth.iter().filter(|&&t| t).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 {
        return Err(Error::SingleClass("normal instances"));
    }
    if n_neg == 0 {
        return Err(Error::SingleClass("anomalous instances"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());

    // average rank per tie group, 1-based ranks
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0usize;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if truth[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }

    let np = n_pos as f64;
    let nn = n_neg as f64;
    Ok((rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn))
}

/// Which detector a config trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Rbfdd,
    Drbfdd2d,
    Drbfdd1d,
    IForest,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Rbfdd => write!(f, "rbfdd"),
            ModelKind::Drbfdd2d => write!(f, "drbfdd-2d"),
            ModelKind::Drbfdd1d => write!(f, "drbfdd-1d"),
            ModelKind::IForest => write!(f, "iforest"),
        }
    }
}

/// One evaluation cell: a detector plus everything needed to train and
/// bootstrap it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub model: ModelKind,
    pub train: TrainConfig,
    /// Isolation-forest ensemble size (ignored by the neural kinds).
    pub n_estimators: usize,
    pub subsample: usize,
    pub iterations: u32,
    pub train_fraction: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            model: ModelKind::Rbfdd,
            train: TrainConfig::default(),
            n_estimators: 100,
            subsample: crate::iforest::DEFAULT_SUBSAMPLE,
            iterations: 10,
            train_fraction: 0.8,
        }
    }
}

impl EvalConfig {
    /// Short human/CSV-friendly description of the cell.
    pub fn describe(&self) -> String {
        match self.model {
            ModelKind::IForest => format!(
                "iforest(n_estimators={},subsample={})",
                self.n_estimators, self.subsample
            ),
            kind => format!(
                "{}(h={},beta={},lambda={},lr={},epochs={},batch={})",
                kind,
                self.train.kernels,
                self.train.beta,
                self.train.lambda,
                self.train.learning_rate,
                self.train.epochs,
                self.train.batch_size
            ),
        }
    }
}

/// Scores one AUC run: per-iteration values and their mean.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub scenario: String,
    pub config: EvalConfig,
    pub aucs: Vec<f64>,
    pub mean_auc: f64,
}

impl EvalReport {
    /// Comma-separated rows: header, one row per iteration, one mean row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scenario,config,iteration,auc\n");
        for (i, auc) in self.aucs.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.scenario,
                self.config.describe(),
                i + 1,
                auc
            ));
        }
        out.push_str(&format!(
            "{},{},mean,{}\n",
            self.scenario,
            self.config.describe(),
            self.mean_auc
        ));
        out
    }
}

/// A fitted scoring function: batch of instances in, anomaly scores out.
pub type Scorer = Box<dyn Fn(&Tensor) -> Result<Vec<f64>>>;

/// Core bootstrap loop with an injectable trainer, so any scorer (the
/// built-in detectors, a baseline, an oracle in tests) runs under the
/// identical protocol: split, fit on the normal train part, score held-out
/// normals plus all anomalies, AUC, repeat, average.
pub fn evaluate_with<F>(
    scenario: &Scenario,
    iterations: u32,
    train_fraction: f64,
    seed: u64,
    mut fit: F,
) -> Result<EvalReport>
where
    F: FnMut(u32, &Tensor) -> Result<Scorer>,
{
    if iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be at least 1".into()));
    }
    let mut aucs = Vec::with_capacity(iterations as usize);
    for iteration in 0..iterations {
        let run = || -> Result<f64> {
            let plan = bootstrap_split(scenario, train_fraction, seed, iteration)?;
            let train_set = scenario.normal.gather0(&plan.train);
            let scorer = fit(iteration, &train_set)?;

            let test_normal = scenario.normal.gather0(&plan.test_normal);
            let mut scores = scorer(&test_normal)?;
            let mut truth = vec![false; scores.len()];
            let anom_scores = scorer(&scenario.anomalous)?;
            truth.extend(std::iter::repeat(true).take(anom_scores.len()));
            scores.extend(anom_scores);
            roc_auc(&scores, &truth)
        };
        let auc = run().map_err(|e| Error::EvalIteration {
            iteration: iteration + 1,
            source: Box::new(e),
        })?;
        aucs.push(auc);
    }
    let mean_auc = aucs.iter().sum::<f64>() / aucs.len() as f64;
    Ok(EvalReport {
        scenario: scenario.name.clone(),
        config: EvalConfig::default(),
        aucs,
        mean_auc,
    })
}

fn sample_shape(scenario: &Scenario) -> Vec<usize> {
    scenario.normal.shape()[1..].to_vec()
}

fn extractor_for(kind: ModelKind, scenario: &Scenario, init_seed: u64) -> Result<FeatureExtractor> {
    let shape = sample_shape(scenario);
    match kind {
        ModelKind::Rbfdd => Ok(FeatureExtractor::identity(shape)),
        ModelKind::Drbfdd2d => {
            if scenario.modality != Modality::Image2d || shape != [1, 28, 28] {
                return Err(Error::InvalidArgument(format!(
                    "drbfdd-2d expects 1x28x28 image scenarios, got {} samples of {:?}",
                    scenario.modality, shape
                )));
            }
            Ok(build_extractor_2d(init_seed))
        }
        ModelKind::Drbfdd1d => {
            if scenario.modality != Modality::Signal1d || shape.len() != 2 || shape[0] != 1 {
                return Err(Error::InvalidArgument(format!(
                    "drbfdd-1d expects 1xL signal scenarios, got {} samples of {:?}",
                    scenario.modality, shape
                )));
            }
            Ok(build_extractor_1d(init_seed, shape[1]))
        }
        ModelKind::IForest => unreachable!("iforest has no extractor"),
    }
}

fn flatten_batch(batch: &Tensor) -> Tensor {
    let n = batch.shape()[0];
    let flat: usize = batch.shape()[1..].iter().product();
    batch.clone().reshape(vec![n, flat]).expect("same element count")
}

/// Full protocol for one config on one scenario. Per-iteration model seeds
/// are derived from the config seed, so iterations see independent splits
/// and initializations while the whole report stays reproducible.
pub fn evaluate(scenario: &Scenario, config: &EvalConfig) -> Result<EvalReport> {
    let base_seed = config.train.seed;
    let mut report = match config.model {
        ModelKind::IForest => {
            let (n_estimators, subsample) = (config.n_estimators, config.subsample);
            evaluate_with(
                scenario,
                config.iterations,
                config.train_fraction,
                base_seed,
                move |iteration, train_set| {
                    let fit_seed = derive_seed(derive_seed(base_seed, 0x6966_6f72), iteration as u64);
                    let forest =
                        IsolationForest::fit(&flatten_batch(train_set), n_estimators, subsample, fit_seed)?;
                    Ok(Box::new(move |batch: &Tensor| {
                        let flat = flatten_batch(batch);
                        (0..flat.shape()[0])
                            .map(|i| forest.score(flat.index0(i)))
                            .collect()
                    }) as Scorer)
                },
            )?
        }
        kind => {
            let train_config = config.train.clone();
            evaluate_with(
                scenario,
                config.iterations,
                config.train_fraction,
                base_seed,
                move |iteration, train_set| {
                    let iter_seed = derive_seed(derive_seed(base_seed, 0x7472_6169), iteration as u64);
                    let extractor = extractor_for(kind, scenario, derive_seed(iter_seed, 0x696e_6974))?;
                    let mut model = DrbfddModel::with_placeholder_head(extractor);
                    let mut cfg = train_config.clone();
                    cfg.seed = iter_seed;
                    train(&mut model, train_set, &cfg)?;
                    Ok(Box::new(move |batch: &Tensor| model.score_batch(batch)) as Scorer)
                },
            )?
        }
    };
    report.config = config.clone();
    Ok(report)
}

/// Evaluates every grid cell and returns the best config (highest mean AUC,
/// ties broken by grid order) along with all reports. Cells are independent
/// jobs; `workers > 1` runs them on that many threads with the result order
/// still fixed by grid index.
pub fn grid_search(
    scenario: &Scenario,
    grid: &[EvalConfig],
    workers: usize,
) -> Result<(EvalConfig, Vec<EvalReport>)> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("grid search needs a nonempty grid".into()));
    }
    let reports: Vec<EvalReport> = if workers <= 1 || grid.len() == 1 {
        grid.iter()
            .map(|cfg| evaluate(scenario, cfg))
            .collect::<Result<_>>()?
    } else {
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<Result<EvalReport>>>> =
            Mutex::new((0..grid.len()).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..workers.min(grid.len()) {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= grid.len() {
                        break;
                    }
                    let r = evaluate(scenario, &grid[i]);
                    slots.lock().unwrap()[i] = Some(r);
                });
            }
        });
        slots
            .into_inner()
            .unwrap()
            .into_iter()
            .map(|s| s.expect("every cell was visited"))
            .collect::<Result<_>>()?
    };

    let mut best = 0usize;
    for (i, r) in reports.iter().enumerate() {
        if r.mean_auc > reports[best].mean_auc {
            best = i;
        }
    }
    Ok((grid[best].clone(), reports))
}

/// Per-scenario AUCs, ranks (1 = best, ties share the averaged rank), and
/// the average rank of each method across scenarios.
#[derive(Debug, Clone)]
pub struct RankTable {
    pub methods: Vec<String>,
    pub scenarios: Vec<String>,
    /// `aucs[m][s]` = mean AUC of method m on scenario s.
    pub aucs: Vec<Vec<f64>>,
    /// `ranks[m][s]`, same layout.
    pub ranks: Vec<Vec<f64>>,
    pub average_ranks: Vec<f64>,
}

/// Ranks a complete method-by-scenario AUC matrix.
pub fn rank_table(
    methods: &[String],
    scenarios: &[String],
    aucs: &[Vec<f64>],
) -> Result<RankTable> {
    let m = methods.len();
    let s = scenarios.len();
    if aucs.len() != m || aucs.iter().any(|row| row.len() != s) {
        return Err(Error::InvalidArgument(format!(
            "rank_table needs a complete {}x{} matrix",
            m, s
        )));
    }
    if m == 0 || s == 0 {
        return Err(Error::InvalidArgument("rank_table needs at least one method and scenario".into()));
    }

    let mut ranks = vec![vec![0.0f64; s]; m];
    for sc in 0..s {
        let mut order: Vec<usize> = (0..m).collect();
        // rank 1 = highest AUC
        order.sort_by(|&a, &b| aucs[b][sc].partial_cmp(&aucs[a][sc]).unwrap());
        let mut i = 0usize;
        while i < m {
            let mut j = i;
            while j + 1 < m && aucs[order[j + 1]][sc] == aucs[order[i]][sc] {
                j += 1;
            }
            let avg = (i + 1 + j + 1) as f64 / 2.0;
            for &mi in &order[i..=j] {
                ranks[mi][sc] = avg;
            }
            i = j + 1;
        }
    }
    let average_ranks = ranks
        .iter()
        .map(|row| row.iter().sum::<f64>() / s as f64)
        .collect();
    Ok(RankTable {
        methods: methods.to_vec(),
        scenarios: scenarios.to_vec(),
        aucs: aucs.to_vec(),
        ranks,
        average_ranks,
    })
}

impl RankTable {
    /// Comma-separated table: one row per method, AUC and rank per scenario,
    /// average rank last.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method");
        for s in &self.scenarios {
            out.push_str(&format!(",auc:{},rank:{}", s, s));
        }
        out.push_str(",avg_rank\n");
        for (mi, method) in self.methods.iter().enumerate() {
            out.push_str(method);
            for sc in 0..self.scenarios.len() {
                out.push_str(&format!(",{},{}", self.aucs[mi][sc], self.ranks[mi][sc]));
            }
            out.push_str(&format!(",{}\n", self.average_ranks[mi]));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::seeded_rng;
    use rand::Rng;

    fn toy_scenario(n_normal: usize, n_anom: usize) -> Scenario {
        // normals near zero, anomalies near ten: trivially separable by mean
        let mut rng = seeded_rng(1);
        let normal: Vec<f64> = (0..n_normal * 2).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let anom: Vec<f64> = (0..n_anom * 2).map(|_| 10.0 + rng.gen_range(-0.5..0.5)).collect();
        Scenario {
            name: "toy".into(),
            normal: Tensor::new(vec![n_normal, 2], normal).unwrap(),
            anomalous: Tensor::new(vec![n_anom, 2], anom).unwrap(),
            modality: Modality::Tabular,
        }
    }

    #[test]
    fn split_floors_the_train_fraction() {
        let sc = toy_scenario(10, 3);
        let plan = bootstrap_split(&sc, 0.8, 0, 0).unwrap();
        assert_eq!(plan.train.len(), 8);
        assert_eq!(plan.test_normal.len(), 2);
    }

    #[test]
    fn split_partitions_normals_exactly() {
        let sc = toy_scenario(23, 5);
        let plan = bootstrap_split(&sc, 0.8, 7, 3).unwrap();
        let mut all: Vec<usize> = plan.train.iter().chain(&plan.test_normal).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..23).collect::<Vec<_>>());
    }

    #[test]
    fn split_is_deterministic_per_iteration() {
        let sc = toy_scenario(20, 2);
        let a = bootstrap_split(&sc, 0.8, 5, 2).unwrap();
        let b = bootstrap_split(&sc, 0.8, 5, 2).unwrap();
        assert_eq!(a, b);
        let c = bootstrap_split(&sc, 0.8, 5, 3).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn split_rejects_tiny_scenarios() {
        let sc = toy_scenario(1, 1);
        assert!(bootstrap_split(&sc, 0.8, 0, 0).is_err());
    }

    #[test]
    fn auc_perfect_and_tied() {
        let scores = [0.1, 0.2, 0.9, 0.8];
        let truth = [false, false, true, true];
        assert_eq!(roc_auc(&scores, &truth).unwrap(), 1.0);

        let same = [0.5; 6];
        let truth = [true, false, true, false, true, false];
        assert_eq!(roc_auc(&same, &truth).unwrap(), 0.5);
    }

    #[test]
    fn auc_rejects_single_class() {
        assert!(roc_auc(&[0.1, 0.2], &[true, true]).is_err());
        assert!(roc_auc(&[0.1, 0.2], &[false, false]).is_err());
    }

    /// O(n^2) all-pairs oracle with half-credit ties.
    fn auc_pairwise(scores: &[f64], truth: &[bool]) -> f64 {
        let mut wins = 0.0f64;
        let mut pairs = 0.0f64;
        for (i, &ti) in truth.iter().enumerate() {
            if !ti {
                continue;
            }
            for (j, &tj) in truth.iter().enumerate() {
                if tj {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn auc_matches_pairwise_oracle() {
        let mut rng = seeded_rng(3);
        for trial in 0..50 {
            let n = rng.gen_range(5..120);
            // coarse grid forces heavy ties on odd trials
            let scores: Vec<f64> = (0..n)
                .map(|_| {
                    if trial % 2 == 0 {
                        rng.gen_range(-1.0..1.0)
                    } else {
                        (rng.gen_range(0..5) as f64) / 4.0
                    }
                })
                .collect();
            let mut truth: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
            truth[0] = true;
            truth[1] = false;
            let fast = roc_auc(&scores, &truth).unwrap();
            let slow = auc_pairwise(&scores, &truth);
            assert!((fast - slow).abs() < 1e-12, "{} vs {}", fast, slow);
        }
    }

    #[test]
    fn auc_flips_under_negation_and_ignores_monotone_transforms() {
        let mut rng = seeded_rng(4);
        let scores: Vec<f64> = (0..60).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let truth: Vec<bool> = (0..60).map(|i| i % 3 == 0).collect();
        let auc = roc_auc(&scores, &truth).unwrap();
        let negated: Vec<f64> = scores.iter().map(|s| -s).collect();
        assert!((roc_auc(&negated, &truth).unwrap() - (1.0 - auc)).abs() < 1e-12);
        let transformed: Vec<f64> = scores.iter().map(|s| (s * 0.3).exp() + 7.0).collect();
        assert!((roc_auc(&transformed, &truth).unwrap() - auc).abs() < 1e-12);
    }

    #[test]
    fn oracle_scorer_reaches_perfect_auc() {
        // normals sit at 0, anomalies at 10; the mean feature is a perfect score
        let sc = toy_scenario(30, 10);
        let report = evaluate_with(&sc, 10, 0.8, 0, |_, _| {
            Ok(Box::new(|batch: &Tensor| {
                Ok((0..batch.shape()[0])
                    .map(|i| batch.index0(i).iter().sum::<f64>())
                    .collect())
            }) as Scorer)
        })
        .unwrap();
        assert_eq!(report.aucs.len(), 10);
        assert_eq!(report.mean_auc, 1.0);
    }

    #[test]
    fn constant_scorer_sits_at_half() {
        let sc = toy_scenario(30, 10);
        let report = evaluate_with(&sc, 5, 0.8, 0, |_, _| {
            Ok(Box::new(|batch: &Tensor| Ok(vec![0.25; batch.shape()[0]])) as Scorer)
        })
        .unwrap();
        assert_eq!(report.mean_auc, 0.5);
    }

    #[test]
    fn evaluate_iforest_separates_toy_scenario() {
        let sc = toy_scenario(60, 15);
        let config = EvalConfig {
            model: ModelKind::IForest,
            n_estimators: 50,
            iterations: 3,
            ..EvalConfig::default()
        };
        let report = evaluate(&sc, &config).unwrap();
        assert_eq!(report.aucs.len(), 3);
        assert!(report.mean_auc > 0.95, "mean auc {}", report.mean_auc);
    }

    #[test]
    fn evaluate_is_deterministic() {
        let sc = toy_scenario(40, 10);
        let config = EvalConfig {
            model: ModelKind::Rbfdd,
            train: TrainConfig {
                epochs: 3,
                kernels: 2,
                seed: 42,
                ..TrainConfig::default()
            },
            iterations: 2,
            ..EvalConfig::default()
        };
        let a = evaluate(&sc, &config).unwrap();
        let b = evaluate(&sc, &config).unwrap();
        assert_eq!(a.aucs, b.aucs);
    }

    #[test]
    fn modality_mismatch_is_rejected() {
        let sc = toy_scenario(20, 5);
        let config = EvalConfig {
            model: ModelKind::Drbfdd2d,
            iterations: 1,
            ..EvalConfig::default()
        };
        assert!(evaluate(&sc, &config).is_err());
    }

    #[test]
    fn grid_search_prefers_working_config() {
        let sc = toy_scenario(50, 12);
        let degenerate = EvalConfig {
            model: ModelKind::Rbfdd,
            train: TrainConfig {
                learning_rate: 0.0,
                epochs: 1,
                kernels: 1,
                seed: 3,
                ..TrainConfig::default()
            },
            iterations: 2,
            ..EvalConfig::default()
        };
        let working = EvalConfig {
            model: ModelKind::Rbfdd,
            train: TrainConfig {
                epochs: 10,
                kernels: 4,
                seed: 3,
                ..TrainConfig::default()
            },
            iterations: 2,
            ..EvalConfig::default()
        };
        let grid = vec![degenerate, working.clone()];
        let (best, reports) = grid_search(&sc, &grid, 1).unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(best, working);
    }

    #[test]
    fn grid_search_singleton_and_tie_break() {
        let sc = toy_scenario(30, 8);
        let cfg = EvalConfig {
            model: ModelKind::IForest,
            n_estimators: 20,
            iterations: 2,
            ..EvalConfig::default()
        };
        let (best, reports) = grid_search(&sc, &[cfg.clone()], 1).unwrap();
        assert_eq!(reports.len(), 1);
        assert_eq!(best, cfg);

        // identical cells tie; the first wins
        let (best, reports) = grid_search(&sc, &[cfg.clone(), cfg.clone()], 2).unwrap();
        assert_eq!(reports[0].mean_auc, reports[1].mean_auc);
        assert_eq!(best, cfg);
    }

    #[test]
    fn rank_table_orders_and_averages() {
        let methods: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let scenarios: Vec<String> = ["s1"].iter().map(|s| s.to_string()).collect();
        let t = rank_table(&methods, &scenarios, &[vec![0.9], vec![0.8], vec![0.7]]).unwrap();
        assert_eq!(t.ranks, vec![vec![1.0], vec![2.0], vec![3.0]]);

        // two-way tie at the top
        let t = rank_table(&methods, &scenarios, &[vec![0.9], vec![0.9], vec![0.7]]).unwrap();
        assert_eq!(t.ranks[0][0], 1.5);
        assert_eq!(t.ranks[1][0], 1.5);
        assert_eq!(t.ranks[2][0], 3.0);
    }

    #[test]
    fn rank_table_rejects_ragged_matrices() {
        let methods: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let scenarios: Vec<String> = ["s1", "s2"].iter().map(|s| s.to_string()).collect();
        assert!(rank_table(&methods, &scenarios, &[vec![0.9, 0.8], vec![0.7]]).is_err());
    }

    proptest::proptest! {
        #[test]
        fn per_scenario_ranks_sum_to_triangular_number(
            aucs in proptest::collection::vec(0.0f64..1.0, 4)
        ) {
            let methods: Vec<String> = (0..4).map(|i| format!("m{}", i)).collect();
            let scenarios = vec!["s".to_string()];
            let matrix: Vec<Vec<f64>> = aucs.iter().map(|&a| vec![a]).collect();
            let t = rank_table(&methods, &scenarios, &matrix).unwrap();
            let sum: f64 = t.ranks.iter().map(|r| r[0]).sum();
            proptest::prop_assert!((sum - 10.0).abs() < 1e-9); // 4*5/2
        }
    }
}
