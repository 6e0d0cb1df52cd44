//! Evaluation harness: cross-validated RMSE, topic-match accuracy against
//! synthetic ground truth, seeded replicate experiments, parameter sweeps,
//! and algorithm comparisons.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::{train_baseline, BaselineModel};
use crate::dataset::InteractionDataset;
use crate::engine::{output_matrix, propagate_gaps, recommend, Mode};
use crate::error::{Result, RipleError};
use crate::factorization::{train, Algorithm, FactorModel, TrainConfig};
use crate::integration::integrate;
use crate::matrix::{DenseMatrix, SparseMatrix};
use crate::profile::{LearningProfile, DEFAULT_COLD_START_THRESHOLD};
use crate::synthetic::{generate_cohort, simulate_interactions, CohortSpec, SimulationSpec, SyntheticCohort};

/// A trained predictor of either family, with a uniform predict interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    Factor(FactorModel),
    Baseline(BaselineModel),
}

impl TrainedModel {
    pub fn fit(ratings: &SparseMatrix, cfg: &TrainConfig) -> Result<Self> {
        match cfg.algorithm {
            Algorithm::Mf | Algorithm::Bmf => Ok(Self::Factor(train(ratings, cfg)?)),
            _ => Ok(Self::Baseline(train_baseline(ratings, cfg)?)),
        }
    }

    pub fn predict(&self, user: usize, item: usize) -> f64 {
        match self {
            Self::Factor(m) => m.predict(user, item),
            Self::Baseline(m) => m.predict(user, item),
        }
    }

    pub fn predict_matrix(&self, n_users: usize, n_items: usize) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(n_users, n_items);
        for u in 0..n_users {
            for i in 0..n_items {
                out.set(u, i, self.predict(u, i));
            }
        }
        out
    }
}

/// Root mean squared error over a set of held-out ratings. Errors when the
/// test set is empty.
pub fn rmse(model: &TrainedModel, test: &SparseMatrix) -> Result<f64> {
    if test.is_empty() {
        return Err(RipleError::InvalidParam("empty test set".into()));
    }
    let sse: f64 = test
        .iter()
        .map(|(u, i, r)| {
            let e = model.predict(u, i) - r;
            e * e
        })
        .sum();
    Ok((sse / test.len() as f64).sqrt())
}

/// Shuffles cells and deals them round-robin into `k` folds of nearly equal
/// size. Requires `2 <= k <= cells.len()`.
pub fn kfold_split(cells: &[(usize, usize)], k: usize, seed: u64) -> Result<Vec<Vec<(usize, usize)>>> {
    if k < 2 || k > cells.len() {
        return Err(RipleError::InvalidParam(format!(
            "k = {k} must be in 2..={}",
            cells.len()
        )));
    }
    let mut shuffled = cells.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); k];
    for (idx, cell) in shuffled.into_iter().enumerate() {
        folds[idx % k].push(cell);
    }
    Ok(folds)
}

/// Complement of one fold: all cells not held out.
pub fn train_cells(cells: &[(usize, usize)], fold: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let held: std::collections::BTreeSet<_> = fold.iter().copied().collect();
    cells.iter().copied().filter(|c| !held.contains(c)).collect()
}

/// Whether a recommended question shares a tag with any of the user's
/// ground-truth most significant gap topics.
pub fn topic_match(cohort: &SyntheticCohort, user: usize, question: usize) -> bool {
    let truth = cohort.argmax_gap_topics(user);
    cohort.question_topics[question]
        .iter()
        .any(|j| truth.contains(j))
}

/// Per-group accuracy tallies for one evaluation pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AccuracyTally {
    pub regular_hits: usize,
    pub regular_total: usize,
    pub cold_hits: usize,
    pub cold_total: usize,
}

impl AccuracyTally {
    pub fn regular(&self) -> Option<f64> {
        (self.regular_total > 0).then(|| self.regular_hits as f64 / self.regular_total as f64)
    }

    pub fn cold(&self) -> Option<f64> {
        (self.cold_total > 0).then(|| self.cold_hits as f64 / self.cold_total as f64)
    }

    pub fn merge(&mut self, other: &AccuracyTally) {
        self.regular_hits += other.regular_hits;
        self.regular_total += other.regular_total;
        self.cold_hits += other.cold_hits;
        self.cold_total += other.cold_total;
    }
}

/// Top-1 explore topic-match accuracy: each user's single best unattempted
/// question either does or does not cover one of their true worst topics.
/// Users with no unattempted questions are skipped.
pub fn topic_accuracy(
    output: &DenseMatrix,
    ds: &InteractionDataset,
    cohort: &SyntheticCohort,
    cold_start_threshold: usize,
) -> Result<AccuracyTally> {
    let counts = ds.attempt_counts();
    let mut tally = AccuracyTally::default();
    for u in 0..ds.n_users() {
        let top = recommend(u, output, ds, Mode::Explore, &[], 1)?;
        let Some(best) = top.first() else {
            continue;
        };
        let hit = topic_match(cohort, u, best.question);
        if counts[u] < cold_start_threshold {
            tally.cold_total += 1;
            tally.cold_hits += hit as usize;
        } else {
            tally.regular_total += 1;
            tally.regular_hits += hit as usize;
        }
    }
    Ok(tally)
}

/// Everything needed to run one synthetic experiment end to end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub cohort: CohortSpec,
    pub simulation: SimulationSpec,
    pub train: TrainConfig,
    /// Knowledge-gap weight blending gap into the benefit target.
    pub kgw: f64,
    /// Weight on propagated gap estimates in the output scores.
    pub beta: f64,
    pub folds: usize,
    pub replicates: usize,
    pub cold_start_threshold: usize,
}

impl ExperimentConfig {
    /// The standard synthetic setup: 400 users, 1100 questions, 22000
    /// answers, alpha = 0.1, L = 10, five folds, five replicates.
    pub fn synthetic_default(seed: u64) -> Self {
        Self {
            cohort: CohortSpec::synthetic_default(seed),
            simulation: SimulationSpec::new(22_000, seed.wrapping_add(1)),
            train: TrainConfig::synthetic_default(seed.wrapping_add(2)),
            kgw: 0.5,
            beta: 0.05,
            folds: 5,
            replicates: 5,
            cold_start_threshold: DEFAULT_COLD_START_THRESHOLD,
        }
    }
}

/// Metrics from one replicate, averaged over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub rmse: f64,
    pub accuracy_regular: Option<f64>,
    pub accuracy_cold: Option<f64>,
}

/// Metrics across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub replicates: Vec<ReplicateResult>,
}

/// Mean and sample standard deviation of a batch of values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(Summary { mean, sd, n })
}

impl ExperimentResult {
    pub fn rmse_summary(&self) -> Option<Summary> {
        summarize(&self.replicates.iter().map(|r| r.rmse).collect::<Vec<_>>())
    }

    pub fn regular_accuracy_summary(&self) -> Option<Summary> {
        summarize(
            &self
                .replicates
                .iter()
                .filter_map(|r| r.accuracy_regular)
                .collect::<Vec<_>>(),
        )
    }

    pub fn cold_accuracy_summary(&self) -> Option<Summary> {
        summarize(
            &self
                .replicates
                .iter()
                .filter_map(|r| r.accuracy_cold)
                .collect::<Vec<_>>(),
        )
    }
}

fn replicate_config(cfg: &ExperimentConfig, replicate: usize) -> ExperimentConfig {
    let mut out = cfg.clone();
    let offset = replicate as u64;
    out.cohort.seed = cfg.cohort.seed.wrapping_add(offset);
    out.simulation.seed = cfg.simulation.seed.wrapping_add(offset);
    out.train.seed = cfg.train.seed.wrapping_add(offset);
    out
}

/// One replicate: generate, simulate, integrate, then k-fold cross-validate
/// rating prediction and measure top-1 explore accuracy per fold.
///
/// The benefit targets use the full simulated data (average difficulties
/// and interests are repository-level signals); only the rating matrix
/// itself is split for validation.
pub fn run_replicate(cfg: &ExperimentConfig) -> Result<ReplicateResult> {
    let cohort = generate_cohort(&cfg.cohort)?;
    let ds = simulate_interactions(&cohort, &cfg.simulation)?;
    run_replicate_on(cfg, &cohort, &ds)
}

/// Like [`run_replicate`] but on a pre-generated cohort and dataset, so
/// comparisons can share the exact same data and folds.
pub fn run_replicate_on(
    cfg: &ExperimentConfig,
    cohort: &SyntheticCohort,
    ds: &InteractionDataset,
) -> Result<ReplicateResult> {
    let integrated = integrate(ds, cfg.kgw)?;
    let cells = integrated.benefit.support();
    let folds = kfold_split(&cells, cfg.folds, cfg.train.seed)?;
    let attempt_counts = ds.attempt_counts();

    let mut fold_rmse = Vec::with_capacity(folds.len());
    let mut tally = AccuracyTally::default();
    for fold in &folds {
        let train_ratings = integrated
            .benefit
            .restrict(&train_cells(&cells, fold));
        let test_ratings = integrated.benefit.restrict(fold);
        let model = TrainedModel::fit(&train_ratings, &cfg.train)?;
        fold_rmse.push(rmse(&model, &test_ratings)?);

        let train_gaps = integrated
            .gaps
            .restrict(&train_cells(&cells, fold));
        let profile = LearningProfile::compute(ds, &train_gaps, cfg.cold_start_threshold)?;
        let effective = profile.effective_matrix(&attempt_counts);
        let g_hat = propagate_gaps(&effective, ds.tags());
        let r_hat = model.predict_matrix(ds.n_users(), ds.n_questions());
        let output = output_matrix(&r_hat, &g_hat, cfg.beta)?;
        tally.merge(&topic_accuracy(&output, ds, cohort, cfg.cold_start_threshold)?);
    }

    Ok(ReplicateResult {
        rmse: fold_rmse.iter().sum::<f64>() / fold_rmse.len() as f64,
        accuracy_regular: tally.regular(),
        accuracy_cold: tally.cold(),
    })
}

/// Runs all replicates with a deterministic seed schedule.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if cfg.replicates == 0 {
        return Err(RipleError::InvalidParam("replicates must be >= 1".into()));
    }
    let mut replicates = Vec::with_capacity(cfg.replicates);
    for r in 0..cfg.replicates {
        replicates.push(run_replicate(&replicate_config(cfg, r))?);
    }
    Ok(ExperimentResult { replicates })
}

/// The experiment parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepParam {
    /// Dirichlet concentration of the synthetic gap vectors.
    Alpha,
    /// Number of topics L in the synthetic cohort.
    Topics,
    /// Gap-propagation weight in the output scores.
    Beta,
    /// Knowledge-gap weight in the benefit targets.
    Kgw,
}

impl std::str::FromStr for SweepParam {
    type Err = RipleError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(Self::Alpha),
            "topics" | "l" => Ok(Self::Topics),
            "beta" => Ok(Self::Beta),
            "kgw" => Ok(Self::Kgw),
            other => Err(RipleError::InvalidParam(format!(
                "unknown sweep parameter '{other}' (expected alpha, topics, beta, or kgw)"
            ))),
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Alpha => "alpha",
            Self::Topics => "topics",
            Self::Beta => "beta",
            Self::Kgw => "kgw",
        };
        f.write_str(s)
    }
}

/// One sweep setting's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub result: ExperimentResult,
}

fn apply_param(cfg: &mut ExperimentConfig, param: SweepParam, value: f64) {
    match param {
        SweepParam::Alpha => cfg.cohort.alpha = value,
        SweepParam::Topics => cfg.cohort.n_topics = value.round() as usize,
        SweepParam::Beta => cfg.beta = value,
        SweepParam::Kgw => cfg.kgw = value,
    }
}

/// Runs the experiment at each value of one parameter, holding the seed
/// schedule fixed so settings are compared on paired data.
pub fn sweep(base: &ExperimentConfig, param: SweepParam, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(RipleError::InvalidParam("sweep needs at least one value".into()));
    }
    let mut points = Vec::with_capacity(values.len());
    for &value in values {
        let mut cfg = base.clone();
        apply_param(&mut cfg, param, value);
        points.push(SweepPoint {
            value,
            result: run_experiment(&cfg)?,
        });
    }
    Ok(points)
}

/// Writes sweep results as plot-ready `param_value,metric,group,mean,sd` rows.
pub fn write_sweep_csv(points: &[SweepPoint], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["param_value", "metric", "group", "mean", "sd"])?;
    for point in points {
        let rows: [(&str, &str, Option<Summary>); 3] = [
            ("rmse", "all", point.result.rmse_summary()),
            ("accuracy", "regular", point.result.regular_accuracy_summary()),
            ("accuracy", "cold_start", point.result.cold_accuracy_summary()),
        ];
        for (metric, group, summary) in rows {
            let Some(s) = summary else { continue };
            writer.write_record([
                point.value.to_string(),
                metric.to_string(),
                group.to_string(),
                s.mean.to_string(),
                s.sd.to_string(),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// One algorithm's cross-validated RMSE across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmResult {
    pub algorithm: Algorithm,
    pub rmse: Summary,
}

/// Compares algorithms on identical data: each replicate's cohort, dataset
/// and folds are shared across all algorithms, so differences are purely
/// model-driven.
pub fn compare_algorithms(
    base: &ExperimentConfig,
    algorithms: &[Algorithm],
) -> Result<Vec<AlgorithmResult>> {
    if algorithms.is_empty() {
        return Err(RipleError::InvalidParam("no algorithms to compare".into()));
    }
    let mut per_algorithm: Vec<Vec<f64>> = vec![Vec::new(); algorithms.len()];
    for r in 0..base.replicates.max(1) {
        let cfg = replicate_config(base, r);
        let cohort = generate_cohort(&cfg.cohort)?;
        let ds = simulate_interactions(&cohort, &cfg.simulation)?;
        for (slot, &algorithm) in algorithms.iter().enumerate() {
            let mut acfg = cfg.clone();
            acfg.train.algorithm = algorithm;
            let result = run_replicate_on(&acfg, &cohort, &ds)?;
            per_algorithm[slot].push(result.rmse);
        }
    }
    Ok(algorithms
        .iter()
        .zip(per_algorithm)
        .map(|(&algorithm, rmses)| AlgorithmResult {
            algorithm,
            rmse: summarize(&rmses).expect("at least one replicate"),
        })
        .collect())
}
