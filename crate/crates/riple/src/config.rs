//! Run configuration: defaults, named presets, a diffable key=value file
//! format, and run manifests for exact re-runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, RipleError};
use crate::eval::ExperimentConfig;
use crate::factorization::{Algorithm, TrainConfig};
use crate::profile::DEFAULT_COLD_START_THRESHOLD;
use crate::synthetic::{CohortSpec, SimulationSpec};

/// Everything a pipeline run needs, resolvable from defaults, a preset, a
/// config file, and command-line flags (later sources win).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Directory holding answers.csv, ratings.csv and tags.csv.
    pub data_dir: PathBuf,
    /// Directory receiving generated files, models and reports.
    pub out_dir: PathBuf,

    pub algorithm: Algorithm,
    pub latent_dim: usize,
    pub regularization: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub knn_k: usize,

    /// Knowledge-gap weight in the benefit blend.
    pub kgw: f64,
    /// Weight on propagated gap estimates in the output scores.
    pub beta: f64,
    pub cold_start_threshold: usize,
    pub seed: u64,

    // synthetic generation
    pub users: usize,
    pub questions: usize,
    pub topics: usize,
    pub answers: usize,
    pub alpha: f64,
    pub max_topics_per_question: usize,
    pub cold_start_fraction: f64,

    // evaluation
    pub folds: usize,
    pub replicates: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("."),
            out_dir: PathBuf::from("out"),
            algorithm: Algorithm::Bmf,
            latent_dim: 5,
            regularization: 0.15,
            learning_rate: 0.1,
            iterations: 150,
            knn_k: 20,
            kgw: 0.5,
            beta: 0.05,
            cold_start_threshold: DEFAULT_COLD_START_THRESHOLD,
            seed: 7,
            users: 400,
            questions: 1100,
            topics: 10,
            answers: 22_000,
            alpha: 0.1,
            max_topics_per_question: 1,
            cold_start_fraction: 0.0,
            folds: 5,
            replicates: 5,
        }
    }
}

impl RunConfig {
    /// Named presets: `synthetic-default` (the validation template) and
    /// `historical` (hyperparameters tuned on course-data experiments:
    /// gamma = 0.002, K = 2, 300 iterations, kgw = 0.8, beta = 0.51).
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "synthetic-default" => Ok(Self::default()),
            "historical" => Ok(Self {
                latent_dim: 2,
                learning_rate: 0.002,
                iterations: 300,
                kgw: 0.8,
                beta: 0.51,
                ..Self::default()
            }),
            other => Err(RipleError::InvalidParam(format!(
                "unknown preset '{other}' (expected synthetic-default or historical)"
            ))),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            algorithm: self.algorithm,
            latent_dim: self.latent_dim,
            regularization: self.regularization,
            learning_rate: self.learning_rate,
            iterations: self.iterations,
            seed: self.seed,
            knn_k: self.knn_k,
        }
    }

    pub fn cohort_spec(&self) -> CohortSpec {
        CohortSpec {
            n_users: self.users,
            n_questions: self.questions,
            n_topics: self.topics,
            alpha: self.alpha,
            max_topics_per_question: self.max_topics_per_question,
            seed: self.seed,
        }
    }

    pub fn simulation_spec(&self) -> SimulationSpec {
        SimulationSpec {
            n_answers: self.answers,
            cold_start_fraction: self.cold_start_fraction,
            cold_start_max_answers: self.cold_start_threshold.saturating_sub(1),
            seed: self.seed.wrapping_add(1),
        }
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            cohort: self.cohort_spec(),
            simulation: self.simulation_spec(),
            train: {
                let mut t = self.train_config();
                t.seed = self.seed.wrapping_add(2);
                t
            },
            kgw: self.kgw,
            beta: self.beta,
            folds: self.folds,
            replicates: self.replicates,
            cold_start_threshold: self.cold_start_threshold,
        }
    }

    /// Applies one `key = value` assignment. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e| {
                RipleError::Validation(format!("config key '{key}': invalid value '{value}': {e}"))
            })
        }
        match key {
            "data_dir" => self.data_dir = PathBuf::from(value),
            "out_dir" => self.out_dir = PathBuf::from(value),
            "algorithm" => self.algorithm = parse(key, value)?,
            "latent_dim" => self.latent_dim = parse(key, value)?,
            "regularization" => self.regularization = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "iterations" => self.iterations = parse(key, value)?,
            "knn_k" => self.knn_k = parse(key, value)?,
            "kgw" => self.kgw = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "cold_start_threshold" => self.cold_start_threshold = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "users" => self.users = parse(key, value)?,
            "questions" => self.questions = parse(key, value)?,
            "topics" => self.topics = parse(key, value)?,
            "answers" => self.answers = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "max_topics_per_question" => self.max_topics_per_question = parse(key, value)?,
            "cold_start_fraction" => self.cold_start_fraction = parse(key, value)?,
            "folds" => self.folds = parse(key, value)?,
            "replicates" => self.replicates = parse(key, value)?,
            other => {
                return Err(RipleError::Validation(format!(
                    "unknown config key '{other}'"
                )))
            }
        }
        Ok(())
    }

    /// Loads `key = value` lines into this config. `#` starts a comment;
    /// blank lines are ignored.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(RipleError::Parse {
                    file: path.display().to_string(),
                    line: idx as u64 + 1,
                    message: format!("expected 'key = value', got '{line}'"),
                });
            };
            self.set(key.trim(), value.trim()).map_err(|e| RipleError::Parse {
                file: path.display().to_string(),
                line: idx as u64 + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// SHA-256 over the non-path configuration, hex encoded. Two runs with
    /// the same hash and seed produce identical outputs regardless of
    /// where their files live.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.data_dir = PathBuf::new();
        canonical.out_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Provenance record written next to every output file set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub outputs: Vec<String>,
}

/// Writes `manifest.json` in `dir` recording the config hash, seed and
/// produced files.
pub fn write_manifest(cfg: &RunConfig, command: &str, outputs: &[&str], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let manifest = Manifest {
        command: command.to_string(),
        config_sha256: cfg.hash(),
        seed: cfg.seed,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), json + "\n")?;
    Ok(())
}

/// Effective config as sorted `key = value` lines, for logging.
pub fn render(cfg: &RunConfig) -> String {
    let value = serde_json::to_value(cfg).expect("config serializes");
    let map: BTreeMap<String, serde_json::Value> =
        serde_json::from_value(value).expect("config is an object");
    map.into_iter()
        .map(|(k, v)| {
            let v = match v {
                serde_json::Value::String(s) => s,
                other => other.to_string(),
            };
            format!("{k} = {v}")
        })
        .collect::<Vec<_>>()
        .join("\n")
}
