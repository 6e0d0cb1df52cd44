//! Command-line interface: generation, training, recommendation,
//! profiling, evaluation and sweeps over a shared run configuration.
//!
//! Configuration sources are resolved as flags > config file > preset >
//! defaults. Every file-producing run writes a `manifest.json` with the
//! configuration hash and seed, so any output can be reproduced exactly.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::{render, write_manifest, RunConfig};
use crate::dataset::{export_dataset, load_dataset, InteractionDataset};
use crate::engine::{output_matrix, propagate_gaps, recommend, Mode};
use crate::error::{Result, RipleError};
use crate::eval::{run_experiment, sweep, write_sweep_csv, SweepParam, TrainedModel};
use crate::integration::integrate;
use crate::matrix::DenseMatrix;
use crate::profile::LearningProfile;
use crate::synthetic::{export_ground_truth, generate_cohort, simulate_interactions};

/// Knowledge-gap and interest based question recommendation for
/// peer-learning repositories.
#[derive(Debug, Parser)]
#[command(name = "riple", version, about)]
pub struct Cli {
    /// Key=value config file applied over the preset/defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Named starting point: synthetic-default or historical.
    #[arg(long, global = true)]
    pub preset: Option<String>,

    /// Machine-readable output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Directory holding answers.csv, ratings.csv and tags.csv.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,

    /// Directory receiving generated files, models and reports.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,

    /// Random seed for every stochastic stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Prediction algorithm: mf, bmf, u-avg, i-avg, u-knn or i-knn.
    #[arg(long, global = true)]
    pub algorithm: Option<String>,

    /// Latent dimension K for the factorization models.
    #[arg(long, global = true)]
    pub latent_dim: Option<usize>,

    /// Regularization weight lambda.
    #[arg(long, global = true)]
    pub regularization: Option<f64>,

    /// SGD learning rate gamma.
    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,

    /// Number of SGD epochs.
    #[arg(long, global = true)]
    pub iterations: Option<usize>,

    /// Neighborhood size for the KNN baselines.
    #[arg(long, global = true)]
    pub knn_k: Option<usize>,

    /// Knowledge-gap weight in the benefit blend, in [0, 1].
    #[arg(long, global = true)]
    pub kgw: Option<f64>,

    /// Weight on propagated gap estimates in the output scores.
    #[arg(long, global = true)]
    pub beta: Option<f64>,

    /// Attempts below this count substitute the cohort-mean profile.
    #[arg(long, global = true)]
    pub cold_start_threshold: Option<usize>,

    /// Synthetic cohort size.
    #[arg(long, global = true)]
    pub users: Option<usize>,

    /// Synthetic repository size.
    #[arg(long, global = true)]
    pub questions: Option<usize>,

    /// Number of topics in the synthetic cohort.
    #[arg(long, global = true)]
    pub topics_count: Option<usize>,

    /// Number of simulated answers.
    #[arg(long, global = true)]
    pub answers: Option<usize>,

    /// Dirichlet concentration of the synthetic gap vectors.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,

    /// Topics per synthetic question are drawn from 1..=this.
    #[arg(long, global = true)]
    pub max_topics_per_question: Option<usize>,

    /// Gap severity L in the simulated response model.
    #[arg(long, global = true)]

    /// Fraction of synthetic users designated cold-start.
    #[arg(long, global = true)]
    pub cold_start_fraction: Option<f64>,

    /// Cross-validation folds.
    #[arg(long, global = true)]
    pub folds: Option<usize>,

    /// Seeded experiment replicates.
    #[arg(long, global = true)]
    pub replicates: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic cohort and write its CSVs plus ground truth.
    Generate,
    /// Train a prediction model on a dataset and save it as JSON.
    Train,
    /// Rank questions for one user.
    Recommend {
        /// User identifier as it appears in the dataset.
        #[arg(long)]
        user: String,
        /// Candidate filter: explore (unattempted), review (attempted) or
        /// focus (selected topics).
        #[arg(long, default_value = "explore")]
        mode: String,
        /// Comma-separated topic identifiers; required in focus mode.
        #[arg(long, value_delimiter = ',')]
        topics: Vec<String>,
        /// Number of recommendations to return.
        #[arg(long, default_value_t = 10)]
        top_n: usize,
    },
    /// Export one user's effective topic profile.
    Profile {
        /// User identifier as it appears in the dataset.
        #[arg(long)]
        user: String,
    },
    /// Run the cross-validated synthetic experiment.
    Evaluate,
    /// Run the experiment across values of one parameter.
    Sweep {
        /// Parameter to vary: alpha, topics, beta or kgw.
        #[arg(long)]
        param: String,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
}

fn effective_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.preset {
        Some(name) => RunConfig::preset(name)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    if let Some(v) = &cli.data_dir {
        cfg.data_dir = v.clone();
    }
    if let Some(v) = &cli.out_dir {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = &cli.algorithm {
        cfg.algorithm = v.parse()?;
    }
    if let Some(v) = cli.latent_dim {
        cfg.latent_dim = v;
    }
    if let Some(v) = cli.regularization {
        cfg.regularization = v;
    }
    if let Some(v) = cli.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = cli.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = cli.knn_k {
        cfg.knn_k = v;
    }
    if let Some(v) = cli.kgw {
        cfg.kgw = v;
    }
    if let Some(v) = cli.beta {
        cfg.beta = v;
    }
    if let Some(v) = cli.cold_start_threshold {
        cfg.cold_start_threshold = v;
    }
    if let Some(v) = cli.users {
        cfg.users = v;
    }
    if let Some(v) = cli.questions {
        cfg.questions = v;
    }
    if let Some(v) = cli.topics_count {
        cfg.topics = v;
    }
    if let Some(v) = cli.answers {
        cfg.answers = v;
    }
    if let Some(v) = cli.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = cli.max_topics_per_question {
        cfg.max_topics_per_question = v;
    }
    if let Some(v) = cli.cold_start_fraction {
        cfg.cold_start_fraction = v;
    }
    if let Some(v) = cli.folds {
        cfg.folds = v;
    }
    if let Some(v) = cli.replicates {
        cfg.replicates = v;
    }
    Ok(cfg)
}

fn load(cfg: &RunConfig) -> Result<InteractionDataset> {
    let ds = load_dataset(
        &cfg.data_dir.join("answers.csv"),
        &cfg.data_dir.join("ratings.csv"),
        &cfg.data_dir.join("tags.csv"),
    )?;
    let untagged = ds.untagged_questions();
    if !untagged.is_empty() {
        eprintln!(
            "warning: {} question(s) have no topic tags and receive no gap propagation",
            untagged.len()
        );
    }
    Ok(ds)
}

/// Saved model file layout; `version` guards against format drift.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub config_sha256: String,
    pub model: TrainedModel,
}

pub const MODEL_FILE_VERSION: u32 = 1;

/// The full scoring pipeline: integrate, complete the benefit matrix,
/// propagate gap profiles, and blend.
fn score_pipeline(cfg: &RunConfig, ds: &InteractionDataset) -> Result<(DenseMatrix, LearningProfile, TrainedModel)> {
    let integrated = integrate(ds, cfg.kgw)?;
    let model = TrainedModel::fit(&integrated.benefit, &cfg.train_config())?;
    let r_hat = model.predict_matrix(ds.n_users(), ds.n_questions());
    let profile = LearningProfile::compute(ds, &integrated.gaps, cfg.cold_start_threshold)?;
    let effective = profile.effective_matrix(&ds.attempt_counts());
    let g_hat = propagate_gaps(&effective, ds.tags());
    let output = output_matrix(&r_hat, &g_hat, cfg.beta)?;
    Ok((output, profile, model))
}

fn user_index(ds: &InteractionDataset, user: &str) -> Result<usize> {
    ds.user_ids()
        .index_of(user)
        .ok_or_else(|| RipleError::Validation(format!("unknown user '{user}'")))
}

#[derive(Debug, Serialize)]
struct RecommendationRow {
    question_id: String,
    score: f64,
    tags: Vec<String>,
    attempted: bool,
}

fn run_generate(cfg: &RunConfig) -> Result<()> {
    let cohort = generate_cohort(&cfg.cohort_spec())?;
    let ds = simulate_interactions(&cohort, &cfg.simulation_spec())?;
    export_dataset(&ds, &cfg.out_dir)?;
    export_ground_truth(&cohort, &ds, &cfg.out_dir)?;
    write_manifest(
        cfg,
        "generate",
        &[
            "answers.csv",
            "ratings.csv",
            "tags.csv",
            "ground_truth.csv",
            "question_params.csv",
        ],
        &cfg.out_dir,
    )?;
    eprintln!(
        "wrote {} answers for {} users, {} questions, {} topics to {}",
        ds.answers().len(),
        ds.n_users(),
        ds.n_questions(),
        ds.n_topics(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn run_train(cfg: &RunConfig) -> Result<()> {
    let ds = load(cfg)?;
    let integrated = integrate(&ds, cfg.kgw)?;
    let model = TrainedModel::fit(&integrated.benefit, &cfg.train_config())?;
    let file = ModelFile {
        version: MODEL_FILE_VERSION,
        config_sha256: cfg.hash(),
        model,
    };
    std::fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("model.json");
    std::fs::write(&path, serde_json::to_string(&file)? + "\n")?;
    write_manifest(cfg, "train", &["model.json"], &cfg.out_dir)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run_recommend(cfg: &RunConfig, format: Format, user: &str, mode: Mode, topics: &[String], top_n: usize) -> Result<()> {
    let ds = load(cfg)?;
    let u = user_index(&ds, user)?;
    let topic_indices = topics
        .iter()
        .map(|t| {
            ds.topic_ids()
                .index_of(t)
                .ok_or_else(|| RipleError::Validation(format!("unknown topic '{t}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let (output, _, _) = score_pipeline(cfg, &ds)?;
    let ranked = recommend(u, &output, &ds, mode, &topic_indices, top_n)?;
    let rows: Vec<RecommendationRow> = ranked
        .iter()
        .map(|r| RecommendationRow {
            question_id: ds.question_ids().id_of(r.question).to_string(),
            score: r.score,
            tags: ds
                .question_topics(r.question)
                .into_iter()
                .map(|j| ds.topic_ids().id_of(j).to_string())
                .collect(),
            attempted: ds.answers().contains(u, r.question),
        })
        .collect();
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&rows)?),
        Format::Csv => {
            println!("question_id,score,tags,attempted");
            for row in &rows {
                println!(
                    "{},{},{},{}",
                    row.question_id,
                    row.score,
                    row.tags.join(";"),
                    row.attempted
                );
            }
        }
    }
    Ok(())
}

fn run_profile(cfg: &RunConfig, format: Format, user: &str) -> Result<()> {
    let ds = load(cfg)?;
    let u = user_index(&ds, user)?;
    let integrated = integrate(&ds, cfg.kgw)?;
    let profile = LearningProfile::compute(&ds, &integrated.gaps, cfg.cold_start_threshold)?;
    let attempts = ds.attempt_counts()[u];
    let effective = profile.effective(u, attempts);
    match format {
        Format::Json => {
            let gaps: serde_json::Map<String, serde_json::Value> = effective
                .iter()
                .enumerate()
                .map(|(j, &g)| (ds.topic_ids().id_of(j).to_string(), g.into()))
                .collect();
            let out = serde_json::json!({
                "user_id": user,
                "cold_start": profile.is_cold_start(attempts),
                "gaps": gaps,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Format::Csv => {
            println!("user_id,cold_start,topic_id,gap");
            for (j, &g) in effective.iter().enumerate() {
                println!(
                    "{user},{},{},{g}",
                    profile.is_cold_start(attempts),
                    ds.topic_ids().id_of(j)
                );
            }
        }
    }
    Ok(())
}

fn run_evaluate(cfg: &RunConfig, format: Format) -> Result<()> {
    let result = run_experiment(&cfg.experiment_config())?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let json = serde_json::to_string_pretty(&result)?;
    std::fs::write(cfg.out_dir.join("report.json"), json.clone() + "\n")?;
    write_manifest(cfg, "evaluate", &["report.json"], &cfg.out_dir)?;
    match format {
        Format::Json => println!("{json}"),
        Format::Csv => {
            println!("metric,group,mean,sd");
            let rows = [
                ("rmse", "all", result.rmse_summary()),
                ("accuracy", "regular", result.regular_accuracy_summary()),
                ("accuracy", "cold_start", result.cold_accuracy_summary()),
            ];
            for (metric, group, summary) in rows {
                if let Some(s) = summary {
                    println!("{metric},{group},{},{}", s.mean, s.sd);
                }
            }
        }
    }
    Ok(())
}

fn run_sweep(cfg: &RunConfig, format: Format, param: SweepParam, values: &[f64]) -> Result<()> {
    let points = sweep(&cfg.experiment_config(), param, values)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    write_sweep_csv(&points, &cfg.out_dir.join("sweep.csv"))?;
    let json = serde_json::to_string_pretty(&points)?;
    std::fs::write(cfg.out_dir.join("sweep.json"), json.clone() + "\n")?;
    write_manifest(cfg, "sweep", &["sweep.csv", "sweep.json"], &cfg.out_dir)?;
    match format {
        Format::Json => println!("{json}"),
        Format::Csv => print!("{}", std::fs::read_to_string(cfg.out_dir.join("sweep.csv"))?),
    }
    Ok(())
}

/// Parses arguments and runs one subcommand. Usage errors exit with code 2
/// (via clap); validation and runtime failures are returned as errors.
pub fn run() -> Result<()> {
    let cli = Cli::parse();

    // value-level preconditions that are usage errors, not validation ones
    if let Command::Recommend { mode, topics, .. } = &cli.command {
        if mode == "focus" && topics.is_empty() {
            Cli::command()
                .error(
                    ErrorKind::MissingRequiredArgument,
                    "--topics is required with --mode focus",
                )
                .exit();
        }
    }

    let cfg = effective_config(&cli)?;
    eprintln!("effective configuration (seed {}):\n{}", cfg.seed, render(&cfg));

    match &cli.command {
        Command::Generate => run_generate(&cfg),
        Command::Train => run_train(&cfg),
        Command::Recommend {
            user,
            mode,
            topics,
            top_n,
        } => run_recommend(&cfg, cli.format, user, mode.parse()?, topics, *top_n),
        Command::Profile { user } => run_profile(&cfg, cli.format, user),
        Command::Evaluate => run_evaluate(&cfg, cli.format),
        Command::Sweep { param, values } => run_sweep(&cfg, cli.format, param.parse()?, values),
    }
}
