//! Synthetic cohort generation for validation experiments.
//!
//! Each synthetic user gets a ground-truth knowledge-gap vector drawn from
//! a symmetric Dirichlet (small concentrations yield one dominant gap);
//! each question gets a topic, an IRT difficulty `b ~ Normal(0, 1)` and a
//! discrimination `a ~ Normal(1, 0.3)` truncated to `>= 0.2`. Simulated
//! answers are correct with the two-parameter logistic probability
//! `1 / (1 + exp(-a (theta - b)))`, where a user's competency `theta` on a
//! question's topics is `1 - L * mean(gap)`: uniform gaps sit at the
//! logistic neutral point, a concentrated gap drives `theta` strongly
//! negative on that topic.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::dataset::{IdMap, InteractionDataset};
use crate::error::{Result, RipleError};
use crate::matrix::{DenseMatrix, SparseMatrix};

/// Parameters for cohort generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_users: usize,
    pub n_questions: usize,
    pub n_topics: usize,
    /// Dirichlet concentration; smaller means sparser gap vectors.
    pub alpha: f64,
    /// Topics per question are drawn uniformly from `1..=max_topics`.
    pub max_topics_per_question: usize,
    pub seed: u64,
}

impl CohortSpec {
    /// The default validation template: 400 users, 1100 questions,
    /// alpha = 0.1, L = 10, single-topic questions.
    pub fn synthetic_default(seed: u64) -> Self {
        Self {
            n_users: 400,
            n_questions: 1100,
            n_topics: 10,
            alpha: 0.1,
            max_topics_per_question: 1,
            seed,
        }
    }
}

/// Parameters for interaction simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n_answers: usize,
    /// Fraction of users designated cold-start; their answer counts are
    /// capped at a uniform draw from `0..=cold_start_max_answers`.
    pub cold_start_fraction: f64,
    pub cold_start_max_answers: usize,
    pub seed: u64,
}

impl SimulationSpec {
    pub fn new(n_answers: usize, seed: u64) -> Self {
        Self {
            n_answers,
            cold_start_fraction: 0.0,
            cold_start_max_answers: 2,
            seed,
        }
    }
}

/// Ground truth for a generated cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCohort {
    /// N x L matrix; each row is a probability vector of true gaps.
    pub true_gaps: DenseMatrix,
    /// Topic indices assigned to each question (at least one each).
    pub question_topics: Vec<Vec<usize>>,
    /// IRT difficulty b per question.
    pub question_difficulty: Vec<f64>,
    /// IRT discrimination a per question, all positive.
    pub question_discrimination: Vec<f64>,
    pub alpha: f64,
    pub seed: u64,
}

impl SyntheticCohort {
    pub fn n_users(&self) -> usize {
        self.true_gaps.rows()
    }

    pub fn n_questions(&self) -> usize {
        self.question_topics.len()
    }

    pub fn n_topics(&self) -> usize {
        self.true_gaps.cols()
    }

    /// A user's ground-truth most significant gaps: every topic tied for
    /// the maximum (ascending index order).
    pub fn argmax_gap_topics(&self, user: usize) -> Vec<usize> {
        let row = self.true_gaps.row(user);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.iter()
            .enumerate()
            .filter(|(_, &g)| g == max)
            .map(|(j, _)| j)
            .collect()
    }
}

/// Standard normal CDF, used to map IRT difficulty onto the [0, 1] rating scale.
pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Two-parameter logistic response probability.
pub fn irt_probability(theta: f64, a: f64, b: f64) -> f64 {
    1.0 / (1.0 + (-a * (theta - b)).exp())
}

/// Competency on a question's topics: `theta = 1 - L * mean(gap)`, where L
/// is the total number of topics. Gap rows sum to one, so uniform gaps
/// (1/L everywhere) give `theta = 0`, while a concentrated gap on a tagged
/// topic drives theta strongly negative.
pub fn user_theta(gap_row: &[f64], tagged_topics: &[usize]) -> Result<f64> {
    if tagged_topics.is_empty() {
        return Err(RipleError::InvalidParam("empty topic set".into()));
    }
    let mean: f64 =
        tagged_topics.iter().map(|&j| gap_row[j]).sum::<f64>() / tagged_topics.len() as f64;
    Ok(1.0 - gap_row.len() as f64 * mean)
}

/// Draws a cohort: Dirichlet gap rows, uniform topic assignments, and
/// normal IRT parameters. Fully determined by the spec's seed.
pub fn generate_cohort(spec: &CohortSpec) -> Result<SyntheticCohort> {
    if spec.n_users == 0 || spec.n_questions == 0 || spec.n_topics == 0 {
        return Err(RipleError::InvalidParam("counts must be >= 1".into()));
    }
    if spec.alpha <= 0.0 {
        return Err(RipleError::InvalidParam("alpha must be > 0".into()));
    }
    if spec.max_topics_per_question == 0 || spec.max_topics_per_question > spec.n_topics {
        return Err(RipleError::InvalidParam(
            "max_topics_per_question must be in 1..=n_topics".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut rows = Vec::with_capacity(spec.n_users);
    if spec.n_topics == 1 {
        // Dirichlet needs dimension >= 2; one topic means every gap is 1.
        rows.resize(spec.n_users, vec![1.0]);
    } else {
        let dirichlet = Dirichlet::new_with_size(spec.alpha, spec.n_topics)
            .map_err(|e| RipleError::InvalidParam(format!("dirichlet: {e}")))?;
        for _ in 0..spec.n_users {
            rows.push(dirichlet.sample(&mut rng));
        }
    }

    let difficulty_dist = Normal::new(0.0, 1.0).unwrap();
    let discrimination_dist = Normal::new(1.0, 0.3).unwrap();
    let mut question_topics = Vec::with_capacity(spec.n_questions);
    let mut question_difficulty = Vec::with_capacity(spec.n_questions);
    let mut question_discrimination = Vec::with_capacity(spec.n_questions);
    let all_topics: Vec<usize> = (0..spec.n_topics).collect();
    for _ in 0..spec.n_questions {
        let count = rng.gen_range(1..=spec.max_topics_per_question);
        let mut topics: Vec<usize> = all_topics
            .choose_multiple(&mut rng, count)
            .copied()
            .collect();
        topics.sort_unstable();
        question_topics.push(topics);
        question_difficulty.push(difficulty_dist.sample(&mut rng));
        // truncation by resampling keeps discrimination strictly positive
        let a = loop {
            let a: f64 = discrimination_dist.sample(&mut rng);
            if a >= 0.2 {
                break a;
            }
        };
        question_discrimination.push(a);
    }

    Ok(SyntheticCohort {
        true_gaps: DenseMatrix::from_rows(rows),
        question_topics,
        question_difficulty,
        question_discrimination,
        alpha: spec.alpha,
        seed: spec.seed,
    })
}

fn padded_ids(prefix: &str, count: usize) -> Vec<String> {
    // zero-padded so lexicographic order matches numeric order
    let width = count.saturating_sub(1).to_string().len();
    (0..count).map(|i| format!("{prefix}{i:0width$}")).collect()
}

/// Simulates answers and ratings for a cohort.
///
/// Distinct (user, question) pairs are drawn uniformly without replacement;
/// correctness follows the 2PL model, expressed difficulty is the response
/// scale image of the question's IRT difficulty plus Normal(0, 0.1) noise
/// clamped to [0, 1], and interest is uniform on [0, 1]. Both ratings stay
/// continuous; exporting to CSV rounds them onto the raw integer scales.
pub fn simulate_interactions(cohort: &SyntheticCohort, spec: &SimulationSpec) -> Result<InteractionDataset> {
    let n = cohort.n_users();
    let m = cohort.n_questions();
    let l = cohort.n_topics();
    if !(0.0..=1.0).contains(&spec.cold_start_fraction) {
        return Err(RipleError::InvalidParam("cold_start_fraction outside [0, 1]".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Designated cold-start users and their answer quotas.
    let n_cold = (spec.cold_start_fraction * n as f64).round() as usize;
    let mut user_order: Vec<usize> = (0..n).collect();
    user_order.shuffle(&mut rng);
    let mut quota: Vec<usize> = vec![m; n];
    for &u in user_order.iter().take(n_cold) {
        quota[u] = rng.gen_range(0..=spec.cold_start_max_answers);
    }
    let capacity: usize = quota.iter().sum();
    if spec.n_answers > n * m {
        return Err(RipleError::InvalidParam(format!(
            "n_answers = {} exceeds {} user-question pairs",
            spec.n_answers,
            n * m
        )));
    }
    if spec.n_answers > capacity {
        return Err(RipleError::InvalidParam(
            "n_answers exceeds capacity left by cold-start quotas".into(),
        ));
    }

    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut answers = SparseMatrix::new(n, m);
    let mut interests = SparseMatrix::new(n, m);
    let mut difficulties = SparseMatrix::new(n, m);
    let mut per_user_counts = vec![0usize; n];
    let mut accepted = 0usize;
    while accepted < spec.n_answers {
        let u = rng.gen_range(0..n);
        let i = rng.gen_range(0..m);
        if per_user_counts[u] >= quota[u] || answers.contains(u, i) {
            continue;
        }
        let theta = user_theta(cohort.true_gaps.row(u), &cohort.question_topics[i])?;
        let p_correct = irt_probability(
            theta,
            cohort.question_discrimination[i],
            cohort.question_difficulty[i],
        );
        let correct = rng.gen_bool(p_correct.clamp(0.0, 1.0));
        answers.insert(u, i, if correct { 1.0 } else { 0.0 });

        let raw_difficulty = standard_normal_cdf(cohort.question_difficulty[i]) + noise.sample(&mut rng);
        difficulties.insert(u, i, raw_difficulty.clamp(0.0, 1.0));
        interests.insert(u, i, rng.gen::<f64>());

        per_user_counts[u] += 1;
        accepted += 1;
    }

    let user_ids = IdMap::from_ids(padded_ids("u", n));
    let question_ids = IdMap::from_ids(padded_ids("q", m));
    let topic_ids = IdMap::from_ids(padded_ids("t", l));
    let mut tags = DenseMatrix::zeros(m, l);
    for (i, topics) in cohort.question_topics.iter().enumerate() {
        let weight = 1.0 / topics.len() as f64;
        for &j in topics {
            tags.set(i, j, weight);
        }
    }
    InteractionDataset::from_parts(
        user_ids,
        question_ids,
        topic_ids,
        answers,
        interests,
        difficulties,
        tags,
    )
}

/// Writes `ground_truth.csv` and `question_params.csv` next to a dataset
/// export, using the same identifier vocabulary.
pub fn export_ground_truth(cohort: &SyntheticCohort, ds: &InteractionDataset, dir: &std::path::Path) -> Result<()> {
    use std::io::Write;
    std::fs::create_dir_all(dir)?;
    let mut truth = std::fs::File::create(dir.join("ground_truth.csv"))?;
    writeln!(truth, "user_id,topic_id,true_gap")?;
    for u in 0..cohort.n_users() {
        for j in 0..cohort.n_topics() {
            writeln!(
                truth,
                "{},{},{}",
                ds.user_ids().id_of(u),
                ds.topic_ids().id_of(j),
                cohort.true_gaps.get(u, j)
            )?;
        }
    }
    let mut params = std::fs::File::create(dir.join("question_params.csv"))?;
    writeln!(params, "question_id,b,a,topic_ids")?;
    for i in 0..cohort.n_questions() {
        let topics: Vec<&str> = cohort.question_topics[i]
            .iter()
            .map(|&j| ds.topic_ids().id_of(j))
            .collect();
        writeln!(
            params,
            "{},{},{},{}",
            ds.question_ids().id_of(i),
            cohort.question_difficulty[i],
            cohort.question_discrimination[i],
            topics.join(";")
        )?;
    }
    Ok(())
}

/// Reads `ground_truth.csv` back into an N x L gap matrix aligned with a
/// dataset's identifier vocabulary.
pub fn load_ground_truth(path: &std::path::Path, ds: &InteractionDataset) -> Result<DenseMatrix> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut gaps = DenseMatrix::zeros(ds.n_users(), ds.n_topics());
    for record in reader.records() {
        let record = record?;
        let user = record.get(0).unwrap_or_default();
        let topic = record.get(1).unwrap_or_default();
        let value: f64 = record
            .get(2)
            .unwrap_or_default()
            .parse()
            .map_err(|_| RipleError::Validation(format!("bad true_gap for {user},{topic}")))?;
        let u = ds
            .user_ids()
            .index_of(user)
            .ok_or_else(|| RipleError::Validation(format!("unknown user '{user}' in ground truth")))?;
        let j = ds
            .topic_ids()
            .index_of(topic)
            .ok_or_else(|| RipleError::Validation(format!("unknown topic '{topic}' in ground truth")))?;
        gaps.set(u, j, value);
    }
    Ok(gaps)
}
