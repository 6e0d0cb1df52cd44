//! Question selection: propagate topic-level gaps back onto questions,
//! blend with predicted benefits, and rank candidates per operational mode.
//!
//! The output score is `O = R̂ + β Ĝ`, where `Ĝ = LP Tᵀ` spreads each
//! user's (cold-start-substituted) topic profile over the questions tagged
//! with those topics. Explore mode ranks unattempted questions, review mode
//! previously answered ones, and focus mode questions carrying at least one
//! selected topic regardless of attempt status.

use serde::{Deserialize, Serialize};

use crate::dataset::InteractionDataset;
use crate::error::{Result, RipleError};
use crate::matrix::DenseMatrix;

/// Operational modes for question selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Explore,
    Review,
    Focus,
}

impl std::str::FromStr for Mode {
    type Err = RipleError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "explore" => Ok(Mode::Explore),
            "review" => Ok(Mode::Review),
            "focus" => Ok(Mode::Focus),
            other => Err(RipleError::InvalidParam(format!("unknown mode '{other}'"))),
        }
    }
}

/// One ranked question with its personalized score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub question: usize,
    pub score: f64,
}

/// `Ĝ = LP Tᵀ`: per-question gap estimates from effective topic profiles.
pub fn propagate_gaps(profiles: &DenseMatrix, tags: &DenseMatrix) -> DenseMatrix {
    profiles.matmul_transpose(tags)
}

/// `O = R̂ + β Ĝ` elementwise.
pub fn output_matrix(r_hat: &DenseMatrix, g_hat: &DenseMatrix, beta: f64) -> Result<DenseMatrix> {
    if r_hat.rows() != g_hat.rows() || r_hat.cols() != g_hat.cols() {
        return Err(RipleError::InvalidParam(format!(
            "shape mismatch: {}x{} vs {}x{}",
            r_hat.rows(),
            r_hat.cols(),
            g_hat.rows(),
            g_hat.cols()
        )));
    }
    if beta < 0.0 {
        return Err(RipleError::InvalidParam(format!("beta = {beta} must be >= 0")));
    }
    let mut out = DenseMatrix::zeros(r_hat.rows(), r_hat.cols());
    for u in 0..out.rows() {
        for i in 0..out.cols() {
            out.set(u, i, r_hat.get(u, i) + beta * g_hat.get(u, i));
        }
    }
    Ok(out)
}

/// Ranks a user's candidate questions by descending output score, ties
/// broken by ascending question index.
///
/// Returns fewer than `top_n` entries when candidates are scarce; in
/// particular a user with no attempts gets an empty review list.
pub fn recommend(
    user: usize,
    output: &DenseMatrix,
    ds: &InteractionDataset,
    mode: Mode,
    focus_topics: &[usize],
    top_n: usize,
) -> Result<Vec<Recommendation>> {
    if top_n == 0 {
        return Err(RipleError::InvalidParam("top_n must be >= 1".into()));
    }
    if mode == Mode::Focus && focus_topics.is_empty() {
        return Err(RipleError::InvalidParam(
            "focus mode requires at least one topic".into(),
        ));
    }
    for &j in focus_topics {
        if j >= ds.n_topics() {
            return Err(RipleError::InvalidParam(format!("topic index {j} out of range")));
        }
    }

    let mut candidates: Vec<Recommendation> = (0..ds.n_questions())
        .filter(|&i| {
            let attempted = ds.answers().contains(user, i);
            match mode {
                Mode::Explore => !attempted,
                Mode::Review => attempted,
                Mode::Focus => focus_topics.iter().any(|&j| ds.tags().get(i, j) > 0.0),
            }
        })
        .map(|i| Recommendation {
            question: i,
            score: output.get(user, i),
        })
        .collect();
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .expect("scores are finite")
            .then(a.question.cmp(&b.question))
    });
    candidates.truncate(top_n);
    Ok(candidates)
}
