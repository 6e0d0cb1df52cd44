//! Knowledge-gap inference and the benefit matrix.
//!
//! A correctness value and the cohort's average difficulty rating for a
//! question map to a gap score in `[-0.5, 0.5]`: positive after an incorrect
//! answer (a gap), negative after a correct one (demonstrated competency).
//! Failing an easy question signals a large gap, failing a hard one a small
//! gap; acing a hard question signals strong competency. Gap scores are then
//! blended with expressed interests into the benefit matrix `R`.
//!
//! ```
//! use riple::integration::gap_score;
//!
//! // Failing an easy question exposes a large gap...
//! assert!((gap_score(0.0, 0.1) - 0.4545).abs() < 5e-4);
//! // ...while acing a hard one demonstrates competency.
//! assert!((gap_score(1.0, 0.7) - (-0.3846)).abs() < 5e-4);
//! ```

use crate::dataset::InteractionDataset;
use crate::error::{Result, RipleError};
use crate::matrix::SparseMatrix;

/// Average difficulty used for questions nobody has rated: the neutral
/// midpoint of the scale.
pub const DEFAULT_AVG_DIFFICULTY: f64 = 0.5;

/// Gap scores, the average-difficulty vector, and the blended benefit matrix.
#[derive(Debug, Clone)]
pub struct GapAndBenefit {
    pub avg_difficulty: Vec<f64>,
    pub gaps: SparseMatrix,
    pub benefit: SparseMatrix,
    pub kgw: f64,
}

/// Per-question mean of expressed difficulty ratings; questions with no
/// ratings fall back to [`DEFAULT_AVG_DIFFICULTY`].
pub fn avg_difficulty(ds: &InteractionDataset) -> Vec<f64> {
    let mut sums = vec![0.0; ds.n_questions()];
    let mut counts = vec![0usize; ds.n_questions()];
    for (_, i, d) in ds.difficulties().iter() {
        sums[i] += d;
        counts[i] += 1;
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &n)| if n > 0 { s / n as f64 } else { DEFAULT_AVG_DIFFICULTY })
        .collect()
}

/// Scores one answer: `(1-a)(0.5-a)/(1+d̄) + a(0.5-a)/(2-d̄)`.
///
/// `a` must be 0 or 1 and `d_bar` must lie in `[0, 1]`; under those
/// preconditions the result lies in `[-0.5, 0.5]`.
pub fn gap_score(a: f64, d_bar: f64) -> f64 {
    debug_assert!(a == 0.0 || a == 1.0);
    debug_assert!((0.0..=1.0).contains(&d_bar));
    (1.0 - a) * (0.5 - a) / (1.0 + d_bar) + a * (0.5 - a) / (2.0 - d_bar)
}

/// Applies [`gap_score`] over every answered pair.
pub fn knowledge_gap_matrix(ds: &InteractionDataset, d_bar: &[f64]) -> SparseMatrix {
    assert_eq!(d_bar.len(), ds.n_questions(), "d_bar length mismatch");
    let mut gaps = SparseMatrix::new(ds.n_users(), ds.n_questions());
    for (u, i, a) in ds.answers().iter() {
        gaps.insert(u, i, gap_score(a, d_bar[i]));
    }
    gaps
}

/// Blends gaps with interests: `r = kgw*g + (1-kgw)*p` on the support of `G`.
///
/// An unexpressed interest contributes 0, so the benefit support equals the
/// answered pairs.
pub fn benefit_matrix(gaps: &SparseMatrix, interests: &SparseMatrix, kgw: f64) -> Result<SparseMatrix> {
    if !(0.0..=1.0).contains(&kgw) {
        return Err(RipleError::InvalidParam(format!("kgw = {kgw} outside [0, 1]")));
    }
    let mut benefit = SparseMatrix::new(gaps.rows(), gaps.cols());
    for (u, i, g) in gaps.iter() {
        let p = interests.get(u, i).unwrap_or(0.0);
        benefit.insert(u, i, kgw * g + (1.0 - kgw) * p);
    }
    Ok(benefit)
}

/// Runs the full data-integration step for a dataset.
pub fn integrate(ds: &InteractionDataset, kgw: f64) -> Result<GapAndBenefit> {
    let d_bar = avg_difficulty(ds);
    let gaps = knowledge_gap_matrix(ds, &d_bar);
    let benefit = benefit_matrix(&gaps, ds.interests(), kgw)?;
    Ok(GapAndBenefit {
        avg_difficulty: d_bar,
        gaps,
        benefit,
        kgw,
    })
}
