//! User-topic learning profiles.
//!
//! Question-level gap scores aggregate into a dense user x topic matrix
//! `LP = (G T) / C`, where `C = S T` counts tag-weighted attempts. A cell
//! with no attempted questions on a topic stays at 0, the neutral state.
//! Users below the cold-start threshold are served the cohort-mean profile
//! instead of their own row.

use crate::dataset::InteractionDataset;
use crate::error::{Result, RipleError};
use crate::matrix::{DenseMatrix, SparseMatrix};

/// Default attempt count below which a user is treated as cold-start.
pub const DEFAULT_COLD_START_THRESHOLD: usize = 3;

/// A cohort's learning profiles plus the cold-start fallback vector.
#[derive(Debug, Clone)]
pub struct LearningProfile {
    pub lp: DenseMatrix,
    pub counts: DenseMatrix,
    pub cohort_mean: Vec<f64>,
    pub cold_start_threshold: usize,
}

impl LearningProfile {
    /// Builds the full profile from gap scores and the dataset's tags.
    pub fn compute(
        ds: &InteractionDataset,
        gaps: &SparseMatrix,
        cold_start_threshold: usize,
    ) -> Result<Self> {
        let counts = topic_counts(&attempt_mask_of(gaps), ds.tags());
        let lp = compute_profile(gaps, ds.tags(), &counts);
        let mean = cohort_mean(&lp)?;
        Ok(Self {
            lp,
            counts,
            cohort_mean: mean,
            cold_start_threshold,
        })
    }

    /// The profile actually used for a user: own row, or the cohort mean
    /// when their attempt count is below the threshold.
    pub fn effective(&self, user: usize, attempts: usize) -> Vec<f64> {
        effective_profile(
            user,
            &self.lp,
            &self.cohort_mean,
            attempts,
            self.cold_start_threshold,
        )
    }

    pub fn is_cold_start(&self, attempts: usize) -> bool {
        attempts < self.cold_start_threshold
    }

    /// Effective profiles for every user stacked into an N x L matrix.
    pub fn effective_matrix(&self, attempt_counts: &[usize]) -> DenseMatrix {
        let rows = (0..self.lp.rows())
            .map(|u| self.effective(u, attempt_counts[u]))
            .collect();
        DenseMatrix::from_rows(rows)
    }
}

fn attempt_mask_of(gaps: &SparseMatrix) -> SparseMatrix {
    let mut mask = SparseMatrix::new(gaps.rows(), gaps.cols());
    for (u, i, _) in gaps.iter() {
        mask.insert(u, i, 1.0);
    }
    mask
}

/// `C = S T`: tag-weighted attempt counts per user and topic.
pub fn topic_counts(attempt_mask: &SparseMatrix, tags: &DenseMatrix) -> DenseMatrix {
    assert_eq!(attempt_mask.cols(), tags.rows(), "dimension mismatch");
    let mut counts = DenseMatrix::zeros(attempt_mask.rows(), tags.cols());
    for (u, i, s) in attempt_mask.iter() {
        for j in 0..tags.cols() {
            let t = tags.get(i, j);
            if t != 0.0 {
                counts.set(u, j, counts.get(u, j) + s * t);
            }
        }
    }
    counts
}

/// `LP = (G T) / C` elementwise, with 0/0 defined as 0.
pub fn compute_profile(gaps: &SparseMatrix, tags: &DenseMatrix, counts: &DenseMatrix) -> DenseMatrix {
    let mut weighted = DenseMatrix::zeros(gaps.rows(), tags.cols());
    for (u, i, g) in gaps.iter() {
        for j in 0..tags.cols() {
            let t = tags.get(i, j);
            if t != 0.0 {
                weighted.set(u, j, weighted.get(u, j) + g * t);
            }
        }
    }
    let mut lp = DenseMatrix::zeros(gaps.rows(), tags.cols());
    for u in 0..lp.rows() {
        for j in 0..lp.cols() {
            let c = counts.get(u, j);
            if c > 0.0 {
                lp.set(u, j, weighted.get(u, j) / c);
            }
        }
    }
    lp
}

/// Per-topic mean profile over all users, cold-start zero rows included.
pub fn cohort_mean(lp: &DenseMatrix) -> Result<Vec<f64>> {
    let n = lp.rows();
    if n == 0 {
        return Err(RipleError::InvalidParam("empty cohort".into()));
    }
    let mut mean = vec![0.0; lp.cols()];
    for u in 0..n {
        for (j, m) in mean.iter_mut().enumerate() {
            *m += lp.get(u, j);
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    Ok(mean)
}

/// Cohort mean below the threshold ("less than" is strict), own row otherwise.
pub fn effective_profile(
    user: usize,
    lp: &DenseMatrix,
    cohort_mean: &[f64],
    attempts: usize,
    threshold: usize,
) -> Vec<f64> {
    if attempts < threshold {
        cohort_mean.to_vec()
    } else {
        lp.row(user).to_vec()
    }
}
