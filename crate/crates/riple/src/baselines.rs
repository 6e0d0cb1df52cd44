//! Comparison recommenders: user/item averages and Pearson-correlation KNN.
//!
//! The KNN predictors use the mean-centered Resnick form over up to `k`
//! positively-similar neighbors and fall back to the corresponding average
//! predictor when no usable neighbor rated the target.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RipleError};
use crate::factorization::{Algorithm, TrainConfig};
use crate::matrix::SparseMatrix;

/// Minimum number of co-observed entries for a Pearson similarity to count.
pub const MIN_OVERLAP: usize = 2;

/// A trained average or KNN baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub kind: Algorithm,
    pub knn_k: usize,
    global_mean: f64,
    user_means: Vec<f64>,
    item_means: Vec<f64>,
    ratings: SparseMatrix,
    /// Flattened similarity matrix (users x users or items x items),
    /// present only for the KNN kinds.
    similarity: Option<Vec<f64>>,
}

/// Pearson correlation over the co-observed entries of two sparse vectors,
/// given as `(index, value)` pairs sorted by index.
///
/// Returns 0 when fewer than [`MIN_OVERLAP`] entries co-occur or either
/// co-observed sub-vector has zero variance.
pub fn pearson_similarity(x: &[(usize, f64)], y: &[(usize, f64)]) -> f64 {
    let mut n = 0usize;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut a, mut b) = (0, 0);
    while a < x.len() && b < y.len() {
        match x[a].0.cmp(&y[b].0) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                let (xv, yv) = (x[a].1, y[b].1);
                n += 1;
                sx += xv;
                sy += yv;
                sxx += xv * xv;
                syy += yv * yv;
                sxy += xv * yv;
                a += 1;
                b += 1;
            }
        }
    }
    if n < MIN_OVERLAP {
        return 0.0;
    }
    let nf = n as f64;
    let cov = sxy - sx * sy / nf;
    let var_x = sxx - sx * sx / nf;
    let var_y = syy - sy * sy / nf;
    if var_x <= 1e-12 || var_y <= 1e-12 {
        return 0.0;
    }
    (cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0)
}

/// Trains a baseline on the benefit matrix `R`.
pub fn train_baseline(ratings: &SparseMatrix, cfg: &TrainConfig) -> Result<BaselineModel> {
    cfg.validate()?;
    let kind = cfg.algorithm;
    let similarity = match kind {
        Algorithm::UserAverage | Algorithm::ItemAverage => None,
        Algorithm::UserKnn => Some(similarity_matrix(ratings, true)),
        Algorithm::ItemKnn => Some(similarity_matrix(ratings, false)),
        other => {
            return Err(RipleError::InvalidParam(format!(
                "algorithm {other} is not a baseline"
            )))
        }
    };
    Ok(BaselineModel {
        kind,
        knn_k: cfg.knn_k,
        global_mean: ratings.mean(),
        user_means: ratings.row_means(),
        item_means: ratings.column_means(),
        ratings: ratings.clone(),
        similarity,
    })
}

fn similarity_matrix(ratings: &SparseMatrix, by_user: bool) -> Vec<f64> {
    let n = if by_user { ratings.rows() } else { ratings.cols() };
    let vectors: Vec<Vec<(usize, f64)>> = if by_user {
        (0..n).map(|u| ratings.row(u)).collect()
    } else {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (u, i, v) in ratings.iter() {
            cols[i].push((u, v));
        }
        cols
    };
    let mut sim = vec![0.0; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let s = pearson_similarity(&vectors[a], &vectors[b]);
            sim[a * n + b] = s;
            sim[b * n + a] = s;
        }
    }
    sim
}

impl BaselineModel {
    /// Mean of the user's observed ratings; the global mean if they have none.
    pub fn predict_uavg(&self, user: usize) -> f64 {
        if self.ratings.row(user).is_empty() {
            self.global_mean
        } else {
            self.user_means[user]
        }
    }

    /// Mean of the item's observed ratings; the global mean if unrated.
    pub fn predict_iavg(&self, item: usize) -> f64 {
        if self.ratings.column(item).is_empty() {
            self.global_mean
        } else {
            self.item_means[item]
        }
    }

    pub fn predict(&self, user: usize, item: usize) -> f64 {
        match self.kind {
            Algorithm::UserAverage => self.predict_uavg(user),
            Algorithm::ItemAverage => self.predict_iavg(item),
            Algorithm::UserKnn => self.predict_knn(user, item, true),
            Algorithm::ItemKnn => self.predict_knn(user, item, false),
            // train_baseline never constructs these kinds
            Algorithm::Mf | Algorithm::Bmf => unreachable!("not a baseline"),
        }
    }

    /// Resnick prediction from up to `knn_k` positively-similar neighbors
    /// that rated the target; falls back to the average predictor.
    fn predict_knn(&self, user: usize, item: usize, by_user: bool) -> f64 {
        let sim = self.similarity.as_ref().expect("KNN model has similarities");
        let n = if by_user { self.ratings.rows() } else { self.ratings.cols() };
        let target = if by_user { user } else { item };

        // Candidates: neighbors with positive similarity that rated the cell.
        let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
        if by_user {
            for (v, rating) in self.ratings.column(item) {
                if v == user {
                    continue;
                }
                let s = sim[target * n + v];
                if s > 0.0 {
                    candidates.push((v, s, rating));
                }
            }
        } else {
            for (j, rating) in self.ratings.row(user) {
                if j == item {
                    continue;
                }
                let s = sim[target * n + j];
                if s > 0.0 {
                    candidates.push((j, s, rating));
                }
            }
        }
        if candidates.is_empty() {
            return if by_user { self.predict_uavg(user) } else { self.predict_iavg(item) };
        }
        // Keep the k most similar; ties broken by index for determinism.
        candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        candidates.truncate(self.knn_k);

        let base = if by_user { self.predict_uavg(user) } else { self.predict_iavg(item) };
        let means = if by_user { &self.user_means } else { &self.item_means };
        let mut num = 0.0;
        let mut den = 0.0;
        for (neighbor, s, rating) in candidates {
            num += s * (rating - means[neighbor]);
            den += s.abs();
        }
        base + num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(kind: Algorithm, k: usize) -> TrainConfig {
        TrainConfig {
            algorithm: kind,
            latent_dim: 1,
            regularization: 0.0,
            learning_rate: 0.1,
            iterations: 1,
            seed: 0,
            knn_k: k,
        }
    }

    fn vector(values: &[(usize, f64)]) -> Vec<(usize, f64)> {
        values.to_vec()
    }

    #[test]
    fn pearson_identical_and_opposite() {
        let x = vector(&[(0, 1.0), (1, 2.0), (2, 3.0)]);
        assert!((pearson_similarity(&x, &x) - 1.0).abs() < 1e-12);
        let y = vector(&[(0, -1.0), (1, -2.0), (2, -3.0)]);
        assert!((pearson_similarity(&x, &y) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_degenerate_cases() {
        // single co-observed entry -> 0
        let x = vector(&[(0, 1.0), (5, 2.0)]);
        let y = vector(&[(0, 3.0), (9, 1.0)]);
        assert_eq!(pearson_similarity(&x, &y), 0.0);
        // zero variance -> 0
        let flat = vector(&[(0, 1.0), (1, 1.0)]);
        let z = vector(&[(0, 0.5), (1, 0.7)]);
        assert_eq!(pearson_similarity(&flat, &z), 0.0);
        // no overlap at all
        let a = vector(&[(0, 1.0)]);
        let b = vector(&[(1, 1.0)]);
        assert_eq!(pearson_similarity(&a, &b), 0.0);
    }

    #[test]
    fn pearson_is_symmetric() {
        let x = vector(&[(0, 0.1), (2, 0.7), (3, 0.4)]);
        let y = vector(&[(0, 0.9), (1, 0.3), (2, 0.2), (3, 0.6)]);
        assert_eq!(pearson_similarity(&x, &y), pearson_similarity(&y, &x));
    }

    #[test]
    fn uavg_predictions() {
        let mut r = SparseMatrix::new(2, 3);
        r.insert(0, 0, 0.2);
        r.insert(0, 1, 0.4);
        let model = train_baseline(&r, &cfg(Algorithm::UserAverage, 1)).unwrap();
        for i in 0..3 {
            assert!((model.predict(0, i) - 0.3).abs() < 1e-12);
        }
        // user 1 rated nothing -> global mean
        assert!((model.predict(1, 0) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn iavg_predictions() {
        let mut r = SparseMatrix::new(3, 2);
        r.insert(0, 0, 0.1);
        r.insert(1, 0, 0.3);
        let model = train_baseline(&r, &cfg(Algorithm::ItemAverage, 1)).unwrap();
        for u in 0..3 {
            assert!((model.predict(u, 0) - 0.2).abs() < 1e-12);
        }
        // item 1 unrated -> global mean
        assert!((model.predict(0, 1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn constant_matrix_predicts_the_constant() {
        let mut r = SparseMatrix::new(2, 2);
        for u in 0..2 {
            for i in 0..2 {
                r.insert(u, i, 0.42);
            }
        }
        for kind in [Algorithm::UserAverage, Algorithm::ItemAverage] {
            let model = train_baseline(&r, &cfg(kind, 1)).unwrap();
            assert!((model.predict(0, 1) - 0.42).abs() < 1e-12);
        }
    }

    #[test]
    fn user_knn_single_perfect_neighbor() {
        // Users 0 and 1 agree perfectly on items 0..=2 (sim = 1); user 1
        // also rated item 3 above their own mean, and that adjustment
        // transfers onto user 0's mean unweighted.
        let mut r = SparseMatrix::new(2, 4);
        r.insert(0, 0, 0.1);
        r.insert(0, 1, 0.2);
        r.insert(0, 2, 0.3);
        r.insert(1, 0, 0.2);
        r.insert(1, 1, 0.3);
        r.insert(1, 2, 0.4);
        r.insert(1, 3, 0.7); // mean of user 1 becomes 0.4; adjustment 0.3
        let model = train_baseline(&r, &cfg(Algorithm::UserKnn, 1)).unwrap();
        let expected = 0.2 + (0.7 - 0.4); // r̄_u + sim-weighted adjustment
        assert!((model.predict(0, 3) - expected).abs() < 1e-9);
    }

    #[test]
    fn knn_falls_back_to_average_without_neighbors() {
        let mut r = SparseMatrix::new(2, 2);
        r.insert(0, 0, 0.2);
        r.insert(0, 1, 0.4);
        r.insert(1, 1, 0.6);
        // No user shares >= 2 co-rated items with positive correlation.
        let model = train_baseline(&r, &cfg(Algorithm::UserKnn, 3)).unwrap();
        let uavg = train_baseline(&r, &cfg(Algorithm::UserAverage, 3)).unwrap();
        assert_eq!(model.predict(1, 0), uavg.predict(1, 0));
    }

    #[test]
    fn duplicate_user_dominates_prediction() {
        // User 1 is an exact duplicate of user 0 on shared items and also
        // rated item 3; with K = 1 the prediction is exactly user 1's
        // mean-centered adjustment applied to user 0's mean.
        let mut r = SparseMatrix::new(3, 4);
        for (i, v) in [(0, 0.1), (1, 0.5), (2, 0.3)] {
            r.insert(0, i, v);
            r.insert(1, i, v);
        }
        r.insert(1, 3, 0.9);
        r.insert(2, 0, 0.9);
        r.insert(2, 1, 0.1);
        r.insert(2, 2, 0.2);
        r.insert(2, 3, 0.0);
        let model = train_baseline(&r, &cfg(Algorithm::UserKnn, 1)).unwrap();
        let u0_mean = (0.1 + 0.5 + 0.3) / 3.0;
        let u1_mean = (0.1 + 0.5 + 0.3 + 0.9) / 4.0;
        assert!((model.predict(0, 3) - (u0_mean + 0.9 - u1_mean)).abs() < 1e-9);
    }

    #[test]
    fn constant_shift_moves_uknn_predictions_by_same_constant() {
        let mut r = SparseMatrix::new(3, 4);
        let vals = [
            (0, 0, 0.1),
            (0, 1, 0.4),
            (0, 2, 0.2),
            (1, 0, 0.2),
            (1, 1, 0.5),
            (1, 2, 0.3),
            (1, 3, 0.6),
            (2, 0, 0.6),
            (2, 1, 0.1),
            (2, 3, 0.2),
        ];
        for (u, i, v) in vals {
            r.insert(u, i, v);
        }
        let model = train_baseline(&r, &cfg(Algorithm::UserKnn, 2)).unwrap();
        let base = model.predict(0, 3);

        let mut shifted = SparseMatrix::new(3, 4);
        for (u, i, v) in vals {
            shifted.insert(u, i, if u == 0 { v + 0.25 } else { v });
        }
        let model2 = train_baseline(&shifted, &cfg(Algorithm::UserKnn, 2)).unwrap();
        assert!((model2.predict(0, 3) - (base + 0.25)).abs() < 1e-9);
    }

    #[test]
    fn item_knn_mirrors_user_knn_structure() {
        // Items 0 and 1 agree perfectly across users 0..=2; item 1 also
        // rated by user 3.
        let mut r = SparseMatrix::new(4, 2);
        r.insert(0, 0, 0.1);
        r.insert(0, 1, 0.1);
        r.insert(1, 0, 0.3);
        r.insert(1, 1, 0.3);
        r.insert(2, 0, 0.5);
        r.insert(2, 1, 0.5);
        r.insert(3, 1, 0.8);
        let model = train_baseline(&r, &cfg(Algorithm::ItemKnn, 1)).unwrap();
        let i0_mean = 0.3;
        let i1_mean = (0.1 + 0.3 + 0.5 + 0.8) / 4.0;
        assert!((model.predict(3, 0) - (i0_mean + 0.8 - i1_mean)).abs() < 1e-9);
    }
}
