//! Matrix factorization trained by stochastic gradient descent.
//!
//! Benefit ratings are mean-normalized per item before training and
//! de-normalized at prediction, so a user with all-zero latent factors is
//! predicted the item average. Plain MF learns `rated ~ q_i . h_u` on the
//! normalized ratings; biased MF (BMF) adds a global mean plus per-user and
//! per-item bias terms. Training is sequential and fully seeded: identical
//! `(data, hyperparameters, seed)` yields bit-identical models.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RipleError};
use crate::matrix::{DenseMatrix, SparseMatrix};

/// Prediction algorithms selectable through [`TrainConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Mf,
    Bmf,
    UserAverage,
    ItemAverage,
    UserKnn,
    ItemKnn,
}

impl std::str::FromStr for Algorithm {
    type Err = RipleError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mf" => Ok(Algorithm::Mf),
            "bmf" => Ok(Algorithm::Bmf),
            "u-avg" | "user-average" => Ok(Algorithm::UserAverage),
            "i-avg" | "item-average" => Ok(Algorithm::ItemAverage),
            "u-knn" | "user-knn" => Ok(Algorithm::UserKnn),
            "i-knn" | "item-knn" => Ok(Algorithm::ItemKnn),
            other => Err(RipleError::InvalidParam(format!("unknown algorithm '{other}'"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Algorithm::Mf => "mf",
            Algorithm::Bmf => "bmf",
            Algorithm::UserAverage => "u-avg",
            Algorithm::ItemAverage => "i-avg",
            Algorithm::UserKnn => "u-knn",
            Algorithm::ItemKnn => "i-knn",
        };
        f.write_str(name)
    }
}

/// Training hyperparameters shared by all algorithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub algorithm: Algorithm,
    /// Latent dimension K.
    pub latent_dim: usize,
    /// Regularization weight lambda.
    pub regularization: f64,
    /// SGD learning rate gamma.
    pub learning_rate: f64,
    /// Number of SGD epochs.
    pub iterations: usize,
    pub seed: u64,
    /// Neighborhood size for the KNN baselines.
    pub knn_k: usize,
}

impl TrainConfig {
    /// Defaults used by the synthetic validation experiments:
    /// gamma = 0.1, K = 5.
    pub fn synthetic_default(seed: u64) -> Self {
        Self {
            algorithm: Algorithm::Bmf,
            latent_dim: 5,
            regularization: 0.15,
            learning_rate: 0.1,
            iterations: 150,
            seed,
            knn_k: 20,
        }
    }

    /// The preset tuned on the historical PeerWise-style dataset:
    /// BMF with gamma = 0.002, K = 2, 300 iterations.
    pub fn historical(seed: u64) -> Self {
        Self {
            algorithm: Algorithm::Bmf,
            latent_dim: 2,
            regularization: 0.02,
            learning_rate: 0.002,
            iterations: 300,
            seed,
            knn_k: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.regularization < 0.0 {
            return Err(RipleError::InvalidParam("regularization must be >= 0".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(RipleError::InvalidParam("learning rate must be > 0".into()));
        }
        if self.iterations == 0 {
            return Err(RipleError::InvalidParam("iterations must be >= 1".into()));
        }
        match self.algorithm {
            // BMF degenerates gracefully to a bias-only model at K = 0.
            Algorithm::Mf if self.latent_dim == 0 => {
                Err(RipleError::InvalidParam("latent_dim must be >= 1 for MF".into()))
            }
            Algorithm::UserKnn | Algorithm::ItemKnn if self.knn_k == 0 => {
                Err(RipleError::InvalidParam("knn_k must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// A trained (B)MF model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorModel {
    pub config: TrainConfig,
    /// N x K user factors H.
    pub user_factors: DenseMatrix,
    /// M x K item factors Q.
    pub item_factors: DenseMatrix,
    pub user_bias: Option<Vec<f64>>,
    pub item_bias: Option<Vec<f64>>,
    pub global_mean: Option<f64>,
    /// Per-item means removed by normalization and restored at prediction.
    pub item_means: Vec<f64>,
}

impl FactorModel {
    pub fn n_users(&self) -> usize {
        self.user_factors.rows()
    }

    pub fn n_items(&self) -> usize {
        self.item_factors.rows()
    }

    /// Predicted benefit: factor inner product, plus bias terms for BMF,
    /// plus the item mean restored.
    pub fn predict(&self, user: usize, item: usize) -> f64 {
        let dot: f64 = self
            .user_factors
            .row(user)
            .iter()
            .zip(self.item_factors.row(item))
            .map(|(h, q)| h * q)
            .sum();
        let bias = self.global_mean.unwrap_or(0.0)
            + self.user_bias.as_ref().map_or(0.0, |b| b[user])
            + self.item_bias.as_ref().map_or(0.0, |b| b[item]);
        dot + bias + self.item_means[item]
    }

    /// All predictions as a dense N x M matrix.
    pub fn predict_matrix(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n_users(), self.n_items());
        for u in 0..self.n_users() {
            for i in 0..self.n_items() {
                out.set(u, i, self.predict(u, i));
            }
        }
        out
    }
}

/// Subtracts per-item means from observed entries; empty columns get mean 0.
pub fn normalize(ratings: &SparseMatrix) -> (SparseMatrix, Vec<f64>) {
    let means = ratings.column_means();
    let mut normalized = SparseMatrix::new(ratings.rows(), ratings.cols());
    for (u, i, r) in ratings.iter() {
        normalized.insert(u, i, r - means[i]);
    }
    (normalized, means)
}

/// Adds the item means back onto observed entries.
pub fn denormalize(normalized: &SparseMatrix, item_means: &[f64]) -> SparseMatrix {
    let mut out = SparseMatrix::new(normalized.rows(), normalized.cols());
    for (u, i, r) in normalized.iter() {
        out.insert(u, i, r + item_means[i]);
    }
    out
}

/// The regularized squared error objective evaluated over observed entries:
/// sum of `(r - pred)^2 + lambda (|q_i|^2 + |h_u|^2 [+ bias^2 terms])`.
pub fn objective(model: &FactorModel, normalized: &SparseMatrix) -> f64 {
    let lambda = model.config.regularization;
    let mut total = 0.0;
    for (u, i, r) in normalized.iter() {
        let pred = model.predict(u, i) - model.item_means[i];
        let err = r - pred;
        let reg_h: f64 = model.user_factors.row(u).iter().map(|h| h * h).sum();
        let reg_q: f64 = model.item_factors.row(i).iter().map(|q| q * q).sum();
        let reg_bias = model.user_bias.as_ref().map_or(0.0, |b| b[u] * b[u])
            + model.item_bias.as_ref().map_or(0.0, |b| b[i] * b[i]);
        total += err * err + lambda * (reg_h + reg_q + reg_bias);
    }
    total
}

/// Trains plain MF on an already-normalized rating matrix.
pub fn train_mf(normalized: &SparseMatrix, item_means: Vec<f64>, cfg: &TrainConfig) -> Result<FactorModel> {
    train_sgd(normalized, item_means, cfg, false)
}

/// Trains biased MF on an already-normalized rating matrix.
pub fn train_bmf(normalized: &SparseMatrix, item_means: Vec<f64>, cfg: &TrainConfig) -> Result<FactorModel> {
    train_sgd(normalized, item_means, cfg, true)
}

/// Mean-normalizes `ratings` and trains the configured MF variant.
pub fn train(ratings: &SparseMatrix, cfg: &TrainConfig) -> Result<FactorModel> {
    let (normalized, means) = normalize(ratings);
    match cfg.algorithm {
        Algorithm::Mf => train_mf(&normalized, means, cfg),
        Algorithm::Bmf => train_bmf(&normalized, means, cfg),
        other => Err(RipleError::InvalidParam(format!(
            "algorithm {other} is not a factorization model"
        ))),
    }
}

fn train_sgd(
    normalized: &SparseMatrix,
    item_means: Vec<f64>,
    cfg: &TrainConfig,
    biased: bool,
) -> Result<FactorModel> {
    cfg.validate()?;
    let n = normalized.rows();
    let m = normalized.cols();
    let k = cfg.latent_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut user_factors = vec![0.0; n * k];
    let mut item_factors = vec![0.0; m * k];
    for v in user_factors.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    for v in item_factors.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
    let mut user_bias = vec![0.0; if biased { n } else { 0 }];
    let mut item_bias = vec![0.0; if biased { m } else { 0 }];
    let global_mean = if biased { normalized.mean() } else { 0.0 };

    let mut entries: Vec<(usize, usize, f64)> = normalized.iter().collect();
    let gamma = cfg.learning_rate;
    let lambda = cfg.regularization;

    for epoch in 0..cfg.iterations {
        entries.shuffle(&mut rng);
        for &(u, i, r) in &entries {
            let h = &mut user_factors[u * k..(u + 1) * k];
            let q = &mut item_factors[i * k..(i + 1) * k];
            let mut pred: f64 = h.iter().zip(q.iter()).map(|(h, q)| h * q).sum();
            if biased {
                pred += global_mean + user_bias[u] + item_bias[i];
            }
            let err = r - pred;
            for (h_uk, q_ik) in h.iter_mut().zip(q.iter_mut()) {
                let h_old = *h_uk;
                *h_uk += gamma * (err * *q_ik - lambda * h_old);
                *q_ik += gamma * (err * h_old - lambda * *q_ik);
            }
            if biased {
                user_bias[u] += gamma * (err - lambda * user_bias[u]);
                item_bias[i] += gamma * (err - lambda * item_bias[i]);
            }
        }
        let finite = user_factors.iter().all(|v| v.is_finite())
            && item_factors.iter().all(|v| v.is_finite())
            && user_bias.iter().all(|v| v.is_finite())
            && item_bias.iter().all(|v| v.is_finite());
        if !finite {
            return Err(RipleError::Training {
                epoch,
                message: "non-finite factor value; lower the learning rate".into(),
            });
        }
    }

    // Rows and columns with no observed ratings keep their random
    // initialization, which would leak noise into predictions; zero them so
    // a zero-history user (or unrated item) falls back to the item mean.
    let mut user_seen = vec![false; n];
    let mut item_seen = vec![false; m];
    for &(u, i, _) in &entries {
        user_seen[u] = true;
        item_seen[i] = true;
    }
    for (u, seen) in user_seen.iter().enumerate() {
        if !seen {
            user_factors[u * k..(u + 1) * k].fill(0.0);
            if biased {
                user_bias[u] = 0.0;
            }
        }
    }
    for (i, seen) in item_seen.iter().enumerate() {
        if !seen {
            item_factors[i * k..(i + 1) * k].fill(0.0);
            if biased {
                item_bias[i] = 0.0;
            }
        }
    }

    Ok(FactorModel {
        config: cfg.clone(),
        user_factors: DenseMatrix::from_rows(
            (0..n).map(|u| user_factors[u * k..(u + 1) * k].to_vec()).collect::<Vec<_>>(),
        ),
        item_factors: DenseMatrix::from_rows(
            (0..m).map(|i| item_factors[i * k..(i + 1) * k].to_vec()).collect::<Vec<_>>(),
        ),
        user_bias: biased.then_some(user_bias),
        item_bias: biased.then_some(item_bias),
        global_mean: biased.then_some(global_mean),
        item_means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(algorithm: Algorithm, seed: u64) -> TrainConfig {
        TrainConfig {
            algorithm,
            latent_dim: 1,
            regularization: 0.0,
            learning_rate: 0.05,
            iterations: 200,
            seed,
            knn_k: 5,
        }
    }

    #[test]
    fn normalize_centers_columns() {
        let mut r = SparseMatrix::new(2, 2);
        r.insert(0, 0, 0.2);
        r.insert(1, 0, 0.4);
        let (norm, means) = normalize(&r);
        assert!((means[0] - 0.3).abs() < 1e-12);
        assert_eq!(means[1], 0.0); // empty column
        assert!((norm.get(0, 0).unwrap() - (-0.1)).abs() < 1e-12);
        assert!((norm.get(1, 0).unwrap() - 0.1).abs() < 1e-12);
        let recentred = norm.column_means();
        assert!(recentred[0].abs() < 1e-12);
    }

    #[test]
    fn normalize_round_trips_exactly() {
        let mut r = SparseMatrix::new(3, 2);
        r.insert(0, 0, 0.25);
        r.insert(1, 0, -0.125);
        r.insert(2, 1, 0.5);
        let (norm, means) = normalize(&r);
        assert_eq!(denormalize(&norm, &means), r);
    }

    #[test]
    fn zero_learning_rate_is_rejected() {
        let r = SparseMatrix::new(1, 1);
        let mut cfg = config(Algorithm::Mf, 0);
        cfg.learning_rate = 0.0;
        assert!(train(&r, &cfg).is_err());
    }

    #[test]
    fn rank_one_matrix_is_recovered() {
        // R built from known h = [1, 2], q = [0.3, -0.4]; an exact K = 1
        // factorization exists, so training error should become tiny.
        let h = [1.0, 2.0];
        let q = [0.3, -0.4];
        let mut r = SparseMatrix::new(2, 2);
        for (u, hu) in h.iter().enumerate() {
            for (i, qi) in q.iter().enumerate() {
                r.insert(u, i, hu * qi);
            }
        }
        let mut cfg = config(Algorithm::Mf, 42);
        cfg.iterations = 5000; // tiny residuals on 4 cells converge slowly
        let (norm, means) = normalize(&r);
        let model = train_mf(&norm, means, &cfg).unwrap();
        let mut sq = 0.0;
        for (u, i, v) in r.iter() {
            sq += (model.predict(u, i) - v).powi(2);
        }
        let rmse = (sq / r.len() as f64).sqrt();
        assert!(rmse < 1e-2, "training rmse {rmse}");
    }

    #[test]
    fn bmf_fits_constant_matrix() {
        let mut r = SparseMatrix::new(3, 3);
        for u in 0..3 {
            for i in 0..3 {
                r.insert(u, i, 0.7);
            }
        }
        let mut cfg = config(Algorithm::Bmf, 3);
        cfg.iterations = 300;
        let model = train(&r, &cfg).unwrap();
        for u in 0..3 {
            for i in 0..3 {
                assert!((model.predict(u, i) - 0.7).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn bmf_with_zero_latent_dim_is_bias_only() {
        let mut r = SparseMatrix::new(2, 2);
        r.insert(0, 0, 0.2);
        r.insert(1, 1, 0.4);
        let mut cfg = config(Algorithm::Bmf, 5);
        cfg.latent_dim = 0;
        let model = train(&r, &cfg).unwrap();
        assert_eq!(model.user_factors.cols(), 0);
        // prediction is exactly mu + b_u + b_i + item mean
        let expected = model.global_mean.unwrap()
            + model.user_bias.as_ref().unwrap()[0]
            + model.item_bias.as_ref().unwrap()[1]
            + model.item_means[1];
        assert_eq!(model.predict(0, 1), expected);
    }

    #[test]
    fn mf_requires_positive_latent_dim() {
        let r = SparseMatrix::new(1, 1);
        let mut cfg = config(Algorithm::Mf, 0);
        cfg.latent_dim = 0;
        assert!(train(&r, &cfg).is_err());
    }

    #[test]
    fn zero_factor_user_predicts_item_mean() {
        let mut r = SparseMatrix::new(2, 2);
        r.insert(0, 0, 0.2);
        r.insert(0, 1, 0.4);
        let cfg = config(Algorithm::Mf, 7);
        let model = train(&r, &cfg).unwrap();
        assert!(model.user_factors.row(1).iter().all(|&v| v == 0.0));
        assert_eq!(model.predict(1, 0), model.item_means[0]);
        assert_eq!(model.predict(1, 1), model.item_means[1]);
    }

    #[test]
    fn predict_hand_arithmetic() {
        let model = FactorModel {
            config: config(Algorithm::Mf, 0),
            user_factors: DenseMatrix::from_rows(vec![vec![2.0]]),
            item_factors: DenseMatrix::from_rows(vec![vec![0.1]]),
            user_bias: None,
            item_bias: None,
            global_mean: None,
            item_means: vec![0.05],
        };
        assert!((model.predict(0, 0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn predict_matrix_agrees_with_predict() {
        let mut r = SparseMatrix::new(3, 2);
        r.insert(0, 0, 0.1);
        r.insert(1, 1, 0.3);
        r.insert(2, 0, -0.2);
        let cfg = config(Algorithm::Bmf, 11);
        let model = train(&r, &cfg).unwrap();
        let matrix = model.predict_matrix();
        assert_eq!(matrix.rows(), 3);
        assert_eq!(matrix.cols(), 2);
        for u in 0..3 {
            for i in 0..2 {
                assert_eq!(matrix.get(u, i), model.predict(u, i));
            }
        }
    }

    #[test]
    fn identical_seeds_give_identical_models() {
        let mut r = SparseMatrix::new(4, 3);
        r.insert(0, 0, 0.3);
        r.insert(1, 1, -0.1);
        r.insert(2, 2, 0.2);
        r.insert(3, 0, 0.4);
        let cfg = config(Algorithm::Bmf, 99);
        let a = train(&r, &cfg).unwrap();
        let b = train(&r, &cfg).unwrap();
        assert_eq!(a, b);
        let mut other = cfg.clone();
        other.seed = 100;
        let c = train(&r, &other).unwrap();
        assert_ne!(a.user_factors, c.user_factors);
    }

    #[test]
    fn objective_nonincreasing_near_convergence() {
        let mut r = SparseMatrix::new(3, 3);
        let values = [0.4, -0.2, 0.1, 0.3, -0.4, 0.25, -0.15, 0.05, 0.35];
        for u in 0..3 {
            for i in 0..3 {
                r.insert(u, i, values[u * 3 + i]);
            }
        }
        let (norm, means) = normalize(&r);
        let mut cfg = config(Algorithm::Mf, 13);
        cfg.latent_dim = 2;
        cfg.learning_rate = 0.05;
        // train for increasing epoch counts; objective over the last 10%
        // of epochs must not increase beyond tolerance
        let total = 100;
        let mut last = f64::INFINITY;
        for epochs in (90..=total).step_by(2) {
            let mut c = cfg.clone();
            c.iterations = epochs;
            let model = train_mf(&norm, means.clone(), &c).unwrap();
            let obj = objective(&model, &norm);
            assert!(obj <= last + 1e-6, "objective rose from {last} to {obj}");
            last = obj;
        }
    }

    #[test]
    fn regularization_shrinks_factor_norms() {
        let mut r = SparseMatrix::new(4, 4);
        let mut v = 0.11_f64;
        for u in 0..4 {
            for i in 0..4 {
                r.insert(u, i, (v * 7.3).sin() * 0.4);
                v += 0.37;
            }
        }
        let mut norms = Vec::new();
        for lambda in [0.0, 0.01, 0.1] {
            let mut cfg = config(Algorithm::Mf, 21);
            cfg.latent_dim = 2;
            cfg.regularization = lambda;
            cfg.iterations = 400;
            let model = train(&r, &cfg).unwrap();
            let norm: f64 = model
                .user_factors
                .data()
                .iter()
                .chain(model.item_factors.data())
                .map(|x| x * x)
                .sum();
            norms.push(norm);
        }
        assert!(norms[1] <= norms[0] + 1e-9);
        assert!(norms[2] <= norms[1] + 1e-9);
    }

    #[test]
    fn divergence_reports_epoch() {
        let mut r = SparseMatrix::new(2, 2);
        r.insert(0, 0, 0.5);
        r.insert(0, 1, -0.5);
        r.insert(1, 0, -0.5);
        r.insert(1, 1, 0.5);
        let mut cfg = config(Algorithm::Mf, 1);
        cfg.learning_rate = 10.0; // wildly too large
        cfg.iterations = 50;
        match train(&r, &cfg) {
            Err(RipleError::Training { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn model_serialization_round_trips() {
        let mut r = SparseMatrix::new(2, 2);
        r.insert(0, 0, 0.3);
        r.insert(1, 1, 0.1);
        let cfg = config(Algorithm::Bmf, 17);
        let model = train(&r, &cfg).unwrap();
        let json = serde_json::to_string(&model).unwrap();
        let restored: FactorModel = serde_json::from_str(&json).unwrap();
        assert_eq!(model, restored);
        assert_eq!(model.predict(0, 1), restored.predict(0, 1));
    }
}
