//! Recommendation pipeline for peer-learning question repositories.
//!
//! The library estimates, for every student, which questions they would
//! benefit most from attempting next. It blends two signals extracted from
//! answer and rating logs:
//!
//! * **Knowledge gaps** — a correctness/difficulty score per attempted
//!   question, aggregated into a per-topic learning profile and propagated
//!   to unseen questions through the topic tags.
//! * **Expressed interest** — five-star interest ratings, completed by
//!   biased matrix factorization (or simpler baselines) over the combined
//!   benefit matrix.
//!
//! A typical flow:
//!
//! ```
//! use riple::dataset;
//! use riple::engine::{output_matrix, propagate_gaps, recommend, Mode};
//! use riple::eval::TrainedModel;
//! use riple::factorization::TrainConfig;
//! use riple::integration::integrate;
//! use riple::profile::{LearningProfile, DEFAULT_COLD_START_THRESHOLD};
//! use riple::synthetic::{generate_cohort, simulate_interactions, CohortSpec, SimulationSpec};
//!
//! // A small synthetic repository stands in for real logs here.
//! let cohort = generate_cohort(&CohortSpec {
//!     n_users: 20,
//!     n_questions: 50,
//!     n_topics: 4,
//!     alpha: 0.1,
//!     max_topics_per_question: 1,
//!     seed: 7,
//! })?;
//! let ds = simulate_interactions(&cohort, &SimulationSpec::new(400, 7))?;
//!
//! // Gap scores and the blended benefit targets (kgw weights the gap side).
//! let integrated = integrate(&ds, 0.5)?;
//!
//! // Complete the benefit matrix with biased matrix factorization.
//! let model = TrainedModel::fit(&integrated.benefit, &TrainConfig::synthetic_default(7))?;
//! let r_hat = model.predict_matrix(ds.n_users(), ds.n_questions());
//!
//! // Topic profiles propagate gaps onto unattempted questions.
//! let profile = LearningProfile::compute(&ds, &integrated.gaps, DEFAULT_COLD_START_THRESHOLD)?;
//! let effective = profile.effective_matrix(&ds.attempt_counts());
//! let g_hat = propagate_gaps(&effective, ds.tags());
//!
//! // Final scores and a top-5 list of new questions for user 0.
//! let output = output_matrix(&r_hat, &g_hat, 0.05)?;
//! let top = recommend(0, &output, &ds, Mode::Explore, &[], 5)?;
//! assert_eq!(top.len(), 5);
//! # Ok::<(), riple::error::RipleError>(())
//! ```

pub mod baselines;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod eval;
pub mod factorization;
pub mod integration;
pub mod matrix;
pub mod profile;
pub mod synthetic;

#[doc(hidden)]
pub mod testutil;

pub use error::{Result, RipleError};
