//! Shared fixtures for unit and integration tests.

#![doc(hidden)]

use crate::dataset::{IdMap, InteractionDataset};
use crate::matrix::{DenseMatrix, SparseMatrix};

/// A hand-built 3-user, 4-question, 3-topic dataset.
///
/// Answers: u0 fails q0, passes q1; u1 passes q0, fails q2; u2 passes q3.
/// Difficulty ratings on q0 are {0.0, 0.2} so its average is 0.1; q3 has
/// no difficulty ratings. Tags: q0 -> t0, q1 -> {t0, t1}, q2 -> t1, q3 -> t2.
pub fn small_dataset() -> InteractionDataset {
    let users = IdMap::from_ids((0..3).map(|u| u.to_string()));
    let questions = IdMap::from_ids((0..4).map(|q| q.to_string()));
    let topics = IdMap::from_ids((0..3).map(|t| t.to_string()));

    let mut answers = SparseMatrix::new(3, 4);
    answers.insert(0, 0, 0.0);
    answers.insert(0, 1, 1.0);
    answers.insert(1, 0, 1.0);
    answers.insert(1, 2, 0.0);
    answers.insert(2, 3, 1.0);

    let mut difficulties = SparseMatrix::new(3, 4);
    difficulties.insert(0, 0, 0.0);
    difficulties.insert(1, 0, 0.2);
    difficulties.insert(1, 2, 0.5);

    let mut interests = SparseMatrix::new(3, 4);
    interests.insert(0, 0, 0.6);
    interests.insert(0, 1, 1.0);
    interests.insert(1, 2, 0.2);

    let mut tags = DenseMatrix::zeros(4, 3);
    tags.set(0, 0, 1.0);
    tags.set(1, 0, 0.5);
    tags.set(1, 1, 0.5);
    tags.set(2, 1, 1.0);
    tags.set(3, 2, 1.0);

    InteractionDataset::from_parts(users, questions, topics, answers, interests, difficulties, tags)
        .expect("fixture is valid")
}
