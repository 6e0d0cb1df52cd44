//! Input data model: answer, interest, and difficulty matrices plus the
//! question-topic tag matrix, ingested from CSV files.
//!
//! Raw interest ratings arrive as integers in `0..=5` and raw difficulty
//! ratings as integers in `0..=2`; they are stored scaled into `[0, 1]`.
//! Tag rows are normalized so a question tagged with `g` topics carries
//! weight `1/g` on each, hence every nonzero tag row sums to one.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, RipleError};
use crate::matrix::{DenseMatrix, SparseMatrix};

/// Maps external string identifiers to dense 0-based indices.
///
/// When every identifier parses as a non-negative integer the numeric value
/// is used directly (so dimensions become `max id + 1`); otherwise distinct
/// identifiers are assigned indices in lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdMap {
    ids: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl IdMap {
    pub fn from_ids<I: IntoIterator<Item = String>>(raw: I) -> Self {
        let mut distinct: Vec<String> = raw.into_iter().collect();
        distinct.sort();
        distinct.dedup();

        let numeric: Option<Vec<usize>> = distinct.iter().map(|s| s.parse::<usize>().ok()).collect();
        let (ids, index) = match numeric {
            Some(values) if !values.is_empty() => {
                let max = *values.iter().max().unwrap();
                let mut ids = vec![String::new(); max + 1];
                for (s, &v) in distinct.iter().zip(&values) {
                    ids[v] = s.clone();
                }
                // Fill holes so every index has a printable id.
                for (i, id) in ids.iter_mut().enumerate() {
                    if id.is_empty() {
                        *id = i.to_string();
                    }
                }
                let index = ids
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.clone(), i))
                    .collect();
                (ids, index)
            }
            _ => {
                let index = distinct
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (s.clone(), i))
                    .collect();
                (distinct, index)
            }
        };
        Self { ids, index }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id_of(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }
}

/// The sparse interaction data of a peer-learning question repository.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionDataset {
    user_ids: IdMap,
    question_ids: IdMap,
    topic_ids: IdMap,
    /// Correctness matrix A: 1.0 correct, 0.0 incorrect, absent unattempted.
    answers: SparseMatrix,
    /// Interest matrix P, entries in [0, 1].
    interests: SparseMatrix,
    /// Difficulty matrix D, entries in [0, 1].
    difficulties: SparseMatrix,
    /// Tag matrix T (questions x topics), rows normalized to 1/g.
    tags: DenseMatrix,
}

impl InteractionDataset {
    /// Builds a dataset from already-scaled parts, enforcing every invariant.
    pub fn from_parts(
        user_ids: IdMap,
        question_ids: IdMap,
        topic_ids: IdMap,
        answers: SparseMatrix,
        interests: SparseMatrix,
        difficulties: SparseMatrix,
        tags: DenseMatrix,
    ) -> Result<Self> {
        let n = user_ids.len();
        let m = question_ids.len();
        let l = topic_ids.len();
        if answers.rows() != n || answers.cols() != m {
            return Err(RipleError::Validation(format!(
                "answer matrix is {}x{}, expected {}x{}",
                answers.rows(),
                answers.cols(),
                n,
                m
            )));
        }
        if tags.rows() != m || tags.cols() != l {
            return Err(RipleError::Validation(format!(
                "tag matrix is {}x{}, expected {}x{}",
                tags.rows(),
                tags.cols(),
                m,
                l
            )));
        }
        for (u, i, a) in answers.iter() {
            if a != 0.0 && a != 1.0 {
                return Err(RipleError::Validation(format!(
                    "answer at ({u}, {i}) is {a}, expected 0 or 1"
                )));
            }
        }
        for (name, matrix) in [("interest", &interests), ("difficulty", &difficulties)] {
            if matrix.rows() != n || matrix.cols() != m {
                return Err(RipleError::Validation(format!(
                    "{name} matrix shape mismatch"
                )));
            }
            for (u, i, v) in matrix.iter() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(RipleError::Validation(format!(
                        "{name} at ({u}, {i}) is {v}, outside [0, 1]"
                    )));
                }
                if !answers.contains(u, i) {
                    return Err(RipleError::Validation(format!(
                        "{name} rating at ({u}, {i}) has no matching answer"
                    )));
                }
            }
        }
        for i in 0..m {
            let nonzero: Vec<f64> = tags.row(i).iter().copied().filter(|&t| t != 0.0).collect();
            if nonzero.is_empty() {
                continue;
            }
            let g = nonzero.len() as f64;
            if nonzero.iter().any(|&t| (t - 1.0 / g).abs() > 1e-12) {
                return Err(RipleError::Validation(format!(
                    "tag row for question {i} is not normalized to 1/g"
                )));
            }
        }
        Ok(Self {
            user_ids,
            question_ids,
            topic_ids,
            answers,
            interests,
            difficulties,
            tags,
        })
    }

    pub fn n_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn n_questions(&self) -> usize {
        self.question_ids.len()
    }

    pub fn n_topics(&self) -> usize {
        self.topic_ids.len()
    }

    pub fn user_ids(&self) -> &IdMap {
        &self.user_ids
    }

    pub fn question_ids(&self) -> &IdMap {
        &self.question_ids
    }

    pub fn topic_ids(&self) -> &IdMap {
        &self.topic_ids
    }

    pub fn answers(&self) -> &SparseMatrix {
        &self.answers
    }

    pub fn interests(&self) -> &SparseMatrix {
        &self.interests
    }

    pub fn difficulties(&self) -> &SparseMatrix {
        &self.difficulties
    }

    pub fn tags(&self) -> &DenseMatrix {
        &self.tags
    }

    /// Attempt indicator matrix S: 1 exactly where an answer exists.
    pub fn attempt_mask(&self) -> SparseMatrix {
        let mut mask = SparseMatrix::new(self.n_users(), self.n_questions());
        for (u, i, _) in self.answers.iter() {
            mask.insert(u, i, 1.0);
        }
        mask
    }

    /// Number of answered questions per user.
    pub fn attempt_counts(&self) -> Vec<usize> {
        self.answers.row_counts()
    }

    /// Topics tagged on a question, as indices.
    pub fn question_topics(&self, question: usize) -> Vec<usize> {
        self.tags
            .row(question)
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    /// Questions with an all-zero tag row; permitted but worth flagging.
    pub fn untagged_questions(&self) -> Vec<usize> {
        (0..self.n_questions())
            .filter(|&i| self.tags.row(i).iter().all(|&t| t == 0.0))
            .collect()
    }
}

fn parse_error(file: &Path, line: u64, message: impl Into<String>) -> RipleError {
    RipleError::Parse {
        file: file.display().to_string(),
        line,
        message: message.into(),
    }
}

#[derive(Debug, Deserialize)]
struct AnswerRow {
    user_id: String,
    question_id: String,
    correct: String,
}

#[derive(Debug, Deserialize)]
struct RatingRow {
    user_id: String,
    question_id: String,
    #[serde(default)]
    interest: String,
    #[serde(default)]
    difficulty: String,
}

#[derive(Debug, Deserialize)]
struct TagRow {
    question_id: String,
    topic_id: String,
}

/// Loads a dataset from the three ingestion CSVs.
///
/// `answers.csv` has header `user_id,question_id,correct`; `ratings.csv`
/// has `user_id,question_id,interest,difficulty` with blank fields meaning
/// unexpressed; `tags.csv` has `question_id,topic_id`. Interest is scaled
/// by 1/5 and difficulty by 1/2.
pub fn load_dataset(answers_file: &Path, ratings_file: &Path, tags_file: &Path) -> Result<InteractionDataset> {
    let mut answer_rows: Vec<(String, String, f64, u64)> = Vec::new();
    let mut reader = csv::Reader::from_path(answers_file)?;
    for (idx, record) in reader.deserialize::<AnswerRow>().enumerate() {
        let line = idx as u64 + 2;
        let row = record.map_err(|e| parse_error(answers_file, line, e.to_string()))?;
        let correct = match row.correct.trim() {
            "0" => 0.0,
            "1" => 1.0,
            other => {
                return Err(RipleError::Validation(format!(
                    "correctness value '{other}' at {}:{line} must be 0 or 1",
                    answers_file.display()
                )))
            }
        };
        answer_rows.push((row.user_id, row.question_id, correct, line));
    }

    let mut rating_rows: Vec<(String, String, Option<f64>, Option<f64>, u64)> = Vec::new();
    let mut reader = csv::Reader::from_path(ratings_file)?;
    for (idx, record) in reader.deserialize::<RatingRow>().enumerate() {
        let line = idx as u64 + 2;
        let row = record.map_err(|e| parse_error(ratings_file, line, e.to_string()))?;
        let interest = parse_scaled(&row.interest, 5, ratings_file, line, "interest")?;
        let difficulty = parse_scaled(&row.difficulty, 2, ratings_file, line, "difficulty")?;
        rating_rows.push((row.user_id, row.question_id, interest, difficulty, line));
    }

    let mut tag_rows: Vec<(String, String)> = Vec::new();
    let mut reader = csv::Reader::from_path(tags_file)?;
    for (idx, record) in reader.deserialize::<TagRow>().enumerate() {
        let line = idx as u64 + 2;
        let row = record.map_err(|e| parse_error(tags_file, line, e.to_string()))?;
        tag_rows.push((row.question_id, row.topic_id));
    }

    let user_ids = IdMap::from_ids(
        answer_rows
            .iter()
            .map(|r| r.0.clone())
            .chain(rating_rows.iter().map(|r| r.0.clone())),
    );
    let question_ids = IdMap::from_ids(
        answer_rows
            .iter()
            .map(|r| r.1.clone())
            .chain(rating_rows.iter().map(|r| r.1.clone()))
            .chain(tag_rows.iter().map(|r| r.0.clone())),
    );
    let topic_ids = IdMap::from_ids(tag_rows.iter().map(|r| r.1.clone()));

    let n = user_ids.len();
    let m = question_ids.len();
    let l = topic_ids.len();

    let mut answers = SparseMatrix::new(n, m);
    for (user, question, correct, line) in &answer_rows {
        let u = user_ids.index_of(user).unwrap();
        let i = question_ids.index_of(question).unwrap();
        if answers.contains(u, i) {
            return Err(RipleError::Validation(format!(
                "duplicate answer for ({user}, {question}) at {}:{line}",
                answers_file.display()
            )));
        }
        answers.insert(u, i, *correct);
    }

    let mut interests = SparseMatrix::new(n, m);
    let mut difficulties = SparseMatrix::new(n, m);
    for (user, question, interest, difficulty, line) in &rating_rows {
        let u = user_ids.index_of(user).unwrap();
        let i = question_ids.index_of(question).unwrap();
        if !answers.contains(u, i) {
            return Err(RipleError::Validation(format!(
                "rating for ({user}, {question}) at {}:{line} has no matching answer",
                ratings_file.display()
            )));
        }
        if let Some(p) = interest {
            interests.insert(u, i, *p);
        }
        if let Some(d) = difficulty {
            difficulties.insert(u, i, *d);
        }
    }

    let mut topic_sets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (question, topic) in &tag_rows {
        let i = question_ids.index_of(question).unwrap();
        let j = topic_ids.index_of(topic).unwrap();
        let set = topic_sets.entry(i).or_default();
        if !set.contains(&j) {
            set.push(j);
        }
    }
    let mut tags = DenseMatrix::zeros(m, l);
    for (i, topics) in &topic_sets {
        let weight = 1.0 / topics.len() as f64;
        for &j in topics {
            tags.set(*i, j, weight);
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

fn parse_scaled(
    raw: &str,
    max: u32,
    file: &Path,
    line: u64,
    field: &str,
) -> Result<Option<f64>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(None);
    }
    let value: u32 = raw
        .parse()
        .map_err(|_| parse_error(file, line, format!("{field} value '{raw}' is not an integer")))?;
    if value > max {
        return Err(RipleError::Validation(format!(
            "{field} value {value} at {}:{line} outside 0..={max}",
            file.display()
        )));
    }
    Ok(Some(f64::from(value) / f64::from(max)))
}

/// Writes the dataset back out in the ingestion CSV formats.
///
/// Interest and difficulty are rescaled to their raw integer ranges; the
/// round-trip through `load_dataset` reproduces the dataset exactly.
pub fn export_dataset(ds: &InteractionDataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut answers = File::create(dir.join("answers.csv"))?;
    writeln!(answers, "user_id,question_id,correct")?;
    for (u, i, a) in ds.answers().iter() {
        writeln!(
            answers,
            "{},{},{}",
            ds.user_ids().id_of(u),
            ds.question_ids().id_of(i),
            a as u8
        )?;
    }

    let mut ratings = File::create(dir.join("ratings.csv"))?;
    writeln!(ratings, "user_id,question_id,interest,difficulty")?;
    for (u, i, _) in ds.answers().iter() {
        let interest = ds.interests().get(u, i);
        let difficulty = ds.difficulties().get(u, i);
        if interest.is_none() && difficulty.is_none() {
            continue;
        }
        let interest = interest
            .map(|p| ((p * 5.0).round() as u32).to_string())
            .unwrap_or_default();
        let difficulty = difficulty
            .map(|d| ((d * 2.0).round() as u32).to_string())
            .unwrap_or_default();
        writeln!(
            ratings,
            "{},{},{},{}",
            ds.user_ids().id_of(u),
            ds.question_ids().id_of(i),
            interest,
            difficulty
        )?;
    }

    let mut tags = File::create(dir.join("tags.csv"))?;
    writeln!(tags, "question_id,topic_id")?;
    for i in 0..ds.n_questions() {
        for j in ds.question_topics(i) {
            writeln!(
                tags,
                "{},{}",
                ds.question_ids().id_of(i),
                ds.topic_ids().id_of(j)
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(dir: &Path, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    fn sample_files(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf, std::path::PathBuf) {
        let answers = write_file(
            dir,
            "answers.csv",
            "user_id,question_id,correct\n0,0,1\n0,1,0\n1,0,0\n",
        );
        let ratings = write_file(
            dir,
            "ratings.csv",
            "user_id,question_id,interest,difficulty\n0,0,5,1\n0,1,0,\n1,0,,2\n",
        );
        let tags = write_file(dir, "tags.csv", "question_id,topic_id\n0,2\n0,7\n1,2\n");
        (answers, ratings, tags)
    }

    #[test]
    fn scaling_matches_raw_ranges() {
        let dir = tempfile::tempdir().unwrap();
        let (a, r, t) = sample_files(dir.path());
        let ds = load_dataset(&a, &r, &t).unwrap();
        // raw interest 5 -> 1.0, raw difficulty 1 -> 0.5
        assert_eq!(ds.interests().get(0, 0), Some(1.0));
        assert_eq!(ds.difficulties().get(0, 0), Some(0.5));
        // raw interest 0 -> 0.0
        assert_eq!(ds.interests().get(0, 1), Some(0.0));
        // blank fields stay unexpressed
        assert_eq!(ds.difficulties().get(0, 1), None);
        assert_eq!(ds.interests().get(1, 0), None);
        assert_eq!(ds.difficulties().get(1, 0), Some(1.0));
    }

    #[test]
    fn tag_rows_are_normalized() {
        let dir = tempfile::tempdir().unwrap();
        let (a, r, t) = sample_files(dir.path());
        let ds = load_dataset(&a, &r, &t).unwrap();
        // question 0 tagged with topics {2, 7} -> weight 0.5 each
        let j2 = ds.topic_ids().index_of("2").unwrap();
        let j7 = ds.topic_ids().index_of("7").unwrap();
        assert_eq!(ds.tags().get(0, j2), 0.5);
        assert_eq!(ds.tags().get(0, j7), 0.5);
        assert_eq!(ds.tags().row(0).iter().sum::<f64>(), 1.0);
        assert_eq!(ds.tags().get(1, j2), 1.0);
    }

    #[test]
    fn rating_without_answer_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(dir.path(), "a.csv", "user_id,question_id,correct\n0,0,1\n");
        let r = write_file(
            dir.path(),
            "r.csv",
            "user_id,question_id,interest,difficulty\n0,1,3,1\n",
        );
        let t = write_file(dir.path(), "t.csv", "question_id,topic_id\n0,0\n1,0\n");
        let err = load_dataset(&a, &r, &t).unwrap_err();
        assert!(matches!(err, RipleError::Validation(_)), "{err}");
    }

    #[test]
    fn duplicate_answer_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(
            dir.path(),
            "a.csv",
            "user_id,question_id,correct\n0,0,1\n0,0,0\n",
        );
        let r = write_file(dir.path(), "r.csv", "user_id,question_id,interest,difficulty\n");
        let t = write_file(dir.path(), "t.csv", "question_id,topic_id\n0,0\n");
        assert!(load_dataset(&a, &r, &t).is_err());
    }

    #[test]
    fn out_of_range_rating_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(dir.path(), "a.csv", "user_id,question_id,correct\n0,0,1\n");
        let r = write_file(
            dir.path(),
            "r.csv",
            "user_id,question_id,interest,difficulty\n0,0,6,1\n",
        );
        let t = write_file(dir.path(), "t.csv", "question_id,topic_id\n0,0\n");
        assert!(load_dataset(&a, &r, &t).is_err());
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(
            dir.path(),
            "a.csv",
            "user_id,question_id,correct\n0,0,1\n0,1,maybe\n",
        );
        let r = write_file(dir.path(), "r.csv", "user_id,question_id,interest,difficulty\n");
        let t = write_file(dir.path(), "t.csv", "question_id,topic_id\n0,0\n1,0\n");
        let err = load_dataset(&a, &r, &t).unwrap_err();
        assert!(err.to_string().contains("maybe"), "{err}");
    }

    #[test]
    fn attempt_mask_mirrors_answer_support() {
        let dir = tempfile::tempdir().unwrap();
        let (a, r, t) = sample_files(dir.path());
        let ds = load_dataset(&a, &r, &t).unwrap();
        let mask = ds.attempt_mask();
        assert_eq!(mask.len(), ds.answers().len());
        for (u, i, v) in mask.iter() {
            assert_eq!(v, 1.0);
            assert!(ds.answers().contains(u, i));
        }
    }

    #[test]
    fn export_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let (a, r, t) = sample_files(dir.path());
        let ds = load_dataset(&a, &r, &t).unwrap();
        let out = dir.path().join("export");
        export_dataset(&ds, &out).unwrap();
        let ds2 = load_dataset(
            &out.join("answers.csv"),
            &out.join("ratings.csv"),
            &out.join("tags.csv"),
        )
        .unwrap();
        assert_eq!(ds, ds2);
    }

    #[test]
    fn string_ids_get_dense_indices() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(
            dir.path(),
            "a.csv",
            "user_id,question_id,correct\nalice,q1,1\nbob,q2,0\n",
        );
        let r = write_file(dir.path(), "r.csv", "user_id,question_id,interest,difficulty\n");
        let t = write_file(dir.path(), "t.csv", "question_id,topic_id\nq1,loops\nq2,arrays\n");
        let ds = load_dataset(&a, &r, &t).unwrap();
        assert_eq!(ds.n_users(), 2);
        assert_eq!(ds.n_questions(), 2);
        assert_eq!(ds.user_ids().index_of("alice"), Some(0));
        assert_eq!(ds.user_ids().index_of("bob"), Some(1));
    }

    #[test]
    fn numeric_ids_infer_max_plus_one() {
        let dir = tempfile::tempdir().unwrap();
        let a = write_file(
            dir.path(),
            "a.csv",
            "user_id,question_id,correct\n0,4,1\n2,1,0\n",
        );
        let r = write_file(dir.path(), "r.csv", "user_id,question_id,interest,difficulty\n");
        let t = write_file(dir.path(), "t.csv", "question_id,topic_id\n4,0\n");
        let ds = load_dataset(&a, &r, &t).unwrap();
        assert_eq!(ds.n_users(), 3);
        assert_eq!(ds.n_questions(), 5);
        assert_eq!(ds.untagged_questions(), vec![0, 1, 2, 3]);
    }
}
