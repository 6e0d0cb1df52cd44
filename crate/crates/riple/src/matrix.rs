//! Small dense and sparse matrix types shared by the pipeline.
//!
//! The sparse type keeps entries in a `BTreeMap` so that iteration order is
//! deterministic, which the seeded training loops and serialized outputs
//! rely on.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Sparse matrix with `f64` entries; absent cells are "unobserved", not zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), f64>,
}

impl SparseMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.entries.get(&(row, col)).copied()
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        self.entries.contains_key(&(row, col))
    }

    /// Inserts an entry, replacing any previous value at that cell.
    ///
    /// Panics if the cell is out of bounds; callers validate indices first.
    pub fn insert(&mut self, row: usize, col: usize, value: f64) {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.entries.insert((row, col), value);
    }

    /// Iterates entries in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    /// Observed cells as a vector, row-major order.
    pub fn support(&self) -> Vec<(usize, usize)> {
        self.entries.keys().copied().collect()
    }

    /// Entries of one row as `(col, value)` pairs, ascending by column.
    pub fn row(&self, row: usize) -> Vec<(usize, f64)> {
        self.entries
            .range((row, 0)..(row + 1, 0))
            .map(|(&(_, c), &v)| (c, v))
            .collect()
    }

    /// Entries of one column as `(row, value)` pairs, ascending by row.
    pub fn column(&self, col: usize) -> Vec<(usize, f64)> {
        self.entries
            .iter()
            .filter(|(&(_, c), _)| c == col)
            .map(|(&(r, _), &v)| (r, v))
            .collect()
    }

    /// Mean of observed entries in each column; 0.0 for empty columns.
    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        let mut counts = vec![0usize; self.cols];
        for (_, c, v) in self.iter() {
            sums[c] += v;
            counts[c] += 1;
        }
        sums.iter()
            .zip(&counts)
            .map(|(&s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
            .collect()
    }

    /// Mean of observed entries in each row; 0.0 for empty rows.
    pub fn row_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.rows];
        let mut counts = vec![0usize; self.rows];
        for (r, _, v) in self.iter() {
            sums[r] += v;
            counts[r] += 1;
        }
        sums.iter()
            .zip(&counts)
            .map(|(&s, &n)| if n > 0 { s / n as f64 } else { 0.0 })
            .collect()
    }

    /// Mean of all observed entries; 0.0 when empty.
    pub fn mean(&self) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        self.entries.values().sum::<f64>() / self.entries.len() as f64
    }

    /// Number of observed entries in each row.
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.rows];
        for (r, _, _) in self.iter() {
            counts[r] += 1;
        }
        counts
    }

    /// New matrix keeping only the given cells (cells absent here are skipped).
    pub fn restrict(&self, cells: &[(usize, usize)]) -> SparseMatrix {
        let mut out = SparseMatrix::new(self.rows, self.cols);
        for &(r, c) in cells {
            if let Some(v) = self.get(r, c) {
                out.insert(r, c, v);
            }
        }
        out
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == n_cols), "ragged rows");
        Self {
            rows: n_rows,
            cols: n_cols,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// `self * other`, plain triple loop; the matrices here are small.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// `self * other^T`.
    pub fn matmul_transpose(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.cols, "dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += self.get(i, k) * other.get(j, k);
                }
                out.set(i, j, acc);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_row_and_column_views() {
        let mut m = SparseMatrix::new(3, 3);
        m.insert(0, 1, 1.0);
        m.insert(0, 2, 2.0);
        m.insert(2, 1, 3.0);
        assert_eq!(m.row(0), vec![(1, 1.0), (2, 2.0)]);
        assert_eq!(m.row(1), vec![]);
        assert_eq!(m.column(1), vec![(0, 1.0), (2, 3.0)]);
    }

    #[test]
    fn column_means_skip_empty_columns() {
        let mut m = SparseMatrix::new(2, 3);
        m.insert(0, 0, 0.2);
        m.insert(1, 0, 0.4);
        let means = m.column_means();
        assert!((means[0] - 0.3).abs() < 1e-12);
        assert_eq!(means[1], 0.0);
        assert_eq!(means[2], 0.0);
    }

    #[test]
    fn dense_matmul_hand_check() {
        let a = DenseMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        let b = DenseMatrix::from_rows(vec![vec![5.0, 6.0], vec![7.0, 8.0]]);
        let c = a.matmul(&b);
        assert_eq!(c.get(0, 0), 19.0);
        assert_eq!(c.get(1, 1), 50.0);
        let d = a.matmul_transpose(&b);
        assert_eq!(d.get(0, 0), 17.0);
    }
}
