//! Dense row-major matrices and labelled datasets.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::features::FeatureSchema;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Panics if `data.len() != rows * cols`.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix::new(rows, cols, vec![0.0; rows * cols])
    }

    /// Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            assert_eq!(row.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(row.as_ref());
        }
        Matrix::new(rows.len(), cols, data)
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.get(i, j))
    }

    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix::new(indices.len(), self.cols, data)
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }
}

/// Feature matrix plus labels. Entries are never missing: imputation
/// happens before a dataset is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<Arc<FeatureSchema>>,
    /// Optional per-row identifiers (image or collection ids).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub row_ids: Vec<String>,
}

impl Dataset {
    /// Panics if `x` and `y` disagree on row count.
    pub fn new(x: Matrix, y: Vec<f64>) -> Self {
        assert_eq!(x.n_rows(), y.len(), "label count must match row count");
        Dataset {
            x,
            y,
            schema: None,
            row_ids: Vec::new(),
        }
    }

    pub fn with_schema(mut self, schema: Arc<FeatureSchema>) -> Self {
        self.schema = Some(schema);
        self
    }

    pub fn n_rows(&self) -> usize {
        self.x.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.x.n_cols()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            schema: self.schema.clone(),
            row_ids: if self.row_ids.is_empty() {
                Vec::new()
            } else {
                indices.iter().map(|&i| self.row_ids[i].clone()).collect()
            },
        }
    }

    /// True when every label is exactly 0 or 1.
    pub fn has_binary_labels(&self) -> bool {
        self.y.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Two datasets are compatible when their schemas (if any) agree and
    /// they have the same column count.
    pub fn same_schema(&self, other: &Dataset) -> bool {
        self.n_cols() == other.n_cols()
            && match (&self.schema, &other.schema) {
                (Some(a), Some(b)) => a == b,
                (None, None) => true,
                _ => false,
            }
    }
}

/// Per-column mean and (population) standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl ColumnStats {
    pub fn compute(x: &Matrix) -> Self {
        let n = x.n_rows().max(1) as f64;
        let mut means = vec![0.0; x.n_cols()];
        for row in x.iter_rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut stds = vec![0.0; x.n_cols()];
        for row in x.iter_rows() {
            for ((s, v), m) in stds.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        stds.iter_mut().for_each(|s| *s = (*s / n).sqrt());
        ColumnStats { means, stds }
    }

    /// Zero-mean, unit-variance copy of `x`. Constant columns are only centered.
    pub fn standardize(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..x.n_rows() {
            for j in 0..x.n_cols() {
                let scale = if self.stds[j] > 0.0 { self.stds[j] } else { 1.0 };
                out.set(i, j, (x.get(i, j) - self.means[j]) / scale);
            }
        }
        out
    }
}
