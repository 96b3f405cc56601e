//! Dense and sparse value carriers shared by every other module.
//!
//! All arithmetic is `f64`. Matrix-valued points (nuclear-norm problems) travel
//! through the solver as flattened row-major [`Vector`]s so boosting and the
//! main loop stay agnostic of the domain shape.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// A finite vector of `f64` values.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Wraps `values`, rejecting NaN and infinite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite entry at index {i}")));
        }
        Ok(Vector(values))
    }

    pub fn zeros(n: usize) -> Self {
        Vector(vec![0.0; n])
    }

    /// Unit basis vector scaled by `scale`.
    pub fn basis(n: usize, i: usize, scale: f64) -> Self {
        let mut v = Self::zeros(n);
        v.0[i] = scale;
        v
    }

    pub(crate) fn from_vec(values: Vec<f64>) -> Self {
        Vector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|v| c * v).collect())
    }

    /// `self - other`, elementwise.
    pub fn sub(&self, other: &[f64]) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Vector(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &[f64]) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += alpha * b;
        }
    }

    pub fn fill(&mut self, value: f64) {
        self.0.iter_mut().for_each(|v| *v = value);
    }
}

impl Deref for Vector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(values: Vec<f64>) -> Result<Self> {
        Vector::new(values)
    }
}

/// Inner product, checking lengths.
pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dim(a.len(), b.len()));
    }
    Ok(dot_unchecked(a, b))
}

#[inline]
pub(crate) fn dot_unchecked(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot_unchecked(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

/// Euclidean distance without allocating the difference.
pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Compressed sparse rows. Column indices are strictly increasing per row.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRowMatrix {
    cols: usize,
    row_ptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseRowMatrix {
    /// Builds from per-row `(column, value)` lists.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (r, row) in rows.into_iter().enumerate() {
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if c >= cols {
                    return Err(Error::Domain(format!(
                        "row {r}: column {c} out of range for {cols} columns"
                    )));
                }
                if last.is_some_and(|l| c <= l) {
                    return Err(Error::Domain(format!(
                        "row {r}: column indices not strictly increasing at {c}"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::Domain(format!("row {r}: non-finite value")));
                }
                last = Some(c);
                indices.push(c);
                values.push(v);
            }
            row_ptr.push(indices.len());
        }
        Ok(SparseRowMatrix {
            cols,
            row_ptr,
            indices,
            values,
        })
    }

    pub fn from_dense(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(rows * cols, data.len()));
        }
        let lists = (0..rows)
            .map(|r| {
                (0..cols)
                    .filter_map(|c| {
                        let v = data[r * cols + c];
                        (v != 0.0).then_some((c, v))
                    })
                    .collect()
            })
            .collect();
        Self::from_rows(cols, lists)
    }

    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.indices[lo..hi], &self.values[lo..hi])
    }

    #[inline]
    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter().zip(val).map(|(&c, v)| v * x[c]).sum()
    }

    /// `out += alpha * a_i`.
    #[inline]
    pub fn add_row_into(&self, i: usize, alpha: f64, out: &mut [f64]) {
        let (idx, val) = self.row(i);
        for (&c, v) in idx.iter().zip(val) {
            out[c] += alpha * v;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.cols {
            return Err(Error::dim(self.cols, x.len()));
        }
        Ok(Vector::from_vec(
            (0..self.rows()).map(|i| self.row_dot(i, x)).collect(),
        ))
    }

    /// `Aᵀ y`.
    pub fn transpose_mul_vec(&self, y: &[f64]) -> Result<Vector> {
        if y.len() != self.rows() {
            return Err(Error::dim(self.rows(), y.len()));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            self.add_row_into(i, yi, &mut out);
        }
        Ok(Vector::from_vec(out))
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.cols];
        for (&c, v) in self.indices.iter().zip(&self.values) {
            sq[c] += v * v;
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows(), self.cols);
        for i in 0..self.rows() {
            let (idx, val) = self.row(i);
            for (&c, &v) in idx.iter().zip(val) {
                m.set(i, c, v);
            }
        }
        m
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(rows * cols, data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite matrix entry".into()));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vector(self) -> Vector {
        Vector::from_vec(self.data)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn frobenius(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        mat_vec(&self.data, self.rows, self.cols, x)
    }

    pub fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        mat_t_vec(&self.data, self.rows, self.cols, y)
    }
}

pub(crate) fn mat_vec(data: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|r| dot_unchecked(&data[r * cols..(r + 1) * cols], x))
        .collect()
}

pub(crate) fn mat_t_vec(data: &[f64], rows: usize, cols: usize, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; cols];
    for (r, &yr) in y.iter().enumerate().take(rows) {
        if yr == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(&data[r * cols..(r + 1) * cols]) {
            *o += yr * a;
        }
    }
    out
}
