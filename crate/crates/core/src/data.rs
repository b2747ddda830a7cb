//! Per-observation contributions and the matrix estimate built from them.

use nalgebra::{DMatrix, DVector};

use crate::error::{RankError, Result};
use crate::scalar::{from_usize, Real};

/// Per-observation contributions `c_i` whose average is the matrix estimate.
///
/// Stored as one column per observation holding the column-major
/// vectorisation of `c_i`, so weighted sums are a single matrix-vector
/// product.
#[derive(Debug, Clone, PartialEq)]
pub struct Contributions<T: Real> {
    rows: usize,
    cols: usize,
    data: DMatrix<T>,
}

impl<T: Real> Contributions<T> {
    /// Builds from explicit m x k contribution matrices.
    pub fn from_matrices(items: &[DMatrix<T>]) -> Result<Self> {
        let first = items
            .first()
            .ok_or(RankError::InsufficientData { needed: 1, got: 0 })?;
        let (rows, cols) = first.shape();
        let mut data = DMatrix::<T>::zeros(rows * cols, items.len());
        for (i, c) in items.iter().enumerate() {
            if c.shape() != (rows, cols) {
                return Err(RankError::InvalidInput(format!(
                    "contribution {i} is {:?}, expected {:?}",
                    c.shape(),
                    (rows, cols)
                )));
            }
            data.column_mut(i).copy_from_slice(c.as_slice());
        }
        Self::from_columns(rows, cols, data)
    }

    /// Builds `c_i = v_i z_i^T` from paired rows of `v` (n x m) and `z` (n x k).
    pub fn from_pairs(v: &DMatrix<T>, z: &DMatrix<T>) -> Result<Self> {
        let n = v.nrows();
        if z.nrows() != n {
            return Err(RankError::InvalidInput(format!(
                "v has {n} rows but z has {}",
                z.nrows()
            )));
        }
        if n == 0 {
            return Err(RankError::InsufficientData { needed: 1, got: 0 });
        }
        let (m, k) = (v.ncols(), z.ncols());
        let mut data = DMatrix::<T>::zeros(m * k, n);
        for i in 0..n {
            let mut col = data.column_mut(i);
            for b in 0..k {
                let zb = z[(i, b)];
                for a in 0..m {
                    col[b * m + a] = v[(i, a)] * zb;
                }
            }
        }
        Self::from_columns(m, k, data)
    }

    /// Wraps an (m*k) x n matrix whose columns are vectorised contributions.
    pub fn from_columns(rows: usize, cols: usize, data: DMatrix<T>) -> Result<Self> {
        if data.nrows() != rows * cols {
            return Err(RankError::InvalidInput("column length does not match shape".into()));
        }
        if data.ncols() == 0 {
            return Err(RankError::InsufficientData { needed: 1, got: 0 });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(RankError::InvalidInput("non-finite contribution".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn len(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.data.ncols() == 0
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The (m*k) x n matrix of vectorised contributions.
    pub fn columns(&self) -> &DMatrix<T> {
        &self.data
    }

    pub fn matrix(&self, i: usize) -> DMatrix<T> {
        DMatrix::from_column_slice(self.rows, self.cols, self.data.column(i).as_slice())
    }

    /// Vectorised sample mean.
    pub fn mean_vec(&self) -> DVector<T> {
        self.data.column_sum() / from_usize::<T>(self.len())
    }

    pub fn mean(&self) -> DMatrix<T> {
        DMatrix::from_column_slice(self.rows, self.cols, self.mean_vec().as_slice())
    }

    /// Contributions minus their mean, one column per observation.
    pub fn centred(&self) -> DMatrix<T> {
        let mean = self.mean_vec();
        let mut out = self.data.clone();
        for mut col in out.column_iter_mut() {
            col -= &mean;
        }
        out
    }

    /// Root-n estimate with the sample mean as the matrix.
    pub fn estimate(&self) -> Result<MatrixEstimate<T>> {
        let n = self.len();
        MatrixEstimate::new(self.mean(), from_usize::<T>(n).sqrt(), n)
    }
}

/// A matrix estimate together with its convergence rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixEstimate<T: Real> {
    pub values: DMatrix<T>,
    /// Rate `tau_n` at which the estimate converges; `sqrt(n)` for sample means.
    pub rate: T,
    pub n: usize,
}

impl<T: Real> MatrixEstimate<T> {
    pub fn new(values: DMatrix<T>, rate: T, n: usize) -> Result<Self> {
        let (m, k) = values.shape();
        if m < k {
            return Err(RankError::Dimension { rows: m, cols: k });
        }
        if k == 0 {
            return Err(RankError::InvalidInput("estimate has no columns".into()));
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(RankError::InvalidInput("estimate has non-finite entries".into()));
        }
        if !(rate > T::zero()) || !rate.is_finite() {
            return Err(RankError::InvalidArgument("rate must be positive and finite".into()));
        }
        Ok(Self { values, rate, n })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }
}
