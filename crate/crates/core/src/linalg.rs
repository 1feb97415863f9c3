//! Small dense linear algebra: column-major matrices and Cholesky factors.

use serde::{Deserialize, Serialize};

use crate::error::{NextDoorError, Result};
use crate::scalar::Scalar;

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    nrows: usize,
    ncols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Matrix { nrows, ncols, data: vec![T::zero(); nrows * ncols] }
    }

    /// Builds from column-major storage.
    pub fn from_col_major(nrows: usize, ncols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(NextDoorError::invalid(format!(
                "matrix storage has {} entries, expected {}x{}",
                data.len(),
                nrows,
                ncols
            )));
        }
        Ok(Matrix { nrows, ncols, data })
    }

    pub fn from_columns(nrows: usize, columns: &[Vec<T>]) -> Result<Self> {
        let mut data = Vec::with_capacity(nrows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != nrows {
                return Err(NextDoorError::invalid(format!("column {j} has length {}, expected {nrows}", c.len())));
            }
            data.extend_from_slice(c);
        }
        Ok(Matrix { nrows, ncols: columns.len(), data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Matrix::zeros(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(NextDoorError::invalid(format!("row {i} has length {}, expected {ncols}", r.len())));
            }
            for (j, &v) in r.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[j * self.nrows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[j * self.nrows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.nrows..(j + 1) * self.nrows]
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.ncols).map(|j| self.get(i, j)).collect()
    }

    pub fn as_col_major(&self) -> &[T] {
        &self.data
    }

    /// New matrix holding the given rows (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * self.ncols);
        for j in 0..self.ncols {
            let c = self.col(j);
            data.extend(rows.iter().map(|&i| c[i]));
        }
        Matrix { nrows: rows.len(), ncols: self.ncols, data }
    }

    pub fn select_cols(&self, cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(cols.len() * self.nrows);
        for &j in cols {
            data.extend_from_slice(self.col(j));
        }
        Matrix { nrows: self.nrows, ncols: cols.len(), data }
    }

    pub fn column_means(&self) -> Vec<T> {
        (0..self.ncols).map(|j| crate::scalar::mean(self.col(j))).collect()
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.nrows == self.ncols
            && (0..self.nrows).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn trace(&self) -> T {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).sum()
    }
}

/// Lower-triangular Cholesky factor, stored row-major and packed.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    dim: usize,
    /// Row `i` occupies `packed[i*(i+1)/2 ..][..=i]`.
    packed: Vec<T>,
    /// Diagonal jitter that had to be added to factor the matrix.
    pub jitter: T,
}

impl<T: Scalar> Cholesky<T> {
    /// Strict factorization of a symmetric positive definite matrix.
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        Self::factor_shifted(a, T::zero())
    }

    fn factor_shifted(a: &Matrix<T>, shift: T) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(NextDoorError::invalid("cholesky of non-square matrix"));
        }
        let mut packed = vec![T::zero(); n * (n + 1) / 2];
        for i in 0..n {
            let ri = i * (i + 1) / 2;
            for j in 0..=i {
                let rj = j * (j + 1) / 2;
                let mut s = a.get(i, j);
                if i == j {
                    s += shift;
                }
                for k in 0..j {
                    s -= packed[ri + k] * packed[rj + k];
                }
                if i == j {
                    if !(s > T::zero()) || !s.is_finite() {
                        return Err(NextDoorError::Covariance(format!("non-positive pivot {s} at index {i}")));
                    }
                    packed[ri + i] = s.sqrt();
                } else {
                    packed[ri + j] = s / packed[rj + j];
                }
            }
        }
        Ok(Cholesky { dim: n, packed, jitter: shift })
    }

    /// Factorization with jitter escalation for numerically rank-deficient
    /// PSD input: adds `1e-12 * trace / dim` to the diagonal, growing tenfold
    /// up to three times. An all-zero matrix yields the zero factor.
    pub fn factor_psd(a: &Matrix<T>) -> Result<Self> {
        if let Ok(c) = Self::factor(a) {
            return Ok(c);
        }
        let n = a.nrows();
        let trace = a.trace();
        if trace <= T::zero() {
            if a.as_col_major().iter().all(|v| v.is_zero()) {
                return Ok(Cholesky { dim: n, packed: vec![T::zero(); n * (n + 1) / 2], jitter: T::zero() });
            }
            return Err(NextDoorError::Covariance("matrix has non-positive trace".into()));
        }
        let mut jitter = (T::lit(1e-12) * trace / T::from_usize_lossy(n)).max(T::min_positive_value());
        for _ in 0..4 {
            if let Ok(c) = Self::factor_shifted(a, jitter) {
                return Ok(c);
            }
            jitter *= T::lit(10.0);
        }
        Err(NextDoorError::Covariance(format!("matrix not positive semi-definite even after jitter {jitter}")))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        let start = i * (i + 1) / 2;
        &self.packed[start..=start + i]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if j > i {
            T::zero()
        } else {
            self.row(i)[j]
        }
    }

    /// `(L xi)_i`, which only reads `xi[..=i]`.
    #[inline]
    pub fn mul_row(&self, i: usize, xi: &[T]) -> T {
        crate::scalar::dot(self.row(i), &xi[..=i])
    }

    pub fn mul_vec(&self, xi: &[T]) -> Vec<T> {
        (0..self.dim).map(|i| self.mul_row(i, xi)).collect()
    }

    /// Solves `L L^T x = b`.
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim;
        let mut y = b.to_vec();
        for i in 0..n {
            let r = self.row(i);
            let mut s = y[i];
            for k in 0..i {
                s -= r[k] * y[k];
            }
            y[i] = s / r[i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.get(k, i) * y[k];
            }
            y[i] = s / self.get(i, i);
        }
        y
    }
}
