//! Small dense square matrices for the general Kalman filter.

use crate::error::{check_len, Error, Result};
use crate::matrix::StructuredMatrix;
use crate::Scalar;

/// Row-major `n × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let data = (0..n * n).map(|k| f(k / n, k % n)).collect();
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            check_len(n, row.len())?;
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn from_structured(m: &StructuredMatrix<T>) -> Self {
        Self::from_fn(m.n(), |i, j| m.entry(i, j))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&x| k * x).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        check_len(self.n, other.n)?;
        Ok(Self::from_fn(self.n, |i, j| self.get(i, j) + other.get(i, j)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_len(self.n, other.n)?;
        Ok(Self::from_fn(self.n, |i, j| self.get(i, j) - other.get(i, j)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        check_len(self.n, other.n)?;
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        check_len(self.n, v.len())?;
        Ok((0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect())
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|x| x.abs()).fold(T::zero(), T::max)
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Solves `self · X = rhs` by LU factorization with partial pivoting.
    ///
    /// A pivot below `n · ε · max|a_ij|` is treated as singular.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        check_len(self.n, rhs.n)?;
        let n = self.n;
        let mut lu = self.clone();
        let mut x = rhs.clone();
        let tiny = T::count(n) * T::epsilon() * self.max_abs();
        for c in 0..n {
            let p = (c..n)
                .max_by(|&i, &j| {
                    lu.get(i, c)
                        .abs()
                        .partial_cmp(&lu.get(j, c).abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap();
            let pivot = lu.get(p, c);
            if pivot.is_nan() || pivot.abs() <= tiny {
                return Err(Error::Numerical(format!(
                    "singular matrix: pivot {pivot:e} in column {c}"
                )));
            }
            if p != c {
                lu.swap_rows(p, c);
                x.swap_rows(p, c);
            }
            for r in c + 1..n {
                let f = lu.get(r, c) / pivot;
                if f == T::zero() {
                    continue;
                }
                for k in c..n {
                    lu.set(r, k, lu.get(r, k) - f * lu.get(c, k));
                }
                for k in 0..n {
                    x.set(r, k, x.get(r, k) - f * x.get(c, k));
                }
            }
        }
        for c in (0..n).rev() {
            let pivot = lu.get(c, c);
            for k in 0..n {
                let mut v = x.get(c, k);
                for j in c + 1..n {
                    v = v - lu.get(c, j) * x.get(j, k);
                }
                x.set(c, k, v / pivot);
            }
        }
        Ok(x)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for k in 0..self.n {
            self.data.swap(a * self.n + k, b * self.n + k);
        }
    }
}
