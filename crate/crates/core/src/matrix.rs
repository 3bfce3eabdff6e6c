//! The two-parameter family `M(a, b) = b·1 + (a − b)·I` of `n × n` matrices
//! (diagonal `a`, every off-diagonal entry `b`).
//!
//! The family is closed under products and inverses, so everything here is
//! O(1) on `(a, b)` and O(n) when applied to a vector. It is generic over
//! [`num_traits::Num`], so it also runs on exact rationals.

use num_traits::{FromPrimitive, Num};

use crate::error::{check_len, Error, Result, Singularity};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredMatrix<T> {
    n: usize,
    diag: T,
    off: T,
}

impl<T> StructuredMatrix<T>
where
    T: Num + Copy + FromPrimitive,
{
    /// # Panics
    /// If `n < 2`.
    pub fn new(n: usize, diag: T, off: T) -> Self {
        assert!(n >= 2, "structured matrices need n >= 2, got {n}");
        Self { n, diag, off }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, T::one(), T::zero())
    }

    /// The all-ones matrix.
    pub fn ones(n: usize) -> Self {
        Self::new(n, T::one(), T::one())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn diag(&self) -> T {
        self.diag
    }

    pub fn off(&self) -> T {
        self.off
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        if i == j {
            self.diag
        } else {
            self.off
        }
    }

    fn count(k: usize) -> T {
        T::from_usize(k).expect("dimension representable")
    }

    fn same_n(&self, other: &Self) -> Result<()> {
        check_len(self.n, other.n)
    }

    pub fn scale(&self, k: T) -> Self {
        Self::new(self.n, k * self.diag, k * self.off)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_n(other)?;
        Ok(Self::new(self.n, self.diag + other.diag, self.off + other.off))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_n(other)?;
        Ok(Self::new(self.n, self.diag - other.diag, self.off - other.off))
    }

    /// `M(a,b)·M(a',b') = M(aa' + (n−1)bb', ab' + a'b + (n−2)bb')`.
    /// The product is commutative within the family.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_n(other)?;
        let (a, b, a2, b2) = (self.diag, self.off, other.diag, other.off);
        let n = Self::count(self.n);
        let one = T::one();
        let two = one + one;
        Ok(Self::new(
            self.n,
            a * a2 + (n - one) * b * b2,
            a * b2 + a2 * b + (n - two) * b * b2,
        ))
    }

    /// `M(a,b)⁻¹ = M(a + (n−2)b, −b) / ((a − b)(a + (n−1)b))`.
    ///
    /// The two invertibility conditions are tested exactly.
    pub fn inverse(&self) -> Result<Self> {
        let (a, b) = (self.diag, self.off);
        let n = Self::count(self.n);
        let one = T::one();
        if a == b {
            return Err(Error::Singular(Singularity::DiagonalEqualsOffDiagonal));
        }
        let ones_eigen = a + (n - one) * b;
        if ones_eigen == T::zero() {
            return Err(Error::Singular(Singularity::OnesInKernel));
        }
        let det = (a - b) * ones_eigen;
        Ok(Self::new(
            self.n,
            (a + (n - one - one) * b) / det,
            (T::zero() - b) / det,
        ))
    }

    /// `A·v` in one pass over `v`.
    pub fn apply(&self, v: &[T]) -> Result<Vec<T>> {
        check_len(self.n, v.len())?;
        let mut out = vec![T::zero(); self.n];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    /// Like [`apply`](Self::apply) but into a caller-owned buffer.
    pub fn apply_into(&self, v: &[T], out: &mut [T]) {
        debug_assert_eq!(v.len(), self.n);
        debug_assert_eq!(out.len(), self.n);
        let total = v.iter().fold(T::zero(), |acc, &x| acc + x);
        let shared = self.off * total;
        let own = self.diag - self.off;
        for (o, &x) in out.iter_mut().zip(v) {
            *o = shared + own * x;
        }
    }
}

/// `M_n = M(−1, 1/(n−1))`, the map from positions to stretches.
pub fn mn<T>(n: usize) -> Result<StructuredMatrix<T>>
where
    T: Num + Copy + FromPrimitive,
{
    if n < 2 {
        return Err(Error::Argument(format!("M_n needs n >= 2, got {n}")));
    }
    let others = T::from_usize(n - 1).expect("dimension representable");
    Ok(StructuredMatrix::new(n, T::zero() - T::one(), T::one() / others))
}
