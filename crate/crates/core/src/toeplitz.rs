//! Upper triangular Toeplitz matrices stored as coefficient vectors.
//!
//! `ToeplitzCoeffs { g }` stands for `g_1 J^{n-1} + ... + g_{n-1} J + g_n Id`,
//! with `g_n` on the diagonal and `g_1` in the top-right corner. The same
//! matrix is the truncated series `g_n + g_{n-1} t + ... + g_1 t^{n-1}`, with
//! `J` playing the role of `t`; products and matrix functions are computed
//! on that series.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::linalg::Matrix;
use crate::series::{Scalar, TruncatedSeries};

/// Default margin for `|g_{n-1}| > 0`.
pub const REGULARITY_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzCoeffs<T = f64> {
    g: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlRegularity {
    pub regular: bool,
    /// The value of `g_{n-1}`.
    pub witness: f64,
}

impl<T: Scalar> ToeplitzCoeffs<T> {
    /// `g[0]` is `g_1` (corner), `g[n-1]` is `g_n` (diagonal).
    pub fn new(g: Vec<T>) -> Self {
        assert!(!g.is_empty(), "dimension must be positive");
        Self { g }
    }

    pub fn n(&self) -> usize {
        self.g.len()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.g
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.g
    }

    /// `g_i`, one-based.
    pub fn g(&self, i: usize) -> &T {
        &self.g[i - 1]
    }

    pub fn diagonal(&self) -> &T {
        &self.g[self.n() - 1]
    }

    /// As the series `g_n + g_{n-1} t + ... + g_1 t^{n-1}`.
    pub fn to_series(&self) -> TruncatedSeries<T> {
        TruncatedSeries::from_coeffs(self.g.iter().rev().cloned().collect())
    }

    pub fn from_series(s: TruncatedSeries<T>) -> Self {
        let mut g = s.into_coeffs();
        g.reverse();
        Self { g }
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_series(self.to_series().mul(&other.to_series())?))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let g = self
            .g
            .iter()
            .zip(&other.g)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { g })
    }

    /// Multiplication by `J^k`.
    pub fn shift(&self, k: usize) -> Self {
        let n = self.n();
        let zero = self.g[0].lift(0.0);
        let g = (0..n)
            .map(|i| if i + k < n { self.g[i + k].clone() } else { zero.clone() })
            .collect();
        Self { g }
    }
}

impl ToeplitzCoeffs<f64> {
    pub fn zero(n: usize) -> Self {
        Self::new(alloc::vec![0.0; n])
    }

    pub fn identity(n: usize) -> Self {
        let mut g = alloc::vec![0.0; n];
        g[n - 1] = 1.0;
        Self::new(g)
    }

    /// The nilpotent Jordan block `J` (ones on the superdiagonal).
    pub fn nilpotent_block(n: usize) -> Self {
        assert!(n >= 2, "J needs dimension at least 2");
        let mut g = alloc::vec![0.0; n];
        g[n - 2] = 1.0;
        Self::new(g)
    }

    /// Entry `(i, j)` equals `g_{n-(j-i)}` above the diagonal, zero below.
    pub fn to_dense(&self) -> Matrix {
        let n = self.n();
        Matrix::from_fn(n, |i, j| if j >= i { self.g[n - 1 - (j - i)] } else { 0.0 })
    }

    /// Reads the first row of a matrix; the caller is responsible for the
    /// matrix being Toeplitz.
    pub fn from_dense_first_row(m: &Matrix) -> Self {
        let n = m.n();
        Self::new((0..n).map(|i| m[(0, n - 1 - i)]).collect())
    }

    pub fn regularity(&self, threshold: f64) -> GlRegularity {
        let witness = if self.n() >= 2 { self.g[self.n() - 2] } else { 0.0 };
        GlRegularity {
            regular: libm::fabs(witness) > threshold,
            witness,
        }
    }
}

pub fn toeplitz_mul<T: Scalar>(a: &ToeplitzCoeffs<T>, b: &ToeplitzCoeffs<T>) -> Result<ToeplitzCoeffs<T>> {
    a.mul(b)
}

/// `P = u^1 J^{n-1} + ... + u^n Id` and
/// `Q = (n-1) u^1 J^{n-2} + ... + 2 u^{n-2} J + u^{n-1} Id`.
pub fn build_pq<T: Scalar>(n: usize, u: &[T]) -> Result<(ToeplitzCoeffs<T>, ToeplitzCoeffs<T>)> {
    if u.len() != n || n == 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: u.len(),
        });
    }
    let p = ToeplitzCoeffs::new(u.to_vec());
    let mut q = Vec::with_capacity(n);
    q.push(u[0].lift(0.0));
    for i in 2..=n {
        // Q.g_i = (n + 1 - i) u^{i-1}
        q.push(u[i - 2].scale((n + 1 - i) as f64));
    }
    Ok((p, ToeplitzCoeffs::new(q)))
}

/// `f(P)` or `f(P, Q)`: the coefficients of `f(p(t), q(t))` up to `t^{n-1}`.
pub fn matrix_function<T: Scalar>(
    f: &Expression,
    p: &ToeplitzCoeffs<T>,
    q: Option<&ToeplitzCoeffs<T>>,
) -> Result<ToeplitzCoeffs<T>> {
    let expected = if q.is_some() { 2 } else { 1 };
    if f.arity() != expected {
        return Err(Error::ArityMismatch {
            expected,
            found: f.arity(),
        });
    }
    let value = match q {
        Some(q) => {
            p.check_dim(q)?;
            f.eval(&[p.to_series(), q.to_series()])?
        }
        None => f.eval(&[p.to_series()])?,
    };
    Ok(ToeplitzCoeffs::from_series(value))
}
