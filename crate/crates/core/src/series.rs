//! Truncated univariate power series of a fixed order.
//!
//! A [`TruncatedSeries`] keeps the coefficients `c_0 .. c_{n-1}` of
//! `c_0 + c_1 t + ... + c_{n-1} t^{n-1}`; every product drops the terms with
//! `t^k`, `k >= n`. The coefficient type is itself a [`Scalar`], so series
//! nest: a series whose coefficients are order-2 series carries one
//! first-derivative direction through a whole matrix-function evaluation.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Debug;

use crate::error::{Error, Result};

/// Constant terms with magnitude at or below this value are treated as zero
/// by division, `log` and `sqrt`.
pub const UNIT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementary {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Powi(u32),
}

impl Elementary {
    pub fn name(self) -> &'static str {
        match self {
            Elementary::Exp => "exp",
            Elementary::Log => "log",
            Elementary::Sin => "sin",
            Elementary::Cos => "cos",
            Elementary::Sqrt => "sqrt",
            Elementary::Powi(_) => "powi",
        }
    }
}

/// A commutative ring with the elementary functions the expression language
/// needs. Implemented by `f64` and by [`TruncatedSeries`] over any scalar.
pub trait Scalar: Clone + Debug {
    /// A constant with the same shape (order, nesting) as `self`.
    fn lift(&self, c: f64) -> Self;
    /// The real part: the constant term, recursively.
    fn constant_part(&self) -> f64;
    fn arith(&self, op: ArithOp, rhs: &Self) -> Result<Self>;
    fn apply(&self, func: Elementary) -> Result<Self>;
    fn negate(&self) -> Self;
    fn scale(&self, c: f64) -> Self;

    fn add(&self, rhs: &Self) -> Result<Self> {
        self.arith(ArithOp::Add, rhs)
    }
    fn sub(&self, rhs: &Self) -> Result<Self> {
        self.arith(ArithOp::Sub, rhs)
    }
    fn mul(&self, rhs: &Self) -> Result<Self> {
        self.arith(ArithOp::Mul, rhs)
    }
    fn div(&self, rhs: &Self) -> Result<Self> {
        self.arith(ArithOp::Div, rhs)
    }
}

fn check_domain(func: Elementary, constant: f64) -> Result<()> {
    match func {
        Elementary::Log | Elementary::Sqrt if !(constant > UNIT_THRESHOLD) => {
            Err(Error::DomainViolation {
                function: func.name(),
                constant,
            })
        }
        _ => Ok(()),
    }
}

/// `x^k` by repeated squaring; exact for polynomial inputs.
fn powi_by_squaring<S: Scalar>(x: &S, mut k: u32) -> Result<S> {
    let mut result = x.lift(1.0);
    let mut base = x.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = result.mul(&base)?;
        }
        k >>= 1;
        if k > 0 {
            base = base.mul(&base)?;
        }
    }
    Ok(result)
}

impl Scalar for f64 {
    fn lift(&self, c: f64) -> Self {
        c
    }

    fn constant_part(&self) -> f64 {
        *self
    }

    fn arith(&self, op: ArithOp, rhs: &Self) -> Result<Self> {
        Ok(match op {
            ArithOp::Add => self + rhs,
            ArithOp::Sub => self - rhs,
            ArithOp::Mul => self * rhs,
            ArithOp::Div => {
                if libm::fabs(*rhs) <= UNIT_THRESHOLD {
                    return Err(Error::NonUnitDivisor { constant: *rhs });
                }
                self / rhs
            }
        })
    }

    fn apply(&self, func: Elementary) -> Result<Self> {
        check_domain(func, *self)?;
        Ok(match func {
            Elementary::Exp => libm::exp(*self),
            Elementary::Log => libm::log(*self),
            Elementary::Sin => libm::sin(*self),
            Elementary::Cos => libm::cos(*self),
            Elementary::Sqrt => libm::sqrt(*self),
            Elementary::Powi(k) => return powi_by_squaring(self, k),
        })
    }

    fn negate(&self) -> Self {
        -self
    }

    fn scale(&self, c: f64) -> Self {
        self * c
    }
}

/// `c_0 + c_1 t + ... + c_{n-1} t^{n-1}` modulo `t^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<T = f64> {
    coeffs: Vec<T>,
}

impl TruncatedSeries<f64> {
    /// Validated constructor for real coefficients.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidSeries);
        }
        Ok(Self { coeffs })
    }

    pub fn constant(order: usize, c: f64) -> Self {
        assert!(order > 0, "series order must be positive");
        let mut coeffs = vec![0.0; order];
        coeffs[0] = c;
        Self { coeffs }
    }
}

impl<T: Scalar> TruncatedSeries<T> {
    /// Builds a series from coefficients without validation. Panics on an
    /// empty vector.
    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "series order must be positive");
        Self { coeffs }
    }

    /// The jet `x0 + t` of the given order.
    pub fn variable(order: usize, x0: T) -> Self {
        assert!(order > 0, "series order must be positive");
        let mut coeffs = vec![x0.lift(0.0); order];
        if order > 1 {
            coeffs[1] = x0.lift(1.0);
        }
        coeffs[0] = x0;
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    /// Coefficient of `t^k`.
    pub fn coeff(&self, k: usize) -> &T {
        &self.coeffs[k]
    }

    fn check_order(&self, rhs: &Self) -> Result<()> {
        if self.order() != rhs.order() {
            return Err(Error::OrderMismatch {
                left: self.order(),
                right: rhs.order(),
            });
        }
        Ok(())
    }

    fn zip_with(&self, rhs: &Self, op: ArithOp) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a.arith(op, b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coeffs })
    }

    /// Sums `a_j b_{k-j} + a_{k-j} b_j` pairwise so that the product is
    /// exactly commutative in floating point.
    fn convolve(&self, rhs: &Self) -> Result<Self> {
        let n = self.order();
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = self.coeffs[0].lift(0.0);
            for j in 0..=k / 2 {
                let term = if 2 * j == k {
                    self.coeffs[j].mul(&rhs.coeffs[j])?
                } else {
                    let a = self.coeffs[j].mul(&rhs.coeffs[k - j])?;
                    let b = self.coeffs[k - j].mul(&rhs.coeffs[j])?;
                    a.add(&b)?
                };
                acc = acc.add(&term)?;
            }
            coeffs.push(acc);
        }
        Ok(Self { coeffs })
    }

    fn divide(&self, rhs: &Self) -> Result<Self> {
        let lead = &rhs.coeffs[0];
        if libm::fabs(lead.constant_part()) <= UNIT_THRESHOLD {
            return Err(Error::NonUnitDivisor {
                constant: lead.constant_part(),
            });
        }
        let n = self.order();
        let mut out: Vec<T> = Vec::with_capacity(n);
        for k in 0..n {
            let mut acc = self.coeffs[k].clone();
            for j in 0..k {
                acc = acc.sub(&out[j].mul(&rhs.coeffs[k - j])?)?;
            }
            out.push(acc.div(lead)?);
        }
        Ok(Self { coeffs: out })
    }

    /// Taylor coefficients `func^(k)(c0) / k!` for `k < order`.
    fn taylor_at(func: Elementary, c0: &T, order: usize) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(order);
        let mut factorial = 1.0;
        match func {
            Elementary::Exp => {
                let e = c0.apply(Elementary::Exp)?;
                for k in 0..order {
                    if k > 0 {
                        factorial *= k as f64;
                    }
                    out.push(e.scale(1.0 / factorial));
                }
            }
            Elementary::Sin | Elementary::Cos => {
                let s = c0.apply(Elementary::Sin)?;
                let c = c0.apply(Elementary::Cos)?;
                let cycle = if func == Elementary::Sin {
                    [s.clone(), c.clone(), s.negate(), c.negate()]
                } else {
                    [c.clone(), s.negate(), c.negate(), s.clone()]
                };
                for k in 0..order {
                    if k > 0 {
                        factorial *= k as f64;
                    }
                    out.push(cycle[k % 4].scale(1.0 / factorial));
                }
            }
            Elementary::Log => {
                out.push(c0.apply(Elementary::Log)?);
                let inv = c0.lift(1.0).div(c0)?;
                let mut inv_pow = inv.clone();
                for k in 1..order {
                    let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                    out.push(inv_pow.scale(sign / k as f64));
                    inv_pow = inv_pow.mul(&inv)?;
                }
            }
            Elementary::Sqrt => {
                let root = c0.apply(Elementary::Sqrt)?;
                let inv = c0.lift(1.0).div(c0)?;
                // binomial(1/2, k)
                let mut binom = 1.0;
                let mut term = root;
                for k in 0..order {
                    if k > 0 {
                        binom *= (0.5 - (k - 1) as f64) / k as f64;
                        term = term.mul(&inv)?;
                    }
                    out.push(term.scale(binom));
                }
            }
            Elementary::Powi(_) => unreachable!("powi is handled by repeated squaring"),
        }
        Ok(out)
    }

    /// `func(c0 + tail)` as `sum_k func^(k)(c0)/k! * tail^k`, evaluated by
    /// Horner's rule; `tail^order` vanishes.
    fn compose(&self, func: Elementary) -> Result<Self> {
        let n = self.order();
        let c0 = &self.coeffs[0];
        check_domain(func, c0.constant_part())?;
        let taylor = Self::taylor_at(func, c0, n)?;
        let mut tail = self.clone();
        tail.coeffs[0] = c0.lift(0.0);

        let zero = c0.lift(0.0);
        let mut acc = Self {
            coeffs: vec![zero; n],
        };
        acc.coeffs[0] = taylor[n - 1].clone();
        for d in taylor[..n - 1].iter().rev() {
            acc = acc.convolve(&tail)?;
            acc.coeffs[0] = acc.coeffs[0].add(d)?;
        }
        Ok(acc)
    }
}

impl<T: Scalar> Scalar for TruncatedSeries<T> {
    fn lift(&self, c: f64) -> Self {
        let zero = self.coeffs[0].lift(0.0);
        let mut coeffs = vec![zero; self.order()];
        coeffs[0] = self.coeffs[0].lift(c);
        Self { coeffs }
    }

    fn constant_part(&self) -> f64 {
        self.coeffs[0].constant_part()
    }

    fn arith(&self, op: ArithOp, rhs: &Self) -> Result<Self> {
        self.check_order(rhs)?;
        match op {
            ArithOp::Add | ArithOp::Sub => self.zip_with(rhs, op),
            ArithOp::Mul => self.convolve(rhs),
            ArithOp::Div => self.divide(rhs),
        }
    }

    fn apply(&self, func: Elementary) -> Result<Self> {
        match func {
            Elementary::Powi(k) => powi_by_squaring(self, k),
            _ => self.compose(func),
        }
    }

    fn negate(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(Scalar::negate).collect(),
        }
    }

    fn scale(&self, c: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|x| x.scale(c)).collect(),
        }
    }
}

/// Truncated ring operation on two series of equal order.
pub fn series_arith<T: Scalar>(
    a: &TruncatedSeries<T>,
    b: &TruncatedSeries<T>,
    op: ArithOp,
) -> Result<TruncatedSeries<T>> {
    a.arith(op, b)
}

/// Taylor expansion of `func` composed with `a`, truncated at `a`'s order.
pub fn series_apply<T: Scalar>(func: Elementary, a: &TruncatedSeries<T>) -> Result<TruncatedSeries<T>> {
    a.apply(func)
}
