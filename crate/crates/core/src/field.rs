//! Operator fields in Toeplitz form over coordinates `u^1 .. u^n`, and the
//! (1,2)-tensors built from them: Nijenhuis and Haantjes torsions, the
//! bracket `<L, M>`, and the structure tensors `T_L`, `M_L`.
//!
//! All tensors are evaluated on coordinate vector fields, whose commutators
//! vanish. A [`Tensor12`] stores `T^k_{ij}`, the `k`-th component of
//! `T(d_i, d_j)`. Tensor products follow `(A (x) a)(xi, eta) = a(eta) A xi`
//! and `(a (x) A)(xi, eta) = a(xi) A eta`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::expr::{coordinate_names, Expression, PAIR, UNIVARIATE};
use crate::linalg::Matrix;
use crate::series::{Scalar, TruncatedSeries};
use crate::toeplitz::{build_pq, matrix_function, ToeplitzCoeffs};

/// Default central-difference step for [`JacobianMethod::FiniteDifference`].
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldSource {
    /// `g_1 .. g_n` as functions of `u1 .. un`.
    Direct(Vec<Expression>),
    /// `f_1(P,Q) J^{n-1} + ... + f_{n-1}(P,Q) J + f_n(P)`; without `f_n` the
    /// diagonal vanishes.
    Generated {
        pair: Vec<Expression>,
        diagonal: Option<Expression>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorFieldSpec {
    n: usize,
    source: FieldSource,
    offset: Option<Vec<Expression>>,
}

fn check_variables(e: &Expression, names: &[&str]) -> Result<()> {
    if e.arity() != names.len() {
        return Err(Error::ArityMismatch {
            expected: names.len(),
            found: e.arity(),
        });
    }
    if e.variables().iter().zip(names).any(|(a, b)| a != b) {
        return Err(Error::InvalidInput(alloc::format!(
            "expected variables {:?}, found {:?}",
            names,
            e.variables()
        )));
    }
    Ok(())
}

fn check_coordinate_exprs(n: usize, g: &[Expression]) -> Result<()> {
    if g.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g.len(),
        });
    }
    let names = coordinate_names(n);
    let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    g.iter().try_for_each(|e| check_variables(e, &names))
}

fn check_dimension(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(alloc::format!("dimension must be at least 2, got {n}")));
    }
    Ok(())
}

impl OperatorFieldSpec {
    pub fn direct(n: usize, g: Vec<Expression>) -> Result<Self> {
        check_dimension(n)?;
        check_coordinate_exprs(n, &g)?;
        Ok(Self {
            n,
            source: FieldSource::Direct(g),
            offset: None,
        })
    }

    /// Parses `g_1 .. g_n` written in `u1 .. un`.
    pub fn direct_from_text<S: AsRef<str>>(g: &[S]) -> Result<Self> {
        let n = g.len();
        let names = coordinate_names(n);
        let exprs = g
            .iter()
            .map(|s| Expression::parse(s.as_ref(), &names).map_err(Error::from))
            .collect::<Result<Vec<_>>>()?;
        Self::direct(n, exprs)
    }

    /// `pair` holds `f_1 .. f_{n-1}` in `(p, q)`, `diagonal` is `f_n` in `x`.
    pub fn generated(n: usize, pair: Vec<Expression>, diagonal: Option<Expression>) -> Result<Self> {
        check_dimension(n)?;
        if pair.len() != n - 1 {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                found: pair.len(),
            });
        }
        pair.iter().try_for_each(|f| check_variables(f, PAIR))?;
        if let Some(d) = &diagonal {
            check_variables(d, UNIVARIATE)?;
        }
        Ok(Self {
            n,
            source: FieldSource::Generated { pair, diagonal },
            offset: None,
        })
    }

    /// Adds `offset[i]` (a function of `u1 .. un`) to `g_{i+1}`.
    pub fn with_offset(mut self, offset: Vec<Expression>) -> Result<Self> {
        check_coordinate_exprs(self.n, &offset)?;
        self.offset = Some(offset);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> &FieldSource {
        &self.source
    }

    pub fn offset(&self) -> Option<&[Expression]> {
        self.offset.as_deref()
    }

    pub fn is_generated(&self) -> bool {
        matches!(self.source, FieldSource::Generated { .. })
    }

    /// Toeplitz coefficients at `u`, over any scalar ring.
    pub fn eval<S: Scalar>(&self, u: &[S]) -> Result<ToeplitzCoeffs<S>> {
        if u.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: u.len(),
            });
        }
        let mut g = match &self.source {
            FieldSource::Direct(g) => ToeplitzCoeffs::new(g.iter().map(|e| e.eval(u)).collect::<Result<Vec<_>>>()?),
            FieldSource::Generated { pair, diagonal } => {
                let n = self.n;
                let (p, q) = build_pq(n, u)?;
                let mut acc = match diagonal {
                    Some(d) => matrix_function(d, &p, None)?,
                    None => ToeplitzCoeffs::new(vec![u[0].lift(0.0); n]),
                };
                for (i, f) in pair.iter().enumerate() {
                    // f_{i+1}(P, Q) J^{n-i-1}
                    let term = matrix_function(f, &p, Some(&q))?.shift(n - i - 1);
                    acc = acc.add(&term)?;
                }
                acc
            }
        };
        if let Some(offset) = &self.offset {
            let extra = ToeplitzCoeffs::new(offset.iter().map(|e| e.eval(u)).collect::<Result<Vec<_>>>()?);
            g = g.add(&extra)?;
        }
        Ok(g)
    }
}

pub fn eval_field(spec: &OperatorFieldSpec, u: &[f64]) -> Result<ToeplitzCoeffs> {
    spec.eval(u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JacobianMethod {
    /// Lift one coordinate at a time to `u^j + t` at order 2.
    Jet,
    /// Central differences with the given step.
    FiniteDifference { step: f64 },
}

/// Value and Jacobi matrix `dg_i/du^j` (row `i`, column `j`) by jet lifts.
pub fn eval_with_jacobian(spec: &OperatorFieldSpec, u: &[f64]) -> Result<(ToeplitzCoeffs, Matrix)> {
    if u.len() != spec.n() {
        return Err(Error::DimensionMismatch {
            expected: spec.n(),
            found: u.len(),
        });
    }
    jet_jacobian(u, |lifted| spec.eval(lifted))
}

/// Value and Jacobi matrix of any Toeplitz-valued map of `u`, lifting one
/// coordinate at a time to `u^j + t` at order 2.
pub fn jet_jacobian(
    u: &[f64],
    f: impl Fn(&[TruncatedSeries]) -> Result<ToeplitzCoeffs<TruncatedSeries>>,
) -> Result<(ToeplitzCoeffs, Matrix)> {
    let n = u.len();
    let mut jac = Matrix::zeros(n);
    let mut value = None;
    for j in 0..n {
        let lifted: Vec<TruncatedSeries> = u
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                if k == j {
                    TruncatedSeries::variable(2, x)
                } else {
                    TruncatedSeries::constant(2, x)
                }
            })
            .collect();
        let g = f(&lifted)?;
        if g.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: g.n() });
        }
        for (i, gi) in g.coeffs().iter().enumerate() {
            jac[(i, j)] = *gi.coeff(1);
        }
        if value.is_none() {
            value = Some(ToeplitzCoeffs::new(g.coeffs().iter().map(|s| *s.coeff(0)).collect()));
        }
    }
    let value = value.ok_or_else(|| Error::InvalidInput("empty point".into()))?;
    Ok((value, jac))
}

pub fn jacobian_g(spec: &OperatorFieldSpec, u: &[f64], method: JacobianMethod) -> Result<Matrix> {
    match method {
        JacobianMethod::Jet => Ok(eval_with_jacobian(spec, u)?.1),
        JacobianMethod::FiniteDifference { step } => {
            let n = spec.n();
            if u.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: u.len(),
                });
            }
            let mut jac = Matrix::zeros(n);
            let mut shifted = u.to_vec();
            for j in 0..n {
                shifted[j] = u[j] + step;
                let plus = spec.eval(&shifted)?;
                shifted[j] = u[j] - step;
                let minus = spec.eval(&shifted)?;
                shifted[j] = u[j];
                for i in 0..n {
                    jac[(i, j)] = (plus.coeffs()[i] - minus.coeffs()[i]) / (2.0 * step);
                }
            }
            Ok(jac)
        }
    }
}

/// A (1,2)-tensor at a point: `T^k_{ij}` is the `k`-th component of
/// `T(d_i, d_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor12 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor12 {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn idx(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.n + i) * self.n + j
    }

    /// Component `k` of `T(d_i, d_j)`, zero-based.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[self.idx(k, i, j)]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let idx = self.idx(k, i, j);
        self.data[idx] = v;
    }

    pub fn add_to(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let idx = self.idx(k, i, j);
        self.data[idx] += v;
    }

    /// `T(d_i, d_j)` as a vector.
    pub fn evaluate(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.n).map(|k| self.get(k, i, j)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(libm::fabs(*x)))
    }

    pub fn sub(&self, other: &Tensor12) -> Tensor12 {
        assert_eq!(self.n, other.n);
        Tensor12 {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// `max |T^k_{ij} + T^k_{ji}|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..self.n {
            for i in 0..self.n {
                for j in 0..self.n {
                    m = m.max(libm::fabs(self.get(k, i, j) + self.get(k, j, i)));
                }
            }
        }
        m
    }

    /// `max |T^k_{ij} - T^k_{ji}|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..self.n {
            for i in 0..self.n {
                for j in 0..self.n {
                    m = m.max(libm::fabs(self.get(k, i, j) - self.get(k, j, i)));
                }
            }
        }
        m
    }

    /// `(xi, eta) -> T(A xi, B eta)` for operators `A`, `B`.
    pub fn precompose(&self, a: &Matrix, b: &Matrix) -> Tensor12 {
        let n = self.n;
        let mut out = Tensor12::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for x in 0..n {
                        for y in 0..n {
                            s += a[(x, i)] * b[(y, j)] * self.get(k, x, y);
                        }
                    }
                    out.set(k, i, j, s);
                }
            }
        }
        out
    }

    /// `(xi, eta) -> A T(xi, eta)`.
    pub fn postcompose(&self, a: &Matrix) -> Tensor12 {
        let n = self.n;
        let mut out = Tensor12::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let s = (0..n).map(|c| a[(k, c)] * self.get(c, i, j)).sum();
                    out.set(k, i, j, s);
                }
            }
        }
        out
    }
}

/// A dense operator field and its first partial derivatives at one point.
/// `partials[a]` is `d L / d u^a`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldJet {
    value: Matrix,
    partials: Vec<Matrix>,
}

impl FieldJet {
    pub fn new(value: Matrix, partials: Vec<Matrix>) -> Self {
        assert_eq!(partials.len(), value.n(), "one partial per coordinate");
        assert!(partials.iter().all(|p| p.n() == value.n()));
        Self { value, partials }
    }

    /// Dense view of a Toeplitz field from its coefficients and Jacobi matrix.
    pub fn from_toeplitz(value: &ToeplitzCoeffs, jacobian: &Matrix) -> Self {
        let n = value.n();
        let partials = (0..n)
            .map(|a| ToeplitzCoeffs::new((0..n).map(|i| jacobian[(i, a)]).collect()).to_dense())
            .collect();
        Self::new(value.to_dense(), partials)
    }

    pub fn of_spec(spec: &OperatorFieldSpec, u: &[f64]) -> Result<Self> {
        let (value, jac) = eval_with_jacobian(spec, u)?;
        Ok(Self::from_toeplitz(&value, &jac))
    }

    pub fn n(&self) -> usize {
        self.value.n()
    }

    pub fn value(&self) -> &Matrix {
        &self.value
    }

    pub fn partial(&self, a: usize) -> &Matrix {
        &self.partials[a]
    }

    /// The jet of `f L`, given `f` and `df` at the same point.
    pub fn scaled(&self, f: f64, df: &[f64]) -> FieldJet {
        let partials = self
            .partials
            .iter()
            .zip(df)
            .map(|(p, d)| p.scale(f).add(&self.value.scale(*d)))
            .collect();
        FieldJet::new(self.value.scale(f), partials)
    }

    /// `max |L| + max |dL|`, the scale used to normalize torsions.
    pub fn magnitude(&self) -> f64 {
        self.value.max_abs() + self.partials.iter().fold(0.0_f64, |m, p| m.max(p.max_abs()))
    }
}

/// Nijenhuis torsion on coordinate fields:
/// `N^k_{ij} = L^a_i d_a L^k_j - L^a_j d_a L^k_i - L^k_a d_i L^a_j + L^k_a d_j L^a_i`.
pub fn nijenhuis_from_jet(jet: &FieldJet) -> Tensor12 {
    let n = jet.n();
    let l = jet.value();
    let mut out = Tensor12::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    // [L d_i, L d_j]
                    s += l[(a, i)] * jet.partial(a)[(k, j)] - l[(a, j)] * jet.partial(a)[(k, i)];
                    // - L [d_i, L d_j] - L [L d_i, d_j]
                    s += -l[(k, a)] * jet.partial(i)[(a, j)] + l[(k, a)] * jet.partial(j)[(a, i)];
                }
                out.set(k, i, j, s);
            }
        }
    }
    out
}

/// `<L, M>(xi, eta) = LM[xi, eta] + [L xi, M eta] - L[xi, M eta] - M[L xi, eta]`
/// on coordinate fields. A tensor only when `LM = ML`.
pub fn bracket_from_jets(l: &FieldJet, m: &FieldJet) -> Tensor12 {
    let n = l.n();
    assert_eq!(n, m.n());
    let mut out = Tensor12::zeros(n);
    for i in 0..n {
        for j in 0..n {
            // [L d_i, M d_j]^k = L^a_i d_a M^k_j - M^a_j d_a L^k_i
            // L[d_i, M d_j]^k = L^k_a d_i M^a_j
            // M[L d_i, d_j]^k = -M^k_a d_j L^a_i
            for k in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    s += l.value()[(a, i)] * m.partial(a)[(k, j)];
                    s -= m.value()[(a, j)] * l.partial(a)[(k, i)];
                    s -= l.value()[(k, a)] * m.partial(i)[(a, j)];
                    s += m.value()[(k, a)] * l.partial(j)[(a, i)];
                }
                out.set(k, i, j, s);
            }
        }
    }
    out
}

/// `H(xi, eta) = L^2 N(xi, eta) + N(L xi, L eta) - L N(L xi, eta) - L N(xi, L eta)`.
pub fn haantjes_from(nijenhuis: &Tensor12, l: &Matrix) -> Tensor12 {
    let n = l.n();
    let id = Matrix::identity(n);
    let l2 = l.mul(l);
    let a = nijenhuis.postcompose(&l2);
    let b = nijenhuis.precompose(l, l);
    let c = nijenhuis.precompose(l, &id).postcompose(l);
    let d = nijenhuis.precompose(&id, l).postcompose(l);
    let mut out = Tensor12::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                out.set(k, i, j, a.get(k, i, j) + b.get(k, i, j) - c.get(k, i, j) - d.get(k, i, j));
            }
        }
    }
    out
}

/// `<fL, M> - f<L, M> - ML (x) df + L (x) M^* df`, which vanishes for
/// commuting `L`, `M`.
pub fn leibniz_defect(l: &FieldJet, m: &FieldJet, f: f64, df: &[f64]) -> Tensor12 {
    let n = l.n();
    let lhs = bracket_from_jets(&l.scaled(f, df), m);
    let base = bracket_from_jets(l, m);
    let ml = m.value().mul(l.value());
    // (M^* df)_j = df_a M^a_j
    let m_df: Vec<f64> = (0..n).map(|j| (0..n).map(|a| df[a] * m.value()[(a, j)]).sum()).collect();
    let mut out = Tensor12::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let v = lhs.get(k, i, j) - f * base.get(k, i, j) - ml[(k, i)] * df[j] + l.value()[(k, i)] * m_df[j];
                out.set(k, i, j, v);
            }
        }
    }
    out
}

/// Torsion magnitude normalized by `1 + max|L| + max|dL|`.
pub fn normalized(t: &Tensor12, jet: &FieldJet) -> f64 {
    t.max_abs() / (1.0 + jet.magnitude())
}

pub fn nijenhuis_torsion(spec: &OperatorFieldSpec, u: &[f64]) -> Result<Tensor12> {
    Ok(nijenhuis_from_jet(&FieldJet::of_spec(spec, u)?))
}

pub fn haantjes_torsion(spec: &OperatorFieldSpec, u: &[f64]) -> Result<Tensor12> {
    let jet = FieldJet::of_spec(spec, u)?;
    Ok(haantjes_from(&nijenhuis_from_jet(&jet), jet.value()))
}

pub fn bracket(l: &OperatorFieldSpec, m: &OperatorFieldSpec, u: &[f64]) -> Result<Tensor12> {
    if l.n() != m.n() {
        return Err(Error::DimensionMismatch {
            expected: l.n(),
            found: m.n(),
        });
    }
    Ok(bracket_from_jets(&FieldJet::of_spec(l, u)?, &FieldJet::of_spec(m, u)?))
}

/// Normalized Nijenhuis and Haantjes torsion magnitudes at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorsionNorms {
    pub nijenhuis: f64,
    pub haantjes: f64,
}

pub fn torsion_norms(spec: &OperatorFieldSpec, u: &[f64]) -> Result<TorsionNorms> {
    let jet = FieldJet::of_spec(spec, u)?;
    let n = nijenhuis_from_jet(&jet);
    let h = haantjes_from(&n, jet.value());
    Ok(TorsionNorms {
        nijenhuis: normalized(&n, &jet),
        haantjes: normalized(&h, &jet),
    })
}

fn jordan_power(n: usize, p: usize) -> Matrix {
    Matrix::from_fn(n, |k, j| if j == k + p { 1.0 } else { 0.0 })
}

/// `(J^* a)_j = a_{j-1}`.
fn pull_back_by_j(a: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    out[1..].copy_from_slice(&a[..a.len() - 1]);
    out
}

/// `T_L` and `M_L` from the Jacobi matrix of `g` (rows are `dg_i`):
///
/// `T_L = sum_i dg_i (x) J^{n-i} + J^{n-i} (x) dg_i`,
/// `M_L = sum_i J^* dg_i (x) J^{n-i} + sum_{i<n} J^{n-i} (x) dg_{i+1}
///       - sum_{i<n} dg_{i+1} (x) J^{n-i} - sum_i J^{n-i} (x) J^* dg_i`.
pub fn structure_tensors_from_jacobian(jac: &Matrix) -> (Tensor12, Tensor12) {
    let n = jac.n();
    let dg: Vec<Vec<f64>> = (0..n).map(|i| jac.row(i).to_vec()).collect();
    let jdg: Vec<Vec<f64>> = dg.iter().map(|d| pull_back_by_j(d)).collect();
    let powers: Vec<Matrix> = (0..n).map(|p| jordan_power(n, p)).collect();

    let mut t = Tensor12::zeros(n);
    let mut m = Tensor12::zeros(n);
    // form (x) operator: a(xi) A eta -> a_i A^k_j
    let left = |out: &mut Tensor12, a: &[f64], op: &Matrix, sign: f64| {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out.add_to(k, i, j, sign * a[i] * op[(k, j)]);
                }
            }
        }
    };
    // operator (x) form: A xi a(eta) -> A^k_i a_j
    let right = |out: &mut Tensor12, op: &Matrix, a: &[f64], sign: f64| {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out.add_to(k, i, j, sign * op[(k, i)] * a[j]);
                }
            }
        }
    };
    for gi in 0..n {
        // one-based g index i = gi + 1, so J^{n-i} = powers[n - 1 - gi]
        let p = &powers[n - 1 - gi];
        left(&mut t, &dg[gi], p, 1.0);
        right(&mut t, p, &dg[gi], 1.0);

        left(&mut m, &jdg[gi], p, 1.0);
        right(&mut m, p, &jdg[gi], -1.0);
        if gi + 1 < n {
            right(&mut m, p, &dg[gi + 1], 1.0);
            left(&mut m, &dg[gi + 1], p, -1.0);
        }
    }
    (t, m)
}

pub fn structure_tensors(spec: &OperatorFieldSpec, u: &[f64]) -> Result<(Tensor12, Tensor12)> {
    let jac = jacobian_g(spec, u, JacobianMethod::Jet)?;
    Ok(structure_tensors_from_jacobian(&jac))
}
