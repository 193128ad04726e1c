//! Coordinates in which a diagonal-free generated operator `M` becomes the
//! Jordan block `J`, built by repeated integration of the system
//! `M^* dv^i = dv^{i+1}`, plus the maps that preserve `J`.
//!
//! Starting from `v^n = int_0^{u^n} q`, each level differentiates the last
//! function spectrally, solves `M^* omega = dv` by forward substitution and
//! integrates the closed form `omega` back to a primitive.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::chart::{
    cumulative_integral, grid_sample, partial_derivative, primitive_of_closed_form, sample_last_axis, Grid,
    GridFunction,
};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::field::{jet_jacobian, FieldSource, OperatorFieldSpec};
use crate::linalg::Matrix;
use crate::series::{Scalar, TruncatedSeries};
use crate::toeplitz::{build_pq, matrix_function, ToeplitzCoeffs};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptions {
    /// Lower bound for `|m_{n-1}|` on the grid.
    pub regularity_threshold: f64,
    /// Bound on `|dv_1|` relative to `1 + max|dv|`.
    pub consistency_tolerance: f64,
    /// Bound on the closedness residuals of each solved `omega`.
    pub closedness_tolerance: f64,
    /// Tolerance echoed into the residual report of the system.
    pub sys_tolerance: f64,
    /// Nodes skipped next to each face when checking derivatives.
    pub margin: usize,
}

impl Default for TransformOptions {
    fn default() -> Self {
        Self {
            regularity_threshold: 1e-4,
            consistency_tolerance: 1e-7,
            closedness_tolerance: 1e-7,
            sys_tolerance: 1e-8,
            margin: 2,
        }
    }
}

/// Residuals of `M^* dv^i = dv^{i+1}`, each relative to `1 + max|dv^{i+1}|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SysReport {
    /// Entry `i - 1` belongs to equation `i`.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub min_dv1_du1: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosednessLevel {
    /// Index `k` of the function `v^k` integrated at this level.
    pub target: usize,
    /// `max |d_j omega_i - d_i omega_j|`, relative.
    pub symmetric: f64,
    /// `max |d omega(M d_i, M d_j)|`, relative.
    pub m_form: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianDiagnostics {
    /// `max |dv^i/du^j|` below the diagonal, relative to `1 + max|dv/du|`.
    pub lower_triangle: f64,
    /// `max |dv^{i+1}/du^{i+1} - m_{n-1} dv^i/du^i| / (1 + |dv^{i+1}/du^{i+1}|)`.
    pub diagonal_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub sys: SysReport,
    pub closedness: Vec<ClosednessLevel>,
    pub jacobian: JacobianDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformResult {
    /// `v[i]` is `v^{i+1}`.
    pub v: Vec<GridFunction>,
    /// Solved forms, one entry per level in the order computed.
    pub omega_trace: Vec<Vec<GridFunction>>,
    pub residual_report: ResidualReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PushforwardReport {
    /// Entries below the diagonal and disagreements along each band,
    /// relative to `1 + max|X|`.
    pub toeplitz_deviation: f64,
    /// `max |X - J|`.
    pub j_deviation: f64,
    pub is_toeplitz: bool,
    pub equals_j: bool,
    pub tolerance: f64,
}

/// Samples an operator field at every node.
pub fn sample_field(spec: &OperatorFieldSpec, grid: &Arc<Grid>) -> Result<Vec<ToeplitzCoeffs>> {
    if spec.n() != grid.n() {
        return Err(Error::DimensionMismatch {
            expected: grid.n(),
            found: spec.n(),
        });
    }
    (0..grid.len())
        .map(|idx| {
            let u = grid.point(idx);
            spec.eval(&u).map_err(|e| e.at_point(&u))
        })
        .collect()
}

/// Solves `(M^* omega)_j = sum_{i<j} omega_i M^i_j = dv_j` for
/// `omega_1 .. omega_{n-1}` at one point.
pub fn solve_omega_at(m: &ToeplitzCoeffs, dv: &[f64], options: &TransformOptions) -> Result<Vec<f64>> {
    let n = m.n();
    if dv.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: dv.len(),
        });
    }
    let lead = *m.g(n - 1);
    if !(libm::fabs(lead) >= options.regularity_threshold) {
        return Err(Error::RegularityViolation {
            point: Vec::new(),
            value: lead,
            threshold: options.regularity_threshold,
        });
    }
    let scale = 1.0 + dv.iter().fold(0.0, |a: f64, x| a.max(libm::fabs(*x)));
    if libm::fabs(dv[0]) > options.consistency_tolerance * scale {
        return Err(Error::InconsistentSystem {
            point: Vec::new(),
            value: dv[0],
        });
    }
    let mut omega = vec![0.0; n - 1];
    for j in 1..n {
        // M^a_j = m_{n-(j-a)} with zero-based a < j.
        let mut rhs = dv[j];
        for a in 0..j - 1 {
            rhs -= omega[a] * *m.g(n - (j - a));
        }
        omega[j - 1] = rhs / lead;
    }
    Ok(omega)
}

/// Pointwise [`solve_omega_at`] over the grid.
pub fn solve_omega(m: &[ToeplitzCoeffs], dv: &[GridFunction], options: &TransformOptions) -> Result<Vec<GridFunction>> {
    let grid = dv
        .first()
        .ok_or_else(|| Error::InvalidInput("empty differential".into()))?
        .grid()
        .clone();
    let n = grid.n();
    if dv.len() != n || m.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: dv.len(),
        });
    }
    let mut columns = vec![Vec::with_capacity(grid.len()); n - 1];
    let mut local = vec![0.0; n];
    for (idx, m_at) in m.iter().enumerate() {
        for (l, d) in local.iter_mut().zip(dv) {
            *l = d.values()[idx];
        }
        let omega = solve_omega_at(m_at, &local, options).map_err(|e| with_point(e, &grid, idx))?;
        for (c, w) in columns.iter_mut().zip(omega) {
            c.push(w);
        }
    }
    columns.into_iter().map(|c| GridFunction::new(&grid, c)).collect()
}

fn with_point(e: Error, grid: &Grid, idx: usize) -> Error {
    let point = grid.point(idx);
    match e {
        Error::RegularityViolation { value, threshold, .. } => Error::RegularityViolation {
            point,
            value,
            threshold,
        },
        Error::InconsistentSystem { value, .. } => Error::InconsistentSystem { point, value },
        other => other.at_point(&point),
    }
}

/// All first partials: `out[i][j] = d f_i / du^j`.
pub fn jacobian_fields(f: &[GridFunction]) -> Result<Vec<Vec<GridFunction>>> {
    f.iter()
        .map(|fi| (0..fi.grid().n()).map(|j| partial_derivative(fi, j)).collect())
        .collect()
}

fn jacobian_at(jac: &[Vec<GridFunction>], idx: usize) -> Matrix {
    Matrix::from_fn(jac.len(), |i, j| jac[i][j].values()[idx])
}

fn check_generated_without_diagonal(spec: &OperatorFieldSpec) -> Result<()> {
    match spec.source() {
        FieldSource::Generated { diagonal: None, .. } if spec.offset().is_none() => Ok(()),
        _ => Err(Error::InvalidInput(
            "the operator must be generated from f_1 .. f_{n-1} without a diagonal term".into(),
        )),
    }
}

/// Runs the integration scheme for `M` on `grid`. `r[k-1]` is the
/// integration constant (a function of `u^n`) attached to `v^k`.
pub fn run_algorithm(
    m_spec: &OperatorFieldSpec,
    q: &Expression,
    r: &[Expression],
    grid: &Arc<Grid>,
    options: &TransformOptions,
) -> Result<TransformResult> {
    let n = m_spec.n();
    check_generated_without_diagonal(m_spec)?;
    if grid.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: grid.n(),
        });
    }
    if r.len() != n - 1 {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: r.len(),
        });
    }
    let q_values = sample_last_axis(q, grid)?;
    let q_min = q_values.values().iter().fold(f64::INFINITY, |m: f64, x| m.min(libm::fabs(*x)));
    if !(q_min > 0.0) {
        return Err(Error::InvalidInput("q must not vanish on [0, delta]".into()));
    }
    r.iter().try_for_each(|e| {
        if e.arity() == 1 {
            Ok(())
        } else {
            Err(Error::ArityMismatch {
                expected: 1,
                found: e.arity(),
            })
        }
    })?;

    let m_values = sample_field(m_spec, grid)?;
    for (idx, m) in m_values.iter().enumerate() {
        let lead = *m.g(n - 1);
        if !(libm::fabs(lead) >= options.regularity_threshold) {
            return Err(Error::RegularityViolation {
                point: grid.point(idx),
                value: lead,
                threshold: options.regularity_threshold,
            });
        }
    }

    // v[k] holds v^{k+1}; filled from the top.
    let mut v: Vec<Option<GridFunction>> = vec![None; n];
    v[n - 1] = Some(cumulative_integral(&q_values, n - 1)?);
    let mut omega_trace = Vec::with_capacity(n - 1);
    let mut closedness = Vec::with_capacity(n - 1);
    for k in (1..n).rev() {
        let prev = v[k].as_ref().expect("filled at the previous level");
        let dv = (0..n).map(|a| partial_derivative(prev, a)).collect::<Result<Vec<_>>>()?;
        let omega = solve_omega(&m_values, &dv, options)?;
        let level = closedness_residuals(&omega, &m_values, k, options.margin)?;
        let worst = level.symmetric.max(level.m_form);
        if !(worst <= options.closedness_tolerance) {
            return Err(Error::ClosednessViolation {
                level: n - k,
                residual: worst,
                tolerance: options.closedness_tolerance,
            });
        }
        closedness.push(level);
        v[k - 1] = Some(primitive_of_closed_form(&omega, Some(&r[k - 1]))?);
        omega_trace.push(omega);
    }
    let v: Vec<GridFunction> = v.into_iter().map(|x| x.expect("all levels filled")).collect();

    let jac = jacobian_fields(&v)?;
    let sys = sys_report(&jac, &m_values, grid, options.sys_tolerance, options.margin);
    let jacobian = jacobian_diagnostics(&jac, &m_values, grid, options.margin);
    Ok(TransformResult {
        v,
        omega_trace,
        residual_report: ResidualReport {
            sys,
            closedness,
            jacobian,
        },
    })
}

fn closedness_residuals(
    omega: &[GridFunction],
    m_values: &[ToeplitzCoeffs],
    target: usize,
    margin: usize,
) -> Result<ClosednessLevel> {
    let grid = omega[0].grid().clone();
    let n = grid.n();
    let d = jacobian_fields(omega)?;
    let interior = grid.interior(margin);
    let mut d_scale: f64 = 0.0;
    let mut m_scale: f64 = 0.0;
    for &idx in &interior {
        for row in &d {
            for f in row {
                d_scale = d_scale.max(libm::fabs(f.values()[idx]));
            }
        }
        m_scale = m_scale.max(m_values[idx].coeffs().iter().fold(0.0, |a: f64, x| a.max(libm::fabs(*x))));
    }
    // (d omega)_{ab} = d_a omega_b - d_b omega_a, with omega_n = 0.
    let d_omega = |idx: usize, a: usize, b: usize| -> f64 {
        let da_wb = if b < n - 1 { d[b][a].values()[idx] } else { 0.0 };
        let db_wa = if a < n - 1 { d[a][b].values()[idx] } else { 0.0 };
        da_wb - db_wa
    };
    let mut symmetric: f64 = 0.0;
    let mut m_form: f64 = 0.0;
    for &idx in &interior {
        for i in 0..n - 1 {
            for j in i + 1..n - 1 {
                symmetric = symmetric.max(libm::fabs(d_omega(idx, j, i)));
            }
        }
        let m = m_values[idx].to_dense();
        let dw = Matrix::from_fn(n, |a, b| d_omega(idx, a, b));
        let pulled = m.transpose().mul(&dw).mul(&m);
        m_form = m_form.max(pulled.max_abs());
    }
    Ok(ClosednessLevel {
        target,
        symmetric: symmetric / (1.0 + d_scale),
        m_form: m_form / ((1.0 + d_scale) * (1.0 + m_scale) * (1.0 + m_scale)),
    })
}

fn sys_report(
    jac: &[Vec<GridFunction>],
    m_values: &[ToeplitzCoeffs],
    grid: &Grid,
    tolerance: f64,
    margin: usize,
) -> SysReport {
    let n = grid.n();
    let interior = grid.interior(margin);
    let mut residuals = vec![0.0_f64; n - 1];
    let mut scales = vec![0.0_f64; n - 1];
    let mut min_dv1_du1 = f64::INFINITY;
    for &idx in &interior {
        let m = m_values[idx].to_dense();
        let v = jacobian_at(jac, idx);
        // Row i of V M against row i + 1 of V.
        let vm = v.mul(&m);
        for i in 0..n - 1 {
            for j in 0..n {
                residuals[i] = residuals[i].max(libm::fabs(vm[(i, j)] - v[(i + 1, j)]));
                scales[i] = scales[i].max(libm::fabs(v[(i + 1, j)]));
            }
        }
        min_dv1_du1 = min_dv1_du1.min(libm::fabs(v[(0, 0)]));
    }
    let residuals: Vec<f64> = residuals.iter().zip(&scales).map(|(r, s)| r / (1.0 + s)).collect();
    let max_residual = residuals.iter().fold(0.0, |a: f64, r| a.max(*r));
    SysReport {
        passed: max_residual <= tolerance && min_dv1_du1 > 0.0,
        residuals,
        max_residual,
        min_dv1_du1,
        tolerance,
    }
}

fn jacobian_diagnostics(jac: &[Vec<GridFunction>], m_values: &[ToeplitzCoeffs], grid: &Grid, margin: usize) -> JacobianDiagnostics {
    let n = grid.n();
    let mut lower: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut ratio: f64 = 0.0;
    for idx in grid.interior(margin) {
        let v = jacobian_at(jac, idx);
        scale = scale.max(v.max_abs());
        let m = *m_values[idx].g(n - 1);
        for i in 0..n {
            for j in 0..i {
                lower = lower.max(libm::fabs(v[(i, j)]));
            }
            if i + 1 < n {
                let next = v[(i + 1, i + 1)];
                ratio = ratio.max(libm::fabs(next - m * v[(i, i)]) / (1.0 + libm::fabs(next)));
            }
        }
    }
    JacobianDiagnostics {
        lower_triangle: lower / (1.0 + scale),
        diagonal_ratio: ratio,
    }
}

/// Residuals of `M^* dv^i = dv^{i+1}` at interior nodes, with spectral
/// derivatives of `v`.
pub fn verify_sys(
    v: &[GridFunction],
    m_spec: &OperatorFieldSpec,
    grid: &Arc<Grid>,
    tolerance: f64,
    margin: usize,
) -> Result<SysReport> {
    if v.len() != grid.n() {
        return Err(Error::DimensionMismatch {
            expected: grid.n(),
            found: v.len(),
        });
    }
    let m_values = sample_field(m_spec, grid)?;
    let jac = jacobian_fields(v)?;
    Ok(sys_report(&jac, &m_values, grid, tolerance, margin))
}

/// `X = (dv/du) L (dv/du)^{-1}` at interior nodes, compared against the
/// Toeplitz pattern and against `J`.
pub fn pushforward_check(
    v: &[GridFunction],
    l_spec: &OperatorFieldSpec,
    grid: &Arc<Grid>,
    tolerance: f64,
    margin: usize,
) -> Result<PushforwardReport> {
    let n = grid.n();
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len(),
        });
    }
    let jac = jacobian_fields(v)?;
    let j_block = ToeplitzCoeffs::nilpotent_block(n).to_dense();
    let mut toeplitz_deviation: f64 = 0.0;
    let mut j_deviation: f64 = 0.0;
    for idx in grid.interior(margin) {
        let u = grid.point(idx);
        let l = l_spec.eval(&u).map_err(|e| e.at_point(&u))?.to_dense();
        let jm = jacobian_at(&jac, idx);
        let inv = jm.inverse().ok_or(Error::SingularJacobian { point: u })?;
        let x = jm.mul(&l).mul(&inv);
        toeplitz_deviation = toeplitz_deviation.max(toeplitz_defect(&x) / (1.0 + x.max_abs()));
        j_deviation = j_deviation.max(x.sub(&j_block).max_abs());
    }
    Ok(PushforwardReport {
        toeplitz_deviation,
        j_deviation,
        is_toeplitz: toeplitz_deviation <= tolerance,
        equals_j: j_deviation <= tolerance,
        tolerance,
    })
}

/// Largest entry below the diagonal or departure from the first row
/// along a band.
pub fn toeplitz_defect(x: &Matrix) -> f64 {
    let n = x.n();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let dev = if j < i { x[(i, j)] } else { x[(i, j)] - x[(0, j - i)] };
            worst = worst.max(libm::fabs(dev));
        }
    }
    worst
}

/// Toeplitz coefficients of `h_1(P) J^{n-1} + ... + h_n(P)` at `u`.
pub fn j_preserving_coeffs<S: Scalar>(h: &[Expression], u: &[S]) -> Result<ToeplitzCoeffs<S>> {
    let n = h.len();
    let (p, _) = build_pq(n, u)?;
    let mut acc = ToeplitzCoeffs::new(vec![u[0].lift(0.0); n]);
    for (i, hi) in h.iter().enumerate() {
        acc = acc.add(&matrix_function(hi, &p, None)?.shift(n - 1 - i))?;
    }
    Ok(acc)
}

/// Value and exact Jacobian of the map `u -> w(u)`.
pub fn j_preserving_values(h: &[Expression], u: &[f64]) -> Result<(ToeplitzCoeffs, Matrix)> {
    if h.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            found: h.len(),
        });
    }
    jet_jacobian(u, |lifted| j_preserving_coeffs(h, lifted))
}

fn derivative_at(h: &Expression, x: f64) -> Result<f64> {
    Ok(*h.eval(&[TruncatedSeries::variable(2, x)])?.coeff(1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct JPreservingMap {
    /// `w[i]` is `w_{i+1}`; `w_n` sits on the diagonal.
    pub w: Vec<GridFunction>,
    pub min_abs_determinant: f64,
    /// `min |h_n'(u^n)|` over the nodes: the factor whose `n`-th power is
    /// the Jacobian determinant.
    pub min_abs_id_derivative: f64,
    /// `h_1'(0)`, kept for comparison.
    pub corner_derivative_at_zero: f64,
}

/// Samples the `J`-preserving map built from `h` on `grid`, checking that its
/// Jacobian is invertible at every node.
pub fn j_preserving_map(h: &[Expression], grid: &Arc<Grid>) -> Result<JPreservingMap> {
    let n = grid.n();
    if h.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h.len(),
        });
    }
    h.iter().try_for_each(|e| {
        if e.arity() == 1 {
            Ok(())
        } else {
            Err(Error::ArityMismatch {
                expected: 1,
                found: e.arity(),
            })
        }
    })?;
    let mut columns = vec![Vec::with_capacity(grid.len()); n];
    let mut min_det = f64::INFINITY;
    let mut min_id = f64::INFINITY;
    for idx in 0..grid.len() {
        let u = grid.point(idx);
        let (w, jac) = j_preserving_values(h, &u).map_err(|e| e.at_point(&u))?;
        let det = jac.determinant();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularJacobian { point: u });
        }
        min_det = min_det.min(libm::fabs(det));
        min_id = min_id.min(libm::fabs(derivative_at(&h[n - 1], u[n - 1])?));
        for (c, x) in columns.iter_mut().zip(w.coeffs()) {
            c.push(*x);
        }
    }
    Ok(JPreservingMap {
        w: columns.into_iter().map(|c| GridFunction::new(grid, c)).collect::<Result<_>>()?,
        min_abs_determinant: min_det,
        min_abs_id_derivative: min_id,
        corner_derivative_at_zero: derivative_at(&h[0], 0.0)?,
    })
}

/// `w(v(u))` at every node.
pub fn compose_j_preserving(h: &[Expression], v: &[GridFunction]) -> Result<Vec<GridFunction>> {
    let grid = v
        .first()
        .ok_or_else(|| Error::InvalidInput("empty map".into()))?
        .grid()
        .clone();
    let n = grid.n();
    if v.len() != n || h.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: v.len().min(h.len()),
        });
    }
    let composed: Vec<ToeplitzCoeffs> = (0..grid.len())
        .map(|idx| {
            let at: Vec<f64> = v.iter().map(|f| f.values()[idx]).collect();
            j_preserving_coeffs(h, &at).map_err(|e| e.at_point(&grid.point(idx)))
        })
        .collect::<Result<_>>()?;
    (0..n)
        .map(|i| grid_sample_indexed(&grid, |idx| composed[idx].coeffs()[i]))
        .collect()
}

fn grid_sample_indexed(grid: &Arc<Grid>, f: impl Fn(usize) -> f64) -> Result<GridFunction> {
    GridFunction::new(grid, (0..grid.len()).map(f).collect())
}

/// Samples `v^1 .. v^n` given in closed form over `u1 .. un`.
pub fn sample_map(exprs: &[Expression], grid: &Arc<Grid>) -> Result<Vec<GridFunction>> {
    exprs.iter().map(|e| grid_sample(|u| e.eval(u), grid)).collect()
}
