//! Residual checks for the equivalent PDE systems that make a Toeplitz
//! field Nijenhuis, and a classifier aggregating them over sample points.
//!
//! Every form is evaluated from the Jacobi matrix `G = dg/du` (rows `dg_i`).
//! Pullbacks act on covectors as `(A^* a)_j = a_i A^i_j`, so
//! `(J^* a)_j = a_{j-1}`; `J` acts on columns as `(J v)_i = v_{i+1}`.
//! Residuals are max-abs values divided by `1 + max|G|`.

use alloc::vec::Vec;
use core::fmt;

use crate::error::Result;
use crate::field::{eval_with_jacobian, nijenhuis_from_jet, normalized, FieldJet, OperatorFieldSpec};
use crate::linalg::Matrix;
use crate::toeplitz::{GlRegularity, REGULARITY_THRESHOLD};

/// Default verdict tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConditionForm {
    /// Covector equations on `dg_i`.
    Eq1,
    /// `[[G, J], J] = 0`.
    Eq2,
    /// Column equations on `dg/du^k`.
    Eq3,
    /// The reduced system expressing `dg/du^{n-k}` through the last two
    /// columns, plus `J^{n-1} dg/du^{n-1} = 0`.
    Mod2,
}

impl ConditionForm {
    pub const ALL: [ConditionForm; 4] = [ConditionForm::Eq1, ConditionForm::Eq2, ConditionForm::Eq3, ConditionForm::Mod2];

    pub fn name(self) -> &'static str {
        match self {
            ConditionForm::Eq1 => "eq1",
            ConditionForm::Eq2 => "eq2",
            ConditionForm::Eq3 => "eq3",
            ConditionForm::Mod2 => "mod2",
        }
    }
}

impl fmt::Display for ConditionForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub form: ConditionForm,
    pub per_equation_residuals: Vec<f64>,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl ConditionReport {
    fn new(form: ConditionForm, per_equation_residuals: Vec<f64>, tolerance: f64) -> Self {
        let max_residual = per_equation_residuals.iter().fold(0.0, |m: f64, r| m.max(*r));
        Self {
            form,
            per_equation_residuals,
            max_residual,
            tolerance,
            passed: max_residual <= tolerance,
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m: f64, x| m.max(libm::fabs(*x)))
}

/// `(J^{k*} a)_j = a_{j-k}`.
fn pull_back(a: &[f64], k: usize) -> Vec<f64> {
    let n = a.len();
    (0..n).map(|j| if j >= k { a[j - k] } else { 0.0 }).collect()
}

/// `(J^k v)_i = v_{i+k}`.
fn push(v: &[f64], k: usize) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|i| if i + k < n { v[i + k] } else { 0.0 }).collect()
}

fn column(g: &Matrix, k: usize) -> Vec<f64> {
    (0..g.n()).map(|i| g[(i, k)]).collect()
}

fn axpy(acc: &mut [f64], c: f64, x: &[f64]) {
    for (a, b) in acc.iter_mut().zip(x) {
        *a += c * b;
    }
}

/// `J^{2*} dg_i - 2 J^* dg_{i+1} + dg_{i+2}` for `i = 1..n`, dropping terms
/// past `g_n`.
fn eq1_residuals(g: &Matrix) -> Vec<f64> {
    let n = g.n();
    (0..n)
        .map(|i| {
            let mut r = pull_back(g.row(i), 2);
            if i + 1 < n {
                axpy(&mut r, -2.0, &pull_back(g.row(i + 1), 1));
            }
            if i + 2 < n {
                axpy(&mut r, 1.0, g.row(i + 2));
            }
            max_abs(&r)
        })
        .collect()
}

/// Rows of `J^2 G - 2 J G J + G J^2`.
fn eq2_residuals(g: &Matrix) -> Vec<f64> {
    let n = g.n();
    let j = Matrix::from_fn(n, |r, c| if c == r + 1 { 1.0 } else { 0.0 });
    let r = g.commutator(&j).commutator(&j);
    (0..n).map(|i| max_abs(r.row(i))).collect()
}

/// `J^2 dg/du^k - 2 J dg/du^{k-1} + dg/du^{k-2}` for `k = 1..n`.
fn eq3_residuals(g: &Matrix) -> Vec<f64> {
    let n = g.n();
    (0..n)
        .map(|k| {
            let mut r = push(&column(g, k), 2);
            if k >= 1 {
                axpy(&mut r, -2.0, &push(&column(g, k - 1), 1));
            }
            if k >= 2 {
                axpy(&mut r, 1.0, &column(g, k - 2));
            }
            max_abs(&r)
        })
        .collect()
}

/// `dg/du^{n-k} - k J^{k-1} dg/du^{n-1} + (k-1) J^k dg/du^n` for
/// `k = 2..n-1`, then `J^{n-1} dg/du^{n-1}`.
fn mod2_residuals(g: &Matrix) -> Vec<f64> {
    let n = g.n();
    let last = column(g, n - 1);
    let second = column(g, n - 2);
    let mut out = Vec::with_capacity(n - 1);
    for k in 2..n {
        let mut r = column(g, n - 1 - k);
        axpy(&mut r, -(k as f64), &push(&second, k - 1));
        axpy(&mut r, (k - 1) as f64, &push(&last, k));
        out.push(max_abs(&r));
    }
    out.push(max_abs(&push(&second, n - 1)));
    out
}

/// Residuals of one form from the Jacobi matrix of `g`.
pub fn residuals_from_jacobian(g: &Matrix, form: ConditionForm, tolerance: f64) -> ConditionReport {
    let raw = match form {
        ConditionForm::Eq1 => eq1_residuals(g),
        ConditionForm::Eq2 => eq2_residuals(g),
        ConditionForm::Eq3 => eq3_residuals(g),
        ConditionForm::Mod2 => mod2_residuals(g),
    };
    let scale = 1.0 + g.max_abs();
    ConditionReport::new(form, raw.into_iter().map(|r| r / scale).collect(), tolerance)
}

pub fn check_condition(
    spec: &OperatorFieldSpec,
    u: &[f64],
    form: ConditionForm,
    tolerance: f64,
) -> Result<ConditionReport> {
    let (_, g) = eval_with_jacobian(spec, u)?;
    Ok(residuals_from_jacobian(&g, form, tolerance))
}

/// Everything the classifier records at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointClassification {
    pub point: Vec<f64>,
    /// Normalized Nijenhuis torsion.
    pub torsion: f64,
    /// One report per form, in [`ConditionForm::ALL`] order.
    pub reports: Vec<ConditionReport>,
    pub regularity: GlRegularity,
}

impl PointClassification {
    pub fn report(&self, form: ConditionForm) -> &ConditionReport {
        &self.reports[ConditionForm::ALL.iter().position(|f| *f == form).unwrap()]
    }

    pub fn forms_agree(&self) -> bool {
        self.reports.iter().all(|r| r.passed == self.reports[0].passed)
    }
}

pub fn classify_point(
    spec: &OperatorFieldSpec,
    u: &[f64],
    tolerance: f64,
    regularity_threshold: f64,
) -> Result<PointClassification> {
    let (value, g) = eval_with_jacobian(spec, u).map_err(|e| e.at_point(u))?;
    let jet = FieldJet::from_toeplitz(&value, &g);
    let torsion = normalized(&nijenhuis_from_jet(&jet), &jet);
    Ok(PointClassification {
        point: u.to_vec(),
        torsion,
        reports: ConditionForm::ALL
            .iter()
            .map(|f| residuals_from_jacobian(&g, *f, tolerance))
            .collect(),
        regularity: value.regularity(regularity_threshold),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub tolerance: f64,
    pub points: Vec<PointClassification>,
    pub nijenhuis_by_torsion: bool,
    /// Whether each form passes at every point, in [`ConditionForm::ALL`] order.
    pub passes: Vec<(ConditionForm, bool)>,
    pub gl_regular_everywhere: bool,
    /// The four verdicts coincide at every point.
    pub forms_agree: bool,
    /// Zero torsion while some condition fails, only possible off the
    /// regular locus.
    pub torsion_without_conditions: bool,
}

impl Classification {
    /// Aggregates per-point results in the given order.
    pub fn from_points(points: Vec<PointClassification>, tolerance: f64) -> Self {
        let nijenhuis_by_torsion = points.iter().all(|p| p.torsion <= tolerance);
        let passes: Vec<(ConditionForm, bool)> = ConditionForm::ALL
            .iter()
            .map(|f| (*f, points.iter().all(|p| p.report(*f).passed)))
            .collect();
        let gl_regular_everywhere = points.iter().all(|p| p.regularity.regular);
        let forms_agree = points.iter().all(PointClassification::forms_agree);
        let all_pass = passes.iter().all(|(_, ok)| *ok);
        Self {
            tolerance,
            torsion_without_conditions: nijenhuis_by_torsion && !all_pass,
            points,
            nijenhuis_by_torsion,
            passes,
            gl_regular_everywhere,
            forms_agree,
        }
    }

    pub fn passes(&self, form: ConditionForm) -> bool {
        self.passes.iter().any(|(f, ok)| *f == form && *ok)
    }

    pub fn all_forms_pass(&self) -> bool {
        self.passes.iter().all(|(_, ok)| *ok)
    }

    pub fn max_torsion(&self) -> f64 {
        self.points.iter().fold(0.0, |m: f64, p| m.max(p.torsion))
    }
}

pub fn classify(spec: &OperatorFieldSpec, points: &[Vec<f64>], tolerance: f64) -> Result<Classification> {
    classify_with_threshold(spec, points, tolerance, REGULARITY_THRESHOLD)
}

pub fn classify_with_threshold(
    spec: &OperatorFieldSpec,
    points: &[Vec<f64>],
    tolerance: f64,
    regularity_threshold: f64,
) -> Result<Classification> {
    if points.is_empty() {
        return Err(crate::Error::InvalidInput("classification needs at least one point".into()));
    }
    let per_point = points
        .iter()
        .map(|u| classify_point(spec, u, tolerance, regularity_threshold))
        .collect::<Result<Vec<_>>>()?;
    Ok(Classification::from_points(per_point, tolerance))
}
