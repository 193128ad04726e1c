//! JSON report shapes. Field order is the serialization order.

use nijtoep_core::conditions::{Classification, ConditionForm, ConditionReport, PointClassification};
use nijtoep_core::field::TorsionNorms;
use nijtoep_core::transform::{ClosednessLevel, JacobianDiagnostics, PushforwardReport, SysReport};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct FormVerdict {
    pub form: &'static str,
    pub passed: bool,
    pub max_residual: f64,
    pub residuals: Vec<f64>,
}

impl From<&ConditionReport> for FormVerdict {
    fn from(r: &ConditionReport) -> Self {
        Self {
            form: r.form.name(),
            passed: r.passed,
            max_residual: r.max_residual,
            residuals: r.per_equation_residuals.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointReport {
    pub point: Vec<f64>,
    pub nijenhuis: f64,
    pub haantjes: f64,
    pub gl_regular: bool,
    /// `g_{n-1}`, whose non-vanishing is gl-regularity.
    pub regularity_witness: f64,
    pub forms_agree: bool,
    pub conditions: Vec<FormVerdict>,
}

impl PointReport {
    pub fn new(p: &PointClassification, norms: TorsionNorms) -> Self {
        Self {
            point: p.point.clone(),
            nijenhuis: norms.nijenhuis,
            haantjes: norms.haantjes,
            gl_regular: p.regularity.regular,
            regularity_witness: p.regularity.witness,
            forms_agree: p.forms_agree(),
            conditions: p.reports.iter().map(FormVerdict::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FormSummary {
    pub form: &'static str,
    pub passed: bool,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldSummary {
    pub points: usize,
    pub max_nijenhuis: f64,
    pub max_haantjes: f64,
    pub nijenhuis: bool,
    pub haantjes: bool,
    pub forms: Vec<FormSummary>,
    pub forms_agree: bool,
    pub gl_regular_everywhere: bool,
    pub torsion_without_conditions: bool,
}

impl FieldSummary {
    pub fn new(c: &Classification, points: &[PointReport]) -> Self {
        let max_haantjes = points.iter().fold(0.0, |m: f64, p| m.max(p.haantjes));
        Self {
            points: c.points.len(),
            max_nijenhuis: c.max_torsion(),
            max_haantjes,
            nijenhuis: c.nijenhuis_by_torsion,
            haantjes: max_haantjes <= c.tolerance,
            forms: ConditionForm::ALL
                .iter()
                .map(|f| FormSummary {
                    form: f.name(),
                    passed: c.passes(*f),
                    max_residual: c.points.iter().fold(0.0, |m: f64, p| m.max(p.report(*f).max_residual)),
                })
                .collect(),
            forms_agree: c.forms_agree,
            gl_regular_everywhere: c.gl_regular_everywhere,
            torsion_without_conditions: c.torsion_without_conditions,
        }
    }
}

/// Output of `generate` and `check`.
#[derive(Debug, Clone, Serialize)]
pub struct FieldReport {
    pub command: &'static str,
    pub n: usize,
    pub mode: &'static str,
    pub tolerance: f64,
    pub regularity_threshold: f64,
    pub seed: u64,
    /// Zero torsion and all four condition forms at every point.
    pub passed: bool,
    pub summary: FieldSummary,
    pub points: Vec<PointReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SysSection {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    pub min_dv1_du1: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl From<&SysReport> for SysSection {
    fn from(s: &SysReport) -> Self {
        Self {
            residuals: s.residuals.clone(),
            max_residual: s.max_residual,
            min_dv1_du1: s.min_dv1_du1,
            tolerance: s.tolerance,
            passed: s.passed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClosednessSection {
    pub target: usize,
    pub symmetric: f64,
    pub m_form: f64,
}

impl From<&ClosednessLevel> for ClosednessSection {
    fn from(c: &ClosednessLevel) -> Self {
        Self {
            target: c.target,
            symmetric: c.symmetric,
            m_form: c.m_form,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct JacobianSection {
    pub lower_triangle: f64,
    pub diagonal_ratio: f64,
}

impl From<&JacobianDiagnostics> for JacobianSection {
    fn from(j: &JacobianDiagnostics) -> Self {
        Self {
            lower_triangle: j.lower_triangle,
            diagonal_ratio: j.diagonal_ratio,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PushforwardSection {
    pub operator: String,
    pub toeplitz_deviation: f64,
    pub j_deviation: f64,
    pub is_toeplitz: bool,
    pub equals_j: bool,
}

impl PushforwardSection {
    pub fn new(operator: String, p: &PushforwardReport) -> Self {
        Self {
            operator,
            toeplitz_deviation: p.toeplitz_deviation,
            j_deviation: p.j_deviation,
            is_toeplitz: p.is_toeplitz,
            equals_j: p.equals_j,
        }
    }
}

/// Output of `transform`.
#[derive(Debug, Clone, Serialize)]
pub struct TransformReport {
    pub command: &'static str,
    pub n: usize,
    pub degree: usize,
    pub delta: f64,
    pub tolerance: f64,
    pub pushforward_tolerance: f64,
    pub m_threshold: f64,
    /// System residuals within tolerance, `M` pushed to `J`, every `L`
    /// pushed to Toeplitz form.
    pub passed: bool,
    pub sys: SysSection,
    pub closedness: Vec<ClosednessSection>,
    pub jacobian: JacobianSection,
    pub pushforward: Vec<PushforwardSection>,
}
