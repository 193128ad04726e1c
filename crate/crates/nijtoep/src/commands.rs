//! The `generate`, `check` and `transform` pipelines.

use std::fmt::Write as _;

use nijtoep_core::chart::Grid;
use nijtoep_core::conditions::{classify_point, Classification, DEFAULT_TOLERANCE};
use nijtoep_core::field::torsion_norms;
use nijtoep_core::transform::{pushforward_check, run_algorithm, TransformOptions, TransformResult};
use nijtoep_core::OperatorFieldSpec;

use crate::config::{
    parse_coordinate_expression, parse_last_coordinate_expression, Config, ConfigError, DEFAULT_SYS_TOLERANCE,
};
use crate::parallel::map_ordered;
use crate::report::{
    ClosednessSection, FieldReport, FieldSummary, JacobianSection, PointReport, PushforwardSection, SysSection,
    TransformReport,
};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] nijtoep_core::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CommandError {
    /// `2` for failed mathematical checks, `1` for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Core(nijtoep_core::Error::ClosednessViolation { .. })
            | CommandError::Core(nijtoep_core::Error::InconsistentSystem { .. }) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    /// Pretty-printed JSON, newline-terminated.
    pub report: String,
    pub passed: bool,
    /// CSV of node coordinates and `v` values, for `transform`.
    pub dump: Option<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            2
        }
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CommandError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn field_report(
    command: &'static str,
    mode: &'static str,
    spec: &OperatorFieldSpec,
    config: &Config,
) -> Result<FieldReport, CommandError> {
    let tolerance = config.tolerance_or(DEFAULT_TOLERANCE);
    let threshold = config.regularity_threshold();
    let points = config.sample_points();
    if points.is_empty() {
        return Err(nijtoep_core::Error::InvalidInput("no sample points".into()).into());
    }
    let per_point = map_ordered(&points, |u| {
        let c = classify_point(spec, u, tolerance, threshold)?;
        let norms = torsion_norms(spec, u)?;
        Ok::<_, nijtoep_core::Error>((c, norms))
    })?;
    let reports: Vec<PointReport> = per_point.iter().map(|(c, n)| PointReport::new(c, *n)).collect();
    let classification = Classification::from_points(per_point.into_iter().map(|(c, _)| c).collect(), tolerance);
    let summary = FieldSummary::new(&classification, &reports);
    Ok(FieldReport {
        command,
        n: spec.n(),
        mode,
        tolerance,
        regularity_threshold: threshold,
        seed: config.problem.seed,
        passed: classification.nijenhuis_by_torsion && classification.all_forms_pass(),
        summary,
        points: reports,
    })
}

/// `g1 .. gn` when any `g` key is present, otherwise `f1 .. fn`.
fn field_spec(config: &Config) -> Result<(OperatorFieldSpec, &'static str), CommandError> {
    if config.functions.keys().any(|k| k.starts_with('g')) {
        Ok((config.direct_spec()?, "direct"))
    } else {
        Ok((config.generated_spec()?, "generated"))
    }
}

fn field_outcome(command: &'static str, config: &Config) -> Result<Outcome, CommandError> {
    let (spec, mode) = field_spec(config)?;
    let report = field_report(command, mode, &spec, config)?;
    Ok(Outcome {
        passed: report.passed,
        report: to_json(&report)?,
        dump: None,
    })
}

/// Certifies a field: zero torsion and every condition form at every point.
pub fn generate(config: &Config) -> Result<Outcome, CommandError> {
    field_outcome("generate", config)
}

/// Torsions and condition residuals of a field given either directly
/// (`g1 .. gn`) or by generators.
pub fn check(config: &Config) -> Result<Outcome, CommandError> {
    field_outcome("check", config)
}

/// Runs the integration scheme for `M` (from `f1 .. f(n-1)`) and pushes
/// `M` and every listed `L` forward.
pub fn transform(config: &Config, want_dump: bool) -> Result<Outcome, CommandError> {
    let n = config.n();
    let section = config.transform_section()?;
    if config.functions.contains_key(&format!("f{n}")) {
        return Err(ConfigError::Field {
            field: format!("functions.f{n}"),
            message: "transform integrates M = f1(P,Q) J^(n-1) + ... without a diagonal term; remove this key".into(),
        }
        .into());
    }
    let m_spec = config.generated_spec()?;
    let q = parse_last_coordinate_expression("transform.q", &section.q, n)?;
    let r = section
        .r
        .iter()
        .enumerate()
        .map(|(k, t)| parse_last_coordinate_expression(&format!("transform.r{}", k + 1), t, n))
        .collect::<Result<Vec<_>, _>>()?;
    let l_specs = section
        .l
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let exprs = g
                .iter()
                .map(|t| parse_coordinate_expression(&format!("transform.L[{i}]"), t, n))
                .collect::<Result<Vec<_>, _>>()?;
            OperatorFieldSpec::direct(n, exprs).map_err(|source| ConfigError::Invalid {
                field: format!("transform.L[{i}]"),
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let grid = Grid::new(n, config.degree(), config.delta())?;
    let options = TransformOptions {
        regularity_threshold: section.m_threshold,
        sys_tolerance: config.tolerance_or(DEFAULT_SYS_TOLERANCE),
        ..TransformOptions::default()
    };
    let result = run_algorithm(&m_spec, &q, &r, &grid, &options)?;
    let ptol = section.pushforward_tolerance;
    let mut pushforward = vec![PushforwardSection::new(
        "M".into(),
        &pushforward_check(&result.v, &m_spec, &grid, ptol, options.margin)?,
    )];
    for (i, l) in l_specs.iter().enumerate() {
        let p = pushforward_check(&result.v, l, &grid, ptol, options.margin)?;
        pushforward.push(PushforwardSection::new(format!("L{}", i + 1), &p));
    }
    let rr = &result.residual_report;
    let passed = rr.sys.passed && pushforward[0].equals_j && pushforward.iter().all(|p| p.is_toeplitz);
    let report = TransformReport {
        command: "transform",
        n,
        degree: grid.degree(),
        delta: grid.delta(),
        tolerance: options.sys_tolerance,
        pushforward_tolerance: ptol,
        m_threshold: options.regularity_threshold,
        passed,
        sys: SysSection::from(&rr.sys),
        closedness: rr.closedness.iter().map(ClosednessSection::from).collect(),
        jacobian: JacobianSection::from(&rr.jacobian),
        pushforward,
    };
    Ok(Outcome {
        passed,
        report: to_json(&report)?,
        dump: want_dump.then(|| dump_csv(&grid, &result)),
    })
}

/// `u1,..,un,v1,..,vn`, one row per node.
pub fn dump_csv(grid: &Grid, result: &TransformResult) -> String {
    let n = grid.n();
    let header: Vec<String> = (1..=n)
        .map(|i| format!("u{i}"))
        .chain((1..=n).map(|i| format!("v{i}")))
        .collect();
    let mut out = header.join(",");
    out.push('\n');
    for idx in 0..grid.len() {
        let row: Vec<String> = grid
            .point(idx)
            .into_iter()
            .chain(result.v.iter().map(|v| v.values()[idx]))
            .map(|x| x.to_string())
            .collect();
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}
