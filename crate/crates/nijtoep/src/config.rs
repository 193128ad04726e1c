//! TOML problem descriptions.
//!
//! ```toml
//! [problem]
//! n = 3
//! tolerance = 1e-9
//! seed = 7
//! samples = 50          # random points in [0, delta]^n, unless `points` is given
//!
//! [functions]
//! f1 = "p"              # generate/transform: f1 .. f(n-1) in p, q; fn in x
//! f2 = "1 + q"          # check: g1 .. gn in u1 .. un
//!
//! [transform]
//! q = "1 + u3"          # functions of u^n
//! r1 = "0"
//! r2 = "u3^2"
//! L = [["1", "0", "u3"]]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use nijtoep_core::chart::{default_degree, DEFAULT_DELTA};
use nijtoep_core::expr::{coordinate_names, ParseError, PAIR, UNIVARIATE};
use nijtoep_core::generator::generate_operator;
use nijtoep_core::toeplitz::REGULARITY_THRESHOLD;
use nijtoep_core::{Expression, OperatorFieldSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_SYS_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_PUSHFORWARD_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_M_THRESHOLD: f64 = 1e-4;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("{field}: {source} in `{text}`")]
    Expression {
        field: String,
        text: String,
        source: ParseError,
    },
    #[error("{field}: {source}")]
    Invalid {
        field: String,
        source: nijtoep_core::Error,
    },
}

fn field_error(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub n: usize,
    pub delta: Option<f64>,
    pub degree: Option<usize>,
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    pub samples: Option<usize>,
    pub points: Option<Vec<Vec<f64>>>,
    pub regularity_threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: Problem,
    #[serde(default)]
    functions: BTreeMap<String, String>,
    transform: Option<toml::Table>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformSection {
    pub q: String,
    /// `r[k-1]` is the integration constant attached to `v^k`.
    pub r: Vec<String>,
    pub l: Vec<Vec<String>>,
    pub pushforward_tolerance: f64,
    pub m_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub problem: Problem,
    pub functions: BTreeMap<String, String>,
    pub transform: Option<TransformSection>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub tolerance: Option<f64>,
    pub seed: Option<u64>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        let n = raw.problem.n;
        if !(2..=6).contains(&n) {
            return Err(field_error("problem.n", format!("must be between 2 and 6, got {n}")));
        }
        if let Some(delta) = raw.problem.delta {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(field_error("problem.delta", "must be positive"));
            }
        }
        if let Some(tol) = raw.problem.tolerance {
            if !(tol >= 0.0) {
                return Err(field_error("problem.tolerance", "must be non-negative"));
            }
        }
        if let Some(points) = &raw.problem.points {
            if let Some(i) = points.iter().position(|p| p.len() != n) {
                return Err(field_error(format!("problem.points[{i}]"), format!("expected {n} coordinates")));
            }
        }
        let transform = raw.transform.map(|t| parse_transform(t, n)).transpose()?;
        Ok(Self {
            problem: raw.problem,
            functions: raw.functions,
            transform,
        })
    }

    pub fn apply(&mut self, overrides: Overrides) {
        if let Some(t) = overrides.tolerance {
            self.problem.tolerance = Some(t);
        }
        if let Some(s) = overrides.seed {
            self.problem.seed = s;
        }
    }

    pub fn n(&self) -> usize {
        self.problem.n
    }

    pub fn delta(&self) -> f64 {
        self.problem.delta.unwrap_or(DEFAULT_DELTA)
    }

    pub fn degree(&self) -> usize {
        self.problem.degree.unwrap_or_else(|| default_degree(self.n()))
    }

    pub fn tolerance_or(&self, default: f64) -> f64 {
        self.problem.tolerance.unwrap_or(default)
    }

    pub fn regularity_threshold(&self) -> f64 {
        self.problem.regularity_threshold.unwrap_or(REGULARITY_THRESHOLD)
    }

    /// Explicit points, or `samples` uniform draws from `[0, delta]^n`
    /// seeded by `seed`.
    pub fn sample_points(&self) -> Vec<Vec<f64>> {
        if let Some(points) = &self.problem.points {
            return points.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.problem.seed);
        let delta = self.delta();
        (0..self.problem.samples.unwrap_or(DEFAULT_SAMPLES))
            .map(|_| (0..self.n()).map(|_| rng.gen::<f64>() * delta).collect())
            .collect()
    }

    fn function_keys(&self, prefix: char, count: usize, optional_last: bool) -> Result<Vec<Option<&String>>, ConfigError> {
        for key in self.functions.keys() {
            let ok = key
                .strip_prefix(prefix)
                .and_then(|rest| rest.parse::<usize>().ok())
                .is_some_and(|i| (1..=count).contains(&i));
            if !ok {
                return Err(field_error(
                    format!("functions.{key}"),
                    format!("expected keys {prefix}1 .. {prefix}{count}"),
                ));
            }
        }
        (1..=count)
            .map(|i| {
                let key = format!("{prefix}{i}");
                match self.functions.get(&key) {
                    Some(v) => Ok(Some(v)),
                    None if optional_last && i == count => Ok(None),
                    None => Err(field_error(format!("functions.{key}"), "missing")),
                }
            })
            .collect()
    }

    /// `f1 .. f(n-1)` in `p, q`, and optionally `fn` in `x`.
    pub fn generated_spec(&self) -> Result<OperatorFieldSpec, ConfigError> {
        let n = self.n();
        let texts = self.function_keys('f', n, true)?;
        let mut f = Vec::with_capacity(n);
        for (i, text) in texts.iter().enumerate() {
            let Some(text) = text else { continue };
            let vars = if i + 1 == n { UNIVARIATE } else { PAIR };
            f.push(parse_expression(&format!("functions.f{}", i + 1), text, vars)?);
        }
        let include_f_n = f.len() == n;
        generate_operator(n, f, include_f_n, None).map_err(|source| ConfigError::Invalid {
            field: "functions".into(),
            source,
        })
    }

    /// `g1 .. gn` in `u1 .. un`.
    pub fn direct_spec(&self) -> Result<OperatorFieldSpec, ConfigError> {
        let n = self.n();
        let texts = self.function_keys('g', n, false)?;
        let g = texts
            .iter()
            .enumerate()
            .map(|(i, t)| parse_coordinate_expression(&format!("functions.g{}", i + 1), t.unwrap(), n))
            .collect::<Result<Vec<_>, _>>()?;
        OperatorFieldSpec::direct(n, g).map_err(|source| ConfigError::Invalid {
            field: "functions".into(),
            source,
        })
    }

    pub fn transform_section(&self) -> Result<&TransformSection, ConfigError> {
        self.transform.as_ref().ok_or_else(|| field_error("transform", "section missing"))
    }
}

fn parse_transform(table: toml::Table, n: usize) -> Result<TransformSection, ConfigError> {
    let mut q = None;
    let mut r = vec![None; n - 1];
    let mut l = Vec::new();
    let mut pushforward_tolerance = DEFAULT_PUSHFORWARD_TOLERANCE;
    let mut m_threshold = DEFAULT_M_THRESHOLD;
    for (key, value) in table {
        let field = format!("transform.{key}");
        match key.as_str() {
            "q" => q = Some(as_string(&field, value)?),
            "L" => l = parse_l_list(&field, value, n)?,
            "pushforward_tolerance" => pushforward_tolerance = as_float(&field, value)?,
            "m_threshold" => m_threshold = as_float(&field, value)?,
            _ => {
                let k = key
                    .strip_prefix('r')
                    .and_then(|s| s.parse::<usize>().ok())
                    .filter(|k| (1..n).contains(k))
                    .ok_or_else(|| field_error(&field, "unknown key"))?;
                r[k - 1] = Some(as_string(&field, value)?);
            }
        }
    }
    let q = q.ok_or_else(|| field_error("transform.q", "missing"))?;
    let r = r
        .into_iter()
        .enumerate()
        .map(|(k, v)| v.ok_or_else(|| field_error(format!("transform.r{}", k + 1), "missing")))
        .collect::<Result<_, _>>()?;
    Ok(TransformSection {
        q,
        r,
        l,
        pushforward_tolerance,
        m_threshold,
    })
}

fn as_string(field: &str, value: toml::Value) -> Result<String, ConfigError> {
    match value {
        toml::Value::String(s) => Ok(s),
        other => Err(field_error(field, format!("expected a string, found {}", other.type_str()))),
    }
}

fn as_float(field: &str, value: toml::Value) -> Result<f64, ConfigError> {
    match value {
        toml::Value::Float(x) => Ok(x),
        toml::Value::Integer(i) => Ok(i as f64),
        other => Err(field_error(field, format!("expected a number, found {}", other.type_str()))),
    }
}

fn parse_l_list(field: &str, value: toml::Value, n: usize) -> Result<Vec<Vec<String>>, ConfigError> {
    let toml::Value::Array(items) = value else {
        return Err(field_error(field, "expected an array of g-lists"));
    };
    items
        .into_iter()
        .enumerate()
        .map(|(i, item)| {
            let f = format!("{field}[{i}]");
            let toml::Value::Array(g) = item else {
                return Err(field_error(&f, "expected an array of strings"));
            };
            if g.len() != n {
                return Err(field_error(&f, format!("expected {n} expressions, found {}", g.len())));
            }
            g.into_iter().map(|v| as_string(&f, v)).collect()
        })
        .collect()
}

pub fn parse_expression<V: AsRef<str>>(field: &str, text: &str, vars: &[V]) -> Result<Expression, ConfigError> {
    Expression::parse(text, vars).map_err(|source| ConfigError::Expression {
        field: field.into(),
        text: text.into(),
        source,
    })
}

pub fn parse_coordinate_expression(field: &str, text: &str, n: usize) -> Result<Expression, ConfigError> {
    parse_expression(field, text, &coordinate_names(n))
}

/// A function of `u^n` alone, written in the variable `u<n>`.
pub fn parse_last_coordinate_expression(field: &str, text: &str, n: usize) -> Result<Expression, ConfigError> {
    parse_expression(field, text, &[format!("u{n}")])
}
