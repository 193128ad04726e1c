//! Building Nijenhuis operators from generating functions and certifying
//! them at sample points.

use alloc::vec::Vec;

use crate::conditions::{classify_with_threshold, Classification};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::field::OperatorFieldSpec;
use crate::toeplitz::REGULARITY_THRESHOLD;

/// `L = f_1(P,Q) J^{n-1} + ... + f_{n-1}(P,Q) J + f_n(P)`.
///
/// `f` lists `f_1 .. f_{n-1}` (functions of `p`, `q`) followed by `f_n` (a
/// function of `x`); `f_n` may be omitted when `include_f_n` is false, and is
/// ignored in that case. With `regularity = Some(threshold)` the call fails
/// unless `|f_{n-1}(0, 0)| > threshold`.
pub fn generate_operator(
    n: usize,
    mut f: Vec<Expression>,
    include_f_n: bool,
    regularity: Option<f64>,
) -> Result<OperatorFieldSpec> {
    let expected = if include_f_n { n } else { n - 1 };
    if n < 2 || !(f.len() == expected || (!include_f_n && f.len() == n)) {
        return Err(Error::DimensionMismatch {
            expected,
            found: f.len(),
        });
    }
    let diagonal = if f.len() == n { f.pop() } else { None };
    let diagonal = if include_f_n { diagonal } else { None };
    if let Some(threshold) = regularity {
        let value = f[n - 2].eval(&[0.0, 0.0])?;
        if !(libm::fabs(value) > threshold) {
            return Err(Error::RegularityViolation {
                point: alloc::vec![0.0, 0.0],
                value,
                threshold,
            });
        }
    }
    OperatorFieldSpec::generated(n, f, diagonal)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub classification: Classification,
    pub max_torsion: f64,
    pub passed: bool,
}

/// Zero torsion and all four condition forms at every point.
pub fn certify(spec: &OperatorFieldSpec, points: &[Vec<f64>], tolerance: f64) -> Result<Certificate> {
    let classification = classify_with_threshold(spec, points, tolerance, REGULARITY_THRESHOLD)?;
    Ok(Certificate::from_classification(classification))
}

impl Certificate {
    pub fn from_classification(classification: Classification) -> Self {
        let passed = classification.nijenhuis_by_torsion && classification.all_forms_pass();
        Self {
            max_torsion: classification.max_torsion(),
            passed,
            classification,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::DEFAULT_TOLERANCE;
    use crate::expr::{PAIR, UNIVARIATE};
    use alloc::vec;

    fn pair(t: &str) -> Expression {
        Expression::parse(t, PAIR).unwrap()
    }

    #[test]
    fn arity_and_count_errors() {
        let uni = Expression::parse("x", UNIVARIATE).unwrap();
        assert!(matches!(
            generate_operator(2, vec![uni.clone(), uni.clone()], true, None),
            Err(Error::ArityMismatch { .. })
        ));
        assert!(matches!(
            generate_operator(3, vec![pair("p")], false, None),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn regularity_is_enforced_on_request() {
        let spec = generate_operator(2, vec![pair("p + q")], false, Some(REGULARITY_THRESHOLD));
        assert!(matches!(spec, Err(Error::RegularityViolation { .. })));
        assert!(generate_operator(2, vec![pair("p + q")], false, None).is_ok());
        assert!(generate_operator(2, vec![pair("1 + q")], false, Some(REGULARITY_THRESHOLD)).is_ok());
    }

    #[test]
    fn diagonal_free_when_excluded() {
        let uni = Expression::parse("x^2 + 1", UNIVARIATE).unwrap();
        let spec = generate_operator(3, vec![pair("p"), pair("1 + q"), uni], false, None).unwrap();
        let g = spec.eval(&[0.2, 0.3, 0.4]).unwrap();
        assert_eq!(*g.diagonal(), 0.0);
    }

    #[test]
    fn constant_generators_give_constant_fields() {
        let uni = Expression::parse("3", UNIVARIATE).unwrap();
        let spec = generate_operator(3, vec![pair("1"), pair("2"), uni], true, None).unwrap();
        let pts = vec![vec![0.1, 0.2, 0.3], vec![0.4, 0.0, 0.2]];
        let cert = certify(&spec, &pts, DEFAULT_TOLERANCE).unwrap();
        assert!(cert.passed);
        assert_eq!(cert.max_torsion, 0.0);
        assert_eq!(spec.eval(&pts[0]).unwrap().coeffs(), &[1.0, 2.0, 3.0]);
    }
}
