//! Independent references for the test suites: multivariate polynomials,
//! generating functions expanded by hand-rolled series arithmetic over
//! polynomial coefficients, and dense matrix products.
#![allow(dead_code)]

use std::collections::BTreeMap;

use nijtoep_core::Matrix;
use rand::Rng;

/// A polynomial in `nvars` variables, keyed by exponent vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub nvars: usize,
    pub terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        if c != 0.0 {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        let mut p = Self::zero(nvars);
        p.terms.insert(e, 1.0);
        p
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &o.terms {
            *out.terms.entry(e.clone()).or_insert(0.0) += c;
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|c| *c *= s);
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &o.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *out.terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut d = e.clone();
                d[i] -= 1;
                *out.terms.entry(d).or_insert(0.0) += c * e[i] as f64;
            }
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * e.iter().zip(x).map(|(k, xi)| xi.powi(*k as i32)).product::<f64>())
            .sum()
    }

    /// Source text over the given variable names, parseable by `Expression`.
    pub fn to_text(&self, names: &[String]) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut t = format!("({c:?})");
                for (k, name) in e.iter().zip(names) {
                    match k {
                        0 => {}
                        1 => t.push_str(&format!("*{name}")),
                        _ => t.push_str(&format!("*{name}^{k}")),
                    }
                }
                t
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

pub fn coordinate_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("u{i}")).collect()
}

/// `sum c p^a q^b` (or `c x^a` when univariate, with `b = 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct PqPoly {
    pub terms: Vec<(u32, u32, f64)>,
}

impl PqPoly {
    pub fn text(&self) -> String {
        self.render("p", Some("q"))
    }

    pub fn univariate_text(&self) -> String {
        self.render("x", None)
    }

    fn render(&self, p: &str, q: Option<&str>) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(a, b, c)| {
                let mut t = format!("({c:?})");
                if *a > 0 {
                    t.push_str(&format!("*{p}^{a}"));
                }
                if *b > 0 {
                    t.push_str(&format!("*{}^{b}", q.expect("univariate terms have b = 0")));
                }
                t
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }

    pub fn eval(&self, p: f64, q: f64) -> f64 {
        self.terms.iter().map(|(a, b, c)| c * p.powi(*a as i32) * q.powi(*b as i32)).sum()
    }

    /// Random terms of total degree at most `degree`, constant term `c0`.
    pub fn random(rng: &mut impl Rng, degree: u32, c0: f64, univariate: bool) -> Self {
        let mut terms = vec![(0, 0, c0)];
        for a in 0..=degree {
            for b in 0..=(degree - a) {
                if (a, b) == (0, 0) || (univariate && b > 0) {
                    continue;
                }
                if rng.gen_bool(0.6) {
                    terms.push((a, b, round(rng.gen_range(-1.0..1.0))));
                }
            }
        }
        Self { terms }
    }
}

/// Keeps printed coefficients short and exact.
pub fn round(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

type Series = Vec<Poly>;

fn series_mul(a: &Series, b: &Series) -> Series {
    let n = a.len();
    let nv = a[0].nvars;
    (0..n)
        .map(|k| (0..=k).fold(Poly::zero(nv), |acc, i| acc.add(&a[i].mul(&b[k - i]))))
        .collect()
}

fn series_pow(a: &Series, k: u32) -> Series {
    let n = a.len();
    let nv = a[0].nvars;
    let mut out: Series = (0..n).map(|i| Poly::constant(nv, if i == 0 { 1.0 } else { 0.0 })).collect();
    for _ in 0..k {
        out = series_mul(&out, a);
    }
    out
}

/// `p(t) = u^n + u^{n-1} t + ... + u^1 t^{n-1}` and `q = p'`.
pub fn pq_series(n: usize) -> (Series, Series) {
    let p = (0..n).map(|k| Poly::var(n, n - 1 - k)).collect();
    let q = (0..n)
        .map(|k| if k + 2 <= n { Poly::var(n, n - 2 - k).scale((k + 1) as f64) } else { Poly::zero(n) })
        .collect();
    (p, q)
}

fn eval_pq_series(f: &PqPoly, p: &Series, q: &Series) -> Series {
    let n = p.len();
    let mut out: Series = vec![Poly::zero(n); n];
    for (a, b, c) in &f.terms {
        let term = series_mul(&series_pow(p, *a), &series_pow(q, *b));
        out = out.iter().zip(&term).map(|(x, y)| x.add(&y.scale(*c))).collect();
    }
    out
}

/// `g_1 .. g_n` of `f_1(P,Q) J^{n-1} + ... + f_{n-1}(P,Q) J + f_n(P)` as
/// polynomials in `u^1 .. u^n`.
pub fn generated_coefficients(pair: &[PqPoly], diagonal: Option<&PqPoly>) -> Vec<Poly> {
    let n = pair.len() + 1;
    let (p, q) = pq_series(n);
    let mut l: Series = match diagonal {
        Some(d) => eval_pq_series(d, &p, &q),
        None => vec![Poly::zero(n); n],
    };
    for (i, f) in pair.iter().enumerate() {
        let shift = n - 1 - i;
        let s = eval_pq_series(f, &p, &q);
        for k in shift..n {
            l[k] = l[k].add(&s[k - shift]);
        }
    }
    // g_i is the coefficient of t^{n-i}.
    (1..=n).map(|i| l[n - i].clone()).collect()
}

/// Dense Toeplitz matrix with `g_n` on the diagonal.
pub fn dense_toeplitz(g: &[f64]) -> Matrix {
    let n = g.len();
    Matrix::from_fn(n, |i, j| if j >= i { g[n - 1 - (j - i)] } else { 0.0 })
}

/// `sum c P^a Q^b` by dense matrix products.
pub fn dense_matrix_function(f: &PqPoly, p: &Matrix, q: &Matrix) -> Matrix {
    let n = p.n();
    let pow = |m: &Matrix, k: u32| (0..k).fold(Matrix::identity(n), |acc, _| acc.mul(m));
    f.terms
        .iter()
        .fold(Matrix::zeros(n), |acc, (a, b, c)| acc.add(&pow(p, *a).mul(&pow(q, *b)).scale(*c)))
}

/// Random polynomial in `nvars` variables of total degree at most 2.
pub fn random_quadratic(rng: &mut impl Rng, nvars: usize, scale: f64) -> Poly {
    let mut p = Poly::constant(nvars, round(rng.gen_range(-1.0..1.0)) * scale);
    for i in 0..nvars {
        p = p.add(&Poly::var(nvars, i).scale(round(rng.gen_range(-1.0..1.0)) * scale));
        for j in i..nvars {
            if rng.gen_bool(0.4) {
                p = p.add(&Poly::var(nvars, i).mul(&Poly::var(nvars, j)).scale(round(rng.gen_range(-1.0..1.0)) * scale));
            }
        }
    }
    p
}

pub fn random_point(rng: &mut impl Rng, n: usize, delta: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>() * delta).collect()
}

fn gauss_legendre_5() -> ([f64; 5], [f64; 5]) {
    let a = (245.0 - 14.0 * (70.0f64).sqrt()).sqrt() / 21.0;
    let b = (245.0 + 14.0 * (70.0f64).sqrt()).sqrt() / 21.0;
    let wa = (322.0 + 13.0 * (70.0f64).sqrt()) / 900.0;
    let wb = (322.0 - 13.0 * (70.0f64).sqrt()) / 900.0;
    ([-b, -a, 0.0, a, b], [wb, wa, 128.0 / 225.0, wa, wb])
}

/// `int_0^x f` by composite five-point Gauss–Legendre on `panels` panels.
pub fn quadrature(f: impl Fn(f64) -> f64, x: f64, panels: usize) -> f64 {
    let (nodes, weights) = gauss_legendre_5();
    let h = x / panels as f64;
    (0..panels)
        .map(|k| {
            let mid = (k as f64 + 0.5) * h;
            nodes
                .iter()
                .zip(&weights)
                .map(|(t, w)| w * f(mid + t * h / 2.0))
                .sum::<f64>()
                * h
                / 2.0
        })
        .sum()
}
