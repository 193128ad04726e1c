//! Tensor-product Chebyshev grids on the box `[0, delta]^n`.
//!
//! Each axis carries the Chebyshev–Gauss–Lobatto points mapped to
//! `[0, delta]` in increasing order. Values are stored row-major: axis `k`
//! has stride `d^(n-1-k)`. Differentiation and integration are dense `d x d`
//! matrices applied line by line along one axis.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::expr::Expression;

pub const DEFAULT_DELTA: f64 = 0.5;
pub const MAX_DIMENSION: usize = 6;
pub const MIN_DEGREE: usize = 4;

/// Nodes per axis used when none is given: 16 up to `n = 4`, 10 beyond.
pub fn default_degree(n: usize) -> usize {
    if n <= 4 {
        16
    } else {
        10
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    degree: usize,
    delta: f64,
    nodes: Vec<f64>,
    diff: Vec<f64>,
    integ: Vec<f64>,
}

impl Grid {
    pub fn new(n: usize, degree: usize, delta: f64) -> Result<Arc<Self>> {
        if n == 0 || n > MAX_DIMENSION {
            return Err(Error::InvalidInput(alloc::format!("grid dimension must be 1..={MAX_DIMENSION}, got {n}")));
        }
        if degree < MIN_DEGREE {
            return Err(Error::InvalidInput(alloc::format!("at least {MIN_DEGREE} nodes per axis required, got {degree}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!("box edge must be positive, got {delta}")));
        }
        let nodes = cgl_nodes(degree, delta);
        let diff = differentiation_matrix(&nodes);
        let integ = integration_matrix(degree, delta);
        Ok(Arc::new(Self {
            n,
            degree,
            delta,
            nodes,
            diff,
            integ,
        }))
    }

    pub fn with_defaults(n: usize) -> Result<Arc<Self>> {
        Self::new(n, default_degree(n), DEFAULT_DELTA)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.degree.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.degree.pow((self.n - 1 - axis) as u32)
    }

    /// Node index along `axis` of the flat index `idx`.
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        (idx / self.stride(axis)) % self.degree
    }

    pub fn multi_index(&self, idx: usize) -> Vec<usize> {
        (0..self.n).map(|k| self.axis_index(idx, k)).collect()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        (0..self.n).map(|k| self.nodes[self.axis_index(idx, k)]).collect()
    }

    /// Flat indices whose every axis index lies in `margin..d-margin`.
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&idx| {
                (0..self.n).all(|k| {
                    let a = self.axis_index(idx, k);
                    a >= margin && a + margin < self.degree
                })
            })
            .collect()
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis >= self.n {
            return Err(Error::InvalidInput(alloc::format!("axis {axis} out of range for dimension {}", self.n)));
        }
        Ok(())
    }
}

/// `t_j = delta (1 - cos(pi j / N)) / 2`, `N = d - 1`.
fn cgl_nodes(d: usize, delta: f64) -> Vec<f64> {
    let big_n = (d - 1) as f64;
    let mut nodes: Vec<f64> = (0..d)
        .map(|j| delta * (1.0 - libm::cos(PI * j as f64 / big_n)) / 2.0)
        .collect();
    nodes[0] = 0.0;
    nodes[d - 1] = delta;
    nodes
}

/// Barycentric differentiation matrix; diagonal from the negative row sum.
fn differentiation_matrix(t: &[f64]) -> Vec<f64> {
    let d = t.len();
    let w: Vec<f64> = (0..d)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == d - 1 {
                s / 2.0
            } else {
                s
            }
        })
        .collect();
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        let mut row_sum = 0.0;
        for j in 0..d {
            if i != j {
                let v = (w[j] / w[i]) / (t[i] - t[j]);
                m[i * d + j] = v;
                row_sum += v;
            }
        }
        m[i * d + i] = -row_sum;
    }
    m
}

/// Row `i` integrates the interpolant from `0` to `t_i`.
fn integration_matrix(d: usize, delta: f64) -> Vec<f64> {
    let big_n = d - 1;
    let nf = big_n as f64;
    let cos_table = |k: usize, j: usize| libm::cos(PI * (k * j) as f64 / nf);
    let mut m = vec![0.0; d * d];
    for col in 0..d {
        // Chebyshev coefficients of the unit vector e_col.
        let c_col = if col == 0 || col == big_n { 2.0 } else { 1.0 };
        let a: Vec<f64> = (0..d)
            .map(|k| {
                let c_k = if k == 0 || k == big_n { 2.0 } else { 1.0 };
                2.0 / (nf * c_k) * cos_table(k, col) / c_col
            })
            .collect();
        // Antiderivative coefficients, up to T_{N+1}.
        let mut b = vec![0.0; d + 1];
        for (k, &ak) in a.iter().enumerate() {
            match k {
                0 => b[1] += ak,
                1 => b[2] += ak / 4.0,
                _ => {
                    b[k + 1] += ak / (2.0 * (k + 1) as f64);
                    b[k - 1] -= ak / (2.0 * (k - 1) as f64);
                }
            }
        }
        let at_one: f64 = b.iter().sum();
        for i in 0..d {
            let f_x: f64 = b.iter().enumerate().map(|(k, bk)| bk * cos_table(k, i)).sum();
            m[i * d + col] = delta / 2.0 * (at_one - f_x);
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!("non-finite value at node {:?}", grid.point(idx))));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn constant(grid: &Arc<Grid>, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert!(Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid, "grids differ");
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m: f64, v| m.max(libm::fabs(*v)))
    }

    /// Applies a `d x d` matrix along `axis`.
    fn apply_along(&self, axis: usize, mat: &[f64]) -> Self {
        let g = &self.grid;
        let d = g.degree;
        let stride = g.stride(axis);
        let block = stride * d;
        let mut out = vec![0.0; self.values.len()];
        let mut line = vec![0.0; d];
        for outer in (0..self.values.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = self.values[base + j * stride];
                }
                for i in 0..d {
                    let row = &mat[i * d..(i + 1) * d];
                    out[base + i * stride] = row.iter().zip(&line).map(|(a, b)| a * b).sum();
                }
            }
        }
        Self {
            grid: self.grid.clone(),
            values: out,
        }
    }
}

/// Samples `f` at every node; errors carry the offending node.
pub fn grid_sample(f: impl Fn(&[f64]) -> Result<f64>, grid: &Arc<Grid>) -> Result<GridFunction> {
    let values = (0..grid.len())
        .map(|idx| {
            let u = grid.point(idx);
            match f(&u) {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(v) => Err(Error::InvalidInput(alloc::format!("non-finite value {v}")).at_point(&u)),
                Err(e) => Err(e.at_point(&u)),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GridFunction {
        grid: grid.clone(),
        values,
    })
}

/// Samples an expression in `u1 .. un`.
pub fn sample_expression(e: &Expression, grid: &Arc<Grid>) -> Result<GridFunction> {
    if e.arity() != grid.n() {
        return Err(Error::ArityMismatch {
            expected: grid.n(),
            found: e.arity(),
        });
    }
    grid_sample(|u| e.eval(u), grid)
}

/// Samples a one-variable expression at the last coordinate `u^n`.
pub fn sample_last_axis(e: &Expression, grid: &Arc<Grid>) -> Result<GridFunction> {
    if e.arity() != 1 {
        return Err(Error::ArityMismatch {
            expected: 1,
            found: e.arity(),
        });
    }
    let n = grid.n();
    grid_sample(|u| e.eval(&[u[n - 1]]), grid)
}

pub fn partial_derivative(g: &GridFunction, axis: usize) -> Result<GridFunction> {
    g.grid.check_axis(axis)?;
    Ok(g.apply_along(axis, &g.grid.diff))
}

/// Antiderivative along `axis` vanishing at the first node.
pub fn cumulative_integral(g: &GridFunction, axis: usize) -> Result<GridFunction> {
    g.grid.check_axis(axis)?;
    Ok(g.apply_along(axis, &g.grid.integ))
}

/// Pins each listed axis to its first node (coordinate `0`).
pub fn restrict_axes_zero(g: &GridFunction, axes: &[usize]) -> Result<GridFunction> {
    let grid = &g.grid;
    axes.iter().try_for_each(|&a| grid.check_axis(a))?;
    let values = (0..g.values.len())
        .map(|idx| {
            let src = axes
                .iter()
                .fold(idx, |i, &a| i - grid.axis_index(i, a) * grid.stride(a));
            g.values[src]
        })
        .collect();
    Ok(GridFunction {
        grid: grid.clone(),
        values,
    })
}

/// `v = sum_k int_0^{u^k} omega_k(0, .., 0, t, u^{k+1}, .., u^n) dt + r(u^n)`
/// for `omega = omega_1 du^1 + .. + omega_{n-1} du^{n-1}`.
pub fn primitive_of_closed_form(omega: &[GridFunction], r: Option<&Expression>) -> Result<GridFunction> {
    let first = omega
        .first()
        .ok_or_else(|| Error::InvalidInput("empty 1-form".into()))?;
    let grid = first.grid.clone();
    if omega.len() + 1 != grid.n() {
        return Err(Error::DimensionMismatch {
            expected: grid.n() - 1,
            found: omega.len(),
        });
    }
    let mut v = match r {
        Some(r) => sample_last_axis(r, &grid)?,
        None => GridFunction::constant(&grid, 0.0),
    };
    let mut pinned: Vec<usize> = Vec::new();
    for (k, w) in omega.iter().enumerate() {
        let term = cumulative_integral(&restrict_axes_zero(w, &pinned)?, k)?;
        v = v.add(&term);
        pinned.push(k);
    }
    Ok(v)
}
