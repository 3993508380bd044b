//! Uniform grids on [0, 1], Neumann diffusion solves, quadrature and norms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_CELLS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs at least {MIN_CELLS} cells, got {0}")]
    TooFewCells(usize),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },
    #[error("non-finite value at node {node}, component {component}")]
    NonFinite { node: usize, component: usize },
    #[error("point {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Points `x_i = i/n`, `i = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self, GridError> {
        if n < MIN_CELLS {
            return Err(GridError::TooFewCells(n));
        }
        Ok(Self { n })
    }

    pub fn cells(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> usize {
        self.n + 1
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.x(i)).collect()
    }

    /// Trapezoid weight of node `i`.
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n {
            0.5 * self.h()
        } else {
            self.h()
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.weight(i)).collect()
    }

    /// Trapezoid integral of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().enumerate().map(|(i, v)| self.weight(i) * v).sum()
    }
}

/// Nodal values, `(n+1) × dim`, stored node-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    dim: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid, dim: usize) -> Self {
        Self {
            grid,
            dim,
            values: vec![0.0; grid.nodes() * dim],
        }
    }

    pub fn constant(grid: Grid, value: &[f64]) -> Self {
        let mut f = Self::zeros(grid, value.len());
        for i in 0..grid.nodes() {
            f.node_mut(i).copy_from_slice(value);
        }
        f
    }

    pub fn from_fn<F: FnMut(f64, &mut [f64])>(grid: Grid, dim: usize, mut func: F) -> Self {
        let mut f = Self::zeros(grid, dim);
        for i in 0..grid.nodes() {
            let x = grid.x(i);
            func(x, f.node_mut(i));
        }
        f
    }

    pub fn from_values(grid: Grid, dim: usize, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.nodes() * dim {
            return Err(GridError::Shape {
                expected: format!("{} x {dim}", grid.nodes()),
                got: format!("{} values", values.len()),
            });
        }
        let f = Self { grid, dim, values };
        f.check_finite()?;
        Ok(f)
    }

    /// Build from per-component columns.
    pub fn from_components(grid: Grid, columns: &[Vec<f64>]) -> Result<Self, GridError> {
        let mut f = Self::zeros(grid, columns.len());
        for (c, col) in columns.iter().enumerate() {
            f.set_component(c, col)?;
        }
        f.check_finite()?;
        Ok(f)
    }

    pub fn check_finite(&self) -> Result<(), GridError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(GridError::NonFinite {
                node: p / self.dim.max(1),
                component: p % self.dim.max(1),
            }),
            None => Ok(()),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, node: usize, component: usize) -> f64 {
        self.values[node * self.dim + component]
    }

    pub fn set(&mut self, node: usize, component: usize, value: f64) {
        self.values[node * self.dim + component] = value;
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn node_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        (0..self.grid.nodes()).map(|i| self.get(i, c)).collect()
    }

    pub fn set_component(&mut self, c: usize, column: &[f64]) -> Result<(), GridError> {
        if column.len() != self.grid.nodes() || c >= self.dim {
            return Err(GridError::Shape {
                expected: format!("component < {} with {} nodes", self.dim, self.grid.nodes()),
                got: format!("component {c} with {} nodes", column.len()),
            });
        }
        for (i, v) in column.iter().enumerate() {
            self.set(i, c, *v);
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &GridFunction) -> Result<Self, GridError> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(out)
    }

    pub fn same_shape(&self, other: &GridFunction) -> Result<(), GridError> {
        if self.grid != other.grid || self.dim != other.dim {
            return Err(GridError::Shape {
                expected: format!("{} x {}", self.grid.nodes(), self.dim),
                got: format!("{} x {}", other.grid.nodes(), other.dim),
            });
        }
        Ok(())
    }

    /// Largest entry-wise absolute difference.
    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64, GridError> {
        self.same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Sample onto another grid by linear interpolation.
    pub fn resample(&self, target: Grid) -> GridFunction {
        let mut out = GridFunction::zeros(target, self.dim);
        for i in 0..target.nodes() {
            let v = interpolate(self, target.x(i)).expect("grid points lie in [0, 1]");
            out.node_mut(i).copy_from_slice(&v);
        }
        out
    }

    fn pointwise_norms(&self) -> Vec<f64> {
        (0..self.grid.nodes())
            .map(|i| self.node(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect()
    }
}

/// Solve a tridiagonal system in place; `sub[0]` and `sup[n-1]` are ignored.
pub fn thomas_solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i - 1];
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// `L_h` with the reflected ghost-point Neumann closure.
pub fn neumann_laplacian(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len() - 1;
    let h2 = h * h;
    (0..=n)
        .map(|i| {
            if i == 0 {
                2.0 * (u[1] - u[0]) / h2
            } else if i == n {
                2.0 * (u[n - 1] - u[n]) / h2
            } else {
                (u[i - 1] - 2.0 * u[i] + u[i + 1]) / h2
            }
        })
        .collect()
}

/// One scalar θ-step: `(I − θ dt D L_h) u_new = (I + (1−θ) dt D L_h) u_old + dt·rhs`.
pub fn diffusion_step_component(u: &[f64], d: f64, dt: f64, theta: f64, rhs: &[f64], h: f64) -> Vec<f64> {
    let n = u.len() - 1;
    let lap = neumann_laplacian(u, h);
    let mut b: Vec<f64> = (0..=n)
        .map(|i| u[i] + (1.0 - theta) * dt * d * lap[i] + dt * rhs[i])
        .collect();
    let r = theta * dt * d / (h * h);
    let diag = vec![1.0 + 2.0 * r; n + 1];
    let mut sub = vec![-r; n + 1];
    let mut sup = vec![-r; n + 1];
    sup[0] = -2.0 * r;
    sub[n] = -2.0 * r;
    thomas_solve(&sub, &diag, &sup, &mut b);
    b
}

pub fn implicit_diffusion_step(
    u: &GridFunction,
    diffusion: &[f64],
    dt: f64,
    theta: f64,
    rhs: &GridFunction,
) -> Result<GridFunction, GridError> {
    u.same_shape(rhs)?;
    if diffusion.len() != u.dim() {
        return Err(GridError::Shape {
            expected: format!("{} diffusion coefficients", u.dim()),
            got: diffusion.len().to_string(),
        });
    }
    if !(dt > 0.0) || !(0.0..=1.0).contains(&theta) {
        return Err(GridError::InvalidParameter(format!("dt = {dt}, theta = {theta}")));
    }
    let h = u.grid().h();
    let columns: Vec<Vec<f64>> = (0..u.dim())
        .into_par_iter()
        .map(|c| diffusion_step_component(&u.component(c), diffusion[c], dt, theta, &rhs.component(c), h))
        .collect();
    GridFunction::from_components(u.grid(), &columns)
}

fn check_q(q: f64) -> Result<(), GridError> {
    if q >= 1.0 {
        Ok(())
    } else {
        Err(GridError::InvalidParameter(format!("q = {q} must be in [1, inf]")))
    }
}

fn lq_of_pointwise(grid: Grid, p: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return p.iter().cloned().fold(0.0, f64::max);
    }
    let s: f64 = p.iter().enumerate().map(|(i, v)| grid.weight(i) * v.powf(q)).sum();
    s.powf(1.0 / q)
}

/// Trapezoid `L_q` norm, pointwise Euclidean in the components.
pub fn lq_norm(f: &GridFunction, q: f64) -> Result<f64, GridError> {
    check_q(q)?;
    Ok(lq_of_pointwise(f.grid(), &f.pointwise_norms(), q))
}

/// Second-order finite-difference derivative, one-sided at the ends.
pub fn derivative(f: &GridFunction) -> GridFunction {
    let grid = f.grid();
    let n = grid.cells();
    let h = grid.h();
    let mut out = GridFunction::zeros(grid, f.dim());
    for c in 0..f.dim() {
        for i in 0..=n {
            let d = if i == 0 {
                (-3.0 * f.get(0, c) + 4.0 * f.get(1, c) - f.get(2, c)) / (2.0 * h)
            } else if i == n {
                (3.0 * f.get(n, c) - 4.0 * f.get(n - 1, c) + f.get(n - 2, c)) / (2.0 * h)
            } else {
                (f.get(i + 1, c) - f.get(i - 1, c)) / (2.0 * h)
            };
            out.set(i, c, d);
        }
    }
    out
}

/// `Σ_{r ≤ order} ‖f^{(r)}‖_q` with finite-difference derivatives.
pub fn sobolev_integer_norm(f: &GridFunction, order: usize, q: f64) -> Result<f64, GridError> {
    check_q(q)?;
    let mut total = lq_norm(f, q)?;
    let mut d = f.clone();
    for _ in 0..order {
        d = derivative(&d);
        total += lq_norm(&d, q)?;
    }
    Ok(total)
}

/// Discrete Gagliardo seminorm of order `s ∈ (0, 1)`, excluding `i = j`.
pub fn gagliardo_seminorm(f: &GridFunction, s: f64, q: f64) -> f64 {
    let grid = f.grid();
    let h = grid.h();
    let nodes = grid.nodes();
    let exponent = 1.0 + q * s;
    // Kernel weight by index offset.
    let kernel: Vec<f64> = (0..nodes)
        .map(|k| if k == 0 { 0.0 } else { 1.0 / (k as f64 * h).powf(exponent) })
        .collect();
    let integer_q = (q.fract() == 0.0 && q <= 16.0).then_some(q as i32);
    let pow_q = |d: f64| match integer_q {
        Some(p) => d.powi(p),
        None => d.powf(q),
    };
    let scalar = f.dim() == 1;
    let sum: f64 = (0..nodes)
        .into_par_iter()
        .with_min_len(32)
        .map(|i| {
            let fi = f.node(i);
            let mut acc = 0.0;
            for j in i + 1..nodes {
                let diff = if scalar {
                    (fi[0] - f.node(j)[0]).abs()
                } else {
                    fi.iter().zip(f.node(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
                };
                if diff != 0.0 {
                    acc += pow_q(diff) * kernel[j - i];
                }
            }
            2.0 * acc
        })
        .sum();
    (h * h * sum).powf(1.0 / q)
}

/// `‖f‖_{W_q^{[l]}}` plus the seminorm of the `[l]`-th derivative.
pub fn sobolev_fractional_norm(f: &GridFunction, l: f64, q: f64) -> Result<f64, GridError> {
    check_q(q)?;
    if q.is_infinite() {
        return Err(GridError::InvalidParameter("q must be finite".into()));
    }
    let order = l.floor();
    let s = l - order;
    if !(l > 0.0) || !(s > 0.0 && s < 1.0) {
        return Err(GridError::InvalidParameter(format!("l = {l} must have a fractional part in (0, 1)")));
    }
    let order = order as usize;
    let mut d = f.clone();
    for _ in 0..order {
        d = derivative(&d);
    }
    Ok(sobolev_integer_norm(f, order, q)? + gagliardo_seminorm(&d, s, q))
}

/// Largest pairwise quotient `|f_i − f_j| / |x_i − x_j|^γ`.
pub fn holder_seminorm(f: &GridFunction, gamma: f64) -> f64 {
    let grid = f.grid();
    let nodes = grid.nodes();
    (0..nodes)
        .into_par_iter()
        .map(|i| {
            let fi = f.node(i);
            let mut best: f64 = 0.0;
            for j in i + 1..nodes {
                let diff: f64 = fi.iter().zip(f.node(j)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let dist = grid.x(j) - grid.x(i);
                best = best.max(diff / dist.powf(gamma));
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Discrete `C^γ` norm: pairwise quotient plus sup norm.
pub fn holder_quotient(f: &GridFunction, gamma: f64) -> Result<f64, GridError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(GridError::InvalidParameter(format!("gamma = {gamma} must be in (0, 1)")));
    }
    Ok(holder_seminorm(f, gamma) + lq_norm(f, f64::INFINITY)?)
}

/// Piecewise-linear interpolation at `x ∈ [0, 1]`.
pub fn interpolate(f: &GridFunction, x: f64) -> Result<Vec<f64>, GridError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(GridError::OutOfDomain(x));
    }
    let n = f.grid().cells();
    let mut pos = x * n as f64;
    if (pos - pos.round()).abs() < 1e-9 {
        pos = pos.round();
    }
    let i = (pos.floor() as usize).min(n - 1);
    let t = pos - i as f64;
    Ok(f.node(i)
        .iter()
        .zip(f.node(i + 1))
        .map(|(a, b)| if t == 0.0 { *a } else if t == 1.0 { *b } else { a + t * (b - a) })
        .collect())
}
