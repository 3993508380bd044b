//! Fixed-point iteration over a time window with the hysteresis output
//! rebuilt from the previous iterate by the two-branch formula.

use serde::Serialize;

use super::kernel::frozen_step;
use super::{outputs, thresholds_at, SolverConfig, SolverError, SolverState};
use crate::analysis::free_boundary::find_root_a;
use crate::dsl::model::ModelSpec;
use crate::grid::GridFunction;
use crate::relay::{advance_configuration_screened, evaluate_output_into, Configuration};

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOutcome {
    /// States at the window's time levels after the start.
    pub states: Vec<SolverState>,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardSummary {
    pub window_start: f64,
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

/// `w(x, t_n)`: `W₁(u)` for `x ≤ b(t_n)` and `W₋₁(u)` beyond, with `b` the
/// running maximum of the iterate's roots.
fn two_branch_fields(model: &ModelSpec, start: &SolverState, iterate: &[GridFunction]) -> Result<Vec<GridFunction>, SolverError> {
    let grid = start.u.grid();
    let mut b = start.b;
    let mut fields = Vec::with_capacity(iterate.len());
    for (n, u) in iterate.iter().enumerate() {
        if n > 0 {
            b = b.max(find_root_a(u, &model.thresholds, b)?.a);
        }
        let mut w = GridFunction::zeros(grid, model.m);
        for i in 0..grid.nodes() {
            let zeta = if grid.x(i) <= b { Configuration::Plus } else { Configuration::Minus };
            evaluate_output_into(&model.thresholds, &model.branches, zeta, u.node(i), w.node_mut(i))?;
        }
        fields.push(w);
    }
    Ok(fields)
}

fn steps_in(window: f64, dt: f64) -> Result<usize, SolverError> {
    let steps = (window / dt).round();
    if steps < 1.0 || (steps * dt - window).abs() > 1e-9 * window.max(dt) {
        return Err(SolverError::Config(format!("window {window} is not a positive multiple of dt = {dt}")));
    }
    Ok(steps as usize)
}

/// Iterate the auxiliary-problem map on `[t, t + window]` starting from the
/// constant-in-time iterate `u(t)`.
pub fn solve_picard(state: &SolverState, model: &ModelSpec, config: &SolverConfig, window: f64) -> Result<PicardOutcome, SolverError> {
    let steps = steps_in(window, config.dt)?;
    let dt = config.dt;
    let mut iterate: Vec<GridFunction> = vec![state.u.clone(); steps + 1];
    let mut residuals = Vec::new();
    for j in 1..=config.picard_max_iter {
        let fields = two_branch_fields(model, state, &iterate[..steps])?;
        let mut next = Vec::with_capacity(steps + 1);
        let mut next_v = Vec::with_capacity(steps + 1);
        next.push(state.u.clone());
        next_v.push(state.v.clone());
        for n in 0..steps {
            let theta = if state.step + n < config.startup_steps { 1.0 } else { config.theta };
            let (u, v) = frozen_step(model, config.ode_scheme, &next[n], &next_v[n], &fields[n], dt, theta)?;
            if u.check_finite().is_err() || v.check_finite().is_err() {
                return Err(SolverError::NonFinite { t: state.t + (n + 1) as f64 * dt });
            }
            next.push(u);
            next_v.push(v);
        }
        let mut r: f64 = 0.0;
        for (a, b) in next.iter().zip(&iterate) {
            r = r.max(a.max_abs_diff(b)?);
        }
        residuals.push(r);
        iterate = next;
        if r <= config.picard_tol {
            let states = finish(state, model, &iterate, &next_v, dt)?;
            return Ok(PicardOutcome {
                states,
                iterations: j,
                residuals,
            });
        }
    }
    Err(SolverError::PicardNotConverged {
        iterations: config.picard_max_iter,
        residuals,
    })
}

/// Relay configurations along each node's time series of the converged
/// iterate, with outputs and free-boundary bookkeeping.
fn finish(start: &SolverState, model: &ModelSpec, us: &[GridFunction], vs: &[GridFunction], dt: f64) -> Result<Vec<SolverState>, SolverError> {
    let mut prev = start.clone();
    let mut out = Vec::with_capacity(us.len() - 1);
    for n in 1..us.len() {
        let u = &us[n];
        let gamma = thresholds_at(model, u)?;
        let xi = (0..prev.nodes())
            .map(|i| advance_configuration_screened(&model.thresholds, prev.xi[i], prev.u.node(i), u.node(i), prev.gamma[i], gamma[i]).map(|a| a.zeta))
            .collect::<Result<Vec<_>, _>>()?;
        let w = outputs(model, u, &xi)?;
        let root = find_root_a(u, &model.thresholds, prev.b)?;
        let s = SolverState {
            t: start.t + n as f64 * dt,
            step: start.step + n,
            u: u.clone(),
            v: vs[n].clone(),
            xi,
            w,
            b: prev.b.max(root.a),
            a: root.a,
            multiple_roots: root.multiple,
            gamma,
        };
        out.push(s.clone());
        prev = s;
    }
    Ok(out)
}
