//! One step of the frozen-hysteresis problem: node-wise `v` integration and
//! the θ-scheme diffusion solve for `u`.
//!
//! A first θ-solve with source `f(u, v, w)` predicts `u*`. The `v` ODE is then
//! integrated along the straight path from `u` to `u*`, and the `u` source is
//! the stage-weighted average of `f` over the same stages. Linear combinations
//! annihilating `(f, g)` are conserved exactly by the step.

use rayon::prelude::*;

use super::{OdeScheme, SolverError};
use crate::dsl::model::ModelSpec;
use crate::grid::{implicit_diffusion_step, GridFunction};

const PAR_MIN_NODES: usize = 64;

struct Stages {
    c: &'static [f64],
    b: &'static [f64],
    /// `v_s = v + dt · a_s · k_{s−1}` (single-term tableau).
    a: &'static [f64],
}

fn stages(scheme: OdeScheme) -> Stages {
    match scheme {
        OdeScheme::ExplicitMidpoint => Stages {
            c: &[0.0, 0.5],
            b: &[0.0, 1.0],
            a: &[0.0, 0.5],
        },
        OdeScheme::Rk4 => Stages {
            c: &[0.0, 0.5, 0.5, 1.0],
            b: &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            a: &[0.0, 0.5, 0.5, 1.0],
        },
    }
}

/// Per-node output of the reaction stages.
fn node_reaction(
    model: &ModelSpec,
    st: &Stages,
    u0: &[f64],
    u1: &[f64],
    v: &[f64],
    w: &[f64],
    dt: f64,
    source: &mut [f64],
    v_new: &mut [f64],
) -> Result<(), SolverError> {
    let (k, l) = (model.k, model.l);
    let mut env = vec![0.0; model.reaction_arity()];
    env[k + l..].copy_from_slice(w);
    let mut kg = vec![0.0; l];
    let mut kf = vec![0.0; k];
    source.iter_mut().for_each(|s| *s = 0.0);
    v_new.copy_from_slice(v);
    for s in 0..st.c.len() {
        let c = st.c[s];
        for j in 0..k {
            env[j] = u0[j] + c * (u1[j] - u0[j]);
        }
        for j in 0..l {
            env[k + j] = v[j] + dt * st.a[s] * kg[j];
        }
        model.eval_g_into(&env, &mut kg)?;
        model.eval_f_into(&env, &mut kf)?;
        for j in 0..l {
            v_new[j] += dt * st.b[s] * kg[j];
        }
        for j in 0..k {
            source[j] += st.b[s] * kf[j];
        }
    }
    Ok(())
}

fn explicit_source(model: &ModelSpec, u: &GridFunction, v: &GridFunction, w: &GridFunction) -> Result<GridFunction, SolverError> {
    let grid = u.grid();
    let (k, l) = (model.k, model.l);
    let rows: Vec<Vec<f64>> = (0..grid.nodes())
        .into_par_iter()
        .with_min_len(PAR_MIN_NODES)
        .map(|i| {
            let mut env = Vec::with_capacity(model.reaction_arity());
            env.extend_from_slice(u.node(i));
            env.extend_from_slice(v.node(i));
            env.extend_from_slice(w.node(i));
            let mut out = vec![0.0; k];
            model.eval_f_into(&env, &mut out)?;
            Ok(out)
        })
        .collect::<Result<_, SolverError>>()?;
    debug_assert!(l == v.dim());
    Ok(GridFunction::from_values(grid, k, rows.concat())?)
}

/// Advance `(u, v)` by `dt` with the hysteresis output frozen at `w`.
pub(crate) fn frozen_step(
    model: &ModelSpec,
    scheme: OdeScheme,
    u: &GridFunction,
    v: &GridFunction,
    w: &GridFunction,
    dt: f64,
    theta: f64,
) -> Result<(GridFunction, GridFunction), SolverError> {
    let grid = u.grid();
    let (k, l) = (model.k, model.l);
    let s0 = explicit_source(model, u, v, w)?;
    let u_pred = implicit_diffusion_step(u, &model.diffusion, dt, theta, &s0)?;
    let st = stages(scheme);
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..grid.nodes())
        .into_par_iter()
        .with_min_len(PAR_MIN_NODES)
        .map(|i| {
            let mut src = vec![0.0; k];
            let mut vn = vec![0.0; l];
            node_reaction(model, &st, u.node(i), u_pred.node(i), v.node(i), w.node(i), dt, &mut src, &mut vn)?;
            Ok((src, vn))
        })
        .collect::<Result<_, SolverError>>()?;
    let mut source = GridFunction::zeros(grid, k);
    let mut v_new = GridFunction::zeros(grid, l);
    for (i, (s, vn)) in rows.into_iter().enumerate() {
        source.node_mut(i).copy_from_slice(&s);
        v_new.node_mut(i).copy_from_slice(&vn);
    }
    v_new.check_finite().map_err(|_| SolverError::NonFinite { t: f64::NAN })?;
    let u_new = implicit_diffusion_step(u, &model.diffusion, dt, theta, &source)?;
    Ok((u_new, v_new))
}
