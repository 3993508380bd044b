//! Splitting stepper with node-wise relay update.

use rayon::prelude::*;

use super::kernel::frozen_step;
use super::{model_uses_w, outputs, thresholds_at, SolverConfig, SolverError, SolverState};
use crate::analysis::free_boundary::find_root_a;
use crate::dsl::model::ModelSpec;
use crate::relay::{advance_configuration_screened, Configuration};

fn single_step(state: &SolverState, model: &ModelSpec, config: &SolverConfig, dt: f64, theta: f64) -> Result<(SolverState, bool), SolverError> {
    let (u_new, v_new) = frozen_step(model, config.ode_scheme, &state.u, &state.v, &state.w, dt, theta)?;
    let t = state.t + dt;
    if u_new.check_finite().is_err() || v_new.check_finite().is_err() {
        return Err(SolverError::NonFinite { t });
    }
    let gamma = thresholds_at(model, &u_new)?;
    let xi: Vec<Configuration> = (0..state.nodes())
        .into_par_iter()
        .with_min_len(64)
        .map(|i| {
            advance_configuration_screened(
                &model.thresholds,
                state.xi[i],
                state.u.node(i),
                u_new.node(i),
                state.gamma[i],
                gamma[i],
            )
            .map(|a| a.zeta)
        })
        .collect::<Result<_, _>>()?;
    let flipped = xi.iter().zip(&state.xi).any(|(a, b)| a != b);
    let w = outputs(model, &u_new, &xi)?;
    let root = find_root_a(&u_new, &model.thresholds, state.b)?;
    Ok((
        SolverState {
            t,
            step: state.step,
            u: u_new,
            v: v_new,
            xi,
            w,
            b: state.b.max(root.a),
            a: root.a,
            multiple_roots: root.multiple,
            gamma,
        },
        flipped,
    ))
}

/// One macro step of size `min(dt, dt_max)`; redone as `event_substeps`
/// sub-steps when a relay switches and the reaction reads the output.
pub fn step_splitting(state: &SolverState, model: &ModelSpec, config: &SolverConfig) -> Result<SolverState, SolverError> {
    step_splitting_dt(state, model, config, config.dt)
}

pub(crate) fn step_splitting_dt(state: &SolverState, model: &ModelSpec, config: &SolverConfig, dt: f64) -> Result<SolverState, SolverError> {
    let theta = if state.step < config.startup_steps { 1.0 } else { config.theta };
    let (mut next, flipped) = single_step(state, model, config, dt, theta)?;
    if flipped && config.event_substeps > 1 && model_uses_w(model) {
        let n = config.event_substeps;
        let sub_dt = dt / n as f64;
        let mut s = state.clone();
        for _ in 0..n {
            s = single_step(&s, model, config, sub_dt, theta)?.0;
        }
        next = s;
    }
    next.t = state.t + dt;
    next.step = state.step + 1;
    Ok(next)
}
