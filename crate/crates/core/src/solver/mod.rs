//! Time integration of the reaction-diffusion system with distributed relay.

mod kernel;
mod picard;
mod run;
mod splitting;

pub use picard::{solve_picard, PicardOutcome, PicardSummary};
pub use run::{run, run_with_observer, RunReport, RunRow, RunStatus};
pub use splitting::step_splitting;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::free_boundary::{find_root_a, AnalysisError, DEFAULT_BAND, DEFAULT_FLOOR, DEFAULT_WINDOW_CELLS};
use crate::dsl::expr::EvalError;
use crate::dsl::model::ModelSpec;
use crate::grid::{GridError, GridFunction};
use crate::relay::{evaluate_output_into, init_configuration, Configuration, RelayError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Relay(#[from] RelayError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("initial data invalid at node {node} (x = {x}): {message}")]
    InitialData { node: usize, x: f64, message: String },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("fixed-point iteration did not converge in {iterations} iterations (last residual {})", residuals.last().copied().unwrap_or(f64::NAN))]
    PicardNotConverged { iterations: usize, residuals: Vec<f64> },
    #[error("non-finite solution at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OdeScheme {
    ExplicitMidpoint,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    Splitting,
    Picard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    pub theta: f64,
    pub ode_scheme: OdeScheme,
    pub mode: SolverMode,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Picard window length; the whole run when absent.
    pub picard_window: Option<f64>,
    pub event_substeps: usize,
    pub stop_on_transversality_loss: bool,
    pub transversality_floor: f64,
    /// Upper end of the `γ_α ∈ [0, band]` audit band.
    pub transversality_band: f64,
    /// Audit half-width in cells.
    pub window_cells: usize,
    /// Leading steps taken fully implicit.
    pub startup_steps: usize,
    /// Compute the `E_m` index every this many steps (0: initial row only).
    pub em_stride: usize,
    pub q: f64,
    pub gamma: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            theta: 0.5,
            ode_scheme: OdeScheme::ExplicitMidpoint,
            mode: SolverMode::Splitting,
            picard_tol: 1e-8,
            picard_max_iter: 50,
            picard_window: None,
            event_substeps: 8,
            stop_on_transversality_loss: true,
            transversality_floor: DEFAULT_FLOOR,
            transversality_band: DEFAULT_BAND,
            window_cells: DEFAULT_WINDOW_CELLS,
            startup_steps: 2,
            em_stride: 1,
            q: 4.0,
            gamma: 0.2,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::Config(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return bad(format!("theta = {} must lie in [0, 1]", self.theta));
        }
        if !(self.picard_tol > 0.0) {
            return bad(format!("picard_tol = {} must be positive", self.picard_tol));
        }
        if self.picard_max_iter == 0 {
            return bad("picard_max_iter must be at least 1".into());
        }
        if let Some(w) = self.picard_window {
            if !(w > 0.0) {
                return bad(format!("picard_window = {w} must be positive"));
            }
        }
        if !(self.q > 3.0) {
            return bad(format!("q = {} must exceed 3", self.q));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0 - 3.0 / self.q) {
            return bad(format!("gamma = {} must lie in (0, 1 - 3/q)", self.gamma));
        }
        Ok(())
    }
}

/// `φ`, `ψ` and the discontinuity point `b̄` of `ξ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub phi: GridFunction,
    pub psi: GridFunction,
    pub b_bar: f64,
}

impl InitialData {
    pub fn new(phi: GridFunction, psi: GridFunction, b_bar: f64) -> Result<Self, SolverError> {
        if phi.grid() != psi.grid() {
            return Err(SolverError::Dimension("φ and ψ live on different grids".into()));
        }
        if !(b_bar > 0.0 && b_bar < 1.0) {
            return Err(SolverError::Config(format!("b_bar = {b_bar} must lie in (0, 1)")));
        }
        phi.check_finite()?;
        psi.check_finite()?;
        Ok(Self { phi, psi, b_bar })
    }

    /// `ξ₀(x)`.
    pub fn xi0(&self, x: f64) -> Configuration {
        if x <= self.b_bar {
            Configuration::Plus
        } else {
            Configuration::Minus
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub step: usize,
    pub u: GridFunction,
    pub v: GridFunction,
    pub xi: Vec<Configuration>,
    /// `W_{ξ_i}(u_i)` at every node.
    pub w: GridFunction,
    /// Running maximum of the root curve.
    pub b: f64,
    /// Latest root of `γ_α(u(·, t))` right of the previous `b`.
    pub a: f64,
    /// The latest root search found more than one sign change.
    pub multiple_roots: bool,
    pub(crate) gamma: Vec<[f64; 2]>,
}

impl SolverState {
    pub fn nodes(&self) -> usize {
        self.xi.len()
    }

    /// `(γ_α, γ_β)` at each node.
    pub fn gammas(&self) -> &[[f64; 2]] {
        &self.gamma
    }

    /// Verify `w_i = W_{ξ_i}(u_i)` and relay consistency at every node.
    pub fn check_coherence(&self, model: &ModelSpec) -> Result<(), SolverError> {
        let mut w = vec![0.0; model.m];
        for i in 0..self.nodes() {
            let u = self.u.node(i);
            let forced = init_configuration(&model.thresholds, self.xi[i], u)?;
            if forced != self.xi[i] {
                return Err(SolverError::Config(format!("relay inconsistent at node {i}")));
            }
            evaluate_output_into(&model.thresholds, &model.branches, self.xi[i], u, &mut w)?;
            if w.iter().zip(self.w.node(i)).any(|(a, b)| a != b) {
                return Err(SolverError::Config(format!("stale hysteresis output at node {i}")));
            }
        }
        Ok(())
    }
}

/// Whether `f` or `g` reads any `w` component.
pub fn model_uses_w(model: &ModelSpec) -> bool {
    let first_w = model.k + model.l;
    model
        .f
        .iter()
        .chain(&model.g)
        .any(|e| e.free_vars().iter().any(|&i| i >= first_w))
}

pub(crate) fn thresholds_at(model: &ModelSpec, u: &GridFunction) -> Result<Vec<[f64; 2]>, SolverError> {
    (0..u.grid().nodes())
        .map(|i| {
            let p = u.node(i);
            Ok([model.thresholds.gamma_alpha(p)?, model.thresholds.gamma_beta(p)?])
        })
        .collect()
}

pub(crate) fn outputs(model: &ModelSpec, u: &GridFunction, xi: &[Configuration]) -> Result<GridFunction, SolverError> {
    let mut w = GridFunction::zeros(u.grid(), model.m);
    for (i, z) in xi.iter().enumerate() {
        evaluate_output_into(&model.thresholds, &model.branches, *z, u.node(i), w.node_mut(i))?;
    }
    Ok(w)
}

/// Endpoint one-sided derivatives of `φ` that exceed `10·h`.
pub fn neumann_warnings(init: &InitialData) -> Vec<String> {
    let phi = &init.phi;
    let grid = phi.grid();
    let h = grid.h();
    let n = grid.cells();
    let mut out = Vec::new();
    for c in 0..phi.dim() {
        let left = (phi.get(1, c) - phi.get(0, c)) / h;
        let right = (phi.get(n, c) - phi.get(n - 1, c)) / h;
        for (side, d) in [("x = 0", left), ("x = 1", right)] {
            if d.abs() >= 10.0 * h {
                out.push(format!(
                    "phi component {} has one-sided derivative {d:.3e} at {side}; Neumann compatibility is not met",
                    c + 1
                ));
            }
        }
    }
    out
}

/// Build the state at `t = 0`: relay initialization from `ξ₀`, output
/// cache, and the root/running-maximum bookkeeping.
pub fn initialize(model: &ModelSpec, init: &InitialData) -> Result<SolverState, SolverError> {
    if init.phi.dim() != model.k || init.psi.dim() != model.l {
        return Err(SolverError::Dimension(format!(
            "initial data has {} u and {} v components, model expects {} and {}",
            init.phi.dim(),
            init.psi.dim(),
            model.k,
            model.l
        )));
    }
    let grid = init.phi.grid();
    let gamma = thresholds_at(model, &init.phi)?;
    let mut xi = Vec::with_capacity(grid.nodes());
    for (i, [ga, gb]) in gamma.iter().copied().enumerate() {
        let x = grid.x(i);
        let fail = |message: String| SolverError::InitialData { node: i, x, message };
        if ga <= 0.0 && gb <= 0.0 {
            return Err(fail(format!("both thresholds nonpositive (γ_α = {ga}, γ_β = {gb})")));
        }
        let zeta0 = init.xi0(x);
        match zeta0 {
            Configuration::Plus if !(gb > 0.0) => {
                return Err(fail(format!("γ_β(φ) = {gb} must be positive left of b_bar")));
            }
            Configuration::Minus if !(ga > 0.0) => {
                return Err(fail(format!("γ_α(φ) = {ga} must be positive right of b_bar")));
            }
            _ => {}
        }
        xi.push(init_configuration(&model.thresholds, zeta0, init.phi.node(i))?);
    }
    for warning in neumann_warnings(init) {
        log::warn!("{warning}");
    }
    let w = outputs(model, &init.phi, &xi)?;
    let root = find_root_a(&init.phi, &model.thresholds, init.b_bar)?;
    Ok(SolverState {
        t: 0.0,
        step: 0,
        u: init.phi.clone(),
        v: init.psi.clone(),
        xi,
        w,
        b: init.b_bar.max(root.a),
        a: root.a,
        multiple_roots: root.multiple,
        gamma,
    })
}
