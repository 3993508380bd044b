//! Experiment suites: perturbation, self-convergence, solver comparison
//! and model validation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::analysis::conditions::{validate_dissipativity, validate_holder};
use crate::dsl::model::ModelSpec;
use crate::dsl::validate::validate_model;
use crate::grid::{lq_norm, GridFunction};
use crate::report::{Check, Status};
use crate::scenario::Scenario;
use crate::solver::{run, InitialData, PicardSummary, RunReport, RunStatus, SolverConfig, SolverError, SolverMode, SolverState};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("base run did not complete: {0}")]
    BaseRun(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Member runs of a suite only evaluate E_m on the initial data.
fn member_config(config: &SolverConfig) -> SolverConfig {
    SolverConfig {
        em_stride: 0,
        ..config.clone()
    }
}

fn run_member(s: &Scenario, init: &InitialData, config: &SolverConfig) -> Result<(SolverState, RunReport), SolverError> {
    run(&s.model, init, s.t_end, config)
}

/// `ρ(x) = Σ_{j=1..4} c_j cos(jπx)`; satisfies the homogeneous Neumann condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CosineSeries {
    pub coeffs: [f64; 4],
}

impl CosineSeries {
    /// `c_j` uniform in `[−1/(2j), 1/(2j)]`.
    pub fn draw<R: Rng>(rng: &mut R) -> Self {
        let mut coeffs = [0.0; 4];
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c = rng.random_range(-0.5..=0.5) / (j + 1) as f64;
        }
        Self { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * ((j + 1) as f64 * std::f64::consts::PI * x).cos())
            .sum()
    }
}

/// One independent series per component of `φ` and of `ψ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Perturbation {
    pub seed: u64,
    pub phi: Vec<CosineSeries>,
    pub psi: Vec<CosineSeries>,
}

impl Perturbation {
    pub fn new(seed: u64, k: usize, l: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = (0..k).map(|_| CosineSeries::draw(&mut rng)).collect();
        let psi = (0..l).map(|_| CosineSeries::draw(&mut rng)).collect();
        Self { seed, phi, psi }
    }

    fn shift(f: &GridFunction, series: &[CosineSeries], eps: f64) -> GridFunction {
        let grid = f.grid();
        let mut out = f.clone();
        for i in 0..grid.nodes() {
            let x = grid.x(i);
            for (c, s) in out.node_mut(i).iter_mut().zip(series) {
                *c += eps * s.eval(x);
            }
        }
        out
    }

    /// `(φ + ερ, ψ + ερ′, b̄ + ε)`.
    pub fn apply(&self, init: &InitialData, eps: f64) -> Result<InitialData, SolverError> {
        InitialData::new(Self::shift(&init.phi, &self.phi, eps), Self::shift(&init.psi, &self.psi, eps), init.b_bar + eps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbRow {
    pub eps: f64,
    pub status: String,
    /// `sup |u_ε(T) − u(T)|`.
    pub u_diff: Option<f64>,
    /// `sup_n |b_ε(t_n) − b(t_n)|` over the common time levels.
    pub b_diff: Option<f64>,
    /// `‖v_ε(T) − v(T)‖_{L_q}`.
    pub v_diff: Option<f64>,
    pub failed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbTable {
    pub scenario: String,
    pub q: f64,
    pub perturbation: Perturbation,
    pub base_status: String,
    pub rows: Vec<PerturbRow>,
}

impl PerturbTable {
    /// Each difference column strictly decreases down the rows (rows are
    /// in the order of decreasing ε).
    pub fn monotone(&self) -> [bool; 3] {
        let col = |f: fn(&PerturbRow) -> Option<f64>| {
            let vals: Option<Vec<f64>> = self.rows.iter().map(f).collect();
            vals.is_some_and(|v| v.windows(2).all(|w| w[1] < w[0]))
        };
        [col(|r| r.u_diff), col(|r| r.b_diff), col(|r| r.v_diff)]
    }
}

/// Rerun the scenario from perturbed data for every `ε` and compare with the
/// unperturbed run.
pub fn perturb(s: &Scenario, eps: &[f64], seed: u64) -> Result<PerturbTable, ExperimentError> {
    let init = s.initial_data()?;
    let config = member_config(&s.config);
    let (base, base_report) = run_member(s, &init, &config)?;
    if base_report.status != RunStatus::Completed {
        return Err(ExperimentError::BaseRun(base_report.status.label().into()));
    }
    let pert = Perturbation::new(seed, s.model.k, s.model.l);
    let q = config.q;
    let mut order: Vec<f64> = eps.to_vec();
    order.sort_by(|a, b| b.total_cmp(a));
    let rows = order
        .par_iter()
        .map(|&e| {
            let failed = |status: &str, msg: String| PerturbRow {
                eps: e,
                status: status.into(),
                u_diff: None,
                b_diff: None,
                v_diff: None,
                failed: Some(msg),
            };
            let data = match pert.apply(&init, e) {
                Ok(d) => d,
                Err(err) => return failed("error", err.to_string()),
            };
            let (st, rep) = match run_member(s, &data, &config) {
                Ok(r) => r,
                Err(err) => return failed("error", format!("initialization: {err}")),
            };
            let b_diff = rep
                .rows
                .iter()
                .zip(&base_report.rows)
                .map(|(a, b)| (a.b - b.b).abs())
                .fold(0.0, f64::max);
            let diffs = st.u.max_abs_diff(&base.u).and_then(|u| {
                let dv = st.v.axpy(-1.0, &base.v)?;
                Ok((u, lq_norm(&dv, q)?))
            });
            let (u_diff, v_diff) = match diffs {
                Ok(d) => d,
                Err(err) => return failed(rep.status.label(), err.to_string()),
            };
            PerturbRow {
                eps: e,
                status: rep.status.label().into(),
                u_diff: Some(u_diff),
                b_diff: Some(b_diff),
                v_diff: Some(v_diff),
                failed: match &rep.status {
                    RunStatus::Completed => None,
                    other => Some(format!("run ended with status {}", other.label())),
                },
            }
        })
        .collect();
    Ok(PerturbTable {
        scenario: s.name.clone(),
        q,
        perturbation: pert,
        base_status: base_report.status.label().into(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRow {
    pub level: u32,
    pub n: usize,
    pub dt: f64,
    pub status: String,
    pub b_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergeTable {
    pub scenario: String,
    pub levels: Vec<LevelRow>,
    /// `sup |u_ℓ(T) − u_{ℓ+1}(T)|` on the coarser nodes.
    pub u_diffs: Vec<f64>,
    pub b_diffs: Vec<f64>,
    /// Successive quotients of `u_diffs`.
    pub ratios: Vec<f64>,
}

/// Run at `(h, dt)`, `(h/2, dt/2)`, ... for `levels` grids.
pub fn converge(s: &Scenario, levels: usize) -> Result<ConvergeTable, ExperimentError> {
    if levels < 3 {
        return Err(ExperimentError::Usage(format!("converge needs at least 3 levels, got {levels}")));
    }
    let runs: Vec<(SolverState, RunReport)> = (0..levels as u32)
        .into_par_iter()
        .map(|lvl| {
            let r = s.refined(lvl);
            let init = r.initial_data()?;
            run_member(&r, &init, &member_config(&r.config))
        })
        .collect::<Result<_, SolverError>>()?;
    let rows = runs
        .iter()
        .enumerate()
        .map(|(lvl, (st, rep))| LevelRow {
            level: lvl as u32,
            n: rep.n,
            dt: rep.config.dt,
            status: rep.status.label().into(),
            b_end: st.b,
        })
        .collect();
    let mut u_diffs = Vec::new();
    let mut b_diffs = Vec::new();
    for pair in runs.windows(2) {
        let (coarse, fine) = (&pair[0].0, &pair[1].0);
        let mut d: f64 = 0.0;
        for i in 0..coarse.u.grid().nodes() {
            for (a, b) in coarse.u.node(i).iter().zip(fine.u.node(2 * i)) {
                d = d.max((a - b).abs());
            }
        }
        u_diffs.push(d);
        b_diffs.push((coarse.b - fine.b).abs());
    }
    let ratios = u_diffs.windows(2).map(|w| w[0] / w[1]).collect();
    Ok(ConvergeTable {
        scenario: s.name.clone(),
        levels: rows,
        u_diffs,
        b_diffs,
        ratios,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub scenario: String,
    pub splitting_status: String,
    pub picard_status: String,
    pub u_diff: Option<f64>,
    pub v_diff: Option<f64>,
    pub b_diff: Option<f64>,
    pub picard: Vec<PicardSummary>,
    pub max_iterations: usize,
    pub error: Option<String>,
}

/// Splitting and Picard on the same grid and step.
pub fn compare_solvers(s: &Scenario) -> Result<CompareReport, ExperimentError> {
    let init = s.initial_data()?;
    let base = member_config(&s.config);
    let split_cfg = SolverConfig {
        mode: SolverMode::Splitting,
        ..base.clone()
    };
    let picard_cfg = SolverConfig {
        mode: SolverMode::Picard,
        ..base
    };
    let (split, picard) = rayon::join(|| run_member(s, &init, &split_cfg), || run_member(s, &init, &picard_cfg));
    let (sa, ra) = split?;
    let (sb, rb) = picard?;
    let mut out = CompareReport {
        scenario: s.name.clone(),
        splitting_status: ra.status.label().into(),
        picard_status: rb.status.label().into(),
        u_diff: None,
        v_diff: None,
        b_diff: None,
        max_iterations: rb.picard.iter().map(|p| p.iterations).max().unwrap_or(0),
        picard: rb.picard.clone(),
        error: match &rb.status {
            RunStatus::Error { message } => Some(message.clone()),
            _ => None,
        },
    };
    if ra.rows.len() == rb.rows.len() {
        out.u_diff = Some(sa.u.max_abs_diff(&sb.u).map_err(SolverError::from)?);
        out.v_diff = Some(sa.v.max_abs_diff(&sb.v).map_err(SolverError::from)?);
        out.b_diff = Some(ra.rows.iter().zip(&rb.rows).map(|(a, b)| (a.b - b.b).abs()).fold(0.0, f64::max));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    pub status: Status,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationSummary {
    pub model: String,
    pub status: Status,
    pub sigma: f64,
    pub samples: usize,
    pub conditions: Vec<ConditionReport>,
}

impl ValidationSummary {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.conditions.iter().flat_map(|c| &c.checks).find(|c| c.name == name)
    }
}

/// Structural, Lipschitz, invariant-region, growth and branch Hölder checks.
pub fn validate(model: &ModelSpec, sigma: f64, samples: usize) -> ValidationSummary {
    let structural = validate_model(model, samples);
    let (dissipative, holder) = rayon::join(|| validate_dissipativity(model, samples), || validate_holder(model, sigma, samples));
    let groups: [(&str, Vec<Check>); 5] = [
        (
            "thresholds",
            structural
                .checks
                .iter()
                .filter(|c| !c.name.starts_with("lipschitz"))
                .cloned()
                .collect(),
        ),
        (
            "local_lipschitz",
            structural.checks.iter().filter(|c| c.name.starts_with("lipschitz")).cloned().collect(),
        ),
        (
            "invariant_region",
            dissipative.checks.iter().filter(|c| c.name != "growth_bound").cloned().collect(),
        ),
        (
            "growth_bound",
            dissipative.checks.iter().filter(|c| c.name == "growth_bound").cloned().collect(),
        ),
        ("branch_holder", holder.checks),
    ];
    let conditions: Vec<ConditionReport> = groups
        .into_iter()
        .map(|(name, checks)| ConditionReport {
            condition: name.into(),
            status: checks.iter().map(|c| c.status).max().unwrap_or(Status::Pass),
            checks,
        })
        .collect();
    ValidationSummary {
        model: model.name.clone(),
        status: conditions.iter().map(|c| c.status).max().unwrap_or(Status::Pass),
        sigma,
        samples,
        conditions,
    }
}
