//! Time loop with per-step diagnostics and stopping rules.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::picard::{solve_picard, PicardSummary};
use super::splitting::step_splitting_dt;
use super::{initialize, neumann_warnings, InitialData, SolverConfig, SolverError, SolverMode, SolverState};
use crate::analysis::free_boundary::{check_topology, check_transversality, has_plus_island, conserved_quantities, em_index, Em, TransversalityReport};
use crate::dsl::model::ModelSpec;
use crate::grid::lq_norm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    TransversalityLost { t_star: f64 },
    TopologyBroken { t_star: f64 },
    Error { message: String },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::TransversalityLost { .. } => "transversality_lost",
            RunStatus::TopologyBroken { .. } => "topology_broken",
            RunStatus::Error { .. } => "error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Completed => 0,
            RunStatus::TransversalityLost { .. } => 2,
            RunStatus::TopologyBroken { .. } => 3,
            RunStatus::Error { .. } => 1,
        }
    }

    pub fn t_star(&self) -> Option<f64> {
        match self {
            RunStatus::TransversalityLost { t_star } | RunStatus::TopologyBroken { t_star } => Some(*t_star),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    pub margin: Option<f64>,
    pub transverse: bool,
    pub multiple_roots: bool,
    #[serde(rename = "E_m")]
    pub em: Option<Em>,
    /// Relative drift of each monitored combination from its initial value.
    pub drifts: Vec<f64>,
    pub sup_u: f64,
    pub sup_v: f64,
    pub topology_preserved: bool,
    pub interface: Option<usize>,
    /// Largest excursion of `(u, v)` outside the declared invariant boxes.
    pub box_excess: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub status: RunStatus,
    pub model: String,
    pub n: usize,
    pub t_end: f64,
    pub config: SolverConfig,
    pub wall_time_s: f64,
    pub warnings: Vec<String>,
    pub initial_transversality: TransversalityReport,
    pub conserved_initial: Vec<f64>,
    pub picard: Vec<PicardSummary>,
    pub rows: Vec<RunRow>,
}

impl RunReport {
    pub fn b_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.b).collect()
    }

    pub fn max_abs_drift(&self) -> Vec<f64> {
        let k = self.rows.first().map_or(0, |r| r.drifts.len());
        (0..k)
            .map(|j| self.rows.iter().map(|r| r.drifts[j].abs()).fold(0.0, f64::max))
            .collect()
    }
}

struct Monitor<'a> {
    model: &'a ModelSpec,
    config: &'a SolverConfig,
    combos: Vec<Vec<f64>>,
    initial: Vec<f64>,
}

enum Verdict {
    Healthy,
    Stop(RunStatus),
}

impl Monitor<'_> {
    fn transversality(&self, s: &SolverState) -> Result<TransversalityReport, SolverError> {
        let h = s.u.grid().h();
        Ok(check_transversality(
            &s.u,
            &self.model.thresholds,
            s.b,
            s.multiple_roots || has_plus_island(&s.xi),
            self.config.window_cells as f64 * h,
            self.config.transversality_floor,
            self.config.transversality_band,
        )?)
    }

    fn row(&self, s: &SolverState) -> Result<(RunRow, Verdict), SolverError> {
        let tr = self.transversality(s)?;
        let topo = check_topology(&s.xi);
        let n = s.u.grid().cells();
        let interior = topo.preserved && matches!(topo.interface, Some(j) if j >= 1 && j + 2 <= n);
        let em = if s.step == 0 || (self.config.em_stride > 0 && s.step % self.config.em_stride == 0) {
            Some(em_index(&s.u, &s.v, s.b, &self.model.thresholds, self.config.q)?)
        } else {
            None
        };
        let q = conserved_quantities(&s.u, &s.v, &self.combos)?;
        let drifts = q
            .iter()
            .zip(&self.initial)
            .map(|(now, q0)| if *q0 != 0.0 { (now - q0) / q0.abs() } else { now - q0 })
            .collect();
        let box_excess = match (&self.model.u_box, &self.model.v_box) {
            (None, None) => None,
            (ub, vb) => {
                let mut e: f64 = 0.0;
                for i in 0..s.nodes() {
                    if let Some(b) = ub {
                        e = e.max(b.excess(s.u.node(i)));
                    }
                    if let Some(b) = vb {
                        e = e.max(b.excess(s.v.node(i)));
                    }
                }
                Some(e)
            }
        };
        let verdict = if !tr.is_transverse {
            if self.config.stop_on_transversality_loss {
                Verdict::Stop(RunStatus::TransversalityLost { t_star: s.t })
            } else {
                Verdict::Healthy
            }
        } else if !interior {
            Verdict::Stop(RunStatus::TopologyBroken { t_star: s.t })
        } else {
            Verdict::Healthy
        };
        let row = RunRow {
            t: s.t,
            a: s.a,
            b: s.b,
            margin: tr.margin,
            transverse: tr.is_transverse,
            multiple_roots: tr.multiple_roots,
            em,
            drifts,
            sup_u: lq_norm(&s.u, f64::INFINITY)?,
            sup_v: lq_norm(&s.v, f64::INFINITY)?,
            topology_preserved: topo.preserved,
            interface: topo.interface,
            box_excess,
            status: "ok".into(),
        };
        Ok((row, verdict))
    }
}

/// Integrate to `t_end`; see [`run_with_observer`].
pub fn run(model: &ModelSpec, init: &InitialData, t_end: f64, config: &SolverConfig) -> Result<(SolverState, RunReport), SolverError> {
    run_with_observer(model, init, t_end, config, |_| {})
}

/// Integrate to `t_end` or until a stopping rule fires, calling `observer`
/// on the initial state and after every step. Errors during
/// initialization are returned; errors during time stepping end the run
/// with status `error` and the last good state.
pub fn run_with_observer<F: FnMut(&SolverState)>(
    model: &ModelSpec,
    init: &InitialData,
    t_end: f64,
    config: &SolverConfig,
    mut observer: F,
) -> Result<(SolverState, RunReport), SolverError> {
    config.validate()?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(SolverError::Config(format!("final time {t_end} must be nonnegative")));
    }
    let started = Instant::now();
    let mut state = initialize(model, init)?;
    let combos = model.conservation_combos();
    let initial = conserved_quantities(&state.u, &state.v, &combos)?;
    let monitor = Monitor {
        model,
        config,
        combos,
        initial: initial.clone(),
    };
    let mut warnings = neumann_warnings(init);
    let mut initial_tr = monitor.transversality(&state)?;
    let (first_row, verdict) = monitor.row(&state)?;
    initial_tr.em_index = first_row.em;
    let mut rows = vec![first_row];
    observer(&state);
    let mut picard = Vec::new();
    let mut status = match verdict {
        Verdict::Stop(s) => Some(s),
        Verdict::Healthy => None,
    };
    let eps = 1e-9 * config.dt;
    let mut warned_transversality = false;

    'outer: while status.is_none() && state.t < t_end - eps {
        let batch: Vec<SolverState> = match config.mode {
            SolverMode::Splitting => {
                let dt = config.dt.min(t_end - state.t);
                match step_splitting_dt(&state, model, config, dt) {
                    Ok(s) => vec![s],
                    Err(e) => {
                        status = Some(RunStatus::Error { message: e.to_string() });
                        break;
                    }
                }
            }
            SolverMode::Picard => {
                let remaining = t_end - state.t;
                let window = config.picard_window.unwrap_or(remaining).min(remaining);
                let steps = (window / config.dt).round().max(1.0);
                match solve_picard(&state, model, config, steps * config.dt) {
                    Ok(out) => {
                        picard.push(PicardSummary {
                            window_start: state.t,
                            iterations: out.iterations,
                            residuals: out.residuals,
                        });
                        out.states
                    }
                    Err(e) => {
                        if let SolverError::PicardNotConverged { iterations, residuals } = &e {
                            picard.push(PicardSummary {
                                window_start: state.t,
                                iterations: *iterations,
                                residuals: residuals.clone(),
                            });
                        }
                        status = Some(RunStatus::Error { message: e.to_string() });
                        break;
                    }
                }
            }
        };
        for s in batch {
            let (row, verdict) = match monitor.row(&s) {
                Ok(r) => r,
                Err(e) => {
                    status = Some(RunStatus::Error { message: e.to_string() });
                    break 'outer;
                }
            };
            if !row.transverse && !warned_transversality {
                warned_transversality = true;
                warnings.push(format!("transversality lost at t = {}", s.t));
            }
            rows.push(row);
            observer(&s);
            state = s;
            if let Verdict::Stop(st) = verdict {
                status = Some(st);
                break 'outer;
            }
        }
    }
    let status = status.unwrap_or(RunStatus::Completed);
    if let Some(last) = rows.last_mut() {
        last.status = status.label().into();
    }
    let report = RunReport {
        status,
        model: model.name.clone(),
        n: init.phi.grid().cells(),
        t_end,
        config: config.clone(),
        wall_time_s: started.elapsed().as_secs_f64(),
        warnings,
        initial_transversality: initial_tr,
        conserved_initial: initial,
        picard,
        rows,
    };
    Ok((state, report))
}
