//! Root curve, running maximum, transversality margin, E_m index, topology.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{derivative, interpolate, lq_norm, sobolev_fractional_norm, GridError, GridFunction};
use crate::relay::{Configuration, RelayError, ThresholdPair};

pub const ROOT_TOL: f64 = 1e-10;
/// Upper end of the `m` search in [`em_index`].
pub const EM_MAX: u64 = 1_000_000;
pub const DEFAULT_WINDOW_CELLS: usize = 5;
pub const DEFAULT_FLOOR: f64 = 1e-3;
/// `γ_α` band that selects audit nodes in [`check_transversality`].
pub const DEFAULT_BAND: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Relay(#[from] RelayError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("time {t} does not follow the last recorded time {last}")]
    NonMonotoneTime { t: f64, last: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Outcome of [`find_root_a`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootSearch {
    pub a: f64,
    /// More than one sign change was found right of `b_prev`.
    pub multiple: bool,
    pub sign_changes: usize,
}

fn gamma_alpha_at(u: &GridFunction, th: &ThresholdPair, x: f64) -> Result<f64, AnalysisError> {
    Ok(th.gamma_alpha(&interpolate(u, x)?)?)
}

/// Root of `x ↦ γ_α(u(x))` on `[b_prev, 1]` along the piecewise-linear
/// interpolant of `u`.
pub fn find_root_a(u: &GridFunction, th: &ThresholdPair, b_prev: f64) -> Result<RootSearch, AnalysisError> {
    let grid = u.grid();
    let b_prev = b_prev.clamp(0.0, 1.0);
    let mut xs = vec![b_prev];
    let mut gs = vec![gamma_alpha_at(u, th, b_prev)?];
    for i in 0..grid.nodes() {
        let x = grid.x(i);
        if x > b_prev {
            xs.push(x);
            gs.push(th.gamma_alpha(u.node(i))?);
        }
    }
    let mut first: Option<(f64, f64, bool)> = None;
    let mut changes = 0;
    for j in 0..xs.len() - 1 {
        let (p_lo, p_hi) = (gs[j] <= 0.0, gs[j + 1] <= 0.0);
        if p_lo != p_hi {
            changes += 1;
            if first.is_none() {
                first = Some((xs[j], xs[j + 1], p_lo));
            }
        }
    }
    let a = match first {
        None => b_prev,
        Some((mut lo, mut hi, p_lo)) => {
            while hi - lo > ROOT_TOL {
                let mid = 0.5 * (lo + hi);
                if (gamma_alpha_at(u, th, mid)? <= 0.0) == p_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    Ok(RootSearch {
        a,
        multiple: changes > 1,
        sign_changes: changes,
    })
}

/// Times, roots `a`, running maxima `b` and margins of a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FreeBoundaryTrace {
    pub times: Vec<f64>,
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    pub margins: Vec<Option<f64>>,
}

impl FreeBoundaryTrace {
    pub fn last_b(&self) -> Option<f64> {
        self.b_values.last().copied()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Append `(t, a)` with `b = max(b_prev, a)`.
    pub fn update_running_max(&mut self, t: f64, a: f64) -> Result<f64, AnalysisError> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(AnalysisError::NonMonotoneTime { t, last });
            }
        }
        let b = self.b_values.last().map_or(a, |b| b.max(a));
        self.times.push(t);
        self.a_values.push(a);
        self.b_values.push(b);
        self.margins.push(None);
        Ok(b)
    }

    pub fn set_last_margin(&mut self, margin: Option<f64>) {
        if let Some(m) = self.margins.last_mut() {
            *m = margin;
        }
    }

    /// Running maxima recomputed from the stored roots.
    pub fn recompute_b(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.a_values.len());
        let mut b = f64::NEG_INFINITY;
        for a in &self.a_values {
            b = b.max(*a);
            out.push(b);
        }
        out
    }
}

/// `E_m` membership index: finite `m` or none up to [`EM_MAX`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Em {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Em {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Em::Finite(m) => write!(f, "{m}"),
            Em::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Em {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Em::Finite(m) => s.serialize_u64(*m),
            Em::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Em {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(m) => Ok(Em::Finite(m)),
            Raw::Str(s) if s == "inf" => Ok(Em::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("invalid E_m index {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub is_transverse: bool,
    /// Minimal `d/dx γ_α(u)` over the audited nodes; `None` when no node
    /// qualified (vacuously transverse).
    pub margin: Option<f64>,
    pub window: (f64, f64),
    pub multiple_roots: bool,
    pub em_index: Option<Em>,
}

/// `d/dx γ_α(u(x))` at every node, `∇γ_α(u)·u_x`.
pub fn gamma_alpha_slope(u: &GridFunction, th: &ThresholdPair) -> Result<Vec<f64>, AnalysisError> {
    let ux = derivative(u);
    (0..u.grid().nodes())
        .map(|i| {
            let g = th.grad_alpha(u.node(i))?;
            Ok(g.iter().zip(ux.node(i)).map(|(a, b)| a * b).sum())
        })
        .collect()
}

/// Audit `d/dx γ_α(u)` on nodes with `x ∈ [b, b + δ]` and `γ_α(u) ∈ [0, band]`.
/// The audit is vacuous (margin `None`) while the root is detached from
/// `b`, i.e. `γ_α(u(b)) > floor · δ`.
pub fn check_transversality(
    u: &GridFunction,
    th: &ThresholdPair,
    b: f64,
    multiple_roots: bool,
    delta: f64,
    floor: f64,
    band: f64,
) -> Result<TransversalityReport, AnalysisError> {
    let grid = u.grid();
    let window = (b, (b + delta).min(1.0));
    let slope = gamma_alpha_slope(u, th)?;
    let mut margin: Option<f64> = None;
    let attached = gamma_alpha_at(u, th, b.clamp(0.0, 1.0))? <= floor * delta;
    for i in (0..grid.nodes()).filter(|_| attached) {
        let x = grid.x(i);
        if x < window.0 - 1e-12 || x > window.1 + 1e-12 {
            continue;
        }
        let g = th.gamma_alpha(u.node(i))?;
        if (0.0..=band).contains(&g) {
            margin = Some(margin.map_or(slope[i], |m| m.min(slope[i])));
        }
    }
    Ok(TransversalityReport {
        is_transverse: !multiple_roots && margin.is_none_or(|m| m >= floor),
        margin,
        window,
        multiple_roots,
        em_index: None,
    })
}

/// Smallest `m ≥ lower` with `m ∉ bad` (integer intervals, inclusive).
fn first_admissible(lower: u64, mut bad: Vec<(u64, u64)>) -> Em {
    bad.retain(|(lo, hi)| lo <= hi);
    bad.sort();
    let mut m = lower.max(2);
    for (lo, hi) in bad {
        if m > EM_MAX {
            break;
        }
        if lo <= m && m <= hi {
            m = hi.saturating_add(1);
        }
    }
    if m <= EM_MAX {
        Em::Finite(m)
    } else {
        Em::Infinite
    }
}

/// Smallest integer `m ≥ 1` with `pred(m)`, for `pred` monotone from false
/// to true; `guess` is a real estimate of the switch point. Saturates at
/// `EM_MAX + 1`.
fn switch_point(guess: f64, pred: impl Fn(u64) -> bool) -> u64 {
    let cap = EM_MAX + 1;
    let mut m = if guess.is_finite() {
        guess.ceil().clamp(1.0, cap as f64) as u64
    } else if guess > 0.0 {
        cap
    } else {
        1
    };
    while m > 1 && pred(m - 1) {
        m -= 1;
    }
    while m < cap && !pred(m) {
        m += 1;
    }
    m
}

/// Discrete `E_m` index of `(φ, ψ, ξ₀)` with discontinuity point `b`, using
/// the fractional norm of order `2 − 2/q` on the grid of `φ`.
pub fn em_index(phi: &GridFunction, psi: &GridFunction, b: f64, th: &ThresholdPair, q: f64) -> Result<Em, AnalysisError> {
    let grid = phi.grid();
    if psi.grid() != grid {
        return Err(AnalysisError::Dimension("φ and ψ live on different grids".into()));
    }
    let nodes = grid.nodes();
    let ga: Vec<f64> = (0..nodes).map(|i| th.gamma_alpha(phi.node(i))).collect::<Result<_, _>>()?;
    let gb: Vec<f64> = (0..nodes).map(|i| th.gamma_beta(phi.node(i))).collect::<Result<_, _>>()?;
    let slope = gamma_alpha_slope(phi, th)?;
    let inv_m = |m: u64| 1.0 / m as f64;
    let inv_m2 = |m: u64| 1.0 / (m as f64 * m as f64);

    let mut lower: u64 = 2;
    let mut bad = Vec::new();

    // b ∈ [1/m, 1 − 1/m].
    let edge = b.min(1.0 - b);
    if !(edge > 0.0) {
        return Ok(Em::Infinite);
    }
    lower = lower.max(switch_point(1.0 / edge, |m| b >= inv_m(m) && b <= 1.0 - inv_m(m)));

    // γ_β(φ) ≥ 1/m² on x ≤ b.
    for i in 0..nodes {
        if grid.x(i) <= b {
            let g = gb[i];
            if !(g > 0.0) {
                return Ok(Em::Infinite);
            }
            lower = lower.max(switch_point(1.0 / g.sqrt(), |m| g >= inv_m2(m)));
        }
    }

    for i in 0..nodes {
        let x = grid.x(i);
        if x < b {
            continue;
        }
        let g = ga[i];
        let d = x - b;
        // γ_α(φ) ≥ 1/m² where x ≥ b + 1/m: fails on m ∈ [reach, small).
        let reach = if d > 0.0 {
            switch_point(1.0 / d, |m| x >= b + inv_m(m))
        } else {
            EM_MAX + 1
        };
        let small = if g > 0.0 {
            switch_point(1.0 / g.sqrt(), |m| g >= inv_m2(m))
        } else {
            EM_MAX + 1
        };
        if reach < small {
            bad.push((reach, small - 1));
        }
        // Slope clause on x ∈ [b, b + 1/m] with γ_α ∈ [0, 1/m²]: fails for
        // m below all three switch points.
        if g >= 0.0 {
            let win_end = if d > 0.0 {
                switch_point(1.0 / d, |m| x > b + inv_m(m))
            } else {
                EM_MAX + 1
            };
            let band_end = if g > 0.0 {
                switch_point(1.0 / g.sqrt(), |m| g > inv_m2(m))
            } else {
                EM_MAX + 1
            };
            let steep = if slope[i] > 0.0 {
                switch_point(1.0 / slope[i], |m| slope[i] >= inv_m(m))
            } else {
                EM_MAX + 1
            };
            let hi = win_end.min(band_end).min(steep);
            if hi > 1 {
                bad.push((1, hi - 1));
            }
        }
    }

    // ‖φ‖ ≤ m and ‖ψ‖_∞ ≤ m.
    let norm = sobolev_fractional_norm(phi, 2.0 - 2.0 / q, q)?;
    let sup_psi = lq_norm(psi, f64::INFINITY)?;
    let bound = norm.max(sup_psi);
    lower = lower.max(switch_point(bound, |m| m as f64 >= bound));

    if lower > EM_MAX {
        return Ok(Em::Infinite);
    }
    Ok(first_admissible(lower, bad))
}

/// Single-interface structure of a configuration field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub preserved: bool,
    /// Last `+1` node; `None` when no node is `+1`.
    pub interface: Option<usize>,
    /// The interface sits at an end of the interval.
    pub degenerate: bool,
}

/// A `+1` node to the right of the first `−1` node: a fresh switch away from
/// the front, which a continuous profile can only produce by touching
/// `Γ_α` from above.
pub fn has_plus_island(xi: &[Configuration]) -> bool {
    match xi.iter().position(|z| *z == Configuration::Minus) {
        Some(j) => xi[j..].iter().any(|z| *z == Configuration::Plus),
        None => false,
    }
}

pub fn check_topology(xi: &[Configuration]) -> Topology {
    let plus = xi.iter().take_while(|z| **z == Configuration::Plus).count();
    let preserved = xi[plus..].iter().all(|z| *z == Configuration::Minus);
    let interface = plus.checked_sub(1);
    Topology {
        preserved,
        interface: if preserved { interface } else { None },
        degenerate: preserved && (plus == 0 || plus == xi.len()),
    }
}

/// Trapezoid integrals of linear combinations over `(u, v)` components.
pub fn conserved_quantities(u: &GridFunction, v: &GridFunction, combos: &[Vec<f64>]) -> Result<Vec<f64>, AnalysisError> {
    let (k, l) = (u.dim(), v.dim());
    let grid = u.grid();
    combos
        .iter()
        .map(|c| {
            if c.len() != k + l {
                return Err(AnalysisError::Dimension(format!(
                    "combination has {} coefficients, expected {}",
                    c.len(),
                    k + l
                )));
            }
            let vals: Vec<f64> = (0..grid.nodes())
                .map(|i| {
                    let a: f64 = u.node(i).iter().zip(&c[..k]).map(|(x, y)| x * y).sum();
                    let b: f64 = v.node(i).iter().zip(&c[k..]).map(|(x, y)| x * y).sum();
                    a + b
                })
                .collect();
            Ok(grid.integrate(&vals))
        })
        .collect()
}
