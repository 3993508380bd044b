//! Pointwise two-threshold relay hysteresis.
//!
//! A relay is defined by two threshold functions `γ_α`, `γ_β` on the input
//! space and two output branches `W₁`, `W₋₁`. The configuration switches to
//! `+1` when the input reaches `Γ_α = {γ_α = 0}` and to `−1` when it reaches
//! `Γ_β = {γ_β = 0}`; between the thresholds it is retained.
//!
//! Between samples the input is taken to move along the straight segment
//! joining them, and the last threshold crossing on that segment decides the
//! new configuration.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::diff::grad_expression;
use crate::dsl::expr::{EvalError, Expression};

/// Tolerance for "on the manifold" in [`classify_region`].
pub const ON_MANIFOLD_TOL: f64 = 1e-12;
/// Parameter tolerance for bisection of crossings along a segment.
pub const CROSSING_PARAM_TOL: f64 = 1e-12;
/// Equispaced sub-samples per segment before bisection.
pub const SEGMENT_SUBSAMPLES: usize = 64;
/// `|γ|` below this without a sign change is reported as a near touch.
pub const NEAR_TOUCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelayError {
    #[error("expression evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("thresholds overlap at u = {u:?}: γ_α = {gamma_alpha}, γ_β = {gamma_beta}")]
    Disjointness {
        u: Vec<f64>,
        gamma_alpha: f64,
        gamma_beta: f64,
    },
    #[error("both thresholds crossed at segment parameter {param}")]
    SimultaneousCrossing { param: f64 },
    #[error("u = {u:?} is outside the domain of {branch} (γ = {gamma})")]
    BranchDomain {
        branch: &'static str,
        u: Vec<f64>,
        gamma: f64,
    },
    #[error("input has {got} components, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("trace samples are not ordered in time at index {index}")]
    Unordered { index: usize },
}

/// Relay configuration `ζ ∈ {+1, −1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Configuration {
    Plus,
    Minus,
}

impl Configuration {
    pub fn sign(self) -> i8 {
        match self {
            Configuration::Plus => 1,
            Configuration::Minus => -1,
        }
    }

    pub fn from_sign(s: i64) -> Option<Self> {
        match s {
            1 => Some(Configuration::Plus),
            -1 => Some(Configuration::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sign())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// `γ_α < 0`: inside `M_α`, branch `W₁` forced.
    Alpha,
    /// `γ_β < 0`: inside `M_β`, branch `W₋₁` forced.
    Beta,
    /// Both thresholds positive: memory region.
    AlphaBeta,
    OnGammaAlpha,
    OnGammaBeta,
}

/// Which threshold manifold a crossing belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Manifold {
    Alpha,
    Beta,
}

/// The threshold functions `γ_α`, `γ_β` with their symbolic gradients.
#[derive(Debug, Clone)]
pub struct ThresholdPair {
    alpha: Expression,
    beta: Expression,
    grad_alpha: Vec<Expression>,
    grad_beta: Vec<Expression>,
}

impl ThresholdPair {
    pub fn new(alpha: Expression, beta: Expression) -> Self {
        let k = alpha.vars().len();
        let idx: Vec<usize> = (0..k).collect();
        let grad_alpha = grad_expression(&alpha, &idx);
        let grad_beta = grad_expression(&beta, &(0..beta.vars().len()).collect::<Vec<_>>());
        Self {
            alpha,
            beta,
            grad_alpha,
            grad_beta,
        }
    }

    pub fn dim(&self) -> usize {
        self.alpha.vars().len()
    }

    pub fn alpha_expr(&self) -> &Expression {
        &self.alpha
    }

    pub fn beta_expr(&self) -> &Expression {
        &self.beta
    }

    pub fn gamma(&self, which: Manifold, u: &[f64]) -> Result<f64, RelayError> {
        match which {
            Manifold::Alpha => self.gamma_alpha(u),
            Manifold::Beta => self.gamma_beta(u),
        }
    }

    pub fn gamma_alpha(&self, u: &[f64]) -> Result<f64, RelayError> {
        self.check_dim(u)?;
        Ok(self.alpha.eval(u)?)
    }

    pub fn gamma_beta(&self, u: &[f64]) -> Result<f64, RelayError> {
        self.check_dim(u)?;
        Ok(self.beta.eval(u)?)
    }

    pub fn grad_alpha(&self, u: &[f64]) -> Result<Vec<f64>, RelayError> {
        self.check_dim(u)?;
        Ok(self.grad_alpha.iter().map(|g| g.eval(u)).collect::<Result<_, _>>()?)
    }

    pub fn grad_beta(&self, u: &[f64]) -> Result<Vec<f64>, RelayError> {
        self.check_dim(u)?;
        Ok(self.grad_beta.iter().map(|g| g.eval(u)).collect::<Result<_, _>>()?)
    }

    pub fn grad(&self, which: Manifold, u: &[f64]) -> Result<Vec<f64>, RelayError> {
        match which {
            Manifold::Alpha => self.grad_alpha(u),
            Manifold::Beta => self.grad_beta(u),
        }
    }

    fn check_dim(&self, u: &[f64]) -> Result<(), RelayError> {
        if u.len() != self.dim() {
            return Err(RelayError::Dimension {
                expected: self.dim(),
                got: u.len(),
            });
        }
        Ok(())
    }
}

/// Output branches `W₁` (active for `ζ = +1`) and `W₋₁` (for `ζ = −1`),
/// each an `m`-vector of expressions in `u`.
#[derive(Debug, Clone)]
pub struct BranchPair {
    pub plus: Vec<Expression>,
    pub minus: Vec<Expression>,
}

impl BranchPair {
    pub fn new(plus: Vec<Expression>, minus: Vec<Expression>) -> Self {
        Self { plus, minus }
    }

    pub fn dim(&self) -> usize {
        self.plus.len()
    }

    pub fn branch(&self, zeta: Configuration) -> &[Expression] {
        match zeta {
            Configuration::Plus => &self.plus,
            Configuration::Minus => &self.minus,
        }
    }

    /// Evaluate a branch ignoring its domain (used by frozen-field solvers
    /// that extend the branches to the whole admissible box).
    pub fn eval_unchecked(&self, zeta: Configuration, u: &[f64], out: &mut [f64]) -> Result<(), RelayError> {
        for (o, e) in out.iter_mut().zip(self.branch(zeta)) {
            *o = e.eval(u)?;
        }
        Ok(())
    }
}

pub fn classify_region(thresholds: &ThresholdPair, u: &[f64], tol: f64) -> Result<Region, RelayError> {
    let ga = thresholds.gamma_alpha(u)?;
    let gb = thresholds.gamma_beta(u)?;
    if ga <= tol && gb <= tol {
        return Err(RelayError::Disjointness {
            u: u.to_vec(),
            gamma_alpha: ga,
            gamma_beta: gb,
        });
    }
    Ok(if ga.abs() <= tol {
        Region::OnGammaAlpha
    } else if gb.abs() <= tol {
        Region::OnGammaBeta
    } else if ga < -tol {
        Region::Alpha
    } else if gb < -tol {
        Region::Beta
    } else {
        Region::AlphaBeta
    })
}

/// `+1` on `M_α`, `−1` on `M_β`, `zeta0` on `M_αβ`.
pub fn init_configuration(
    thresholds: &ThresholdPair,
    zeta0: Configuration,
    u0: &[f64],
) -> Result<Configuration, RelayError> {
    let ga = thresholds.gamma_alpha(u0)?;
    let gb = thresholds.gamma_beta(u0)?;
    forced(ga, gb, u0).map(|f| f.unwrap_or(zeta0))
}

fn forced(ga: f64, gb: f64, u: &[f64]) -> Result<Option<Configuration>, RelayError> {
    match (ga <= 0.0, gb <= 0.0) {
        (true, true) => Err(RelayError::Disjointness {
            u: u.to_vec(),
            gamma_alpha: ga,
            gamma_beta: gb,
        }),
        (true, false) => Ok(Some(Configuration::Plus)),
        (false, true) => Ok(Some(Configuration::Minus)),
        (false, false) => Ok(None),
    }
}

/// A located threshold crossing on the segment `u_old → u_new`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub param: f64,
    pub manifold: Manifold,
}

/// Result of [`advance_configuration_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct Advance {
    pub zeta: Configuration,
    /// The decisive (last) crossing, if any.
    pub last_crossing: Option<Crossing>,
    /// Some `|γ|` dipped below [`NEAR_TOUCH_TOL`] without a sign change.
    pub near_touch: bool,
}

fn lerp_into(u_old: &[f64], u_new: &[f64], s: f64, out: &mut [f64]) {
    for ((o, a), b) in out.iter_mut().zip(u_old).zip(u_new) {
        *o = (1.0 - s) * a + s * b;
    }
}

struct SegmentScan {
    last: Option<f64>,
    near_touch: bool,
}

/// All sign changes of `γ ≤ 0` along the segment; returns the largest
/// crossing parameter.
fn scan_segment(
    thresholds: &ThresholdPair,
    which: Manifold,
    u_old: &[f64],
    u_new: &[f64],
    g_old: f64,
    g_new: f64,
    subsamples: usize,
    buf: &mut [f64],
) -> Result<SegmentScan, RelayError> {
    let mut values = Vec::with_capacity(subsamples + 1);
    values.push(g_old);
    for j in 1..subsamples {
        let s = j as f64 / subsamples as f64;
        lerp_into(u_old, u_new, s, buf);
        values.push(thresholds.gamma(which, buf)?);
    }
    values.push(g_new);

    let mut last = None;
    let mut sign_changed = false;
    for j in 0..subsamples {
        let (p_lo, p_hi) = (values[j] <= 0.0, values[j + 1] <= 0.0);
        if p_lo == p_hi {
            continue;
        }
        sign_changed = true;
        let mut lo = j as f64 / subsamples as f64;
        let mut hi = (j + 1) as f64 / subsamples as f64;
        while hi - lo > CROSSING_PARAM_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            lerp_into(u_old, u_new, mid, buf);
            if (thresholds.gamma(which, buf)? <= 0.0) == p_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        last = Some(0.5 * (lo + hi));
    }
    let near_touch = !sign_changed && values.iter().any(|g| g.abs() < NEAR_TOUCH_TOL);
    Ok(SegmentScan { last, near_touch })
}

/// Advance `ζ` along the straight input segment `u_old → u_new`.
pub fn advance_configuration(
    thresholds: &ThresholdPair,
    zeta: Configuration,
    u_old: &[f64],
    u_new: &[f64],
) -> Result<Configuration, RelayError> {
    advance_configuration_traced(thresholds, zeta, u_old, u_new).map(|a| a.zeta)
}

pub fn advance_configuration_traced(
    thresholds: &ThresholdPair,
    zeta: Configuration,
    u_old: &[f64],
    u_new: &[f64],
) -> Result<Advance, RelayError> {
    let ga0 = thresholds.gamma_alpha(u_old)?;
    let gb0 = thresholds.gamma_beta(u_old)?;
    let ga1 = thresholds.gamma_alpha(u_new)?;
    let gb1 = thresholds.gamma_beta(u_new)?;
    advance_with_endpoints(thresholds, zeta, u_old, u_new, [ga0, gb0], [ga1, gb1], false)
}

/// Screened variant for the field solvers: when both endpoint values of a
/// threshold have the same sign and sit far from zero compared with the
/// change across the segment, the sub-sampling scan for that threshold is
/// skipped.
pub fn advance_configuration_screened(
    thresholds: &ThresholdPair,
    zeta: Configuration,
    u_old: &[f64],
    u_new: &[f64],
    gamma_old: [f64; 2],
    gamma_new: [f64; 2],
) -> Result<Advance, RelayError> {
    advance_with_endpoints(thresholds, zeta, u_old, u_new, gamma_old, gamma_new, true)
}

/// Screen factor for [`advance_configuration_screened`].
const SCREEN_FACTOR: f64 = 8.0;

fn advance_with_endpoints(
    thresholds: &ThresholdPair,
    zeta: Configuration,
    u_old: &[f64],
    u_new: &[f64],
    gamma_old: [f64; 2],
    gamma_new: [f64; 2],
    screen: bool,
) -> Result<Advance, RelayError> {
    if u_new.len() != u_old.len() {
        return Err(RelayError::Dimension {
            expected: u_old.len(),
            got: u_new.len(),
        });
    }
    let mut buf = vec![0.0; u_old.len()];
    let mut near_touch = false;
    let mut last = [None, None];
    for (slot, which) in [Manifold::Alpha, Manifold::Beta].into_iter().enumerate() {
        let (g0, g1) = (gamma_old[slot], gamma_new[slot]);
        if screen
            && (g0 <= 0.0) == (g1 <= 0.0)
            && g0.abs().min(g1.abs()) > SCREEN_FACTOR * (g1 - g0).abs() + NEAR_TOUCH_TOL
        {
            continue;
        }
        let scan = scan_segment(thresholds, which, u_old, u_new, g0, g1, SEGMENT_SUBSAMPLES, &mut buf)?;
        near_touch |= scan.near_touch;
        last[slot] = scan.last;
    }

    let decisive = match (last[0], last[1]) {
        (None, None) => None,
        (Some(a), None) => Some(Crossing { param: a, manifold: Manifold::Alpha }),
        (None, Some(b)) => Some(Crossing { param: b, manifold: Manifold::Beta }),
        (Some(a), Some(b)) => {
            if (a - b).abs() <= CROSSING_PARAM_TOL {
                return Err(RelayError::SimultaneousCrossing { param: a });
            }
            Some(if a > b {
                Crossing { param: a, manifold: Manifold::Alpha }
            } else {
                Crossing { param: b, manifold: Manifold::Beta }
            })
        }
    };

    let mut next = match decisive {
        None => zeta,
        Some(Crossing { manifold: Manifold::Alpha, .. }) => Configuration::Plus,
        Some(Crossing { manifold: Manifold::Beta, .. }) => Configuration::Minus,
    };
    // ζ is forced on M_α and M_β regardless of the incoming value.
    if let Some(f) = forced(gamma_new[0], gamma_new[1], u_new)? {
        next = f;
    }
    Ok(Advance {
        zeta: next,
        last_crossing: decisive,
        near_touch,
    })
}

/// `W_ζ(u)`, with the domain check `γ_β(u) ≥ 0` for `W₁` and `γ_α(u) ≥ 0`
/// for `W₋₁`.
pub fn evaluate_output(
    thresholds: &ThresholdPair,
    branches: &BranchPair,
    zeta: Configuration,
    u: &[f64],
) -> Result<Vec<f64>, RelayError> {
    let mut out = vec![0.0; branches.dim()];
    evaluate_output_into(thresholds, branches, zeta, u, &mut out)?;
    Ok(out)
}

pub fn evaluate_output_into(
    thresholds: &ThresholdPair,
    branches: &BranchPair,
    zeta: Configuration,
    u: &[f64],
    out: &mut [f64],
) -> Result<(), RelayError> {
    let (gamma, name) = match zeta {
        Configuration::Plus => (thresholds.gamma_beta(u)?, "W1"),
        Configuration::Minus => (thresholds.gamma_alpha(u)?, "W-1"),
    };
    if gamma < -ON_MANIFOLD_TOL {
        return Err(RelayError::BranchDomain {
            branch: name,
            u: u.to_vec(),
            gamma,
        });
    }
    branches.eval_unchecked(zeta, u, out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TracePoint {
    pub t: f64,
    pub zeta: Configuration,
    pub w: Vec<f64>,
}

/// Fold of initialization, advance and output over a sampled input.
pub fn relay_trace(
    thresholds: &ThresholdPair,
    branches: &BranchPair,
    zeta0: Configuration,
    samples: &[(f64, Vec<f64>)],
) -> Result<Vec<TracePoint>, RelayError> {
    let Some((t0, u0)) = samples.first() else {
        return Ok(Vec::new());
    };
    let zeta = init_configuration(thresholds, zeta0, u0)?;
    let mut out = vec![TracePoint {
        t: *t0,
        zeta,
        w: evaluate_output(thresholds, branches, zeta, u0)?,
    }];
    continue_trace(thresholds, branches, zeta, samples, &mut out)?;
    Ok(out)
}

/// Continue a trace from configuration `zeta` at `samples[0]`; appends one
/// point per subsequent sample.
pub fn continue_trace(
    thresholds: &ThresholdPair,
    branches: &BranchPair,
    mut zeta: Configuration,
    samples: &[(f64, Vec<f64>)],
    out: &mut Vec<TracePoint>,
) -> Result<Configuration, RelayError> {
    for (i, pair) in samples.windows(2).enumerate() {
        let (t_prev, u_prev) = &pair[0];
        let (t, u) = &pair[1];
        if t <= t_prev {
            return Err(RelayError::Unordered { index: i + 1 });
        }
        let adv = advance_configuration_traced(thresholds, zeta, u_prev, u)?;
        if adv.near_touch {
            log::warn!("relay input touches a threshold without crossing near t = {t}");
        }
        zeta = adv.zeta;
        out.push(TracePoint {
            t: *t,
            zeta,
            w: evaluate_output(thresholds, branches, zeta, u)?,
        });
    }
    Ok(zeta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::expr::VarSet;
    use crate::dsl::parse::{parse_expression, Constants};
    use Configuration::{Minus, Plus};

    fn scalar_relay() -> (ThresholdPair, BranchPair) {
        let vars = VarSet::state(1);
        let c = Constants::new();
        let t = ThresholdPair::new(
            parse_expression("1 - u1", &vars, &c).unwrap(),
            parse_expression("u1", &vars, &c).unwrap(),
        );
        let b = BranchPair::new(
            vec![parse_expression("1", &vars, &c).unwrap()],
            vec![parse_expression("0", &vars, &c).unwrap()],
        );
        (t, b)
    }

    #[test]
    fn regions() {
        let (t, _) = scalar_relay();
        assert_eq!(classify_region(&t, &[1.5], ON_MANIFOLD_TOL).unwrap(), Region::Alpha);
        assert_eq!(classify_region(&t, &[0.5], ON_MANIFOLD_TOL).unwrap(), Region::AlphaBeta);
        assert_eq!(classify_region(&t, &[0.0], ON_MANIFOLD_TOL).unwrap(), Region::OnGammaBeta);
        assert_eq!(classify_region(&t, &[1.0], ON_MANIFOLD_TOL).unwrap(), Region::OnGammaAlpha);
        assert_eq!(classify_region(&t, &[-0.5], ON_MANIFOLD_TOL).unwrap(), Region::Beta);
    }

    #[test]
    fn overlapping_thresholds_are_a_model_error() {
        let vars = VarSet::state(1);
        let c = Constants::new();
        let t = ThresholdPair::new(
            parse_expression("u1", &vars, &c).unwrap(),
            parse_expression("u1", &vars, &c).unwrap(),
        );
        assert!(matches!(
            classify_region(&t, &[0.0], ON_MANIFOLD_TOL),
            Err(RelayError::Disjointness { .. })
        ));
    }

    #[test]
    fn initialization() {
        let (t, _) = scalar_relay();
        assert_eq!(init_configuration(&t, Minus, &[1.5]).unwrap(), Plus);
        assert_eq!(init_configuration(&t, Minus, &[0.5]).unwrap(), Minus);
        assert_eq!(init_configuration(&t, Plus, &[-0.2]).unwrap(), Minus);
    }

    #[test]
    fn advancing() {
        let (t, _) = scalar_relay();
        assert_eq!(advance_configuration(&t, Minus, &[0.5], &[1.2]).unwrap(), Plus);
        assert_eq!(advance_configuration(&t, Plus, &[1.2], &[0.5]).unwrap(), Plus);
        assert_eq!(advance_configuration(&t, Minus, &[-0.5], &[1.5]).unwrap(), Plus);
        assert_eq!(advance_configuration(&t, Plus, &[1.5], &[-0.5]).unwrap(), Minus);
        assert_eq!(advance_configuration(&t, Plus, &[0.4], &[0.6]).unwrap(), Plus);
        assert_eq!(advance_configuration(&t, Minus, &[0.4], &[0.6]).unwrap(), Minus);
    }

    #[test]
    fn crossing_location_is_bisected() {
        let (t, _) = scalar_relay();
        let adv = advance_configuration_traced(&t, Minus, &[0.5], &[1.5]).unwrap();
        let c = adv.last_crossing.unwrap();
        assert_eq!(c.manifold, Manifold::Alpha);
        assert!((c.param - 0.5).abs() < 1e-11);
    }

    #[test]
    fn tangential_touch_is_not_a_crossing() {
        // γ_α = (u1 - 1)^2 + tiny along u1 = 0 → 2 has its minimum 1e-12 at u1 = 1.
        let vars = VarSet::state(1);
        let c = Constants::new();
        let t = ThresholdPair::new(
            parse_expression("(u1 - 1)^2 + 1e-12", &vars, &c).unwrap(),
            parse_expression("u1 + 5", &vars, &c).unwrap(),
        );
        let adv = advance_configuration_traced(&t, Minus, &[0.0], &[2.0]).unwrap();
        assert_eq!(adv.zeta, Minus);
        assert!(adv.near_touch);
    }

    #[test]
    fn outputs_and_domains() {
        let vars = VarSet::state(2);
        let c: Constants = [("a_alpha", 1.0), ("b_alpha", 1.0), ("a_beta", 0.5), ("b_beta", 0.5), ("lambda", 1.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let t = ThresholdPair::new(
            parse_expression("-u1 + a_alpha/u2 + b_alpha", &vars, &c).unwrap(),
            parse_expression("u1 - a_beta/u2 - b_beta", &vars, &c).unwrap(),
        );
        let b = BranchPair::new(
            vec![parse_expression("lambda", &vars, &c).unwrap()],
            vec![parse_expression("0", &vars, &c).unwrap()],
        );
        assert_eq!(evaluate_output(&t, &b, Plus, &[3.0, 1.0]).unwrap(), vec![1.0]);
        assert_eq!(evaluate_output(&t, &b, Minus, &[1.5, 1.0]).unwrap(), vec![0.0]);
        // (3, 1) lies in M_α, outside D(W₋₁).
        assert!(matches!(
            evaluate_output(&t, &b, Minus, &[3.0, 1.0]),
            Err(RelayError::BranchDomain { branch: "W-1", .. })
        ));
        // γ_β(0.2, 1) = 0.2 - 0.5 - 0.5 < 0.
        assert!(matches!(
            evaluate_output(&t, &b, Plus, &[0.2, 1.0]),
            Err(RelayError::BranchDomain { branch: "W1", .. })
        ));
    }

    #[test]
    fn trace_constant_and_empty() {
        let (t, b) = scalar_relay();
        let samples: Vec<_> = (0..5).map(|i| (i as f64, vec![0.5])).collect();
        let trace = relay_trace(&t, &b, Minus, &samples).unwrap();
        assert!(trace.iter().all(|p| p.zeta == Minus && p.w == vec![0.0]));
        assert!(relay_trace(&t, &b, Minus, &[]).unwrap().is_empty());
    }

    #[test]
    fn triangular_wave() {
        let (t, b) = scalar_relay();
        let knots = [0.5, 1.5, -0.5, 1.5];
        let samples: Vec<_> = knots.iter().enumerate().map(|(i, u)| (i as f64, vec![*u])).collect();
        let trace = relay_trace(&t, &b, Minus, &samples).unwrap();
        let z: Vec<_> = trace.iter().map(|p| p.zeta).collect();
        assert_eq!(z, vec![Minus, Plus, Minus, Plus]);
    }

    #[test]
    fn unordered_times_rejected() {
        let (t, b) = scalar_relay();
        let samples = vec![(1.0, vec![0.5]), (0.5, vec![0.6])];
        assert!(matches!(
            relay_trace(&t, &b, Minus, &samples),
            Err(RelayError::Unordered { index: 1 })
        ));
    }
}
