//! Sampling validators for the inward-pointing, growth and branch Hölder
//! conditions.

use serde::Serialize;

use crate::dsl::model::{AxisBox, ModelSpec};
use crate::dsl::validate::{level_set_points, u_sampling_box, v_sampling_box};
use crate::relay::{evaluate_output_into, Configuration, Manifold};
use crate::report::{Check, Report, Status};
use crate::sampling::halton;

/// Tolerance separating strict from non-strict inward pointing.
pub const INWARD_EPS: f64 = 1e-9;
/// Distance from `{γ = 0}` inside which half of the quotient pairs are drawn.
pub const NEAR_SET_DISTANCE: f64 = 1e-3;
/// Growth factor of the quotient between densifications that counts as divergence.
pub const HOLDER_GROWTH_WARN: f64 = 1.25;
const ENVELOPE_BINS: usize = 32;

fn outputs(model: &ModelSpec, zeta: Configuration, u: &[f64]) -> Option<Vec<f64>> {
    let mut w = vec![0.0; model.m];
    evaluate_output_into(&model.thresholds, &model.branches, zeta, u, &mut w).ok()?;
    w.iter().all(|x| x.is_finite()).then_some(w)
}

fn eval_f(model: &ModelSpec, u: &[f64], v: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let env: Vec<f64> = u.iter().chain(v).chain(w).copied().collect();
    let mut out = vec![0.0; model.k];
    model.eval_f_into(&env, &mut out).ok()?;
    out.iter().all(|x| x.is_finite()).then_some(out)
}

fn eval_g(model: &ModelSpec, u: &[f64], v: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let env: Vec<f64> = u.iter().chain(v).chain(w).copied().collect();
    let mut out = vec![0.0; model.l];
    model.eval_g_into(&env, &mut out).ok()?;
    out.iter().all(|x| x.is_finite()).then_some(out)
}

/// Smallest value of `−n·f(u, v, W_ζ(u))` over sampled points of the faces
/// of U0, `n` the outward normal, `u ∈ D(W_ζ)`, `v ∈ V0`. Positive means
/// strictly inward; `None` when no face point lies in either branch domain.
pub fn inward_margin(model: &ModelSpec, sample_count: usize) -> Option<f64> {
    let ubox = u_sampling_box(model);
    let vbox = v_sampling_box(model);
    let (k, l) = (model.k, model.l);
    let mut margin: Option<f64> = None;
    for face in 0..2 * k {
        let (c, upper) = (face / 2, face % 2 == 1);
        let bound = if upper { ubox.upper[c] } else { ubox.lower[c] };
        if !bound.is_finite() {
            continue;
        }
        let normal = if upper { 1.0 } else { -1.0 };
        for i in 0..sample_count as u64 {
            let h = halton(i, k + l);
            let mut u = ubox.from_unit(&h[..k]);
            u[c] = bound;
            // Include v on the faces of V0 as well.
            let mut v = vbox.from_unit(&h[k..]);
            if i % 4 == 0 {
                v.iter_mut().zip(&vbox.lower).for_each(|(x, lo)| *x = *lo);
            }
            for zeta in [Configuration::Plus, Configuration::Minus] {
                let Some(w) = outputs(model, zeta, &u) else { continue };
                let Some(f) = eval_f(model, &u, &v, &w) else { continue };
                let m = -normal * f[c];
                margin = Some(margin.map_or(m, |x: f64| x.min(m)));
            }
        }
    }
    margin
}

/// Least-squares line through the per-`|v|` maximum of `|g|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthFit {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    /// Root-mean-square residual of the envelope about the line.
    pub residual: f64,
    pub samples: usize,
}

/// Fit `|g(u, v, w)| ≤ A|v| + B` over sampled `u ∈ U0`, `v ∈ V0`, `w = W_±(u)`.
pub fn fit_growth_bound(model: &ModelSpec, sample_count: usize) -> GrowthFit {
    let ubox = u_sampling_box(model);
    let vbox = v_sampling_box(model);
    let (k, l) = (model.k, model.l);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for i in 0..sample_count as u64 {
        let h = halton(i, k + l);
        let u = ubox.from_unit(&h[..k]);
        let v = vbox.from_unit(&h[k..]);
        let vn = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for zeta in [Configuration::Plus, Configuration::Minus] {
            let Some(w) = outputs(model, zeta, &u) else { continue };
            let Some(g) = eval_g(model, &u, &v, &w) else { continue };
            pts.push((vn, g.iter().map(|x| x * x).sum::<f64>().sqrt()));
        }
    }
    envelope_fit(&pts)
}

fn envelope_fit(pts: &[(f64, f64)]) -> GrowthFit {
    if pts.is_empty() {
        return GrowthFit {
            a: f64::NAN,
            b: f64::NAN,
            residual: f64::NAN,
            samples: 0,
        };
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo).max(f64::MIN_POSITIVE);
    let mut bins: Vec<Option<(f64, f64)>> = vec![None; ENVELOPE_BINS];
    for &(x, y) in pts {
        let j = (((x - lo) / width) * ENVELOPE_BINS as f64).floor().clamp(0.0, (ENVELOPE_BINS - 1) as f64) as usize;
        if bins[j].is_none_or(|(_, best)| y > best) {
            bins[j] = Some((x, y));
        }
    }
    let env: Vec<(f64, f64)> = bins.into_iter().flatten().collect();
    let n = env.len() as f64;
    let mx = env.iter().map(|p| p.0).sum::<f64>() / n;
    let my = env.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = env.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = env.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let residual = (env.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum::<f64>() / n).sqrt();
    GrowthFit {
        a,
        b,
        residual,
        samples: pts.len(),
    }
}

/// Inward-pointing check on the faces of U0 and the growth-bound fit.
pub fn validate_dissipativity(model: &ModelSpec, sample_count: usize) -> Report {
    let mut report = Report::default();
    let declared = model.u_box.as_ref().is_some_and(AxisBox::is_bounded) && model.v_box.is_some();
    if !declared {
        report.push(Check::new(
            "inward_pointing",
            Status::Warn,
            "invariant boxes U0, V0 not declared; sampled a default box",
        ));
    }
    match inward_margin(model, sample_count) {
        None => report.push(Check::new(
            "inward_pointing",
            Status::Warn,
            "no sampled face point lies in a branch domain",
        )),
        Some(m) => {
            let (status, detail) = if m > INWARD_EPS {
                (Status::Pass, "f points strictly into U0 on every sampled face point")
            } else if m >= -INWARD_EPS {
                (Status::Warn, "non-strict: the inward component reaches 0 on a face")
            } else {
                (Status::Fail, "f points out of U0 on a face")
            };
            report.push(Check::new("inward_pointing", status, detail).with_value(m));
        }
    }
    let fit = fit_growth_bound(model, sample_count);
    let status = if fit.a.is_finite() && fit.b.is_finite() { Status::Pass } else { Status::Warn };
    report.push(
        Check::new(
            "growth_bound",
            status,
            format!("|g| <= A|v| + B with A = {}, B = {}, residual {}", fit.a, fit.b, fit.residual),
        )
        .with_value(fit.a),
    );
    report
}

/// The threshold paired with a branch: `γ_β` for `W₁`, `γ_α` for `W₋₁`.
pub fn paired_manifold(zeta: Configuration) -> Manifold {
    match zeta {
        Configuration::Plus => Manifold::Beta,
        Configuration::Minus => Manifold::Alpha,
    }
}

fn unit_gradient(model: &ModelSpec, which: Manifold, u: &[f64]) -> Option<Vec<f64>> {
    let g = model.thresholds.grad(which, u).ok()?;
    let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 0.0 && n.is_finite()).then(|| g.iter().map(|x| x / n).collect())
}

/// Empirical Hölder constant of branch `W_ζ`:
/// `sup |W(u) − W(û)| (γ(u)^σ + γ(û)^σ) / |u − û|` over sampled pairs in the
/// branch domain, halved when `σ = 0`. Half the pairs sit within
/// [`NEAR_SET_DISTANCE`] of `{γ = 0}`; finer sampling reaches closer to it.
/// Sups of the weighted quotient over near-set pairs and over uniform
/// pairs, before the `σ = 0` normalization.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct HolderParts {
    pub near: f64,
    pub uniform: f64,
}

pub fn holder_parts(model: &ModelSpec, zeta: Configuration, sigma: f64, sample_count: usize) -> HolderParts {
    let which = paired_manifold(zeta);
    let ubox = u_sampling_box(model);
    let k = model.k;
    let th = &model.thresholds;
    let gamma = |u: &[f64]| th.gamma(which, u).ok().filter(|g| g.is_finite() && *g >= 0.0);
    let quotient = |p: &[f64], q: &[f64]| -> Option<f64> {
        if !ubox.contains(p, 0.0) || !ubox.contains(q, 0.0) {
            return None;
        }
        let (gp, gq) = (gamma(p)?, gamma(q)?);
        let (wp, wq) = (outputs(model, zeta, p)?, outputs(model, zeta, q)?);
        let dist = p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dist == 0.0 {
            return None;
        }
        let dw = wp.iter().zip(&wq).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        Some(dw * (gp.powf(sigma) + gq.powf(sigma)) / dist)
    };
    let mut parts = HolderParts::default();
    let half = sample_count / 2;
    let feet = level_set_points(th, which, &ubox, half.clamp(1, 64));
    for i in 0..half as u64 {
        if feet.is_empty() {
            break;
        }
        let foot = &feet[i as usize % feet.len()];
        let Some(n) = unit_gradient(model, which, foot) else { continue };
        let h = halton(i + 1, 2);
        let d1 = NEAR_SET_DISTANCE * h[0] * h[0];
        let d2 = d1 * h[1];
        let p: Vec<f64> = foot.iter().zip(&n).map(|(x, e)| x + d1 * e).collect();
        let q: Vec<f64> = foot.iter().zip(&n).map(|(x, e)| x + d2 * e).collect();
        if let Some(r) = quotient(&p, &q) {
            parts.near = parts.near.max(r);
        }
    }
    for i in 0..(sample_count - half) as u64 {
        let h = halton(i + 1, 2 * k);
        let p = ubox.from_unit(&h[..k]);
        let q = ubox.from_unit(&h[k..]);
        if let Some(r) = quotient(&p, &q) {
            parts.uniform = parts.uniform.max(r);
        }
    }
    parts
}

fn normalized(x: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        x / 2.0
    } else {
        x
    }
}

pub fn estimate_holder_quotient(model: &ModelSpec, zeta: Configuration, sigma: f64, sample_count: usize) -> f64 {
    let p = holder_parts(model, zeta, sigma, sample_count);
    normalized(p.near.max(p.uniform), sigma)
}

/// Quotient parts at `samples`, `4·samples` and `16·samples`.
pub fn holder_sequence(model: &ModelSpec, zeta: Configuration, sigma: f64, sample_count: usize) -> [HolderParts; 3] {
    [1, 4, 16].map(|f| holder_parts(model, zeta, sigma, f * sample_count))
}

fn grows(seq: [f64; 3]) -> bool {
    seq[0] > 0.0 && seq[1] >= HOLDER_GROWTH_WARN * seq[0] && seq[2] >= HOLDER_GROWTH_WARN * seq[1]
}

/// True when either family of pairs grows by at least
/// [`HOLDER_GROWTH_WARN`] at each densification.
pub fn holder_diverges(seq: &[HolderParts; 3]) -> bool {
    grows(seq.map(|p| p.near)) || grows(seq.map(|p| p.uniform))
}

/// Hölder check of both branches with exponent `σ`.
pub fn validate_holder(model: &ModelSpec, sigma: f64, sample_count: usize) -> Report {
    let mut report = Report::default();
    for (name, zeta) in [("holder_w_plus", Configuration::Plus), ("holder_w_minus", Configuration::Minus)] {
        let parts = holder_sequence(model, zeta, sigma, sample_count);
        let seq = parts.map(|p| normalized(p.near.max(p.uniform), sigma));
        let near = parts.map(|p| normalized(p.near, sigma));
        let check = if holder_diverges(&parts) {
            Check::new(
                name,
                Status::Warn,
                format!("quotient grows with sample density: {seq:?} (near the threshold set {near:?}); the Hölder bound with σ = {sigma} looks violated"),
            )
        } else {
            Check::new(name, Status::Pass, format!("quotient stabilizes: {seq:?} (near the threshold set {near:?})"))
        };
        report.push(check.with_value(seq[2]));
    }
    report
}
