//! Sampling-based checks of the structural assumptions on a model.

use crate::dsl::model::{AxisBox, ModelSpec};
use crate::relay::{Configuration, Manifold, ThresholdPair, ON_MANIFOLD_TOL};
use crate::report::{Check, Report, Status};
use crate::sampling::halton;

/// Pair separations used by the empirical Lipschitz estimates.
pub const LIPSCHITZ_SCALES: [f64; 3] = [1e-2, 1e-4, 1e-6];
/// Growth of the Lipschitz quotient across the scales that triggers a warning.
pub const LIPSCHITZ_GROWTH_WARN: f64 = 10.0;
const GRADIENT_FLOOR: f64 = 1e-8;
const FALLBACK_HALF_WIDTH: f64 = 10.0;

fn fallback_box(dim: usize) -> AxisBox {
    AxisBox::new(vec![-FALLBACK_HALF_WIDTH; dim], vec![FALLBACK_HALF_WIDTH; dim])
}

/// Box used for sampling `u`: U0 if declared, clipped to the admissible set.
pub fn u_sampling_box(spec: &ModelSpec) -> AxisBox {
    let base = spec.u_box.clone().unwrap_or_else(|| fallback_box(spec.k));
    base.intersect(&spec.admissible)
}

pub fn v_sampling_box(spec: &ModelSpec) -> AxisBox {
    spec.v_box.clone().unwrap_or_else(|| fallback_box(spec.l))
}

/// Bounding box of `W₁(U0) ∪ W₋₁(U0)` over sampled points in each branch's domain.
pub fn w0_box(spec: &ModelSpec, ubox: &AxisBox, samples: usize) -> AxisBox {
    let mut lo = vec![f64::INFINITY; spec.m];
    let mut hi = vec![f64::NEG_INFINITY; spec.m];
    let mut w = vec![0.0; spec.m];
    for i in 0..samples as u64 {
        let u = ubox.from_unit(&halton(i, spec.k));
        for zeta in [Configuration::Plus, Configuration::Minus] {
            if crate::relay::evaluate_output_into(&spec.thresholds, &spec.branches, zeta, &u, &mut w).is_ok() {
                for j in 0..spec.m {
                    lo[j] = lo[j].min(w[j]);
                    hi[j] = hi[j].max(w[j]);
                }
            }
        }
    }
    for j in 0..spec.m {
        if lo[j] > hi[j] {
            lo[j] = 0.0;
            hi[j] = 0.0;
        }
    }
    AxisBox::new(lo, hi)
}

/// Project quasi-random starting points onto `{γ = 0}` by Newton steps along
/// the gradient; returns the converged points that stay inside `bx`.
pub fn level_set_points(thresholds: &ThresholdPair, which: Manifold, bx: &AxisBox, count: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let dim = bx.dim();
    let max_attempts = 20 * count as u64 + 20;
    let mut i = 0;
    while out.len() < count && i < max_attempts {
        let mut p = bx.from_unit(&halton(i, dim));
        i += 1;
        let mut converged = false;
        for _ in 0..60 {
            let (Ok(g), Ok(grad)) = (thresholds.gamma(which, &p), thresholds.grad(which, &p)) else {
                break;
            };
            if g.abs() <= ON_MANIFOLD_TOL {
                converged = true;
                break;
            }
            let n2: f64 = grad.iter().map(|x| x * x).sum();
            if n2 == 0.0 || !n2.is_finite() {
                break;
            }
            for (x, d) in p.iter_mut().zip(&grad) {
                *x -= g * d / n2;
            }
            if !bx.contains(&p, 0.0) {
                break;
            }
        }
        if converged && bx.contains(&p, 0.0) {
            out.push(p);
        }
    }
    out
}

/// Largest `|F(p) − F(q)| / |p − q|` over sampled pairs at separation `r`.
/// Half of the base points are snapped to a face of the box.
pub fn lipschitz_quotient<F>(eval: F, bx: &AxisBox, count: usize, r: f64) -> f64
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let dim = bx.dim();
    let mut best: f64 = 0.0;
    for i in 0..count as u64 {
        let h = halton(i, 2 * dim);
        let mut p = bx.from_unit(&h[..dim]);
        if i % 2 == 1 {
            let c = ((i / 2) as usize) % dim;
            p[c] = if (i / 4) % 2 == 0 { bx.lower[c] } else { bx.upper[c] };
        }
        let mut dir: Vec<f64> = h[dim..].iter().map(|s| 2.0 * s - 1.0).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            continue;
        }
        dir.iter_mut().for_each(|x| *x *= r / norm);
        // Step inward from snapped faces.
        let mut q: Vec<f64> = p.iter().zip(&dir).map(|(a, d)| a + d).collect();
        for c in 0..dim {
            if q[c] < bx.lower[c] || q[c] > bx.upper[c] {
                q[c] = p[c] - dir[c];
            }
        }
        bx.clamp(&mut q);
        let dist = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        if dist == 0.0 {
            continue;
        }
        let (Some(fp), Some(fq)) = (eval(&p), eval(&q)) else {
            continue;
        };
        let df = fp.iter().zip(&fq).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        best = best.max(df / dist);
    }
    best
}

fn lipschitz_check<F>(name: &str, eval: F, bx: &AxisBox, count: usize) -> Check
where
    F: Fn(&[f64]) -> Option<Vec<f64>>,
{
    let quotients: Vec<f64> = LIPSCHITZ_SCALES
        .iter()
        .map(|r| lipschitz_quotient(&eval, bx, count, *r))
        .collect();
    let first = quotients[0];
    let last = *quotients.last().unwrap();
    let growth = if first > 0.0 {
        last / first
    } else if last > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let detail = format!(
        "quotients {:?} at separations {:?}; growth {growth:.3}",
        quotients, LIPSCHITZ_SCALES
    );
    let status = if growth > LIPSCHITZ_GROWTH_WARN {
        Status::Warn
    } else {
        Status::Pass
    };
    Check::new(name, status, detail).with_value(last)
}

/// Checks threshold disjointness, nonvanishing gradients, empirical local
/// Lipschitz bounds, and dimension consistency.
pub fn validate_model(spec: &ModelSpec, sample_count: usize) -> Report {
    let mut report = Report::default();
    let ubox = u_sampling_box(spec);
    let vbox = v_sampling_box(spec);
    let wbox = w0_box(spec, &ubox, sample_count.max(16));
    let th = &spec.thresholds;

    let dims_ok = spec.f.len() == spec.k
        && spec.g.len() == spec.l
        && spec.branches.plus.len() == spec.m
        && spec.branches.minus.len() == spec.m
        && spec.diffusion.len() == spec.k
        && th.dim() == spec.k;
    report.push(Check::new(
        "dimensions",
        if dims_ok { Status::Pass } else { Status::Fail },
        format!("k = {}, l = {}, m = {}", spec.k, spec.l, spec.m),
    ));

    // (a) disjointness and (b) gradients on both level sets.
    let mut disjoint_violations = 0usize;
    let mut min_sep = f64::INFINITY;
    let mut grad_violations = 0usize;
    let mut min_grad = f64::INFINITY;
    let mut level_counts = [0usize; 2];
    for (slot, (which, other)) in [(Manifold::Alpha, Manifold::Beta), (Manifold::Beta, Manifold::Alpha)]
        .into_iter()
        .enumerate()
    {
        let pts = level_set_points(th, which, &ubox, sample_count);
        level_counts[slot] = pts.len();
        for p in &pts {
            match th.gamma(other, p) {
                Ok(g) => {
                    min_sep = min_sep.min(g);
                    if g <= ON_MANIFOLD_TOL {
                        disjoint_violations += 1;
                    }
                }
                Err(_) => disjoint_violations += 1,
            }
            match th.grad(which, p) {
                Ok(grad) => {
                    let n = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
                    min_grad = min_grad.min(n);
                    if !(n > GRADIENT_FLOOR) {
                        grad_violations += 1;
                    }
                }
                Err(_) => grad_violations += 1,
            }
        }
    }
    for i in 0..sample_count as u64 {
        let u = ubox.from_unit(&halton(i, spec.k));
        if let (Ok(ga), Ok(gb)) = (th.gamma_alpha(&u), th.gamma_beta(&u)) {
            if ga <= 0.0 && gb <= 0.0 {
                disjoint_violations += 1;
            }
        }
    }
    let sampled = level_counts[0] + level_counts[1];
    let (status, detail) = if disjoint_violations > 0 {
        (
            Status::Fail,
            format!("{disjoint_violations} sampled points lie in both threshold regions"),
        )
    } else if level_counts.contains(&0) {
        (
            Status::Warn,
            format!("level sets sampled: Γ_α {}, Γ_β {}", level_counts[0], level_counts[1]),
        )
    } else {
        (
            Status::Pass,
            format!("{sampled} level-set points; min opposite γ = {min_sep:.3e}"),
        )
    };
    report.push(Check::new("threshold_disjointness", status, detail).with_value(min_sep));
    let status = if grad_violations > 0 {
        Status::Fail
    } else if sampled == 0 {
        Status::Warn
    } else {
        Status::Pass
    };
    report.push(
        Check::new(
            "gradient_nonvanishing",
            status,
            format!("{grad_violations} violations; min |∇γ| = {min_grad:.3e}"),
        )
        .with_value(min_grad),
    );

    // (c) empirical Lipschitz quotients.
    let full = AxisBox::new(
        [ubox.lower.clone(), vbox.lower.clone(), wbox.lower.clone()].concat(),
        [ubox.upper.clone(), vbox.upper.clone(), wbox.upper.clone()].concat(),
    );
    report.push(lipschitz_check(
        "lipschitz_f",
        |p| {
            let mut out = vec![0.0; spec.k];
            spec.eval_f_into(p, &mut out).ok().map(|_| out)
        },
        &full,
        sample_count,
    ));
    report.push(lipschitz_check(
        "lipschitz_g",
        |p| {
            let mut out = vec![0.0; spec.l];
            spec.eval_g_into(p, &mut out).ok().map(|_| out)
        },
        &full,
        sample_count,
    ));
    for (name, zeta) in [("lipschitz_w_plus", Configuration::Plus), ("lipschitz_w_minus", Configuration::Minus)] {
        report.push(lipschitz_check(
            name,
            |u| crate::relay::evaluate_output(th, &spec.branches, zeta, u).ok(),
            &ubox,
            sample_count,
        ));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::model::{builtin_bacteria_model, BacteriaParams, ModelSpec};

    fn bacteria() -> ModelSpec {
        builtin_bacteria_model(&BacteriaParams::default()).unwrap()
    }

    #[test]
    fn bacteria_passes() {
        let r = validate_model(&bacteria(), 200);
        for c in &r.checks {
            assert_eq!(c.status, Status::Pass, "{c:?}");
        }
    }

    #[test]
    fn coincident_thresholds_fail() {
        let mut def = bacteria().definition();
        def.constants.insert("a_beta".into(), 1.0);
        def.constants.insert("b_beta".into(), 1.0);
        let spec = ModelSpec::from_source(def).unwrap();
        let r = validate_model(&spec, 100);
        assert_eq!(r.get("threshold_disjointness").unwrap().status, Status::Fail);
    }

    #[test]
    fn sqrt_edge_triggers_lipschitz_warning() {
        let mut def = bacteria().definition();
        def.source.f[0] = "sqrt(u1)".into();
        let spec = ModelSpec::from_source(def).unwrap();
        let r = validate_model(&spec, 100);
        assert_eq!(r.get("lipschitz_f").unwrap().status, Status::Warn);
        assert_eq!(r.get("lipschitz_g").unwrap().status, Status::Pass);
    }

    #[test]
    fn level_set_points_lie_on_the_manifold() {
        let spec = bacteria();
        let bx = u_sampling_box(&spec);
        let pts = level_set_points(&spec.thresholds, Manifold::Alpha, &bx, 50);
        assert_eq!(pts.len(), 50);
        for p in pts {
            assert!(spec.thresholds.gamma_alpha(&p).unwrap().abs() <= ON_MANIFOLD_TOL);
        }
    }
}
