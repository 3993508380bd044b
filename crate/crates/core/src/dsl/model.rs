//! Model definitions: dimensions, diffusion, reaction terms, relay thresholds
//! and branches, plus the built-in bacteria-colony model.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{EvalError, Expression, VarSet};
use super::parse::{parse_expression, Constants, ParseError};
use crate::relay::{BranchPair, ThresholdPair};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("in {role}: {source}")]
    Parse {
        role: String,
        #[source]
        source: ParseError,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("diffusion coefficient D{index} = {value} is not strictly positive")]
    Diffusion { index: usize, value: f64 },
    #[error("invalid parameters: {0}")]
    Params(String),
}

/// Axis-aligned box `[lower₁, upper₁] × … × [lower_d, upper_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AxisBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Self { lower, upper }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self::new(vec![f64::NEG_INFINITY; dim], vec![f64::INFINITY; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_bounded(&self) -> bool {
        self.lower.iter().chain(&self.upper).all(|v| v.is_finite())
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(x, (lo, hi))| *x >= lo - tol && *x <= hi + tol)
    }

    /// Largest distance by which `p` lies outside the box (0 inside).
    pub fn excess(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (lo, hi))| (lo - x).max(x - hi).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Map a point of the unit cube into the box.
    pub fn from_unit(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(s, (lo, hi))| lo + s * (hi - lo))
            .collect()
    }

    pub fn clamp(&self, p: &mut [f64]) {
        for (x, (lo, hi)) in p.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *x = x.clamp(*lo, *hi);
        }
    }

    pub fn intersect(&self, other: &AxisBox) -> AxisBox {
        AxisBox::new(
            self.lower.iter().zip(&other.lower).map(|(a, b)| a.max(*b)).collect(),
            self.upper.iter().zip(&other.upper).map(|(a, b)| a.min(*b)).collect(),
        )
    }
}

/// Expression source strings, kept for dumping a model back to a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSource {
    pub f: Vec<String>,
    pub g: Vec<String>,
    pub gamma_alpha: String,
    pub gamma_beta: String,
    pub w_plus: Vec<String>,
    pub w_minus: Vec<String>,
}

/// Everything needed to pose the problem except the initial data.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub name: String,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub diffusion: Vec<f64>,
    pub constants: Constants,
    /// `f`, over variables `u1..uk, v1..vl, w1..wm`.
    pub f: Vec<Expression>,
    /// `g`, over the same variables as `f`.
    pub g: Vec<Expression>,
    pub thresholds: ThresholdPair,
    pub branches: BranchPair,
    /// Admissible set for `u`; states outside it are rejected.
    pub admissible: AxisBox,
    pub u_box: Option<AxisBox>,
    pub v_box: Option<AxisBox>,
    /// Linear combinations over `(u1..uk, v1..vl)` whose integrals are monitored.
    pub conserved: Vec<Vec<f64>>,
    pub source: ModelSource,
}

/// Inputs for [`ModelSpec::from_source`].
#[derive(Debug, Clone)]
pub struct ModelDefinition {
    pub name: String,
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub diffusion: Vec<f64>,
    pub constants: Constants,
    pub source: ModelSource,
    pub admissible: Option<AxisBox>,
    pub u_box: Option<AxisBox>,
    pub v_box: Option<AxisBox>,
    pub conserved: Vec<Vec<f64>>,
}

fn parse_all(
    role: &str,
    texts: &[String],
    vars: &Arc<VarSet>,
    consts: &Constants,
) -> Result<Vec<Expression>, ModelError> {
    texts
        .iter()
        .enumerate()
        .map(|(i, t)| {
            parse_expression(t, vars, consts).map_err(|source| ModelError::Parse {
                role: format!("{role}[{}]", i + 1),
                source,
            })
        })
        .collect()
}

fn expect_len(what: &str, got: usize, expected: usize) -> Result<(), ModelError> {
    if got != expected {
        return Err(ModelError::Dimension(format!("{what} has {got} entries, expected {expected}")));
    }
    Ok(())
}

impl ModelSpec {
    pub fn from_source(def: ModelDefinition) -> Result<Self, ModelError> {
        let ModelDefinition {
            name,
            k,
            l,
            m,
            diffusion,
            constants,
            source,
            admissible,
            u_box,
            v_box,
            conserved,
        } = def;
        if k == 0 || l == 0 || m == 0 {
            return Err(ModelError::Dimension(format!("k, l, m must be positive (got {k}, {l}, {m})")));
        }
        expect_len("diffusion", diffusion.len(), k)?;
        for (i, d) in diffusion.iter().enumerate() {
            if !(*d > 0.0 && d.is_finite()) {
                return Err(ModelError::Diffusion { index: i + 1, value: *d });
            }
        }
        expect_len("f", source.f.len(), k)?;
        expect_len("g", source.g.len(), l)?;
        expect_len("w_plus", source.w_plus.len(), m)?;
        expect_len("w_minus", source.w_minus.len(), m)?;

        let rvars = VarSet::reaction(k, l, m);
        let uvars = VarSet::state(k);
        let f = parse_all("f", &source.f, &rvars, &constants)?;
        let g = parse_all("g", &source.g, &rvars, &constants)?;
        let ga = parse_all("gamma_alpha", std::slice::from_ref(&source.gamma_alpha), &uvars, &constants)?;
        let gb = parse_all("gamma_beta", std::slice::from_ref(&source.gamma_beta), &uvars, &constants)?;
        let wp = parse_all("w_plus", &source.w_plus, &uvars, &constants)?;
        let wm = parse_all("w_minus", &source.w_minus, &uvars, &constants)?;

        let admissible = admissible.unwrap_or_else(|| AxisBox::unbounded(k));
        expect_len("admissible box", admissible.dim(), k)?;
        if let Some(b) = &u_box {
            expect_len("U0 box", b.dim(), k)?;
        }
        if let Some(b) = &v_box {
            expect_len("V0 box", b.dim(), l)?;
        }
        for c in &conserved {
            expect_len("conservation combination", c.len(), k + l)?;
        }

        Ok(Self {
            name,
            k,
            l,
            m,
            diffusion,
            constants,
            f,
            g,
            thresholds: ThresholdPair::new(ga.into_iter().next().unwrap(), gb.into_iter().next().unwrap()),
            branches: BranchPair::new(wp, wm),
            admissible,
            u_box,
            v_box,
            conserved,
            source,
        })
    }

    pub fn definition(&self) -> ModelDefinition {
        ModelDefinition {
            name: self.name.clone(),
            k: self.k,
            l: self.l,
            m: self.m,
            diffusion: self.diffusion.clone(),
            constants: self.constants.clone(),
            source: self.source.clone(),
            admissible: Some(self.admissible.clone()),
            u_box: self.u_box.clone(),
            v_box: self.v_box.clone(),
            conserved: self.conserved.clone(),
        }
    }

    /// Length of the `(u, v, w)` argument vector of `f` and `g`.
    pub fn reaction_arity(&self) -> usize {
        self.k + self.l + self.m
    }

    pub fn eval_f_into(&self, env: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        for (o, e) in out.iter_mut().zip(&self.f) {
            *o = e.eval(env)?;
        }
        Ok(())
    }

    pub fn eval_g_into(&self, env: &[f64], out: &mut [f64]) -> Result<(), EvalError> {
        for (o, e) in out.iter_mut().zip(&self.g) {
            *o = e.eval(env)?;
        }
        Ok(())
    }

    /// Monitored combinations: the declared ones, or each `u` component alone.
    pub fn conservation_combos(&self) -> Vec<Vec<f64>> {
        if !self.conserved.is_empty() {
            return self.conserved.clone();
        }
        (0..self.k)
            .map(|i| {
                let mut c = vec![0.0; self.k + self.l];
                c[i] = 1.0;
                c
            })
            .collect()
    }
}

/// Parameters of the bacteria-colony model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BacteriaParams {
    pub d1: f64,
    pub d2: f64,
    pub a: f64,
    pub a1: f64,
    pub a2: f64,
    pub a_alpha: f64,
    pub b_alpha: f64,
    pub a_beta: f64,
    pub b_beta: f64,
    pub lambda: f64,
}

impl Default for BacteriaParams {
    fn default() -> Self {
        Self {
            d1: 0.005,
            d2: 0.0025,
            a: 1.0,
            a1: 1.0,
            a2: 1.0,
            a_alpha: 1.0,
            b_alpha: 1.0,
            a_beta: 0.5,
            b_beta: 0.5,
            lambda: 1.0,
        }
    }
}

/// Floor on the nutrient concentration `u2`; the thresholds contain `1/u2`.
pub const BACTERIA_U2_MIN: f64 = 1e-6;

/// Buffer `u1`, nutrient `u2` (both diffusing) and bacteria `v`:
///
/// ```text
/// u1_t = D1 u1_xx − a1 W v,   u2_t = D2 u2_xx − a2 W v,   v_t = a W v
/// γ_α = −u1 + a_α/u2 + b_α,   γ_β = u1 − a_β/u2 − b_β,   W₁ ≡ λ, W₋₁ ≡ 0
/// ```
pub fn builtin_bacteria_model(p: &BacteriaParams) -> Result<ModelSpec, ModelError> {
    let named = [
        ("D1", p.d1),
        ("D2", p.d2),
        ("a", p.a),
        ("a1", p.a1),
        ("a2", p.a2),
        ("a_alpha", p.a_alpha),
        ("b_alpha", p.b_alpha),
        ("a_beta", p.a_beta),
        ("b_beta", p.b_beta),
        ("lambda", p.lambda),
    ];
    for (n, v) in named {
        if !(v > 0.0 && v.is_finite()) {
            return Err(ModelError::Params(format!("{n} = {v} must be positive")));
        }
    }
    if p.a_alpha <= p.a_beta || p.b_alpha <= p.b_beta {
        return Err(ModelError::Params(
            "thresholds require a_alpha > a_beta and b_alpha > b_beta".into(),
        ));
    }
    let constants: Constants = named
        .iter()
        .filter(|(n, _)| !n.starts_with('D'))
        .map(|(n, v)| (n.to_string(), *v))
        .collect();
    let s = |t: &str| t.to_string();
    ModelSpec::from_source(ModelDefinition {
        name: "bacteria".into(),
        k: 2,
        l: 1,
        m: 1,
        diffusion: vec![p.d1, p.d2],
        constants,
        source: ModelSource {
            f: vec![s("-a1*w1*v1"), s("-a2*w1*v1")],
            g: vec![s("a*w1*v1")],
            gamma_alpha: s("-u1 + a_alpha/u2 + b_alpha"),
            gamma_beta: s("u1 - a_beta/u2 - b_beta"),
            w_plus: vec![s("lambda")],
            w_minus: vec![s("0")],
        },
        admissible: Some(AxisBox::new(vec![0.0, BACTERIA_U2_MIN], vec![f64::INFINITY, f64::INFINITY])),
        u_box: Some(AxisBox::new(vec![0.0, BACTERIA_U2_MIN], vec![4.0, 4.0])),
        v_box: Some(AxisBox::new(vec![0.0], vec![10.0])),
        conserved: vec![vec![1.0, 0.0, p.a1 / p.a], vec![0.0, 1.0, p.a2 / p.a]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relay::{evaluate_output, Configuration};

    #[test]
    fn bacteria_defaults() {
        let m = builtin_bacteria_model(&BacteriaParams::default()).unwrap();
        assert_eq!((m.k, m.l, m.m), (2, 1, 1));
        assert_eq!(m.thresholds.gamma_alpha(&[3.0, 1.0]).unwrap(), -1.0);
        let w = evaluate_output(&m.thresholds, &m.branches, Configuration::Minus, &[0.5, 2.0]).unwrap();
        assert_eq!(w, vec![0.0]);
        let mut g = [0.0];
        m.eval_g_into(&[1.0, 1.0, 2.0, 1.0], &mut g).unwrap();
        assert_eq!(g[0], 2.0);
    }

    #[test]
    fn bacteria_parameter_checks() {
        let p = BacteriaParams {
            a_beta: 1.0,
            ..Default::default()
        };
        assert!(matches!(builtin_bacteria_model(&p), Err(ModelError::Params(_))));
        let p = BacteriaParams {
            d1: 0.0,
            ..Default::default()
        };
        assert!(builtin_bacteria_model(&p).is_err());
    }

    #[test]
    fn undeclared_variables_are_rejected() {
        let mut def = builtin_bacteria_model(&BacteriaParams::default()).unwrap().definition();
        def.source.gamma_alpha = "v1 - 1".into();
        let err = ModelSpec::from_source(def).unwrap_err();
        assert!(matches!(err, ModelError::Parse { .. }));
        assert!(err.to_string().contains("gamma_alpha"));
    }

    #[test]
    fn dimension_checks() {
        let mut def = builtin_bacteria_model(&BacteriaParams::default()).unwrap().definition();
        def.source.f.pop();
        assert!(matches!(ModelSpec::from_source(def), Err(ModelError::Dimension(_))));
        let mut def = builtin_bacteria_model(&BacteriaParams::default()).unwrap().definition();
        def.diffusion[1] = -1.0;
        assert!(matches!(
            ModelSpec::from_source(def),
            Err(ModelError::Diffusion { index: 2, .. })
        ));
    }
}
