//! Model files: TOML with one section per part of the model.
//!
//! ```toml
//! [model]
//! name = "bacteria"
//! k = 2
//! l = 1
//! m = 1
//!
//! [constants]
//! a1 = 1.0
//!
//! [diffusion]
//! D = [0.005, 0.0025]
//!
//! [reaction]
//! f = ["-a1*w1*v1", "-a2*w1*v1"]
//! g = ["a*w1*v1"]
//!
//! [hysteresis]
//! gamma_alpha = "-u1 + a_alpha/u2 + b_alpha"
//! gamma_beta = "u1 - a_beta/u2 - b_beta"
//! w_plus = ["lambda"]
//! w_minus = ["0"]
//!
//! [admissible]          # optional
//! lower = [0.0, 1e-6]
//! upper = [inf, inf]
//!
//! [boxes]               # optional invariant boxes U0, V0
//! u0_lower = [0.0, 1e-6]
//! u0_upper = [4.0, 4.0]
//! v0_lower = [0.0]
//! v0_upper = [10.0]
//!
//! [conservation]        # optional, coefficients over (u1..uk, v1..vl)
//! combos = [[1.0, 0.0, 1.0]]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{AxisBox, ModelDefinition, ModelError, ModelSource, ModelSpec};
use super::parse::Constants;

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{path}: {source}")]
    Model {
        path: String,
        #[source]
        source: ModelError,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    #[serde(default)]
    name: String,
    k: usize,
    l: usize,
    m: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Diffusion {
    #[serde(rename = "D")]
    d: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Reaction {
    f: Vec<String>,
    g: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Hysteresis {
    gamma_alpha: String,
    gamma_beta: String,
    w_plus: Vec<String>,
    w_minus: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Boxes {
    #[serde(skip_serializing_if = "Option::is_none")]
    u0_lower: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    u0_upper: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v0_lower: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    v0_upper: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Conservation {
    combos: Vec<Vec<f64>>,
}

/// Serialized form of a [`ModelSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    model: Header,
    #[serde(default)]
    constants: Constants,
    diffusion: Diffusion,
    reaction: Reaction,
    hysteresis: Hysteresis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    admissible: Option<AxisBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    boxes: Option<Boxes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conservation: Option<Conservation>,
}

fn pair(lo: Option<Vec<f64>>, hi: Option<Vec<f64>>, what: &str) -> Result<Option<AxisBox>, ModelError> {
    match (lo, hi) {
        (Some(l), Some(h)) => Ok(Some(AxisBox::new(l, h))),
        (None, None) => Ok(None),
        _ => Err(ModelError::Dimension(format!("{what} needs both lower and upper bounds"))),
    }
}

impl ModelFile {
    pub fn from_spec(spec: &ModelSpec) -> Self {
        let boxes = (spec.u_box.is_some() || spec.v_box.is_some()).then(|| Boxes {
            u0_lower: spec.u_box.as_ref().map(|b| b.lower.clone()),
            u0_upper: spec.u_box.as_ref().map(|b| b.upper.clone()),
            v0_lower: spec.v_box.as_ref().map(|b| b.lower.clone()),
            v0_upper: spec.v_box.as_ref().map(|b| b.upper.clone()),
        });
        Self {
            model: Header {
                name: spec.name.clone(),
                k: spec.k,
                l: spec.l,
                m: spec.m,
            },
            constants: spec.constants.clone(),
            diffusion: Diffusion {
                d: spec.diffusion.clone(),
            },
            reaction: Reaction {
                f: spec.source.f.clone(),
                g: spec.source.g.clone(),
            },
            hysteresis: Hysteresis {
                gamma_alpha: spec.source.gamma_alpha.clone(),
                gamma_beta: spec.source.gamma_beta.clone(),
                w_plus: spec.source.w_plus.clone(),
                w_minus: spec.source.w_minus.clone(),
            },
            admissible: Some(spec.admissible.clone()),
            boxes,
            conservation: (!spec.conserved.is_empty()).then(|| Conservation {
                combos: spec.conserved.clone(),
            }),
        }
    }

    pub fn into_spec(self) -> Result<ModelSpec, ModelError> {
        let boxes = self.boxes.unwrap_or_default();
        ModelSpec::from_source(ModelDefinition {
            name: self.model.name,
            k: self.model.k,
            l: self.model.l,
            m: self.model.m,
            diffusion: self.diffusion.d,
            constants: self.constants,
            source: ModelSource {
                f: self.reaction.f,
                g: self.reaction.g,
                gamma_alpha: self.hysteresis.gamma_alpha,
                gamma_beta: self.hysteresis.gamma_beta,
                w_plus: self.hysteresis.w_plus,
                w_minus: self.hysteresis.w_minus,
            },
            admissible: self.admissible,
            u_box: pair(boxes.u0_lower, boxes.u0_upper, "U0")?,
            v_box: pair(boxes.v0_lower, boxes.v0_upper, "V0")?,
            conserved: self.conservation.map(|c| c.combos).unwrap_or_default(),
        })
    }
}

/// Render a model in the file format.
pub fn dump_model(spec: &ModelSpec) -> String {
    toml::to_string(&ModelFile::from_spec(spec)).expect("model file serialization")
}

/// Parse model-file text; `origin` names the source in error messages.
pub fn parse_model(text: &str, origin: &str) -> Result<ModelSpec, ModelFileError> {
    let file: ModelFile = toml::from_str(text).map_err(|e| ModelFileError::Syntax {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    file.into_spec().map_err(|source| ModelFileError::Model {
        path: origin.to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<ModelSpec, ModelFileError> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ModelFileError::Io {
        path: origin.clone(),
        source,
    })?;
    parse_model(&text, &origin)
}
