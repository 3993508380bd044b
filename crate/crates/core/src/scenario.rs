//! Scenario files: one TOML document fixing model, initial data, grid,
//! solver settings and outputs.
//!
//! ```toml
//! [scenario]
//! name = "reference"
//! n = 200
//! t_end = 1.0
//! snapshot_times = [0.0, 0.5, 1.0]
//!
//! [model]
//! builtin = "bacteria"        # or: file = "model.toml", or an [model.inline] model table
//!
//! [initial]
//! phi = ["3 - 1.5*x", "0.8"]
//! psi = ["0.1"]
//! b_bar = 0.5
//!
//! [solver]
//! dt = 1e-3
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::expr::VarSet;
use crate::dsl::model::{builtin_bacteria_model, BacteriaParams, ModelError, ModelSpec};
use crate::dsl::model_file::{load_model, ModelFile, ModelFileError};
use crate::dsl::parse::{parse_expression, Constants, ParseError};
use crate::grid::{Grid, GridError, GridFunction};
use crate::solver::{InitialData, SolverConfig, SolverError};

pub const REFERENCE_SCENARIO: &str = include_str!("../../../scenarios/reference.toml");
pub const TANGENCY_SCENARIO: &str = include_str!("../../../scenarios/tangency.toml");
pub const SMOOTH_SCENARIO: &str = include_str!("../../../scenarios/smooth.toml");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Syntax { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: model: {source}")]
    ModelFile {
        path: String,
        #[source]
        source: ModelFileError,
    },
    #[error("{path}: model: {source}")]
    Model {
        path: String,
        #[source]
        source: ModelError,
    },
    #[error("{path}: initial.{role}: {source}")]
    Expression {
        path: String,
        role: String,
        #[source]
        source: ParseError,
    },
    #[error("{path}: {source}")]
    Grid {
        path: String,
        #[source]
        source: GridError,
    },
    #[error("{path}: {source}")]
    Solver {
        path: String,
        #[source]
        source: SolverError,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    #[serde(default)]
    name: String,
    n: usize,
    t_end: f64,
    #[serde(default)]
    snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<BacteriaParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inline: Option<ModelFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitialSection {
    phi: Vec<String>,
    psi: Vec<String>,
    b_bar: f64,
    #[serde(default)]
    constants: Constants,
}

/// Output file names, relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputNames {
    pub time_series: String,
    pub report: String,
    /// Pattern with `{t}` replaced by the snapshot time.
    pub snapshot: String,
}

impl Default for OutputNames {
    fn default() -> Self {
        Self {
            time_series: "timeseries.csv".into(),
            report: "report.json".into(),
            snapshot: "snapshot_t{t}.csv".into(),
        }
    }
}

/// Defaults for the experiment suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    pub perturb_eps: Vec<f64>,
    pub converge_levels: usize,
    /// Exponent used by the branch Hölder check of `validate`.
    pub holder_sigma: f64,
    pub validate_samples: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            perturb_eps: vec![1e-1, 5e-2, 2.5e-2, 1.25e-2],
            converge_levels: 4,
            holder_sigma: 0.0,
            validate_samples: 2000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    scenario: Header,
    model: ModelSection,
    initial: InitialSection,
    #[serde(default)]
    solver: SolverConfig,
    #[serde(default)]
    output: OutputNames,
    #[serde(default)]
    experiments: ExperimentSettings,
}

/// A fully resolved scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: ModelSpec,
    pub phi: Vec<String>,
    pub psi: Vec<String>,
    pub b_bar: f64,
    pub constants: Constants,
    pub n: usize,
    pub t_end: f64,
    pub config: SolverConfig,
    pub snapshot_times: Vec<f64>,
    pub output: OutputNames,
    pub experiments: ExperimentSettings,
}

/// A profile `x ↦ (e_1(x), …, e_d(x))` parsed from expressions over `x`.
#[derive(Debug, Clone)]
pub struct Profile {
    exprs: Vec<crate::dsl::expr::Expression>,
}

impl Profile {
    pub fn parse(texts: &[String], constants: &Constants) -> Result<Self, (usize, ParseError)> {
        let vars = VarSet::spatial();
        let exprs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| parse_expression(t, &vars, constants).map_err(|e| (i, e)))
            .collect::<Result<_, _>>()?;
        Ok(Self { exprs })
    }

    pub fn dim(&self) -> usize {
        self.exprs.len()
    }

    pub fn sample(&self, grid: Grid) -> Result<GridFunction, SolverError> {
        let mut f = GridFunction::zeros(grid, self.dim());
        for i in 0..grid.nodes() {
            let x = grid.x(i);
            for (c, e) in self.exprs.iter().enumerate() {
                f.set(i, c, e.eval(&[x])?);
            }
        }
        f.check_finite()?;
        Ok(f)
    }
}

impl Scenario {
    /// Parse scenario text; relative model paths resolve against `base`.
    pub fn parse(text: &str, origin: &str, base: &Path) -> Result<Self, ScenarioError> {
        let path = origin.to_string();
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Syntax {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let invalid = |message: String| ScenarioError::Invalid {
            path: path.clone(),
            message,
        };
        let m = &file.model;
        let chosen = [m.builtin.is_some(), m.file.is_some(), m.inline.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if chosen != 1 {
            return Err(invalid("[model] needs exactly one of `builtin`, `file`, `inline`".into()));
        }
        let model = if let Some(name) = &m.builtin {
            if name != "bacteria" {
                return Err(invalid(format!("unknown built-in model `{name}`")));
            }
            builtin_bacteria_model(&m.params.unwrap_or_default()).map_err(|source| ScenarioError::Model {
                path: path.clone(),
                source,
            })?
        } else if let Some(rel) = &m.file {
            load_model(&base.join(rel)).map_err(|source| ScenarioError::ModelFile {
                path: path.clone(),
                source,
            })?
        } else {
            m.inline.clone().unwrap().into_spec().map_err(|source| ScenarioError::Model {
                path: path.clone(),
                source,
            })?
        };
        if m.params.is_some() && m.builtin.is_none() {
            return Err(invalid("[model.params] applies to built-in models only".into()));
        }
        let h = &file.scenario;
        if !(h.t_end >= 0.0) {
            return Err(invalid(format!("t_end = {} must be nonnegative", h.t_end)));
        }
        if let Some(t) = h.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= h.t_end)) {
            return Err(invalid(format!("snapshot time {t} outside [0, {}]", h.t_end)));
        }
        file.solver.validate().map_err(|source| ScenarioError::Solver {
            path: path.clone(),
            source,
        })?;
        let sc = Scenario {
            name: h.name.clone(),
            model,
            phi: file.initial.phi,
            psi: file.initial.psi,
            b_bar: file.initial.b_bar,
            constants: file.initial.constants,
            n: h.n,
            t_end: h.t_end,
            config: file.solver,
            snapshot_times: h.snapshot_times.clone(),
            output: file.output,
            experiments: file.experiments,
        };
        if sc.phi.len() != sc.model.k || sc.psi.len() != sc.model.l {
            return Err(invalid(format!(
                "initial data has {} phi and {} psi expressions, model expects {} and {}",
                sc.phi.len(),
                sc.psi.len(),
                sc.model.k,
                sc.model.l
            )));
        }
        sc.profiles().map_err(|(role, source)| ScenarioError::Expression {
            path: path.clone(),
            role,
            source,
        })?;
        Grid::new(sc.n).map_err(|source| ScenarioError::Grid { path, source })?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: origin.clone(),
            source,
        })?;
        Self::parse(&text, &origin, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn reference() -> Self {
        Self::parse(REFERENCE_SCENARIO, "reference.toml", Path::new(".")).expect("shipped scenario")
    }

    pub fn tangency() -> Self {
        Self::parse(TANGENCY_SCENARIO, "tangency.toml", Path::new(".")).expect("shipped scenario")
    }

    pub fn smooth() -> Self {
        Self::parse(SMOOTH_SCENARIO, "smooth.toml", Path::new(".")).expect("shipped scenario")
    }

    fn profiles(&self) -> Result<(Profile, Profile), (String, ParseError)> {
        let phi = Profile::parse(&self.phi, &self.constants).map_err(|(i, e)| (format!("phi[{}]", i + 1), e))?;
        let psi = Profile::parse(&self.psi, &self.constants).map_err(|(i, e)| (format!("psi[{}]", i + 1), e))?;
        Ok((phi, psi))
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.n).expect("validated at load")
    }

    /// Initial data sampled on the scenario grid.
    pub fn initial_data(&self) -> Result<InitialData, SolverError> {
        self.initial_data_on(self.grid())
    }

    pub fn initial_data_on(&self, grid: Grid) -> Result<InitialData, SolverError> {
        let (phi, psi) = self.profiles().expect("validated at load");
        InitialData::new(phi.sample(grid)?, psi.sample(grid)?, self.b_bar)
    }

    /// Copy with grid and step refined by `2^level`.
    pub fn refined(&self, level: u32) -> Self {
        let mut s = self.clone();
        s.n = self.n << level;
        s.config.dt = self.config.dt / f64::from(1u32 << level);
        s
    }
}
