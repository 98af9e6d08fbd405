//! Run-configuration documents: JSON with complex numbers as `[re, im]`
//! pairs. Parsing is two-stage: serde checks the shape and rejects unknown
//! keys, then [`RunConfiguration::validate`] builds the library objects and
//! collects every physics or consistency problem it finds.

use std::fmt;

use ingrape::landscape::{LandscapeConfig, DEFAULT_GAP_FACTOR};
use ingrape::linalg::{CMatrix, CVector};
use ingrape::models::document::{complex_from_doc, load_model, matrix_from_doc, ComplexDoc, MatrixDoc, ModelDocument};
use ingrape::objectives::{default_gate_basis, gates};
use ingrape::optimizer::{InitSpec, OptimizerConfig};
use ingrape::{ControlledSystem, DensityMatrix, ObjectiveSpec, PWCControls, TimeGrid};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    Syntax,
    Schema,
    NotHermitian,
    BadIndex,
    Physics,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Syntax => "SYNTAX_ERROR",
            ErrorCode::Schema => "SCHEMA_INVALID",
            ErrorCode::NotHermitian => "NOT_HERMITIAN",
            ErrorCode::BadIndex => "BAD_INDEX",
            ErrorCode::Physics => "PHYSICS_INVALID",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    pub code: ErrorCode,
    pub path: String,
    pub message: String,
}

impl ConfigIssue {
    fn new(code: ErrorCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { code, path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at `{}`: {}", self.code.as_str(), self.path, self.message)
    }
}

/// Every problem found in a configuration document.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub struct ConfigError(pub Vec<ConfigIssue>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl ConfigError {
    fn single(code: ErrorCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self(vec![ConfigIssue::new(code, path, message)])
    }

    pub fn codes(&self) -> Vec<ErrorCode> {
        self.0.iter().map(|i| i.code).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfiguration {
    pub model: ModelDocument,
    pub grid: GridDoc,
    pub objective: ObjectiveDoc,
    /// Explicit controls; commands that need controls draw random ones from
    /// `init` and `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controls: Option<ControlsDoc>,
    #[serde(default)]
    pub init: InitDoc,
    #[serde(default)]
    pub optimizer: OptimizerDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landscape: Option<LandscapeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<RobustnessDoc>,
    #[serde(default)]
    pub gradcheck: GradcheckDoc,
    /// Initial state for `simulate`; defaults to the objective's initial
    /// state, else `|0⟩`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<StateDoc>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputDoc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    #[serde(rename = "T")]
    pub total_time: f64,
    #[serde(rename = "M")]
    pub intervals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveDoc {
    ObservableMean {
        observable: MatrixDoc,
        initial: StateDoc,
        #[serde(default)]
        maximize: bool,
    },
    StateTransfer {
        initial: StateDoc,
        target: StateDoc,
    },
    GateOnStates {
        gate: GateDoc,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<Vec<StateDoc>>,
    },
    GateOnChannel {
        gate: GateDoc,
    },
}

/// A named gate (`hadamard`, `t`, `cnot`, `cz`) or an explicit matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GateDoc {
    Named(String),
    Matrix(MatrixDoc),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateDoc {
    /// Computational basis state `|i⟩`.
    Basis(usize),
    /// Normalized pure state.
    Ket(Vec<ComplexDoc>),
    Density(MatrixDoc),
}

/// Rows are intervals, columns are components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlsDoc {
    pub u: Vec<Vec<f64>>,
    #[serde(default)]
    pub w: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitDoc {
    pub u_amplitude: f64,
    pub w_amplitude: f64,
}

impl Default for InitDoc {
    fn default() -> Self {
        Self { u_amplitude: 1.0, w_amplitude: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerDoc {
    pub max_iters: usize,
    pub grad_tol: f64,
    pub f_tol: f64,
    pub step_init: f64,
    pub backtrack_factor: f64,
    pub grow_factor: f64,
    pub max_backtracks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_bound: Option<f64>,
}

impl Default for OptimizerDoc {
    fn default() -> Self {
        let c = OptimizerConfig::default();
        Self {
            max_iters: c.max_iters,
            grad_tol: c.grad_tol,
            f_tol: c.f_tol,
            step_init: c.step_init,
            backtrack_factor: c.backtrack_factor,
            grow_factor: c.grow_factor,
            max_backtracks: c.max_backtracks,
            u_bound: c.u_bound,
        }
    }
}

impl OptimizerDoc {
    pub fn to_config(self) -> OptimizerConfig {
        OptimizerConfig {
            max_iters: self.max_iters,
            grad_tol: self.grad_tol,
            f_tol: self.f_tol,
            step_init: self.step_init,
            backtrack_factor: self.backtrack_factor,
            grow_factor: self.grow_factor,
            max_backtracks: self.max_backtracks,
            u_bound: self.u_bound,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeDoc {
    #[serde(rename = "L")]
    pub launches: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default = "default_gap_factor")]
    pub gap_factor: f64,
}

fn default_bins() -> usize {
    20
}

fn default_gap_factor() -> f64 {
    DEFAULT_GAP_FACTOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustnessDoc {
    pub levels: Vec<f64>,
    #[serde(rename = "S")]
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckDoc {
    /// Central-difference step.
    pub step: f64,
    /// Largest acceptable relative error.
    pub tolerance: f64,
}

impl Default for GradcheckDoc {
    fn default() -> Self {
        Self { step: 1e-5, tolerance: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputDoc {
    pub directory: String,
}

impl Default for OutputDoc {
    fn default() -> Self {
        Self { directory: "out".into() }
    }
}

/// Configuration turned into library objects.
#[derive(Debug, Clone)]
pub struct Validated {
    pub system: ControlledSystem,
    pub objective: ObjectiveSpec,
    pub grid: TimeGrid,
    pub controls: Option<PWCControls>,
    pub init: InitSpec,
    pub optimizer: OptimizerConfig,
    pub landscape: Option<LandscapeConfig>,
    pub robustness: Option<RobustnessDoc>,
    pub gradcheck: GradcheckDoc,
    pub initial_state: DensityMatrix,
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<(RunConfiguration, Validated), ConfigError> {
    let config = parse_document(text)?;
    let validated = config.validate()?;
    Ok((config, validated))
}

/// Shape-only parse, reporting the path of the first offending key.
pub fn parse_document(text: &str) -> Result<RunConfiguration, ConfigError> {
    serde_json::from_str::<serde::de::IgnoredAny>(text).map_err(|e| {
        ConfigError::single(ErrorCode::Syntax, format!("line {}, column {}", e.line(), e.column()), e.to_string())
    })?;
    let mut de = serde_json::Deserializer::from_str(text);
    let config: RunConfiguration = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let code = if inner.is_syntax() || inner.is_eof() { ErrorCode::Syntax } else { ErrorCode::Schema };
        ConfigError::single(code, path, inner.to_string())
    })?;
    Ok(config)
}

impl RunConfiguration {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<Validated, ConfigError> {
        let mut issues = Vec::new();

        let system = load_model(&self.model)
            .map_err(|e| {
                let e = e.within("model");
                let code = match e.code {
                    ingrape::ModelErrorCode::Schema => ErrorCode::Schema,
                    ingrape::ModelErrorCode::NotHermitian => ErrorCode::NotHermitian,
                    ingrape::ModelErrorCode::BadIndex => ErrorCode::BadIndex,
                    ingrape::ModelErrorCode::Physics => ErrorCode::Physics,
                };
                issues.push(ConfigIssue::new(code, e.field, e.message));
            })
            .ok();

        let grid = TimeGrid::new(self.grid.total_time, self.grid.intervals)
            .map_err(|e| {
                let path = if self.grid.intervals == 0 { "grid.M" } else { "grid.T" };
                issues.push(ConfigIssue::new(ErrorCode::Physics, path, e.to_string()));
            })
            .ok();

        let objective = self.objective_spec(system.as_ref().map(|s| s.dim())).map_err(|e| issues.push(e)).ok();
        if let (Some(sys), Some(obj)) = (&system, &objective) {
            if sys.dim() != obj.dim() {
                issues.push(ConfigIssue::new(
                    ErrorCode::Schema,
                    "objective",
                    format!("objective acts on dimension {}, model has dimension {}", obj.dim(), sys.dim()),
                ));
            }
        }

        let init = InitSpec { u_amplitude: self.init.u_amplitude, w_amplitude: self.init.w_amplitude, seed: self.seed };
        for (name, v) in [("init.u_amplitude", init.u_amplitude), ("init.w_amplitude", init.w_amplitude)] {
            if !(v > 0.0 && v.is_finite()) {
                issues.push(ConfigIssue::new(ErrorCode::Schema, name, format!("must be positive, got {v}")));
            }
        }

        let optimizer = self.optimizer.to_config();
        if let Err(e) = optimizer.validate() {
            issues.push(ConfigIssue::new(ErrorCode::Schema, "optimizer", e.to_string()));
        }

        let controls = match (&self.controls, &system, grid) {
            (Some(doc), Some(sys), Some(grid)) => controls_from_doc(doc, sys, grid).map_err(|e| issues.push(e)).ok(),
            _ => None,
        };

        let landscape = self.landscape.map(|l| LandscapeConfig {
            launches: l.launches,
            master_seed: self.seed,
            init,
            optimizer,
            bins: l.bins,
            gap_factor: l.gap_factor,
        });
        if let Some(l) = &self.landscape {
            if l.launches == 0 {
                issues.push(ConfigIssue::new(ErrorCode::Schema, "landscape.L", "need at least one launch"));
            }
            if l.bins == 0 {
                issues.push(ConfigIssue::new(ErrorCode::Schema, "landscape.bins", "need at least one bin"));
            }
            if !(l.gap_factor > 0.0 && l.gap_factor.is_finite()) {
                issues.push(ConfigIssue::new(ErrorCode::Schema, "landscape.gap_factor", "must be positive"));
            }
        }
        if let Some(r) = &self.robustness {
            if r.samples == 0 {
                issues.push(ConfigIssue::new(ErrorCode::Schema, "robustness.S", "need at least one sample"));
            }
            for (i, e) in r.levels.iter().enumerate() {
                if !(*e >= 0.0 && e.is_finite()) {
                    issues.push(ConfigIssue::new(
                        ErrorCode::Schema,
                        format!("robustness.levels[{i}]"),
                        format!("must be nonnegative, got {e}"),
                    ));
                }
            }
        }
        if !(self.gradcheck.step > 0.0 && self.gradcheck.step.is_finite()) {
            issues.push(ConfigIssue::new(ErrorCode::Schema, "gradcheck.step", "must be positive"));
        }
        if self.gradcheck.tolerance.is_nan() || self.gradcheck.tolerance <= 0.0 {
            issues.push(ConfigIssue::new(ErrorCode::Schema, "gradcheck.tolerance", "must be positive"));
        }

        let initial_state = match (&self.initial_state, &system) {
            (Some(doc), Some(sys)) => state_from_doc(doc, sys.dim(), "initial_state").map_err(|e| issues.push(e)).ok(),
            (None, Some(sys)) => {
                Some(match &objective {
                    Some(
                        ObjectiveSpec::ObservableMean { initial, .. } | ObjectiveSpec::StateTransfer { initial, .. },
                    ) if initial.dim() == sys.dim() => initial.clone(),
                    _ => DensityMatrix::basis(sys.dim(), 0),
                })
            }
            _ => None,
        };

        if !issues.is_empty() {
            return Err(ConfigError(issues));
        }
        Ok(Validated {
            system: system.expect("no issues"),
            objective: objective.expect("no issues"),
            grid: grid.expect("no issues"),
            controls,
            init,
            optimizer,
            landscape,
            robustness: self.robustness.clone(),
            gradcheck: self.gradcheck,
            initial_state: initial_state.expect("no issues"),
        })
    }

    fn objective_spec(&self, model_dim: Option<usize>) -> Result<ObjectiveSpec, ConfigIssue> {
        let physics = |path: &str, e: ingrape::Error| ConfigIssue::new(ErrorCode::Physics, path, e.to_string());
        match &self.objective {
            ObjectiveDoc::ObservableMean { observable, initial, maximize } => {
                let o = matrix(observable, "objective.observable")?;
                let rho = state_from_doc(initial, o.nrows(), "objective.initial")?;
                ObjectiveSpec::observable_mean(o, rho, *maximize).map_err(|e| physics("objective.observable", e))
            }
            ObjectiveDoc::StateTransfer { initial, target } => {
                let dim = state_dim(initial).or_else(|| state_dim(target)).or(model_dim).unwrap_or(1);
                let rho = state_from_doc(initial, dim, "objective.initial")?;
                let tgt = state_from_doc(target, dim, "objective.target")?;
                ObjectiveSpec::state_transfer(rho, tgt).map_err(|e| physics("objective", e))
            }
            ObjectiveDoc::GateOnStates { gate, basis } => {
                let g = gate_matrix(gate)?;
                let basis = match basis {
                    Some(states) => states
                        .iter()
                        .enumerate()
                        .map(|(i, s)| state_from_doc(s, g.nrows(), &format!("objective.basis[{i}]")))
                        .collect::<Result<Vec<_>, _>>()?,
                    None => default_gate_basis(g.nrows()).map_err(|_| {
                        ConfigIssue::new(
                            ErrorCode::Schema,
                            "objective.basis",
                            format!("no default basis for dimension {}; list the states", g.nrows()),
                        )
                    })?,
                };
                ObjectiveSpec::gate_on_states(g, basis).map_err(|e| physics("objective.gate", e))
            }
            ObjectiveDoc::GateOnChannel { gate } => {
                ObjectiveSpec::gate_on_channel(gate_matrix(gate)?).map_err(|e| physics("objective.gate", e))
            }
        }
    }
}

fn matrix(doc: &MatrixDoc, path: &str) -> Result<CMatrix, ConfigIssue> {
    matrix_from_doc(doc, path).map_err(|e| ConfigIssue::new(ErrorCode::Schema, e.field, e.message))
}

fn gate_matrix(gate: &GateDoc) -> Result<CMatrix, ConfigIssue> {
    match gate {
        GateDoc::Named(name) => gates::named(name).ok_or_else(|| {
            ConfigIssue::new(
                ErrorCode::Schema,
                "objective.gate",
                format!("unknown gate `{name}` (hadamard, t, cnot, cz)"),
            )
        }),
        GateDoc::Matrix(m) => matrix(m, "objective.gate"),
    }
}

fn state_dim(doc: &StateDoc) -> Option<usize> {
    match doc {
        StateDoc::Basis(_) => None,
        StateDoc::Ket(k) => Some(k.len()),
        StateDoc::Density(m) => Some(m.len()),
    }
}

fn state_from_doc(doc: &StateDoc, dim: usize, path: &str) -> Result<DensityMatrix, ConfigIssue> {
    let physics = |e: ingrape::Error| ConfigIssue::new(ErrorCode::Physics, path, e.to_string());
    let rho = match doc {
        StateDoc::Basis(i) => {
            if *i >= dim {
                return Err(ConfigIssue::new(
                    ErrorCode::BadIndex,
                    format!("{path}.basis"),
                    format!("level {i} outside dimension {dim}"),
                ));
            }
            DensityMatrix::basis(dim, *i)
        }
        StateDoc::Ket(k) => {
            let v = CVector::from_iterator(k.len(), k.iter().map(|z| complex_from_doc(*z)));
            DensityMatrix::from_ket(&v).map_err(physics)?
        }
        StateDoc::Density(m) => DensityMatrix::new(matrix(m, &format!("{path}.density"))?).map_err(physics)?,
    };
    if rho.dim() != dim {
        return Err(ConfigIssue::new(
            ErrorCode::Schema,
            path,
            format!("state has dimension {}, expected {dim}", rho.dim()),
        ));
    }
    Ok(rho)
}

fn controls_from_doc(doc: &ControlsDoc, system: &ControlledSystem, grid: TimeGrid) -> Result<PWCControls, ConfigIssue> {
    let m = grid.intervals();
    let table = |rows: &[Vec<f64>], cols: usize, path: &str| -> Result<DMatrix<f64>, ConfigIssue> {
        let shape_ok = rows.len() == m && rows.iter().all(|r| r.len() == cols);
        // A model without incoherent channels may omit `w` entirely.
        if cols == 0 && rows.is_empty() {
            return Ok(DMatrix::zeros(m, 0));
        }
        if !shape_ok {
            return Err(ConfigIssue::new(ErrorCode::Schema, path, format!("expected {m} rows of {cols} entries")));
        }
        Ok(DMatrix::from_fn(m, cols, |i, j| rows[i][j]))
    };
    let u = table(&doc.u, system.n_coherent(), "controls.u")?;
    let w = table(&doc.w, system.n_incoherent(), "controls.w")?;
    PWCControls::new(grid, u, w).map_err(|e| ConfigIssue::new(ErrorCode::Physics, "controls", e.to_string()))
}
