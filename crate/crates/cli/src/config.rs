//! JSON run configuration.
//!
//! A document names the network either inline under `model` or by reference
//! under `scenario`, plus optional `command`, `params` and `seed`:
//!
//! ```json
//! {
//!   "model": {
//!     "a": [[0, -1], [-1, 0]],
//!     "m": [[2, 1, 1, 1.0]],
//!     "n": 1,
//!     "saturation": {"kind": "odd"},
//!     "b": [0, 0],
//!     "tau": 1
//!   },
//!   "command": "diagram",
//!   "params": {"u0_range": [0, 1.5]}
//! }
//! ```
//!
//! Modulation entries are `[i, j, k, weight]` with 1-based node indices.

use std::fmt;

use modnod::scenarios::ScenarioId;
use modnod::{ModelError, Modulation, NetworkSpec, Saturation};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Validation { field: String, message: String },
}

impl ConfigError {
    pub fn name(&self) -> &'static str {
        match self {
            ConfigError::Parse(_) => "ParseError",
            ConfigError::Validation { .. } => "ValidationError",
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError::Validation { field: field.into(), message: message.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    Simulate,
    Equilibrium,
    Diagram,
    Reduce,
    Analyze,
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CommandName::Simulate => "simulate",
            CommandName::Equilibrium => "equilibrium",
            CommandName::Diagram => "diagram",
            CommandName::Reduce => "reduce",
            CommandName::Analyze => "analyze",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SaturationConfig {
    Odd,
    Shifted { s: f64 },
}

fn default_order() -> u32 {
    1
}

fn default_tau() -> f64 {
    1.0
}

/// Inline network description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub a: Vec<Vec<f64>>,
    #[serde(default)]
    pub m: Vec<(usize, usize, usize, f64)>,
    #[serde(default = "default_order")]
    pub n: u32,
    #[serde(default)]
    pub saturation: Option<SaturationConfig>,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(default = "default_tau")]
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioConfig {
    TwoNode {
        #[serde(default = "one")]
        m_strength: f64,
        #[serde(default = "default_order")]
        n: u32,
    },
    InfluencerRing {
        m_bar: f64,
    },
    DriveSteer {
        #[serde(default = "one")]
        alpha: f64,
        #[serde(default = "default_beta")]
        beta: f64,
        m_bar: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn default_beta() -> f64 {
    0.3
}

impl ScenarioConfig {
    pub fn id(&self) -> ScenarioId {
        match *self {
            ScenarioConfig::TwoNode { m_strength, n } => ScenarioId::TwoNode { m_strength, order: n },
            ScenarioConfig::InfluencerRing { m_bar } => ScenarioId::InfluencerRing { m_bar },
            ScenarioConfig::DriveSteer { alpha, beta, m_bar } => ScenarioId::DriveSteer { alpha, beta, m_bar },
        }
    }
}

/// Continuation step control; unset fields keep the library defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub initial: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub max_points: Option<usize>,
}

/// Axis used for the vertical coordinate of diagram plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Projection {
    /// `<x, v>` with `v` the unit leading eigenvector of the additive matrix.
    #[default]
    Leading,
    /// A single node, 1-based.
    Node(usize),
}

impl<'de> Deserialize<'de> for Projection {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Node(usize),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "v_max" => Ok(Projection::Leading),
            Raw::Name(s) => Err(serde::de::Error::custom(format!("unknown projection {s:?}, expected \"v_max\" or a node index"))),
            Raw::Node(i) => Ok(Projection::Node(i)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumMethod {
    #[default]
    Newton,
    Settle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelConfig {
    Sign,
    DriveSteer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationConfig {
    #[default]
    MaxEntry,
    Unit,
}

/// Command parameters. Each command reads the fields it needs.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub u0: Option<f64>,
    pub u0_range: Option<[f64; 2]>,
    pub x0: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    #[serde(default)]
    pub step: StepConfig,
    #[serde(default)]
    pub projection: Projection,
    #[serde(default)]
    pub method: EquilibriumMethod,
    pub labels: Option<LabelConfig>,
    pub max_depth: Option<usize>,
    #[serde(default)]
    pub normalization: NormalizationConfig,
    pub tol: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<ModelConfig>,
    scenario: Option<ScenarioConfig>,
    command: Option<CommandName>,
    #[serde(default)]
    params: Params,
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Inline(ModelConfig),
    Scenario(ScenarioConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub source: ModelSource,
    pub spec: NetworkSpec,
    pub command: Option<CommandName>,
    pub params: Params,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn scenario(&self) -> Option<ScenarioId> {
        match &self.source {
            ModelSource::Scenario(s) => Some(s.id()),
            ModelSource::Inline(_) => None,
        }
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_data() && path != "." && !path.starts_with('[') {
            ConfigError::Validation { field: path, message: inner.to_string() }
        } else {
            ConfigError::Parse(inner.to_string())
        }
    })?;
    let (source, spec) = match (raw.model, raw.scenario) {
        (Some(m), None) => {
            let spec = build_inline(&m)?;
            (ModelSource::Inline(m), spec)
        }
        (None, Some(s)) => {
            let spec = s.id().build().map_err(|e| ConfigError::invalid("scenario", e))?;
            (ModelSource::Scenario(s), spec)
        }
        (Some(_), Some(_)) => return Err(ConfigError::invalid("model", "give either model or scenario, not both")),
        (None, None) => return Err(ConfigError::invalid("model", "one of model or scenario is required")),
    };
    validate_params(&raw.params, spec.dim())?;
    Ok(RunConfig { source, spec, command: raw.command, params: raw.params, seed: raw.seed })
}

fn model_error_field(e: &ModelError) -> String {
    match e {
        ModelError::NotSquare { .. } => "model.a".into(),
        ModelError::InputLength { .. } => "model.b".into(),
        ModelError::IndexOutOfRange { entry, .. } => format!("model.m[{entry}]"),
        ModelError::DuplicateModulation { .. } => "model.m".into(),
        ModelError::BadOrder(_) => "model.n".into(),
        ModelError::BadTimescale(_) => "model.tau".into(),
        ModelError::NonFinite("A") => "model.a".into(),
        ModelError::NonFinite("b") => "model.b".into(),
        ModelError::NonFinite("M") => "model.m".into(),
        ModelError::NonFinite(_) => "model.saturation".into(),
        ModelError::InvalidScenario(_) => "scenario".into(),
    }
}

fn build_inline(m: &ModelConfig) -> Result<NetworkSpec, ConfigError> {
    let n = m.a.len();
    if n == 0 {
        return Err(ConfigError::invalid("model.a", "matrix is empty"));
    }
    for (r, row) in m.a.iter().enumerate() {
        if row.len() != n {
            return Err(ConfigError::invalid(
                format!("model.a[{r}]"),
                format!("row has {} entries, expected {n} for a square matrix", row.len()),
            ));
        }
    }
    let a = DMatrix::from_fn(n, n, |i, j| m.a[i][j]);
    let mut modulation = Vec::with_capacity(m.m.len());
    for (e, &(i, j, k, w)) in m.m.iter().enumerate() {
        if i == 0 || j == 0 || k == 0 {
            return Err(ConfigError::invalid(format!("model.m[{e}]"), "node indices are 1-based"));
        }
        modulation.push(Modulation::new(i - 1, j - 1, k - 1, w));
    }
    let saturation = match m.saturation {
        None | Some(SaturationConfig::Odd) => Saturation::Odd,
        Some(SaturationConfig::Shifted { s }) => Saturation::Shifted(s),
    };
    let b = m.b.clone().map_or_else(|| DVector::zeros(n), DVector::from_vec);
    NetworkSpec::new(a, modulation, m.n, saturation, b, m.tau).map_err(|e| ConfigError::invalid(model_error_field(&e), e))
}

fn positive(field: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(v) if !(v > 0.0 && v.is_finite()) => Err(ConfigError::invalid(field, format!("must be positive, got {v}"))),
        _ => Ok(()),
    }
}

fn validate_params(p: &Params, n: usize) -> Result<(), ConfigError> {
    if let Some(u0) = p.u0 {
        if !u0.is_finite() {
            return Err(ConfigError::invalid("params.u0", "must be finite"));
        }
    }
    if let Some([lo, hi]) = p.u0_range {
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(ConfigError::invalid("params.u0_range", format!("expected lo < hi, got [{lo}, {hi}]")));
        }
    }
    if let Some(x0) = &p.x0 {
        if x0.len() != n {
            return Err(ConfigError::invalid("params.x0", format!("has {} entries, network has {n}", x0.len())));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::invalid("params.x0", "entries must be finite"));
        }
    }
    positive("params.t_end", p.t_end)?;
    positive("params.dt", p.dt)?;
    positive("params.tol", p.tol)?;
    positive("params.step.initial", p.step.initial)?;
    positive("params.step.min", p.step.min)?;
    positive("params.step.max", p.step.max)?;
    if let (Some(lo), Some(hi)) = (p.step.min, p.step.max) {
        if lo > hi {
            return Err(ConfigError::invalid("params.step", "min exceeds max"));
        }
    }
    if let Some(mp) = p.step.max_points {
        if mp < 2 {
            return Err(ConfigError::invalid("params.step.max_points", "must be at least 2"));
        }
    }
    if let Projection::Node(i) = p.projection {
        if i == 0 || i > n {
            return Err(ConfigError::invalid("params.projection", format!("node {i} outside 1..={n}")));
        }
    }
    Ok(())
}

/// Inline description of `spec`, the inverse of the `model` section parser.
pub fn model_config(spec: &NetworkSpec) -> ModelConfig {
    let a = spec.additive_matrix();
    let n = spec.dim();
    ModelConfig {
        a: (0..n).map(|i| (0..n).map(|j| a[(i, j)]).collect()).collect(),
        m: spec.modulation().iter().map(|m| (m.i + 1, m.j + 1, m.k + 1, m.weight)).collect(),
        n: spec.order(),
        saturation: Some(match spec.saturation() {
            Saturation::Odd => SaturationConfig::Odd,
            Saturation::Shifted(s) => SaturationConfig::Shifted { s },
        }),
        b: Some(spec.inputs().iter().copied().collect()),
        tau: spec.tau(),
    }
}

#[derive(Serialize)]
struct Export<'a> {
    model: &'a ModelConfig,
}

/// JSON document holding `spec` as an inline model.
pub fn export_spec(spec: &NetworkSpec) -> String {
    let model = model_config(spec);
    let mut s = serde_json::to_string_pretty(&Export { model: &model }).expect("model serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(text: &str) -> String {
        match parse_config(text) {
            Err(ConfigError::Validation { field, .. }) => field,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn scenario_passthrough() {
        let cfg = parse_config(r#"{"scenario": {"kind": "two_node", "m_strength": 1, "n": 1}}"#).unwrap();
        assert_eq!(cfg.spec, modnod::scenarios::build_two_node(1.0, 1).unwrap());
        assert_eq!(cfg.scenario(), Some(ScenarioId::TwoNode { m_strength: 1.0, order: 1 }));
    }

    #[test]
    fn inline_model_with_defaults() {
        let cfg = parse_config(r#"{"model": {"a": [[0, -1], [-1, 0]], "m": [[2, 1, 1, 1.0]]}}"#).unwrap();
        assert_eq!(cfg.spec, modnod::scenarios::build_two_node(1.0, 1).unwrap());
    }

    #[test]
    fn validation_errors_name_fields() {
        assert_eq!(field_of(r#"{"model": {"a": [[0, 1, 2], [1, 0, 2]]}}"#), "model.a[0]");
        assert_eq!(field_of(r#"{"model": {"a": [[0, 1], [1, 0]], "m": [[1, 2, 1, 1], [1, 2, 1, 3]]}}"#), "model.m");
        assert_eq!(field_of(r#"{"model": {"a": [[0, 1], [1, 0]], "n": 0}}"#), "model.n");
        assert_eq!(field_of(r#"{"model": {"a": [[0, 1], [1, 0]], "tau": -1}}"#), "model.tau");
        assert_eq!(field_of(r#"{"model": {"a": [[0, 1], [1, 0]], "m": [[3, 1, 1, 1]]}}"#), "model.m[0]");
        assert_eq!(field_of(r#"{"model": {"a": [[0, 1], [1, 0]], "m": [[0, 1, 1, 1]]}}"#), "model.m[0]");
        assert_eq!(field_of(r#"{"model": {"a": [[0, 1], [1, 0]], "b": [1]}}"#), "model.b");
        assert_eq!(field_of(r#"{"scenario": {"kind": "influencer_ring", "m_bar": -1}}"#), "scenario");
        assert_eq!(field_of(r#"{"scenario": {"kind": "two_node"}, "params": {"u0_range": [2, 1]}}"#), "params.u0_range");
        assert_eq!(field_of(r#"{"scenario": {"kind": "two_node"}, "params": {"x0": [1, 2, 3]}}"#), "params.x0");
        assert_eq!(field_of(r#"{"scenario": {"kind": "two_node"}, "params": {"dt": 0}}"#), "params.dt");
        assert_eq!(field_of(r#"{"scenario": {"kind": "two_node"}, "params": {"projection": 3}}"#), "params.projection");
    }

    #[test]
    fn schema_errors_carry_paths() {
        assert_eq!(field_of(r#"{"model": {"a": [[0, "x"], [1, 0]]}}"#), "model.a[0][1]");
        assert_eq!(field_of(r#"{"scenario": {"kind": "two_node"}, "params": {"u00": 1}}"#), "params.u00");
        assert_eq!(field_of(r#"{"scenario": {"kind": "two_node"}, "params": {"projection": "mean"}}"#), "params.projection");
        assert_eq!(field_of(r#"{"model": {"a": [[1]]}, "scenario": {"kind": "two_node"}}"#), "model");
        assert_eq!(field_of(r#"{}"#), "model");
    }

    #[test]
    fn malformed_text_is_a_parse_error() {
        assert!(matches!(parse_config("{\"model\": "), Err(ConfigError::Parse(_))));
        assert!(matches!(parse_config("not json"), Err(ConfigError::Parse(_))));
        assert_eq!(parse_config("[1, 2]").unwrap_err().name(), "ParseError");
    }

    #[test]
    fn export_round_trips() {
        let spec = modnod::scenarios::build_drive_steer(1.0, 0.3, 2.0)
            .unwrap()
            .with_inputs(DVector::from_vec(vec![0.1, 1.0 / 3.0, -2e-7, 0.0]))
            .unwrap()
            .with_saturation(Saturation::Shifted(0.1))
            .unwrap()
            .with_tau(0.7)
            .unwrap();
        let back = parse_config(&export_spec(&spec)).unwrap();
        assert_eq!(back.spec, spec);
    }
}
