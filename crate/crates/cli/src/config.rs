//! Run configuration: JSON schema, defaults and range checks.

use std::fmt;

use psa_chroma::{ConcaveIsotherm, IsothermModel, Profile};
use serde::Deserialize;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub data: Option<DataBlock>,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub output: OutputBlock,
    #[serde(default)]
    pub riemann: Option<RiemannBlock>,
    #[serde(default)]
    pub experiment: Option<ExperimentBlock>,
    /// Seed of the randomized probes.
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Linear { k1: f64, k2: f64 },
    BinaryLangmuir { q1: f64, k1: f64, q2: f64, k2: f64 },
    /// Inert species 1, Langmuir species 2.
    InertLangmuir { capacity: f64, affinity: f64 },
    /// The inner model with the gas labels exchanged.
    Relabeled { inner: Box<ModelSpec> },
}

impl ModelSpec {
    pub fn isotherms(&self) -> IsothermModel {
        match self {
            ModelSpec::Linear { k1, k2 } => IsothermModel::Linear { k1: *k1, k2: *k2 },
            ModelSpec::BinaryLangmuir { q1, k1, q2, k2 } => {
                IsothermModel::BinaryLangmuir { q1: *q1, k1: *k1, q2: *q2, k2: *k2 }
            }
            ModelSpec::InertLangmuir { capacity, affinity } => IsothermModel::InertPlusConcave(
                ConcaveIsotherm::Langmuir { capacity: *capacity, affinity: *affinity },
            ),
            ModelSpec::Relabeled { inner } => inner.isotherms().relabeled(),
        }
    }

    fn params(&self) -> Vec<(&'static str, f64)> {
        match self {
            ModelSpec::Linear { k1, k2 } => vec![("k1", *k1), ("k2", *k2)],
            ModelSpec::BinaryLangmuir { q1, k1, q2, k2 } => vec![("q1", *q1), ("k1", *k1), ("q2", *q2), ("k2", *k2)],
            ModelSpec::InertLangmuir { capacity, affinity } => vec![("capacity", *capacity), ("affinity", *affinity)],
            ModelSpec::Relabeled { inner } => inner.params(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    pub t_end: f64,
    pub x_end: f64,
    /// Cells used to average continuous profiles for the piecewise-constant solvers.
    #[serde(default = "default_cells")]
    pub cells: usize,
    pub c0: Profile,
    pub cb: Profile,
    /// Optional only for the oscillation experiment, which builds its own.
    #[serde(default)]
    pub ub: Option<Profile>,
}

fn default_cells() -> usize {
    64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultSpec {
    FaultySpeed,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverBlock {
    /// Rarefaction step of the front tracker.
    pub delta: f64,
    /// Time cell of the Godunov scheme.
    pub dt: f64,
    pub cfl: f64,
    pub max_events: usize,
    /// Trapezoid steps of the characteristic clock.
    pub clock_steps: usize,
    /// `[nt, nx]` nodes of the characteristics grid.
    pub grid: [usize; 2],
    /// Samples per axis when estimating γ̂ and Γ̂.
    pub constant_samples: [usize; 2],
    /// Test hook: corrupts the run on purpose.
    pub fault_injection: Option<FaultSpec>,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            delta: 0.05,
            dt: 0.01,
            cfl: 0.9,
            max_events: 2_000_000,
            clock_steps: 1 << 14,
            grid: [101, 101],
            constant_samples: [200, 24],
            fault_injection: None,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Slices {
    /// Columns `x = const`, sampled in `t`.
    pub x: Vec<f64>,
    /// Rows `t = const`, sampled in `x`.
    pub t: Vec<f64>,
}

impl Slices {
    /// Parses `x=0.5,1;t=0.25`.
    pub fn parse(spec: &str) -> Result<Slices, String> {
        let mut out = Slices::default();
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (axis, list) = part.split_once('=').ok_or_else(|| format!("expected axis=values in {part:?}"))?;
            let values = parse_list(list)?;
            match axis.trim() {
                "x" => out.x = values,
                "t" => out.t = values,
                other => return Err(format!("unknown slice axis {other:?}; use x or t")),
            }
        }
        Ok(out)
    }
}

pub fn parse_list(list: &str) -> Result<Vec<f64>, String> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    pub slices: Slices,
    /// Points per slice.
    pub samples: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock { slices: Slices::default(), samples: 201 }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub c: f64,
    pub u: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiemannBlock {
    pub below: StateSpec,
    pub above: StateSpec,
    #[serde(default = "default_fan_samples")]
    pub samples: usize,
    /// Largest slope `z = t/x` sampled; defaults to twice the fastest wave.
    #[serde(default)]
    pub z_max: Option<f64>,
}

fn default_fan_samples() -> usize {
    101
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocitySpec {
    pub mean: f64,
    pub amplitude: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Characteristics,
    FrontTracking,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentBlock {
    pub eps: Vec<f64>,
    /// `ub(t, θ) = mean + amplitude sin(2πθ)`.
    pub velocity: VelocitySpec,
    pub solver: SolverKind,
    #[serde(default = "default_cells")]
    pub data_cells: usize,
    #[serde(default = "default_cells_per_period")]
    pub cells_per_period: usize,
    #[serde(default = "default_experiment_grid")]
    pub grid: [usize; 2],
}

fn default_cells_per_period() -> usize {
    40
}

fn default_experiment_grid() -> [usize; 2] {
    [100, 100]
}

/// One offending field.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug)]
pub enum ConfigError {
    /// Malformed JSON or a schema mismatch.
    Syntax { path: String, line: usize, column: usize, message: String },
    /// Well-formed but out of range.
    Invalid(Vec<FieldError>),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Syntax { path, line, column, message } => {
                write!(f, "config line {line}, column {column}")?;
                if !path.is_empty() && path != "." {
                    write!(f, " ({path})")?;
                }
                write!(f, ": {message}")
            }
            ConfigError::Invalid(errors) => {
                let lines: Vec<String> = errors.iter().map(|e| e.to_string()).collect();
                write!(f, "invalid config:\n  {}", lines.join("\n  "))
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses and validates a JSON run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.to_string();
        // serde_json appends its own position; keep the bare reason.
        let message = message.split(" at line ").next().unwrap_or(&message).to_string();
        ConfigError::Syntax { path, line: inner.line(), column: inner.column(), message }
    })?;
    config.validate()?;
    Ok(config)
}

struct Checker(Vec<FieldError>);

impl Checker {
    fn require(&mut self, ok: bool, path: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.0.push(FieldError { path: path.into(), message: message.into() });
        }
    }

    fn positive(&mut self, value: f64, path: &str) {
        self.require(value > 0.0 && value.is_finite(), path, format!("must be positive and finite, got {value}"));
    }

    fn concentration(&mut self, p: &Profile, end: f64, path: &str) {
        if let Err(e) = p.check() {
            self.require(false, path, e.to_string());
            return;
        }
        let (lo, hi) = p.range(end);
        self.require(lo >= 0.0 && hi <= 1.0, path, format!("concentration must stay in [0, 1], got [{lo}, {hi}]"));
    }

    fn velocity(&mut self, p: &Profile, end: f64, path: &str) {
        if let Err(e) = p.check() {
            self.require(false, path, e.to_string());
            return;
        }
        let (lo, _) = p.range(end);
        self.require(
            lo > 0.0,
            path,
            format!("the boundary velocity must be positive, u(t, 0) = ub(t) > 0, but its minimum is {lo}"),
        );
    }
}

impl RunConfig {
    /// Range checks; every failure names its field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut ck = Checker(Vec::new());
        for (name, v) in self.model.params() {
            ck.require(v.is_finite(), format!("model.{name}"), format!("must be finite, got {v}"));
        }
        if let Some(d) = &self.data {
            ck.positive(d.t_end, "data.t_end");
            ck.positive(d.x_end, "data.x_end");
            ck.require(d.cells >= 1, "data.cells", "must be at least 1");
            ck.concentration(&d.c0, d.x_end, "data.c0");
            ck.concentration(&d.cb, d.t_end, "data.cb");
            if let Some(ub) = &d.ub {
                ck.velocity(ub, d.t_end, "data.ub");
            }
        }
        let s = &self.solver;
        ck.positive(s.delta, "solver.delta");
        ck.positive(s.dt, "solver.dt");
        ck.require(s.cfl > 0.0 && s.cfl <= 1.0, "solver.cfl", format!("must lie in (0, 1], got {}", s.cfl));
        ck.require(s.max_events >= 1, "solver.max_events", "must be at least 1");
        ck.require(s.clock_steps >= 2, "solver.clock_steps", "must be at least 2");
        ck.require(s.grid.iter().all(|&n| n >= 2), "solver.grid", "needs at least 2 nodes per axis");
        ck.require(s.constant_samples.iter().all(|&n| n >= 2), "solver.constant_samples", "must be at least 2");
        ck.require(self.output.samples >= 1, "output.samples", "must be at least 1");
        if let Some(d) = &self.data {
            for (k, &x) in self.output.slices.x.iter().enumerate() {
                ck.require((0.0..=d.x_end).contains(&x), format!("output.slices.x[{k}]"), format!("{x} outside [0, {}]", d.x_end));
            }
            for (k, &t) in self.output.slices.t.iter().enumerate() {
                ck.require((0.0..=d.t_end).contains(&t), format!("output.slices.t[{k}]"), format!("{t} outside [0, {}]", d.t_end));
            }
        }
        if let Some(r) = &self.riemann {
            for (side, st) in [("below", r.below), ("above", r.above)] {
                ck.require((0.0..=1.0).contains(&st.c), format!("riemann.{side}.c"), format!("{} outside [0, 1]", st.c));
                ck.require(st.u > 0.0 && st.u.is_finite(), format!("riemann.{side}.u"), format!("velocity must be positive, u > 0, got {}", st.u));
            }
            ck.require(r.samples >= 1, "riemann.samples", "must be at least 1");
            if let Some(z) = r.z_max {
                ck.positive(z, "riemann.z_max");
            }
        }
        if let Some(e) = &self.experiment {
            ck.require(!e.eps.is_empty(), "experiment.eps", "needs at least one scale");
            ck.require(
                e.eps.iter().all(|&v| v > 0.0) && e.eps.windows(2).all(|w| w[0] > w[1]),
                "experiment.eps",
                "scales must be positive and strictly decreasing",
            );
            let v = e.velocity;
            ck.require(
                v.mean - v.amplitude.abs() > 0.0,
                "experiment.velocity",
                format!("ub = mean + amplitude sin must stay positive (ub > 0), got mean {} and amplitude {}", v.mean, v.amplitude),
            );
            ck.require(e.data_cells >= 1, "experiment.data_cells", "must be at least 1");
            ck.require(e.cells_per_period >= 1, "experiment.cells_per_period", "must be at least 1");
            ck.require(e.grid.iter().all(|&n| n >= 1), "experiment.grid", "must be at least 1 per axis");
        }
        if ck.0.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(ck.0))
        }
    }
}
