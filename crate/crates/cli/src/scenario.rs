//! Scenario documents (JSON, `schema: 1`).

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use spectral_flow::apsindex::{flattened, Geometry, Scheme, SuspensionProblem};
use spectral_flow::engines::{ChiProfile, Method};
use spectral_flow::generators;
use spectral_flow::geometry::{CircleMetricPath, MetricMode, TimeProfile, Trig};
use spectral_flow::linalg::{CMat, C64};
use spectral_flow::path::{Interpolation, OperatorPath, SymbolPath};
use spectral_flow::tracemodel::{BlockHermitian, FrequencyModel, WeightedBlockModel};

pub const SCHEMA_VERSION: u32 = 1;

/// A scenario failed to parse or validate; `field` locates the problem.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ScenarioError {
    pub field: String,
    pub message: String,
}

impl ScenarioError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ScenarioError {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub model: ModelSpec,
    pub path: PathSpec,
    pub engines: Vec<String>,
    #[serde(default)]
    pub engine_params: EngineParams,
    #[serde(default)]
    pub aps: Option<ApsParams>,
    #[serde(default)]
    pub expect: Option<Expectation>,
    /// Largest allowed pairwise difference between engine results.
    #[serde(default = "default_agreement")]
    pub agreement_tolerance: f64,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_agreement() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    WeightedBlocks { blocks: Vec<BlockSpec> },
    Frequency {
        rho: f64,
        #[serde(default)]
        xi_max: Option<f64>,
    },
    CircleMetric {
        n: usize,
        #[serde(default = "one")]
        base: f64,
        #[serde(default)]
        modes: Vec<ModeSpec>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub dim: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: u32,
    pub trig: String,
    pub amplitude: f64,
    pub profile: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    /// Explicit samples; each sample lists its blocks as real matrices with
    /// optional imaginary parts.
    Samples {
        nodes: Vec<f64>,
        samples: Vec<SampleSpec>,
        #[serde(default)]
        interpolation: Option<String>,
    },
    Generator {
        name: String,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        ranks: Vec<usize>,
    },
    /// The symbol family `ξ + t`, t from `a` to `b`.
    Translation { a: f64, b: f64 },
    /// The trivialized signature path of the circle metric.
    Metric {
        #[serde(default = "default_interior")]
        interior_nodes: usize,
    },
}

fn default_interior() -> usize {
    16
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleSpec {
    pub blocks: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub imag: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineParams {
    #[serde(default = "default_s_grid")]
    pub s_grid: Vec<f64>,
    #[serde(default = "default_chi")]
    pub chi: String,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_depth")]
    pub phillips_depth: usize,
    #[serde(default = "default_steps")]
    pub symbol_steps: usize,
}

fn default_s_grid() -> Vec<f64> {
    vec![0.5, 2.0, 8.0]
}
fn default_chi() -> String {
    "sine".into()
}
fn default_window() -> f64 {
    0.5
}
fn default_depth() -> usize {
    20
}
fn default_steps() -> usize {
    8
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            s_grid: default_s_grid(),
            chi: default_chi(),
            window: default_window(),
            phillips_depth: default_depth(),
            symbol_steps: default_steps(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApsParams {
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_geometry")]
    pub geometry: String,
    #[serde(default = "default_theta")]
    pub theta: f64,
    /// Cylinder extension length.
    #[serde(default)]
    pub extension: Option<f64>,
    /// Flatten the path near its ends before solving (interval geometry).
    #[serde(default)]
    pub flatten: bool,
}

fn default_grid() -> usize {
    200
}
fn default_scheme() -> String {
    "forward_upwind".into()
}
fn default_geometry() -> String {
    "interval".into()
}
fn default_theta() -> f64 {
    spectral_flow::apsindex::DEFAULT_THETA
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub value: f64,
    #[serde(default = "default_agreement")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub log: Option<String>,
}

/// Generators accepted by `path.kind = "generator"`; all of them are seeded.
pub const GENERATORS: [&str; 3] = ["random_invertible", "random_flat", "involution"];

pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario: Scenario = serde_json::from_str(text)
        .map_err(|e| ScenarioError::new(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

/// The computation a scenario describes, fully built.
pub enum Problem {
    Operator {
        path: OperatorPath,
        aps: Option<SuspensionProblem>,
    },
    Symbol {
        model: FrequencyModel,
        path: SymbolPath,
    },
    Circle {
        metric: CircleMetricPath,
        interior_nodes: usize,
    },
}

impl Scenario {
    pub fn methods(&self) -> Vec<Method> {
        self.engines.iter().map(|e| e.parse().expect("validated")).collect()
    }

    pub fn chi(&self) -> ChiProfile {
        ChiProfile::by_name(&self.engine_params.chi).expect("validated")
    }

    /// Seed of a random generator, if the path uses one.
    pub fn seed(&self) -> Option<u64> {
        match &self.path {
            PathSpec::Generator { seed, .. } => *seed,
            _ => None,
        }
    }

    /// Replaces the generator seed (no effect on deterministic paths).
    pub fn override_seed(&mut self, new: u64) {
        if let PathSpec::Generator { seed, .. } = &mut self.path {
            *seed = Some(new);
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.schema != SCHEMA_VERSION {
            return Err(ScenarioError::new("schema", format!("unsupported version {}, expected 1", self.schema)));
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(ScenarioError::new("name", "must be a non-empty [A-Za-z0-9_-] identifier"));
        }
        if self.engines.is_empty() && self.aps.is_none() {
            return Err(ScenarioError::new("engines", "nothing to compute"));
        }
        for (i, e) in self.engines.iter().enumerate() {
            e.parse::<Method>()
                .map_err(|_| ScenarioError::new(format!("engines[{i}]"), format!("unknown engine '{e}'")))?;
        }
        let p = &self.engine_params;
        if let Some(s) = p.s_grid.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(ScenarioError::new("engine_params.s_grid", format!("s must be positive, got {s}")));
        }
        if self.methods().contains(&Method::Integral) && p.s_grid.is_empty() {
            return Err(ScenarioError::new("engine_params.s_grid", "the integral engine needs at least one s"));
        }
        ChiProfile::by_name(&p.chi).map_err(|e| ScenarioError::new("engine_params.chi", e.to_string()))?;
        if !(p.window > 0.0 && p.window.is_finite()) {
            return Err(ScenarioError::new("engine_params.window", "must be positive"));
        }
        if !(1..=40).contains(&p.phillips_depth) {
            return Err(ScenarioError::new("engine_params.phillips_depth", "must lie in 1..=40"));
        }
        if p.symbol_steps == 0 {
            return Err(ScenarioError::new("engine_params.symbol_steps", "must be positive"));
        }
        if let Some(a) = &self.aps {
            parse_scheme(&a.scheme)?;
            parse_geometry(&a.geometry)?;
            if a.grid < 16 {
                return Err(ScenarioError::new("aps.grid", "M must be at least 16"));
            }
            if !(a.theta > 0.0 && a.theta < 1e-2) {
                return Err(ScenarioError::new("aps.theta", "must lie in (0, 1e-2)"));
            }
        }
        if !(self.agreement_tolerance > 0.0) {
            return Err(ScenarioError::new("agreement_tolerance", "must be positive"));
        }
        if let Some(e) = &self.expect {
            if !(e.tolerance > 0.0) || !e.value.is_finite() {
                return Err(ScenarioError::new("expect", "needs a finite value and a positive tolerance"));
            }
        }
        match (&self.model, &self.path) {
            (ModelSpec::WeightedBlocks { blocks }, PathSpec::Samples { .. } | PathSpec::Generator { .. }) => {
                if blocks.is_empty() {
                    return Err(ScenarioError::new("model.blocks", "at least one block"));
                }
                if let PathSpec::Generator { name, seed, .. } = &self.path {
                    if !GENERATORS.contains(&name.as_str()) {
                        return Err(ScenarioError::new("path.name", format!("unknown generator '{name}'")));
                    }
                    if seed.is_none() {
                        return Err(ScenarioError::new("path.seed", format!("generator '{name}' needs a seed")));
                    }
                }
            }
            (ModelSpec::Frequency { rho, .. }, PathSpec::Translation { .. }) => {
                if !(*rho > 0.0) {
                    return Err(ScenarioError::new("model.rho", "density must be positive"));
                }
                if let Some(m) = self.methods().iter().find(|m| **m != Method::Phillips) {
                    return Err(ScenarioError::new(
                        "engines",
                        format!("engine '{m}' is not available on the frequency model"),
                    ));
                }
                if self.aps.is_some() {
                    return Err(ScenarioError::new("aps", "not available on the frequency model"));
                }
            }
            (ModelSpec::CircleMetric { modes, .. }, PathSpec::Metric { .. }) => {
                for (i, m) in modes.iter().enumerate() {
                    parse_trig(&m.trig).map_err(|e| ScenarioError::new(format!("model.modes[{i}].trig"), e))?;
                    parse_profile(&m.profile).map_err(|e| ScenarioError::new(format!("model.modes[{i}].profile"), e))?;
                }
            }
            _ => return Err(ScenarioError::new("path.kind", "does not fit the model kind")),
        }
        Ok(())
    }

    /// Builds the operators; core validation failures are reported against
    /// the offending field.
    pub fn build(&self) -> Result<Problem, ScenarioError> {
        match (&self.model, &self.path) {
            (ModelSpec::WeightedBlocks { blocks }, path) => {
                let dims: Vec<(usize, f64)> = blocks.iter().map(|b| (b.dim, b.weight)).collect();
                let model = WeightedBlockModel::new(&dims).map_err(|e| ScenarioError::new("model.blocks", e.to_string()))?;
                let path = match path {
                    PathSpec::Samples {
                        nodes,
                        samples,
                        interpolation,
                    } => build_samples(&model, nodes, samples, interpolation.as_deref())?,
                    PathSpec::Generator { name, seed, ranks } => build_generated(&model, name, seed.unwrap_or(0), ranks)?,
                    _ => unreachable!("validated"),
                };
                let aps = match &self.aps {
                    Some(a) => Some(self.suspension(&path, a)?),
                    None => None,
                };
                Ok(Problem::Operator { path, aps })
            }
            (ModelSpec::Frequency { rho, xi_max }, PathSpec::Translation { a, b }) => {
                let mut model = FrequencyModel::uniform(*rho).map_err(|e| ScenarioError::new("model.rho", e.to_string()))?;
                if let Some(x) = xi_max {
                    model = model.with_cutoff(*x);
                }
                if a.abs().max(b.abs()) >= model.xi_max {
                    return Err(ScenarioError::new("path", "translation range exceeds the frequency cutoff"));
                }
                Ok(Problem::Symbol {
                    model,
                    path: SymbolPath::translation(*a, *b),
                })
            }
            (ModelSpec::CircleMetric { n, base, modes }, PathSpec::Metric { interior_nodes }) => {
                let modes = modes
                    .iter()
                    .map(|m| MetricMode {
                        k: m.k,
                        trig: parse_trig(&m.trig).expect("validated"),
                        amplitude: m.amplitude,
                        profile: parse_profile(&m.profile).expect("validated"),
                    })
                    .collect();
                let metric = CircleMetricPath::new(*n, *base, modes).map_err(|e| ScenarioError::new("model", e.to_string()))?;
                Ok(Problem::Circle {
                    metric,
                    interior_nodes: *interior_nodes,
                })
            }
            _ => unreachable!("validated"),
        }
    }

    fn suspension(&self, path: &OperatorPath, a: &ApsParams) -> Result<SuspensionProblem, ScenarioError> {
        let path = if a.flatten {
            flattened(path, 4 * path.nodes().len()).map_err(|e| ScenarioError::new("aps.flatten", e.to_string()))?
        } else {
            path.clone()
        };
        let mut prob = SuspensionProblem::new(path, a.grid)
            .with_scheme(parse_scheme(&a.scheme)?)
            .with_geometry(parse_geometry(&a.geometry)?)
            .with_theta(a.theta);
        prob.extension = a.extension;
        Ok(prob)
    }

    /// Grid size for the APS index of a circle scenario.
    pub fn aps_grid(&self) -> Option<usize> {
        self.aps.as_ref().map(|a| a.grid)
    }
}

fn parse_scheme(s: &str) -> Result<Scheme, ScenarioError> {
    match s {
        "forward_upwind" => Ok(Scheme::ForwardUpwind),
        "implicit_midpoint" => Ok(Scheme::ImplicitMidpoint),
        _ => Err(ScenarioError::new("aps.scheme", format!("unknown scheme '{s}'"))),
    }
}

fn parse_geometry(s: &str) -> Result<Geometry, ScenarioError> {
    match s {
        "interval" => Ok(Geometry::IntervalAps),
        "cylinder" => Ok(Geometry::Cylinder),
        _ => Err(ScenarioError::new("aps.geometry", format!("unknown geometry '{s}'"))),
    }
}

fn parse_trig(s: &str) -> Result<Trig, String> {
    match s {
        "cos" => Ok(Trig::Cos),
        "sin" => Ok(Trig::Sin),
        _ => Err(format!("unknown trig '{s}'")),
    }
}

fn parse_profile(s: &str) -> Result<TimeProfile, String> {
    match s {
        "linear" => Ok(TimeProfile::Linear),
        "bump" => Ok(TimeProfile::Bump),
        "sine" => Ok(TimeProfile::Sine),
        _ => Err(format!("unknown time profile '{s}'")),
    }
}

fn build_samples(
    model: &Arc<WeightedBlockModel>,
    nodes: &[f64],
    samples: &[SampleSpec],
    interpolation: Option<&str>,
) -> Result<OperatorPath, ScenarioError> {
    let interpolation = match interpolation.unwrap_or("linear") {
        "linear" => Interpolation::PiecewiseLinear,
        "cubic" => Interpolation::CubicHermite,
        other => return Err(ScenarioError::new("path.interpolation", format!("unknown interpolation '{other}'"))),
    };
    if nodes.len() != samples.len() {
        return Err(ScenarioError::new("path.samples", "one sample per node"));
    }
    let mut ops = Vec::with_capacity(samples.len());
    for (i, s) in samples.iter().enumerate() {
        let field = format!("path.samples[{i}]");
        if s.blocks.len() != model.num_blocks() || s.imag.as_ref().is_some_and(|im| im.len() != s.blocks.len()) {
            return Err(ScenarioError::new(field, "one matrix per model block"));
        }
        let mut blocks = Vec::new();
        for (b, spec) in model.blocks().iter().enumerate() {
            let re = &s.blocks[b];
            let im = s.imag.as_ref().map(|m| &m[b]);
            let square = |m: &Vec<Vec<f64>>| m.len() == spec.dim && m.iter().all(|r| r.len() == spec.dim);
            if !square(re) || im.is_some_and(|m| !square(m)) {
                return Err(ScenarioError::new(format!("{field}.blocks[{b}]"), format!("expected a {0}×{0} matrix", spec.dim)));
            }
            blocks.push(CMat::from_fn(spec.dim, spec.dim, |r, c| {
                C64::new(re[r][c], im.map_or(0.0, |m| m[r][c]))
            }));
        }
        ops.push(BlockHermitian::from_blocks(model.clone(), blocks).map_err(|e| ScenarioError::new(field, e.to_string()))?);
    }
    OperatorPath::new(nodes.to_vec(), ops, interpolation).map_err(|e| ScenarioError::new("path.nodes", e.to_string()))
}

fn build_generated(model: &Arc<WeightedBlockModel>, name: &str, seed: u64, ranks: &[usize]) -> Result<OperatorPath, ScenarioError> {
    let path = match name {
        "random_invertible" => generators::random_path_on(&mut generators::rng(seed), model),
        "random_flat" => generators::random_path_on(&mut generators::rng(seed), model)
            .and_then(|p| flattened(&p, 4 * p.nodes().len())),
        "involution" => generators::involution_path(model, ranks, seed),
        _ => unreachable!("validated"),
    };
    path.map_err(|e| ScenarioError::new("path", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema": 1,
        "name": "t",
        "model": {"kind": "weighted_blocks", "blocks": [{"dim": 1, "weight": 1.0}]},
        "path": {"kind": "samples", "nodes": [0, 1], "samples": [{"blocks": [[[-1]]]}, {"blocks": [[[1]]]}]},
        "engines": ["crossing"]
    }"#;

    #[test]
    fn minimal_scenario_parses() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.methods(), vec![Method::Crossing]);
        assert!(matches!(s.build().unwrap(), Problem::Operator { aps: None, .. }));
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let err = parse(&MINIMAL.replace("\"schema\": 1", "\"schema\": 2")).unwrap_err();
        assert_eq!(err.field, "schema");
    }

    #[test]
    fn syntax_errors_carry_a_location() {
        let err = parse("{\n \"schema\": 1,,\n}").unwrap_err();
        assert!(err.field.starts_with("line 2"), "{err}");
    }

    #[test]
    fn random_generators_need_a_seed() {
        let text = MINIMAL.replace(
            r#"{"kind": "samples", "nodes": [0, 1], "samples": [{"blocks": [[[-1]]]}, {"blocks": [[[1]]]}]}"#,
            r#"{"kind": "generator", "name": "random_invertible"}"#,
        );
        assert_eq!(parse(&text).unwrap_err().field, "path.seed");
    }

    #[test]
    fn non_hermitian_sample_is_located() {
        let text = r#"{
            "schema": 1, "name": "t",
            "model": {"kind": "weighted_blocks", "blocks": [{"dim": 2, "weight": 1.0}]},
            "path": {"kind": "samples", "nodes": [0, 1],
                     "samples": [{"blocks": [[[1, 0], [0, 1]]]}, {"blocks": [[[1, 2], [0, 1]]]}]},
            "engines": ["crossing"]
        }"#;
        let err = parse(text).unwrap().build().err().unwrap();
        assert_eq!(err.field, "path.samples[1]");
    }
}
