//! Scenario documents.
//!
//! A scenario is one JSON object; a batch is either an array of scenarios
//! or `{"scenarios": [...]}`. Unknown fields are rejected so typos surface
//! as errors with the offending path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use morse_core::graph::{
    ball_exhaustion_with, build_half_line, build_lattice, build_tree, random_connected, BallMetric, Exhaustion,
    PotentialField, Profiles, RandomGraphSpec, Region, WeightedGraph, DEFAULT_VERTEX_CAP,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Lattice {
        dimension: usize,
        radius: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vertex_cap: Option<usize>,
    },
    HalfLine {
        length: usize,
    },
    Tree {
        branching: usize,
        depth: usize,
    },
    Random {
        vertices: usize,
        extra_edges: usize,
        #[serde(default = "unit_range")]
        mu_range: (f64, f64),
        #[serde(default = "unit_range")]
        w_range: (f64, f64),
    },
    File {
        path: PathBuf,
    },
}

fn unit_range() -> (f64, f64) {
    (1.0, 1.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Graph,
    SupNorm,
}

impl From<Metric> for BallMetric {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Graph => BallMetric::Graph,
            Metric::SupNorm => BallMetric::SupNorm,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    /// `value` everywhere.
    Uniform { value: f64 },
    /// `−depth` on the ball of `radius` around `center`.
    ConstantWell {
        center: String,
        radius: usize,
        depth: f64,
        #[serde(default)]
        metric: Metric,
    },
    /// `−c / (1 + d²)` with `d` the hop distance to `center`.
    PowerDecay { center: String, c: f64 },
    /// Explicit values by vertex id; missing vertices get 0.
    Values { values: BTreeMap<String, f64> },
    /// A JSON object `{id: value}` on disk.
    File { path: PathBuf },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self::Zero
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub vertices: Vec<String>,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExhaustionSpec {
    pub center: String,
    pub radii: Vec<usize>,
    #[serde(default)]
    pub metric: Metric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Morse,
    Bs,
    Doob,
    Green,
    Parabolicity,
    Bracket,
    Pipeline,
    Kernel,
    Clr,
}

impl Operation {
    pub fn name(self) -> &'static str {
        match self {
            Operation::Morse => "morse",
            Operation::Bs => "bs",
            Operation::Doob => "doob",
            Operation::Green => "green",
            Operation::Parabolicity => "parabolicity",
            Operation::Bracket => "bracket",
            Operation::Pipeline => "pipeline",
            Operation::Kernel => "kernel",
            Operation::Clr => "clr",
        }
    }
}

/// Effective tolerances; every report echoes the full record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tol_zero: f64,
    pub bs_tol: f64,
    pub exterior_tol: f64,
    pub support_tol: f64,
    pub spectrum_tol: f64,
    pub stall_tol: f64,
    pub decay_window: usize,
    pub kernel_residual: f64,
    pub residual_tol: f64,
    pub shift_margin: f64,
    pub dense_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_zero: 1e-8,
            bs_tol: 1e-9,
            exterior_tol: 1e-10,
            support_tol: 1e-10,
            spectrum_tol: 1e-9,
            stall_tol: 0.02,
            decay_window: 3,
            kernel_residual: 1e-7,
            residual_tol: 1e-10,
            shift_margin: 0.0,
            dense_cap: 6000,
        }
    }
}

impl Tolerances {
    /// Applies `NAME=VALUE`.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (name, value) =
            assignment.split_once('=').ok_or_else(|| anyhow!("tolerance override `{assignment}` is not NAME=VALUE"))?;
        let name = name.trim();
        let value = value.trim();
        let float = || value.parse::<f64>().with_context(|| format!("tolerance `{name}`: bad value `{value}`"));
        let int = || value.parse::<usize>().with_context(|| format!("tolerance `{name}`: bad value `{value}`"));
        match name {
            "tol_zero" => self.tol_zero = float()?,
            "bs_tol" => self.bs_tol = float()?,
            "exterior_tol" => self.exterior_tol = float()?,
            "support_tol" => self.support_tol = float()?,
            "spectrum_tol" => self.spectrum_tol = float()?,
            "stall_tol" => self.stall_tol = float()?,
            "decay_window" => self.decay_window = int()?,
            "kernel_residual" => self.kernel_residual = float()?,
            "residual_tol" => self.residual_tol = float()?,
            "shift_margin" => self.shift_margin = float()?,
            "dense_cap" => self.dense_cap = int()?,
            other => bail!("unknown tolerance `{other}`"),
        }
        Ok(())
    }
}

/// Expected outcomes checked as extra verdicts.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Expectations {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_minus: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parabolicity: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub graph: GraphSpec,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_potential: Option<BumpSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exhaustion: Option<ExhaustionSpec>,
    pub operations: Vec<Operation>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Probe vertices (parabolicity, green); defaults to the exhaustion center.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<Vec<String>>,
    /// Split set for bracketing; defaults to the first exhaustion level.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split_set: Option<Vec<String>>,
    #[serde(default = "default_lambdas")]
    pub bracket_lambdas: Vec<f64>,
    #[serde(default = "default_clr")]
    pub clr_lambdas: Vec<f64>,
    /// Shift the potential by `−λ₁` before the kernel check.
    #[serde(default)]
    pub tune_zero_mode: bool,
    /// Re-run the pipeline on a truncation with doubled radius.
    #[serde(default)]
    pub doubling: bool,
    #[serde(default)]
    pub expect: Expectations,
}

fn default_lambdas() -> Vec<f64> {
    vec![0.0]
}

fn default_clr() -> Vec<f64> {
    vec![4.0, 8.0, 16.0, 32.0, 64.0]
}

fn from_value_with_path<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        anyhow!("config error at `{path}`: {}", e.into_inner())
    })
}

impl ScenarioConfig {
    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let cfg: Self = from_value_with_path(value)?;
        cfg.validate_shape()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).context("config is not valid JSON")?;
        Self::from_value(value)
    }

    fn validate_shape(&self) -> Result<()> {
        if self.operations.is_empty() {
            bail!("config error at `operations`: operation list is empty");
        }
        if matches!(self.graph, GraphSpec::Random { .. }) && self.seed.is_none() {
            bail!("config error at `seed`: a random graph needs a seed");
        }
        if let Some(ex) = &self.exhaustion {
            if ex.radii.is_empty() {
                bail!("config error at `exhaustion.radii`: empty");
            }
            if let Some(i) = (1..ex.radii.len()).find(|&i| ex.radii[i] <= ex.radii[i - 1]) {
                bail!("config error at `exhaustion.radii[{i}]`: radii must be strictly increasing (nested levels)");
            }
        }
        Ok(())
    }

    /// Full validation: builds the scenario once so that every vertex id is
    /// resolved.
    pub fn validate(&self, base_dir: &Path) -> Result<()> {
        self.build(base_dir).map(|_| ())
    }

    pub fn build(&self, base_dir: &Path) -> Result<Scenario> {
        build_scenario(self, base_dir)
    }

    /// The same scenario on a truncation with every size parameter doubled;
    /// the radii are extended so the new last level has radius `2r + 1`.
    pub fn doubled(&self) -> Result<Self> {
        let mut out = self.clone();
        out.graph = match &self.graph {
            GraphSpec::Lattice { dimension, radius, vertex_cap } => GraphSpec::Lattice {
                dimension: *dimension,
                radius: 2 * radius,
                vertex_cap: Some(vertex_cap.unwrap_or(DEFAULT_VERTEX_CAP).max((4 * radius + 1).pow(*dimension as u32))),
            },
            GraphSpec::HalfLine { length } => GraphSpec::HalfLine { length: 2 * length },
            GraphSpec::Tree { branching, depth } => GraphSpec::Tree { branching: *branching, depth: 2 * depth },
            other => bail!("doubling is only defined for generated lattices, half-lines and trees, not {other:?}"),
        };
        if let Some(ex) = &mut out.exhaustion {
            let last = *ex.radii.last().unwrap();
            let target = 2 * last + 1;
            ex.radii.extend(last + 1..target);
        }
        Ok(out)
    }
}

/// A built scenario: graph, potential and exhaustion.
pub struct Scenario {
    pub graph: Arc<WeightedGraph>,
    pub potential: PotentialField,
    pub exhaustion: Option<Exhaustion>,
    pub probe: Option<Region>,
    pub split_set: Option<Region>,
}

fn build_graph(spec: &GraphSpec, seed: Option<u64>, base_dir: &Path) -> Result<WeightedGraph> {
    Ok(match spec {
        GraphSpec::Lattice { dimension, radius, vertex_cap } => {
            let profiles = Profiles::default().with_vertex_cap(vertex_cap.unwrap_or(DEFAULT_VERTEX_CAP));
            build_lattice(*dimension, *radius, &profiles)?
        }
        GraphSpec::HalfLine { length } => build_half_line(*length, &Profiles::default())?,
        GraphSpec::Tree { branching, depth } => build_tree(*branching, *depth, DEFAULT_VERTEX_CAP)?,
        GraphSpec::Random { vertices, extra_edges, mu_range, w_range } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.expect("validated"));
            let spec = RandomGraphSpec { vertices: *vertices, extra_edges: *extra_edges, mu_range: *mu_range, w_range: *w_range };
            random_connected(&spec, &mut rng)?
        }
        GraphSpec::File { path } => WeightedGraph::from_json_path(base_dir.join(path))?,
    })
}

fn build_potential(spec: &PotentialSpec, graph: &WeightedGraph, base_dir: &Path) -> Result<PotentialField> {
    let n = graph.len();
    let by_ids = |values: &BTreeMap<String, f64>, field: &str| -> Result<PotentialField> {
        let mut v = vec![0.0; n];
        for (id, val) in values {
            let x = graph.vertex(id).with_context(|| format!("config error at `{field}`"))?;
            v[x] = *val;
        }
        Ok(PotentialField::new(v))
    };
    Ok(match spec {
        PotentialSpec::Zero => PotentialField::zeros(n),
        PotentialSpec::Uniform { value } => PotentialField::new(vec![*value; n]),
        PotentialSpec::ConstantWell { center, radius, depth, metric } => {
            let c = graph.vertex(center).context("config error at `potential.center`")?;
            let ball = ball_exhaustion_with(graph, c, &[*radius], (*metric).into())?;
            PotentialField::indicator(n, &ball.levels()[0], -depth)
        }
        PotentialSpec::PowerDecay { center, c } => {
            let x0 = graph.vertex(center).context("config error at `potential.center`")?;
            let d = graph.hop_distances(x0);
            PotentialField::new(
                d.iter().map(|&d| if d == usize::MAX { 0.0 } else { -c / (1.0 + (d * d) as f64) }).collect(),
            )
        }
        PotentialSpec::Values { values } => by_ids(values, "potential.values")?,
        PotentialSpec::File { path } => {
            let text = std::fs::read_to_string(base_dir.join(path))
                .with_context(|| format!("reading potential file {}", path.display()))?;
            let values: BTreeMap<String, f64> = serde_json::from_str(&text).context("potential file must be {id: value}")?;
            by_ids(&values, "potential.path")?
        }
    })
}

fn region_of(graph: &WeightedGraph, ids: &[String], field: &str) -> Result<Region> {
    graph.region_from_ids(ids).with_context(|| format!("config error at `{field}`"))
}

fn build_scenario(cfg: &ScenarioConfig, base_dir: &Path) -> Result<Scenario> {
    let mut graph = build_graph(&cfg.graph, cfg.seed, base_dir)?;
    if let Some(bump) = &cfg.base_potential {
        let region = region_of(&graph, &bump.vertices, "base_potential.vertices")?;
        let mut w = graph.base_potential().to_vec();
        for &x in &region {
            w[x] += bump.value;
        }
        graph = graph.with_base_potential(w)?;
    }
    let potential = build_potential(&cfg.potential, &graph, base_dir)?;
    let exhaustion = match &cfg.exhaustion {
        Some(ex) => {
            let c = graph.vertex(&ex.center).context("config error at `exhaustion.center`")?;
            Some(ball_exhaustion_with(&graph, c, &ex.radii, ex.metric.into()).context("config error at `exhaustion.radii`")?)
        }
        None => None,
    };
    let probe = match (&cfg.probe, &cfg.exhaustion) {
        (Some(ids), _) => Some(region_of(&graph, ids, "probe")?),
        (None, Some(ex)) => Some(Region::new([graph.vertex(&ex.center)?])),
        _ => None,
    };
    let split_set = match (&cfg.split_set, &exhaustion) {
        (Some(ids), _) => Some(region_of(&graph, ids, "split_set")?),
        (None, Some(ex)) => Some(ex.levels()[0].clone()),
        _ => None,
    };
    Ok(Scenario { graph: Arc::new(graph), potential, exhaustion, probe, split_set })
}

/// Parses a batch document: an array of scenarios or `{"scenarios": [...]}`.
pub fn parse_batch(text: &str) -> Result<Vec<ScenarioConfig>> {
    let value: serde_json::Value = serde_json::from_str(text).context("batch is not valid JSON")?;
    let list = match value {
        serde_json::Value::Array(items) => items,
        serde_json::Value::Object(mut map) if map.contains_key("scenarios") => match map.remove("scenarios") {
            Some(serde_json::Value::Array(items)) => items,
            _ => bail!("config error at `scenarios`: expected an array"),
        },
        single @ serde_json::Value::Object(_) => vec![single],
        _ => bail!("batch must be a scenario, an array of scenarios or {{\"scenarios\": [...]}}"),
    };
    list.into_iter()
        .enumerate()
        .map(|(i, v)| ScenarioConfig::from_value(v).with_context(|| format!("scenario {i}")))
        .collect()
}
