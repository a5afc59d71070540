//! Run configuration: JSON schema, parsing, and structural validation.
//!
//! Complex entries are `[re, im]` pairs, matrices are row-major nested
//! arrays, and tensor indices are site-major throughout.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use swolff_core::exact::{make_split, SpectralSplit};
use swolff_core::lattice::{EdgeSpec, SiteSpec, SpinLattice};
use swolff_core::operator::{herm_part, operator_norm};
use swolff_core::{tol, C64, CMat};

/// Everything that can go wrong before any mathematics runs.
#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse { line: usize, column: usize, message: String },
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Parse { line, column, message } => {
                write!(f, "config parse error at line {line}, column {column}: {message}")
            }
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// One complex matrix as it appears in JSON.
pub type JsonMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    pub h0: JsonMatrix,
    pub v: JsonMatrix,
    /// Low-energy window `[lo, hi]` on the spectrum of `h0`.
    pub window: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteConfig {
    pub dim: usize,
    pub h0: JsonMatrix,
    pub low_dim: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConfig {
    pub u: usize,
    pub v: usize,
    pub v_uv: JsonMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeModel {
    pub sites: Vec<SiteConfig>,
    pub edges: Vec<EdgeConfig>,
}

/// Either a bare `(H0, V, window)` triple or a spin lattice.
#[derive(Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum ModelConfig {
    Raw(RawModel),
    Lattice(LatticeModel),
}

#[derive(Deserialize, Clone)]
#[serde(untagged)]
pub enum EpsilonSpec {
    One(f64),
    Sweep(Vec<f64>),
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
#[serde(rename_all = "snake_case")]
pub enum TaskName {
    Exact,
    Series,
    Diagrams,
    Local,
    LinkedCluster,
    Equivalence,
    Stability,
}

impl TaskName {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskName::Exact => "exact",
            TaskName::Series => "series",
            TaskName::Diagrams => "diagrams",
            TaskName::Local => "local",
            TaskName::LinkedCluster => "linked_cluster",
            TaskName::Equivalence => "equivalence",
            TaskName::Stability => "stability",
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub epsilon: EpsilonSpec,
    pub order: usize,
    pub tasks: Vec<TaskName>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    /// The sweep as a list; a scalar epsilon is a one-point sweep.
    pub fn epsilons(&self) -> Vec<f64> {
        match &self.epsilon {
            EpsilonSpec::One(e) => vec![*e],
            EpsilonSpec::Sweep(v) => v.clone(),
        }
    }
}

/// Parse and validate; keeps the raw bytes for the report hash.
pub fn parse_config(path: &Path) -> Result<(RunConfig, Vec<u8>), ConfigError> {
    let bytes = std::fs::read(path)
        .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    let cfg: RunConfig = serde_json::from_slice(&bytes).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    validate(&cfg)?;
    Ok((cfg, bytes))
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    if cfg.tasks.is_empty() {
        return Err(ConfigError::Invalid("tasks must not be empty".into()));
    }
    let mut seen = cfg.tasks.clone();
    seen.sort();
    seen.dedup();
    if seen.len() != cfg.tasks.len() {
        return Err(ConfigError::Invalid("tasks contains duplicates".into()));
    }
    let eps = cfg.epsilons();
    if eps.is_empty() {
        return Err(ConfigError::Invalid("epsilon sweep must not be empty".into()));
    }
    for e in &eps {
        if !e.is_finite() || *e <= 0.0 {
            return Err(ConfigError::Invalid(format!(
                "epsilon values must be finite and positive, got {e}"
            )));
        }
    }
    for w in eps.windows(2) {
        if w[1] >= w[0] {
            return Err(ConfigError::Invalid(
                "epsilon sweep must be strictly descending".into(),
            ));
        }
    }
    match &cfg.model {
        ModelConfig::Raw(raw) => {
            hermitian_from_json(&raw.h0, "model.raw.h0")?;
            hermitian_from_json(&raw.v, "model.raw.v")?;
            if raw.h0.len() != raw.v.len() {
                return Err(ConfigError::Invalid(format!(
                    "model.raw: H0 is {0}x{0} but V is {1}x{1}",
                    raw.h0.len(),
                    raw.v.len()
                )));
            }
            if raw.window[0] >= raw.window[1] {
                return Err(ConfigError::Invalid(
                    "model.raw.window must be an increasing interval".into(),
                ));
            }
        }
        ModelConfig::Lattice(lat) => {
            for (u, s) in lat.sites.iter().enumerate() {
                let m = hermitian_from_json(&s.h0, &format!("model.lattice.sites[{u}].h0"))?;
                if m.nrows() != s.dim {
                    return Err(ConfigError::Invalid(format!(
                        "model.lattice.sites[{u}]: h0 is {}x{} but dim is {}",
                        m.nrows(),
                        m.ncols(),
                        s.dim
                    )));
                }
            }
            for (i, e) in lat.edges.iter().enumerate() {
                hermitian_from_json(&e.v_uv, &format!("model.lattice.edges[{i}].v_uv"))?;
            }
        }
    }
    Ok(())
}

/// Decode one matrix, insisting it is square and hermitian within the
/// structural tolerance.
pub fn hermitian_from_json(m: &JsonMatrix, field: &str) -> Result<CMat, ConfigError> {
    let n = m.len();
    if n == 0 {
        return Err(ConfigError::Invalid(format!("{field}: matrix is empty")));
    }
    for (i, row) in m.iter().enumerate() {
        if row.len() != n {
            return Err(ConfigError::Invalid(format!(
                "{field}: row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
    }
    let mat = CMat::from_fn(n, n, |i, j| C64::new(m[i][j][0], m[i][j][1]));
    let residual = operator_norm(&(&mat - herm_part(&mat)));
    if residual > tol::TOL_STRUCT * operator_norm(&mat).max(1.0) {
        return Err(ConfigError::Invalid(format!(
            "{field} not hermitian: residual {residual:.3e}"
        )));
    }
    Ok(mat)
}

/// A config's model, instantiated.
pub enum BuiltModel {
    Raw { split: SpectralSplit, v: CMat },
    Lattice(SpinLattice),
}

impl BuiltModel {
    /// The global spectral split and the full-space perturbation, whichever
    /// way the model was given.
    pub fn split_and_v(&self) -> Result<(SpectralSplit, CMat), swolff_core::SwError> {
        match self {
            BuiltModel::Raw { split, v } => Ok((split.clone(), v.clone())),
            BuiltModel::Lattice(lat) => Ok((lat.global_split()?, lat.v_full())),
        }
    }

    pub fn lattice(&self) -> Option<&SpinLattice> {
        match self {
            BuiltModel::Raw { .. } => None,
            BuiltModel::Lattice(lat) => Some(lat),
        }
    }
}

/// Instantiate the model, funnelling core-level rejections into config errors
/// that name the offending field.
pub fn build_model(model: &ModelConfig) -> Result<BuiltModel, ConfigError> {
    match model {
        ModelConfig::Raw(raw) => {
            let h0 = hermitian_from_json(&raw.h0, "model.raw.h0")?;
            let v = hermitian_from_json(&raw.v, "model.raw.v")?;
            let split = make_split(&h0, (raw.window[0], raw.window[1]))
                .map_err(|e| ConfigError::Invalid(format!("model.raw: {e}")))?;
            Ok(BuiltModel::Raw { split, v })
        }
        ModelConfig::Lattice(lat) => {
            let mut sites = Vec::with_capacity(lat.sites.len());
            for (u, s) in lat.sites.iter().enumerate() {
                let h0 = hermitian_from_json(&s.h0, &format!("model.lattice.sites[{u}].h0"))?;
                sites.push(SiteSpec { dim: s.dim, h0, low_dim: s.low_dim });
            }
            let mut edges = Vec::with_capacity(lat.edges.len());
            for (i, e) in lat.edges.iter().enumerate() {
                let v_uv =
                    hermitian_from_json(&e.v_uv, &format!("model.lattice.edges[{i}].v_uv"))?;
                edges.push(EdgeSpec { u: e.u, v: e.v, v_uv });
            }
            let lattice = SpinLattice::new(sites, edges)
                .map_err(|e| ConfigError::Invalid(format!("model.lattice: {e}")))?;
            Ok(BuiltModel::Lattice(lattice))
        }
    }
}
