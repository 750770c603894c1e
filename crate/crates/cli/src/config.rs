//! Run configuration: TOML on disk, one canonical form for hashing.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use perfband::dispersion::{h_regime, uniform_eta_grid, ModeLabel};
use perfband::fem::EigenOptions;
use perfband::geometry::{HoleShape, MeshOptions, PerforatedCell};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const OUTPUT_DIR_ENV: &str = "PERFBAND_OUTPUT_DIR";
pub const CACHE_DIR_ENV: &str = "PERFBAND_CACHE_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("invalid `{field}`: {msg}")]
    Field { field: &'static str, msg: String },
}

fn field(field: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Field { field, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HoleKindConfig {
    /// Disk of radius `0.2 H` centered at `(0, H/2)`.
    Canonical,
    Empty,
    Disk,
    Ellipse,
    Polygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleConfig {
    pub kind: HoleKindConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_axes: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<[f64; 2]>>,
    #[serde(default = "default_true")]
    pub mirror: bool,
}

impl Default for HoleConfig {
    fn default() -> Self {
        Self {
            kind: HoleKindConfig::Canonical,
            center: None,
            radius: None,
            semi_axes: None,
            vertices: None,
            mirror: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaConfig {
    /// Uniform grid size over `[-pi, pi]`.
    #[serde(default = "default_eta_points")]
    pub points: usize,
    /// Explicit values; replaces the uniform grid when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Default for EtaConfig {
    fn default() -> Self {
        Self {
            points: default_eta_points(),
            values: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_cycles")]
    pub max_cycles: usize,
    #[serde(default = "default_guard")]
    pub guard: usize,
    #[serde(default = "default_krylov_blocks")]
    pub krylov_blocks: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_cycles: default_max_cycles(),
            guard: default_guard(),
            krylov_blocks: default_krylov_blocks(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub n: usize,
    pub eta: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { n: 8, eta: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasimodeConfig {
    /// Mode indices `j` of the `x2`-independent limit modes.
    pub j: Vec<i64>,
    pub etas: Vec<f64>,
}

impl Default for QuasimodeConfig {
    fn default() -> Self {
        Self {
            j: vec![0, 1, -1],
            etas: vec![-PI, -PI / 2.0, 0.0, PI / 2.0, PI],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "H")]
    pub height: f64,
    #[serde(default)]
    pub hole: HoleConfig,
    /// Hole counts `N`; `eps = 1/N`.
    pub ns: Vec<usize>,
    #[serde(default)]
    pub eta: EtaConfig,
    /// Band count `P`.
    pub bands: usize,
    pub mesh_h: f64,
    /// Element size on the boundary-layer strip; defaults to `mesh_h / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip_h: Option<f64>,
    /// Strip half-length `L`; defaults to the hole-dependent choice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip_length: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Band indices for `sweep`.
    #[serde(default = "default_ms")]
    pub ms: Vec<usize>,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub quasimode: QuasimodeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

fn default_true() -> bool {
    true
}
fn default_eta_points() -> usize {
    33
}
fn default_tol() -> f64 {
    EigenOptions::default().tol
}
fn default_max_cycles() -> usize {
    EigenOptions::default().max_cycles
}
fn default_guard() -> usize {
    EigenOptions::default().guard
}
fn default_krylov_blocks() -> usize {
    EigenOptions::default().krylov_blocks
}
fn default_ms() -> Vec<usize> {
    vec![1]
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.into(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses and validates.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let h = self.height;
        if !(h > 0.0 && h.is_finite()) {
            return Err(field("H", format!("must be positive and finite, got {h}")));
        }
        let hole = self.hole_shape()?;
        hole.validate(h).map_err(|e| field("hole", e.to_string()))?;
        if self.ns.is_empty() {
            return Err(field("ns", "needs at least one hole count"));
        }
        if let Some(n) = self.ns.iter().find(|n| **n == 0) {
            return Err(field("ns", format!("hole counts must be positive, got {n}")));
        }
        match &self.eta.values {
            Some(v) if v.is_empty() => return Err(field("eta.values", "must not be empty")),
            Some(v) => {
                if let Some(bad) = v.iter().find(|e| !(e.abs() <= PI)) {
                    return Err(field("eta.values", format!("{bad} lies outside [-pi, pi]")));
                }
            }
            None if self.eta.points < 2 => return Err(field("eta.points", "needs at least two points")),
            None => {}
        }
        if self.bands == 0 {
            return Err(field("bands", "must be at least one"));
        }
        if !(self.mesh_h > 0.0 && self.mesh_h < h) {
            return Err(field("mesh_h", format!("must lie in (0, H), got {}", self.mesh_h)));
        }
        if let Some(s) = self.strip_h {
            if !(s > 0.0 && s < h) {
                return Err(field("strip_h", format!("must lie in (0, H), got {s}")));
            }
        }
        if let Some(l) = self.strip_length {
            if !(l > 0.0 && l.is_finite()) {
                return Err(field("strip_length", format!("must be positive, got {l}")));
            }
        } else if !hole.is_empty() {
            PerforatedCell::default_strip_length(&hole, h).map_err(|e| field("hole", e.to_string()))?;
        }
        let s = &self.solver;
        if !(s.tol > 0.0 && s.tol < 1.0) {
            return Err(field("solver.tol", format!("must lie in (0, 1), got {}", s.tol)));
        }
        if s.max_cycles == 0 || s.krylov_blocks < 2 {
            return Err(field(
                "solver",
                "max_cycles must be positive and krylov_blocks at least 2",
            ));
        }
        let regime = h_regime(h).map_err(|e| field("H", e.to_string()))?;
        let top = regime.max_verified_band();
        if self.ms.is_empty() {
            return Err(field("ms", "needs at least one band index"));
        }
        if let Some(m) = self.ms.iter().find(|m| **m == 0 || **m > top) {
            return Err(field(
                "ms",
                format!("band {m} is outside the verified range m <= {top} at H = {h}"),
            ));
        }
        if self.solve.n == 0 {
            return Err(field("solve.n", "must be positive"));
        }
        if !(self.solve.eta.abs() <= PI) {
            return Err(field("solve.eta", format!("{} lies outside [-pi, pi]", self.solve.eta)));
        }
        if self.quasimode.j.is_empty() || self.quasimode.etas.is_empty() {
            return Err(field("quasimode", "needs at least one mode index and one eta"));
        }
        if let Some(bad) = self.quasimode.etas.iter().find(|e| !(e.abs() <= PI)) {
            return Err(field("quasimode.etas", format!("{bad} lies outside [-pi, pi]")));
        }
        Ok(())
    }

    pub fn hole_shape(&self) -> Result<HoleShape, ConfigError> {
        let c = &self.hole;
        Ok(match c.kind {
            HoleKindConfig::Canonical => HoleShape::canonical(self.height),
            HoleKindConfig::Empty => HoleShape::empty(),
            HoleKindConfig::Disk => {
                HoleShape::disk(need(c.center, "hole.center")?, need(c.radius, "hole.radius")?, c.mirror)
            }
            HoleKindConfig::Ellipse => HoleShape::ellipse(
                need(c.center, "hole.center")?,
                need(c.semi_axes, "hole.semi_axes")?,
                c.mirror,
            ),
            HoleKindConfig::Polygon => HoleShape::polygon(need(c.vertices.clone(), "hole.vertices")?, c.mirror),
        })
    }

    pub fn cell(&self, n: usize) -> Result<PerforatedCell, ConfigError> {
        PerforatedCell::new(self.height, n, self.hole_shape()?).map_err(|e| field("hole", e.to_string()))
    }

    pub fn eta_values(&self) -> Vec<f64> {
        match &self.eta.values {
            Some(v) => v.clone(),
            None => uniform_eta_grid(self.eta.points),
        }
    }

    pub fn mesh_options(&self) -> MeshOptions {
        MeshOptions::new(self.mesh_h)
    }

    pub fn strip_h(&self) -> f64 {
        self.strip_h.unwrap_or(self.mesh_h / 2.0)
    }

    pub fn eigen_options(&self) -> EigenOptions {
        let s = &self.solver;
        EigenOptions {
            tol: s.tol,
            max_cycles: s.max_cycles,
            guard: s.guard,
            krylov_blocks: s.krylov_blocks,
            ..EigenOptions::default()
        }
    }

    pub fn labels(&self) -> Vec<ModeLabel> {
        self.quasimode.j.iter().map(|&j| ModeLabel::new(j, 0)).collect()
    }

    /// TOML of every field that affects results; directories are left out.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        c.cache_dir = None;
        toml::to_string(&c).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(&digest[..8])
    }

    /// Output directory: environment, then config, then `out`.
    pub fn output_dir(&self) -> PathBuf {
        dir_from(OUTPUT_DIR_ENV, &self.output_dir, "out")
    }

    /// Cache root: environment, then config, then `cache`.
    pub fn cache_dir(&self) -> PathBuf {
        dir_from(CACHE_DIR_ENV, &self.cache_dir, "cache")
    }
}

fn need<T>(v: Option<T>, name: &'static str) -> Result<T, ConfigError> {
    v.ok_or_else(|| field(name, "required for this hole kind"))
}

fn dir_from(var: &str, configured: &Option<PathBuf>, fallback: &str) -> PathBuf {
    match std::env::var_os(var) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => configured.clone().unwrap_or_else(|| PathBuf::from(fallback)),
    }
}
