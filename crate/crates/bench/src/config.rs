//! Declarative experiment files: `key = value` lines, `#` comments, list
//! values separated by commas.
//!
//! ```text
//! table = schemes
//! meshes = data/gargoyle.off, generated:bumpy:65
//! eigs = 100
//! tolerances = 1e-2, 1e-4
//! distances = dijkstra, stvd, heat
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use hsim::geodesics::{DistanceScheme, DEFAULT_STVD_WINDOW};
use hsim::mesh::{load_mesh, MeshError, TriangleMesh};
use hsim::shapes;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("key `{key}`: {message}")]
    Value { key: String, message: String },
}

/// Which table layout an experiment produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// Distance schemes × tolerances.
    Schemes,
    /// HSIM against the comparison solvers.
    Baselines,
    /// Laplace–Beltrami against Hamiltonian operators.
    Hamiltonian,
    /// Farthest point against Poisson disk sampling times.
    Sampling,
}

impl TableKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Schemes => "schemes",
            Self::Baselines => "baselines",
            Self::Hamiltonian => "hamiltonian",
            Self::Sampling => "sampling",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Self::Schemes, Self::Baselines, Self::Hamiltonian, Self::Sampling].into_iter().find(|k| k.name() == s)
    }
}

/// Where a mesh comes from: a file, or one of the built-in shapes.
#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    File(PathBuf),
    Generated { shape: GeneratedShape, resolution: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratedShape {
    Icosphere,
    CubeSphere,
    Bumpy,
    BumpyIcosphere,
    Star,
    Torus,
}

impl GeneratedShape {
    pub fn name(self) -> &'static str {
        match self {
            Self::Icosphere => "icosphere",
            Self::CubeSphere => "cube_sphere",
            Self::Bumpy => "bumpy",
            Self::BumpyIcosphere => "bumpy_icosphere",
            Self::Star => "star",
            Self::Torus => "torus",
        }
    }

    pub fn all() -> [Self; 6] {
        [Self::Icosphere, Self::CubeSphere, Self::Bumpy, Self::BumpyIcosphere, Self::Star, Self::Torus]
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::all().into_iter().find(|k| k.name() == s)
    }

    /// `resolution` is the subdivision level for icosphere-based shapes
    /// and the segment count otherwise.
    pub fn build(self, resolution: usize) -> TriangleMesh {
        match self {
            Self::Icosphere => shapes::icosphere(resolution as u32, 1.0),
            Self::CubeSphere => shapes::cube_sphere(resolution, 2.0),
            Self::Bumpy => shapes::bumpy_ellipsoid(&shapes::cube_sphere(resolution, 2.0)),
            Self::BumpyIcosphere => shapes::bumpy_ellipsoid(&shapes::icosphere(resolution as u32, 1.0)),
            Self::Star => shapes::star(resolution as u32),
            Self::Torus => shapes::torus(1.0, 0.35, 3 * resolution, resolution),
        }
    }

    /// Icosphere subdivision counts grow the mesh 4× per step.
    pub fn max_resolution(self) -> usize {
        match self {
            Self::Icosphere | Self::BumpyIcosphere | Self::Star => 8,
            Self::CubeSphere | Self::Bumpy => 1000,
            Self::Torus => 2000,
        }
    }
}

impl MeshSource {
    /// `generated:<shape>:<resolution>` or a file path.
    pub fn parse(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("generated:") {
            let (shape, res) = rest.split_once(':').ok_or_else(|| format!("expected generated:<shape>:<resolution>, found {s:?}"))?;
            let shape = GeneratedShape::parse(shape).ok_or_else(|| {
                let names: Vec<&str> = GeneratedShape::all().iter().map(|g| g.name()).collect();
                format!("unknown shape {shape:?} (expected one of {})", names.join(", "))
            })?;
            let resolution: usize = res.parse().map_err(|_| format!("bad resolution {res:?}"))?;
            if resolution == 0 || resolution > shape.max_resolution() {
                return Err(format!("resolution {resolution} outside 1..={}", shape.max_resolution()));
            }
            Ok(Self::Generated { shape, resolution })
        } else if s.is_empty() {
            Err("empty mesh entry".into())
        } else {
            Ok(Self::File(PathBuf::from(s)))
        }
    }

    /// Relative file paths are resolved against `base`.
    pub fn load(&self, base: Option<&Path>) -> Result<TriangleMesh, MeshError> {
        match self {
            Self::File(p) => {
                let path = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.clone(),
                };
                load_mesh(path, None)
            }
            Self::Generated { shape, resolution } => Ok(shape.build(*resolution)),
        }
    }

    /// Short model name for report rows.
    pub fn label(&self) -> String {
        match self {
            Self::File(p) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| p.display().to_string()),
            Self::Generated { shape, resolution } => format!("{}-{}", shape.name(), resolution),
        }
    }
}

impl fmt::Display for MeshSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::File(p) => write!(f, "{}", p.display()),
            Self::Generated { shape, resolution } => write!(f, "generated:{}:{}", shape.name(), resolution),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Hsim,
    Dense,
    Bpcg,
    Coarse,
}

impl SolverChoice {
    pub fn name(self) -> &'static str {
        match self {
            Self::Hsim => "hsim",
            Self::Dense => "dense",
            Self::Bpcg => "bpcg",
            Self::Coarse => "coarse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Hsim, Self::Dense, Self::Bpcg, Self::Coarse].into_iter().find(|k| k.name() == s)
    }
}

/// Parses `dijkstra`, `stvd`, `stvd:<window>`, `heat` or `heat:<scale>`.
pub fn parse_distance(s: &str) -> Result<DistanceScheme, String> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    match (name, arg) {
        ("dijkstra", None) => Ok(DistanceScheme::Dijkstra),
        ("stvd", None) => Ok(DistanceScheme::Stvd { window: DEFAULT_STVD_WINDOW }),
        ("stvd", Some(w)) => match w.parse::<usize>() {
            Ok(window) if window >= 1 => Ok(DistanceScheme::Stvd { window }),
            _ => Err(format!("bad STVD window {w:?}")),
        },
        ("heat", None) => Ok(DistanceScheme::Heat { tau_scale: 1.0 }),
        ("heat", Some(t)) => match t.parse::<f64>() {
            Ok(tau_scale) if tau_scale > 0.0 && tau_scale.is_finite() => Ok(DistanceScheme::Heat { tau_scale }),
            _ => Err(format!("bad heat time scale {t:?}")),
        },
        _ => Err(format!("unknown distance scheme {s:?}")),
    }
}

/// A parsed experiment file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub table: TableKind,
    pub meshes: Vec<MeshSource>,
    pub eigs: Vec<usize>,
    pub tolerances: Vec<f64>,
    pub distances: Vec<DistanceScheme>,
    pub solvers: Vec<SolverChoice>,
    pub hamiltonian_t: Vec<f64>,
    /// Sample counts for the sampling table; empty means `16 · eigs`.
    pub sample_counts: Vec<usize>,
    pub seed: u64,
    pub fps_seed: usize,
    pub threads: usize,
    /// Wall-time cap for the block PCG solver, as a multiple of the HSIM
    /// time in the same row group. `None` disables the cap.
    pub bpcg_budget_factor: Option<f64>,
    /// Canonical `key=value` text the hash is computed from.
    canonical: String,
}

const KEYS: &[&str] = &[
    "table",
    "meshes",
    "eigs",
    "tolerances",
    "distances",
    "solvers",
    "hamiltonian_t",
    "sample_counts",
    "seed",
    "fps_seed",
    "threads",
    "bpcg_budget_factor",
];

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: i + 1, message: format!("expected `key = value`, found {line:?}") })?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey(key.to_string()));
            }
            if entries.insert(key, (i + 1, value.trim())).is_some() {
                return Err(ConfigError::DuplicateKey { line: i + 1, key: key.to_string() });
            }
        }
        let get = |k: &str| entries.get(k).map(|&(_, v)| v);
        let table_text = get("table").ok_or(ConfigError::MissingKey("table"))?;
        let table = TableKind::parse(table_text).ok_or_else(|| value_err("table", format!("unknown table kind {table_text:?}")))?;

        let meshes = list(get("meshes").unwrap_or(""))
            .map(|s| MeshSource::parse(s).map_err(|m| value_err("meshes", m)))
            .collect::<Result<Vec<_>, _>>()?;
        let eigs = parse_list(get("eigs").unwrap_or("100"), "eigs", |s| s.parse::<usize>().ok().filter(|&v| v > 0))?;
        let tolerances = parse_list(get("tolerances").unwrap_or("1e-2"), "tolerances", |s| s.parse::<f64>().ok().filter(|v| *v > 0.0 && v.is_finite()))?;
        let distances = list(get("distances").unwrap_or("dijkstra"))
            .map(|s| parse_distance(s).map_err(|m| value_err("distances", m)))
            .collect::<Result<Vec<_>, _>>()?;
        let solvers = parse_list(get("solvers").unwrap_or("hsim"), "solvers", SolverChoice::parse)?;
        let hamiltonian_t = parse_list(get("hamiltonian_t").unwrap_or("0"), "hamiltonian_t", |s| s.parse::<f64>().ok().filter(|v| *v >= 0.0 && v.is_finite()))?;
        let sample_counts = match get("sample_counts") {
            Some(v) => parse_list(v, "sample_counts", |s| s.parse::<usize>().ok().filter(|&c| c > 0))?,
            None => Vec::new(),
        };
        let seed = parse_scalar(get("seed"), "seed", 0u64)?;
        let fps_seed = parse_scalar(get("fps_seed"), "fps_seed", 0usize)?;
        let threads = parse_scalar(get("threads"), "threads", 1usize)?;
        if threads == 0 {
            return Err(value_err("threads", "must be at least 1".into()));
        }
        let bpcg_budget_factor = match get("bpcg_budget_factor") {
            None | Some("none") => None,
            Some(v) => Some(v.parse::<f64>().ok().filter(|f| *f > 0.0 && f.is_finite()).ok_or_else(|| value_err("bpcg_budget_factor", format!("bad value {v:?}")))?),
        };

        let canonical = entries.iter().map(|(k, (_, v))| format!("{k}={}\n", normalize_list(v))).collect();
        Ok(Self {
            table,
            meshes,
            eigs,
            tolerances,
            distances,
            solvers,
            hamiltonian_t,
            sample_counts,
            seed,
            fps_seed,
            threads,
            bpcg_budget_factor,
            canonical,
        })
    }

    pub fn load(path: &Path) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        Ok(Self::parse(&text)?)
    }

    /// First 16 hex digits of the SHA-256 of the canonical key/value text.
    pub fn hash(&self) -> String {
        hash_text(&self.canonical)
    }

    pub fn canonical_text(&self) -> &str {
        &self.canonical
    }
}

/// First 16 hex digits of the SHA-256 of `text`.
pub fn hash_text(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn value_err(key: &str, message: String) -> ConfigError {
    ConfigError::Value { key: key.to_string(), message }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn normalize_list(value: &str) -> String {
    list(value).collect::<Vec<_>>().join(",")
}

fn parse_list<T>(value: &str, key: &str, f: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, ConfigError> {
    let items: Vec<T> = list(value).map(|s| f(s).ok_or_else(|| value_err(key, format!("bad entry {s:?}")))).collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(value_err(key, "list is empty".into()));
    }
    Ok(items)
}

fn parse_scalar<T: std::str::FromStr>(value: Option<&str>, key: &str, default: T) -> Result<T, ConfigError> {
    match value {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| value_err(key, format!("bad value {v:?}"))),
    }
}
