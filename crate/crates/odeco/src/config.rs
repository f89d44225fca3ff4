//! Run configuration. Values come from, in increasing priority: the mode
//! preset, a `key = value` config file, and command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use odeco_core::energy::EnergyWeights;
use odeco_core::mesh::DEFAULT_DIHEDRAL_DEG;
use odeco_core::solver::SolverConfig;

use crate::io::MeshFormat;
use crate::OdecoError;

pub const OUT_DIR_ENV: &str = "ODECO_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "odeco_out";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModePreset {
    Area,
    AreaSmooth,
    Angle,
    SizingOnly,
    /// Sizing-only weights, meant to be overridden key by key.
    Custom,
}

impl ModePreset {
    pub fn weights(self) -> EnergyWeights {
        match self {
            ModePreset::Area => EnergyWeights::AREA,
            ModePreset::AreaSmooth => EnergyWeights::AREA_SMOOTH,
            ModePreset::Angle => EnergyWeights::ANGLE,
            ModePreset::SizingOnly | ModePreset::Custom => EnergyWeights::SIZING_ONLY,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModePreset::Area => "area",
            ModePreset::AreaSmooth => "area-smooth",
            ModePreset::Angle => "angle",
            ModePreset::SizingOnly => "sizing-only",
            ModePreset::Custom => "custom",
        }
    }
}

impl FromStr for ModePreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "area" => ModePreset::Area,
            "area-smooth" => ModePreset::AreaSmooth,
            "angle" => ModePreset::Angle,
            "sizing-only" => ModePreset::SizingOnly,
            "custom" => ModePreset::Custom,
            other => return Err(format!("unknown mode `{other}` (area, area-smooth, angle, sizing-only, custom)")),
        })
    }
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: PathBuf,
    pub format: Option<MeshFormat>,
    pub features: Option<PathBuf>,
    pub mode: ModePreset,
    pub weights: EnergyWeights,
    pub dihedral_deg: f64,
    pub seed: u64,
    /// 0 = all logical cores.
    pub threads: usize,
    pub out: PathBuf,
    pub verbosity: u8,
    pub max_iterations_init: usize,
    pub max_iterations: usize,
    /// Stop after the initialization stage.
    pub init_only: bool,
    /// Write measured wall times into the iteration log (otherwise zeros).
    pub record_wall_time: bool,
}

impl RunConfig {
    pub fn new(mesh: impl Into<PathBuf>) -> Self {
        let solver = SolverConfig::default();
        RunConfig {
            mesh: mesh.into(),
            format: None,
            features: None,
            mode: ModePreset::SizingOnly,
            weights: ModePreset::SizingOnly.weights(),
            dihedral_deg: DEFAULT_DIHEDRAL_DEG,
            seed: 0,
            threads: 0,
            out: default_out_dir(),
            verbosity: 0,
            max_iterations_init: solver.max_iterations_init,
            max_iterations: solver.max_iterations,
            init_only: false,
            record_wall_time: false,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            weights: self.weights,
            seed: self.seed,
            max_iterations_init: self.max_iterations_init,
            max_iterations: self.max_iterations,
            ..SolverConfig::default()
        }
    }
}

pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Optional settings from one source (config file or command line).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mesh: Option<PathBuf>,
    pub format: Option<MeshFormat>,
    pub features: Option<PathBuf>,
    pub mode: Option<ModePreset>,
    pub kappa_odeco: Option<f64>,
    pub kappa_area: Option<f64>,
    pub kappa_angle: Option<f64>,
    pub a0: Option<f64>,
    pub dihedral_deg: Option<f64>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub verbosity: Option<u8>,
    pub max_iterations_init: Option<usize>,
    pub max_iterations: Option<usize>,
}

macro_rules! take {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Overrides { $($f: $hi.$f.clone().or_else(|| $lo.$f.clone())),* }
    };
}

impl Overrides {
    /// Fields of `self` win over `lower`.
    pub fn over(&self, lower: &Overrides) -> Overrides {
        take!(self, lower, mesh, format, features, mode, kappa_odeco, kappa_area, kappa_angle, a0, dihedral_deg, seed,
            threads, out, verbosity, max_iterations_init, max_iterations)
    }

    pub fn resolve(&self) -> Result<RunConfig, OdecoError> {
        let mesh = self.mesh.clone().ok_or_else(|| OdecoError::Config("no input mesh given".into()))?;
        let mut cfg = RunConfig::new(mesh);
        cfg.format = self.format;
        cfg.features = self.features.clone();
        if let Some(m) = self.mode {
            cfg.mode = m;
            cfg.weights = m.weights();
        }
        if let Some(k) = self.kappa_odeco {
            cfg.weights.kappa_odeco = k;
        }
        if let Some(k) = self.kappa_area {
            cfg.weights.kappa_area = k;
        }
        if let Some(k) = self.kappa_angle {
            cfg.weights.kappa_angle = k;
        }
        if let Some(a) = self.a0 {
            cfg.weights.a0 = a;
        }
        cfg.weights.validate().map_err(|e| OdecoError::Config(format!("weights: {e}")))?;
        if let Some(d) = self.dihedral_deg {
            if !(d > 0.0 && d < 180.0) {
                return Err(OdecoError::Config(format!("dihedral threshold {d} outside (0, 180)")));
            }
            cfg.dihedral_deg = d;
        }
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        cfg.threads = self.threads.unwrap_or(cfg.threads);
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.verbosity = self.verbosity.unwrap_or(cfg.verbosity);
        cfg.max_iterations_init = self.max_iterations_init.unwrap_or(cfg.max_iterations_init);
        cfg.max_iterations = self.max_iterations.unwrap_or(cfg.max_iterations);
        Ok(cfg)
    }
}

fn value<T: FromStr>(path: &Path, line: usize, key: &str, v: &str) -> Result<T, OdecoError> {
    v.parse().map_err(|_| OdecoError::Parse { path: path.to_path_buf(), line, message: format!("invalid value `{v}` for `{key}`") })
}

/// Parses `key = value` lines; `#` starts a comment. Relative paths are
/// resolved against the config file's directory.
pub fn parse_config_file(text: &str, path: &Path) -> Result<Overrides, OdecoError> {
    let base = path.parent().unwrap_or(Path::new(""));
    let rel = |v: &str| base.join(v);
    let mut o = Overrides::default();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, v) = line.split_once('=').ok_or_else(|| OdecoError::Parse {
            path: path.to_path_buf(),
            line: ln,
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim().replace('-', "_");
        let (key, v) = (key.as_str(), v.trim().trim_matches('"'));
        let parse_err = |message: String| OdecoError::Parse { path: path.to_path_buf(), line: ln, message };
        match key {
            "mesh" => o.mesh = Some(rel(v)),
            "format" => o.format = Some(v.parse().map_err(parse_err)?),
            "features" => o.features = Some(rel(v)),
            "mode" => o.mode = Some(v.parse().map_err(parse_err)?),
            "kappa_odeco" => o.kappa_odeco = Some(value(path, ln, key, v)?),
            "kappa_area" => o.kappa_area = Some(value(path, ln, key, v)?),
            "kappa_angle" => o.kappa_angle = Some(value(path, ln, key, v)?),
            "a0" => o.a0 = Some(value(path, ln, key, v)?),
            "dihedral" => o.dihedral_deg = Some(value(path, ln, key, v)?),
            "seed" => o.seed = Some(value(path, ln, key, v)?),
            "threads" => o.threads = Some(value(path, ln, key, v)?),
            "out" => o.out = Some(rel(v)),
            "verbosity" => o.verbosity = Some(value(path, ln, key, v)?),
            "max_iterations_init" => o.max_iterations_init = Some(value(path, ln, key, v)?),
            "max_iterations" => o.max_iterations = Some(value(path, ln, key, v)?),
            other => return Err(parse_err(format!("unknown key `{other}`"))),
        }
    }
    Ok(o)
}
