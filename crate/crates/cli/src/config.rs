use std::path::{Path, PathBuf};

use driftplan::dynamics::VehicleConfig;
use driftplan::esm::EsmBuildConfig;
use driftplan::planner::PlannerConfig;
use driftplan::sim::SimConfig;
use driftplan::track::Track;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// File locations. Relative paths in a config file resolve against the
/// file's own directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub vehicle: Option<PathBuf>,
    /// Track file, or `builtin:<name>`.
    pub track: Option<String>,
    pub manifold: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

/// Everything a subcommand needs, as one JSON document.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub planner: PlannerConfig,
    pub sim: SimConfig,
    pub esm: EsmBuildConfig,
    /// Recorded in outputs; every computation in the pipeline is deterministic.
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read(path)?;
        let mut cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(q) = p.as_mut() {
                if q.is_relative() {
                    *q = base.join(&*q);
                }
            }
        };
        rebase(&mut cfg.paths.vehicle);
        rebase(&mut cfg.paths.manifold);
        rebase(&mut cfg.paths.output_dir);
        if let Some(t) = cfg.paths.track.as_mut() {
            if !t.starts_with("builtin:") && Path::new(t.as_str()).is_relative() {
                *t = base.join(t.as_str()).to_string_lossy().into_owned();
            }
        }
        Ok(cfg)
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn load_vehicle(path: Option<&Path>) -> Result<VehicleConfig, CliError> {
    match path {
        Some(p) => Ok(VehicleConfig::from_json(&read(p)?)?),
        None => Ok(VehicleConfig::default()),
    }
}

/// `builtin:<name>`, a JSON track file, or a two-column CSV (`x,y`).
pub fn load_track(spec: Option<&str>, csv_width: f64, csv_closed: bool) -> Result<Track, CliError> {
    let spec = spec.unwrap_or("builtin:test-track");
    if let Some(name) = spec.strip_prefix("builtin:") {
        return Ok(Track::builtin(name)?);
    }
    let path = Path::new(spec);
    let text = read(path)?;
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    Ok(if is_csv { Track::from_csv(&text, csv_width, csv_closed)? } else { Track::from_json(&text)? })
}
