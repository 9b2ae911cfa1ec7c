use std::path::Path;

use ruinsim_core::experiment::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, CliResult};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Tallies {
    pub cycles: u64,
    pub perpetuities: u64,
    pub saturated_cycles: u64,
    pub flagged_perpetuities: u64,
    pub direct_paths: u64,
    /// Largest per-threshold count of paths stopped by the weight floor.
    pub censored: u64,
    /// Largest per-threshold count of paths stopped by `n_max`.
    pub horizon_censored: u64,
    /// Largest unexplained crossing mass relative to the direct estimate.
    pub relative_unexplained_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub version: String,
    pub wall_time_s: f64,
    pub tallies: Tallies,
    pub outputs: Vec<String>,
    pub config: ExperimentConfig,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serialises") + "\n";
        std::fs::write(&path, text).map_err(io_err(&path))
    }
}
