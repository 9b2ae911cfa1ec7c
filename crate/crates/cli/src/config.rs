use std::path::Path;

use ruinsim_core::experiment::{ExperimentConfig, UGridSpec};
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliError, CliResult};
use crate::manifest::RunManifest;

/// Command-line overrides; seed and workers also come from the environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub paths: Option<u64>,
    pub u_grid: Option<String>,
}

/// Reads a TOML config, or the config embedded in a run manifest (JSON).
pub fn load(path: &Path, overrides: &Overrides) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut config = parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    apply(&mut config, overrides)?;
    config.validate()?;
    Ok(config)
}

pub fn parse(text: &str) -> Result<ExperimentConfig, String> {
    if text.trim_start().starts_with('{') {
        let manifest: RunManifest = serde_json::from_str(text).map_err(|e| format!("manifest: {e}"))?;
        return Ok(manifest.config);
    }
    toml::from_str(text).map_err(|e| e.to_string())
}

pub fn apply(config: &mut ExperimentConfig, o: &Overrides) -> CliResult<()> {
    if let Some(seed) = o.seed {
        config.run.seed = seed;
    }
    if let Some(workers) = o.workers {
        config.run.workers = workers;
    }
    if let Some(paths) = o.paths {
        config.run.n_paths = paths;
    }
    if let Some(spec) = &o.u_grid {
        UGridSpec::parse(spec)?;
        config.run.u_grid = Some(spec.clone());
    }
    Ok(())
}

/// SHA-256 of the canonical JSON form with the worker count cleared: the
/// worker count never changes numerical output.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut canonical = config.clone();
    canonical.run.workers = 0;
    let json = serde_json::to_string(&canonical).expect("config serialises");
    Sha256::digest(json.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
