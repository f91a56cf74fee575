use std::fs;
use std::path::{Path, PathBuf};

use histomil::mil::{ModelConfig, TrainConfig};
use histomil::{Error, Result};
use serde::{Deserialize, Serialize};

pub const CONFIG_ENV_VAR: &str = "HISTOMIL_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TilingConfig {
    #[serde(default = "default_tile_size")]
    pub tile_size: usize,
    #[serde(default = "default_min_tissue")]
    pub min_tissue: f64,
}

fn default_tile_size() -> usize {
    histomil::slide::DEFAULT_TILE_SIZE
}
fn default_min_tissue() -> f64 {
    histomil::slide::DEFAULT_MIN_TISSUE
}

impl Default for TilingConfig {
    fn default() -> Self {
        TilingConfig {
            tile_size: default_tile_size(),
            min_tissue: default_min_tissue(),
        }
    }
}

/// The single JSON document driving a pipeline run. Unknown keys are
/// rejected; command-line flags override individual fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub tiling: TilingConfig,
}

impl PipelineConfig {
    /// Explicit path, else `$HISTOMIL_CONFIG`, else built-in defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self> {
        let path = explicit
            .map(PathBuf::from)
            .or_else(|| std::env::var(CONFIG_ENV_VAR).ok().map(PathBuf::from));
        match path {
            Some(p) => {
                let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))
            }
            None => Ok(PipelineConfig::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if self.tiling.tile_size == 0 {
            return Err(Error::Config("tiling.tile_size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.tiling.min_tissue) {
            return Err(Error::Config(format!(
                "tiling.min_tissue {} not in [0,1]",
                self.tiling.min_tissue
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    inputs: Vec<String>,
    config_hash: String,
    seed: u64,
    version: &'a str,
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Echo the resolved config and a run manifest into the output directory so
/// every run is reproducible from its artifacts alone.
pub fn echo_run(
    out_dir: &Path,
    command: &str,
    inputs: &[&Path],
    config: &PipelineConfig,
) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let config_json = config.to_json();
    let config_path = out_dir.join("config.resolved.json");
    fs::write(&config_path, &config_json).map_err(|e| Error::io(&config_path, e))?;

    let manifest = RunManifest {
        command,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        config_hash: format!("{:016x}", fnv1a64(config_json.as_bytes())),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION"),
    };
    let run_path = out_dir.join("run.json");
    fs::write(
        &run_path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
    .map_err(|e| Error::io(&run_path, e))
}
