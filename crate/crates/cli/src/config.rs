use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use gcpc::harness::{ControllerMode, ScenarioConfig, DEFAULT_TOL};
use serde::{Deserialize, Serialize};

/// Bisection bracket for one controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub mode: ControllerMode,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub tol: f64,
    /// Evenly spaced reactances classified in addition to the bisection, endpoints included.
    pub grid_points: usize,
    pub ranges: Vec<SweepRange>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            grid_points: 0,
            ranges: vec![
                SweepRange {
                    mode: ControllerMode::Cc,
                    lower: 0.05,
                    upper: 0.30,
                },
                SweepRange {
                    mode: ControllerMode::RegularIspc,
                    lower: 0.18,
                    upper: 0.50,
                },
            ],
        }
    }
}

/// Contents of a configuration file. Every section is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: ScenarioConfig,
    pub sweep: SweepConfig,
    /// Identification artifact used by regular iSPC instead of identifying anew,
    /// relative to the configuration file.
    pub artifact: Option<PathBuf>,
}

/// A parsed configuration together with the bytes it came from.
pub struct LoadedConfig {
    pub path: Option<PathBuf>,
    pub sha256: String,
    pub file: ConfigFile,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    format!("{:x}", Sha256::digest(bytes))
}

/// Parses TOML, reporting the dotted path of the offending field.
pub fn parse(text: &str) -> Result<ConfigFile> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().to_string();
        let field = match msg.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
            Some(name) if path == "." => name.to_string(),
            Some(name) => format!("{path}.{name}"),
            None => path,
        };
        anyhow!("invalid configuration at `{field}`: {msg}")
    })
}

pub fn load(path: Option<&Path>) -> Result<LoadedConfig> {
    let Some(path) = path else {
        return Ok(LoadedConfig {
            path: None,
            sha256: sha256_hex(b""),
            file: ConfigFile::default(),
        });
    };
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    let mut file = parse(text).with_context(|| format!("in {}", path.display()))?;
    if let (Some(artifact), Some(dir)) = (&file.artifact, path.parent()) {
        if artifact.is_relative() {
            file.artifact = Some(dir.join(artifact));
        }
    }
    Ok(LoadedConfig {
        path: Some(path.to_path_buf()),
        sha256: sha256_hex(&bytes),
        file,
    })
}
