//! Run manifests: the resolved configuration, tool version and numerical
//! constants in effect, hashed so every output file can name its run.

use std::path::Path;
use std::time::Duration;

use hk_core::torus::{NULL_SINGULAR_THRESHOLD, PROJECTION_TOL, DBAR_SCALE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::CliError;

/// Constants baked into the numerics, recorded so a replay can detect drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub dbar_scale: f64,
    pub projection_tolerance: f64,
    pub null_singular_threshold: f64,
    pub discretization: String,
    pub higgs_normalization: String,
    pub gauge: String,
}

impl Constants {
    pub fn current() -> Self {
        Constants {
            dbar_scale: DBAR_SCALE,
            projection_tolerance: PROJECTION_TOL,
            null_singular_threshold: NULL_SINGULAR_THRESHOLD,
            discretization: "forward-difference dbar with Peierls links; five-point curvature Laplacian".into(),
            higgs_normalization: "seed normalized to unit L2; wedge-product factorials absorbed into phi".into(),
            gauge: "integral of u1 + u2 fixed at zero".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Config,
    pub tool_version: String,
    pub constants: Constants,
    /// SHA-256 over the fields above, hex encoded.
    pub hash: String,
    pub elapsed_seconds: f64,
}

#[derive(Serialize)]
struct Hashed<'a> {
    command: &'a str,
    config: &'a Config,
    tool_version: &'a str,
    constants: &'a Constants,
}

impl RunManifest {
    pub fn new(command: &str, config: &Config) -> Self {
        let tool_version = env!("CARGO_PKG_VERSION").to_string();
        let constants = Constants::current();
        let body = serde_json::to_vec(&Hashed { command, config, tool_version: &tool_version, constants: &constants })
            .expect("manifest serializes");
        let hash = hex::encode(Sha256::digest(&body));
        RunManifest { command: command.into(), config: config.clone(), tool_version, constants, hash, elapsed_seconds: 0.0 }
    }

    pub fn finish(&mut self, elapsed: Duration) {
        self.elapsed_seconds = elapsed.as_secs_f64();
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Manifest(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| CliError::Io(path.display().to_string(), e))
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        let m: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::Manifest(e.to_string()))?;
        let fresh = RunManifest::new(&m.command, &m.config);
        if fresh.constants != m.constants {
            return Err(CliError::Manifest("numerical constants differ from this build".into()));
        }
        if fresh.hash != m.hash {
            return Err(CliError::Manifest(format!("hash mismatch: recorded {}, recomputed {}", m.hash, fresh.hash)));
        }
        Ok(m)
    }

    /// First line of every output file.
    pub fn header(&self) -> String {
        format!("# manifest {}", self.hash)
    }
}
