//! Run configuration: JSON document plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use viscotherm::model::{InitialData, InitialPreset};
use viscotherm::{make_preset_initial, validate_spec, BoundaryMode, Grid, ProblemSpec};

use crate::CmdError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeConfig {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
}

fn default_stride() -> usize {
    1
}

/// Initial state: a named preset (optionally seeded) or a JSON file holding
/// the raw grid functions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialConfig {
    Preset {
        preset: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    File {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: ProblemSpec,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub initial: InitialConfig,
    pub outputs: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CmdError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CmdError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CmdError::Config(format!("cannot parse config {}: {e}", path.display())))
    }

    /// Apply command-line overrides; the hash and all outputs reflect the
    /// effective configuration.
    pub fn apply_overrides(
        &mut self,
        n: Option<usize>,
        dt: Option<f64>,
        t_final: Option<f64>,
        seed: Option<u64>,
        out: Option<PathBuf>,
    ) {
        if let Some(n) = n {
            self.grid.n = n;
        }
        if let Some(dt) = dt {
            self.time.dt = dt;
        }
        if let Some(t) = t_final {
            self.time.t_final = t;
        }
        if let Some(seed) = seed {
            if let InitialConfig::Preset { seed: s, .. } = &mut self.initial {
                *s = Some(seed);
            }
        }
        if let Some(out) = out {
            self.outputs = out;
        }
    }

    /// Structural validation plus the physical hypotheses.
    pub fn validate(&self) -> Result<(), CmdError> {
        if self.grid.n < 4 {
            return Err(CmdError::Config(format!(
                "grid.n must be at least 4, got {}",
                self.grid.n
            )));
        }
        if !(self.time.dt > 0.0) {
            return Err(CmdError::Config(format!(
                "time.dt must be positive, got {}",
                self.time.dt
            )));
        }
        if !(self.time.t_final > 0.0) {
            return Err(CmdError::Config(format!(
                "time.t_final must be positive, got {}",
                self.time.t_final
            )));
        }
        let report = validate_spec(&self.spec, 2 * self.grid.n);
        if !report.is_valid() {
            return Err(CmdError::Config(format!(
                "problem hypotheses violated: {}",
                report.violations.join("; ")
            )));
        }
        if let InitialConfig::File { file } = &self.initial {
            if !file.exists() {
                return Err(CmdError::Config(format!(
                    "initial-data file {} does not exist",
                    file.display()
                )));
            }
        }
        Ok(())
    }

    /// Short content hash of the effective configuration.
    pub fn short_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().take(4).map(|b| format!("{b:02x}")).collect()
    }

    pub fn resolve_initial(&self, grid: &Grid, bc: BoundaryMode) -> Result<InitialData, CmdError> {
        match &self.initial {
            InitialConfig::Preset { preset, seed } => {
                let mut parsed: InitialPreset = preset
                    .parse()
                    .map_err(|e| CmdError::Config(format!("{e}")))?;
                if let (InitialPreset::RandomSmooth { seed: s }, Some(over)) = (&mut parsed, seed) {
                    *s = *over;
                }
                make_preset_initial(parsed, grid, bc).map_err(|e| CmdError::Config(format!("{e}")))
            }
            InitialConfig::File { file } => {
                let text = std::fs::read_to_string(file).map_err(|e| {
                    CmdError::Config(format!("cannot read {}: {e}", file.display()))
                })?;
                let raw: RawInitial = serde_json::from_str(&text).map_err(|e| {
                    CmdError::Config(format!("cannot parse {}: {e}", file.display()))
                })?;
                InitialData::new(bc, raw.u0, raw.w0, raw.theta0, raw.q0, grid)
                    .map_err(|e| CmdError::Config(format!("{e}")))
            }
        }
    }
}

#[derive(Deserialize)]
struct RawInitial {
    u0: Vec<f64>,
    w0: Vec<f64>,
    theta0: Vec<f64>,
    q0: Vec<f64>,
}
