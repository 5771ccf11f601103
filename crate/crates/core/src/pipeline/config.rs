use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::SplitSpec;
use crate::ingest::{SubsetRule, SynthConfig};
use crate::models::{LearnerConfig, RfConfig};
use crate::spatial_index::DEFAULT_RADIUS_M;

/// Environment variable naming the directory relative output paths resolve against.
pub const OUTPUT_ROOT_ENV: &str = "GEOLAG_OUTPUT_ROOT";

pub const DEFAULT_OUTPUT_DIR: &str = "geolag-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileInputs {
    pub parcels: PathBuf,
    pub sales: PathBuf,
    #[serde(default)]
    pub aliases: Option<PathBuf>,
    /// Column mapping sidecar shared by the parcel and sale readers.
    #[serde(default)]
    pub mapping: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InputConfig {
    Synth(SynthConfig),
    Files(FileInputs),
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig::Synth(SynthConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Stage1Config {
    pub enabled: bool,
    /// Forest settings for stage 1; the `learners` forest when absent.
    pub random_forest: Option<RfConfig>,
}

impl Default for Stage1Config {
    fn default() -> Self {
        Stage1Config {
            enabled: true,
            random_forest: None,
        }
    }
}

/// The single JSON document that drives every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub radius_m: f64,
    /// Grid cell side; the radius when absent.
    pub cell_size_m: Option<f64>,
    /// Out-of-time split; the trailing two years are held out when absent.
    pub split: Option<SplitSpec>,
    pub learners: LearnerConfig,
    pub stage1: Stage1Config,
    pub stage2: SubsetRule,
    /// Not part of the config hash.
    pub output_dir: Option<PathBuf>,
    pub seed: u64,
    /// Variable importance on the validation year for every fitted cell.
    pub importance: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: InputConfig::default(),
            radius_m: DEFAULT_RADIUS_M,
            cell_size_m: None,
            split: None,
            learners: LearnerConfig::default(),
            stage1: Stage1Config::default(),
            stage2: SubsetRule::default(),
            output_dir: None,
            seed: 0,
            importance: true,
        }
    }
}

impl PipelineConfig {
    /// Parses and validates. Schema errors name the offending field path.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: PipelineConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let field = if path == "." { "<root>".to_string() } else { path };
            Error::config(field, e.into_inner().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m.is_finite() && self.radius_m > 0.0) {
            return Err(Error::config("radius_m", "must be a positive number of meters"));
        }
        if let Some(c) = self.cell_size_m {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::config("cell_size_m", "must be a positive number of meters"));
            }
        }
        if let Some(split) = &self.split {
            split.validate()?;
        }
        self.learners.validate()?;
        if let Some(rf) = &self.stage1.random_forest {
            rf.validate()?;
        }
        if self.stage2.categories.is_empty() {
            return Err(Error::config("stage2.categories", "must name at least one category"));
        }
        self.stage2.borough_code_set()?;
        match &self.input {
            InputConfig::Synth(s) => s.validate()?,
            InputConfig::Files(f) => {
                if f.parcels.as_os_str().is_empty() || f.sales.as_os_str().is_empty() {
                    return Err(Error::config("input.files", "parcels and sales paths are required"));
                }
            }
        }
        Ok(())
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size_m.unwrap_or(self.radius_m)
    }

    /// SHA-256 of the canonical JSON form, with the output location left out
    /// so identical runs in different directories share a hash.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The stage-1 learner settings: `learners` with the forest override.
    pub fn stage1_learners(&self) -> LearnerConfig {
        let mut l = self.learners.clone();
        if let Some(rf) = &self.stage1.random_forest {
            l.random_forest = rf.clone();
        }
        l
    }

    /// `override_dir`, else `output_dir`, else [`DEFAULT_OUTPUT_DIR`]; a
    /// relative result is placed under `root` when one is given.
    pub fn resolve_output_dir(&self, override_dir: Option<&Path>, root: Option<&Path>) -> PathBuf {
        let dir = override_dir
            .map(Path::to_path_buf)
            .or_else(|| self.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
        match root {
            Some(r) if dir.is_relative() => r.join(dir),
            _ => dir,
        }
    }
}
