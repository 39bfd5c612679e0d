//! Pipeline configuration, loaded from TOML.
//!
//! ```toml
//! thresholds = [0.3, 0.5, 0.7]
//!
//! [scoring]
//! delta = 0.0005
//! gaussian_sigma = 2.0
//! topk = 3
//!
//! [planner]   # omit to run without a language model
//! endpoint_url = "https://api.openai.com/v1/chat/completions"
//! model_name = "gpt-4o-mini"
//! api_key_env_var = "OPENAI_API_KEY"
//! ```
//!
//! Similarity tracks are expected at roughly 3 frames per second; the scoring
//! defaults (`delta`, `gaussian_sigma`) are tuned for that rate.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::DEFAULT_THRESHOLDS;
use crate::planner::PlannerConfig;
use crate::scoring::ScoringParams;

/// Frame rate the scoring defaults assume.
pub const EXPECTED_FPS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub annotations: Option<PathBuf>,
    pub tracks_dir: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub scoring: ScoringParams,
    /// `None` disables the language model; every query becomes a single event.
    pub planner: Option<PlannerConfig>,
    pub thresholds: Vec<f64>,
    pub paths: PathsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            scoring: ScoringParams::default(),
            planner: None,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            paths: PathsConfig::default(),
        }
    }
}

/// Sorts and deduplicates thresholds, rejecting any outside `(0, 1)`.
pub fn normalize_thresholds(thresholds: &[f64]) -> Result<Vec<f64>> {
    if thresholds.is_empty() {
        return Err(Error::invalid("at least one IoU threshold is required"));
    }
    if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::invalid(format!("IoU threshold {t} is outside (0, 1)")));
    }
    let mut out = thresholds.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        cfg.normalized()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: PipelineConfig = toml::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        cfg.normalized()
    }

    /// Validates every section and normalizes the thresholds.
    pub fn normalized(mut self) -> Result<Self> {
        self.scoring.validate()?;
        if let Some(p) = &self.planner {
            p.validate()?;
        }
        self.thresholds = normalize_thresholds(&self.thresholds)?;
        Ok(self)
    }
}
