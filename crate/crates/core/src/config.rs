//! Run configuration, read from a single TOML or JSON file.
//!
//! ```toml
//! output_dir = "out"
//! jobs = 4
//!
//! [mclc]
//! max_runs = 100
//! binarize_threshold = 0.5
//!
//! [mclc.cluster]
//! n_clusters = 9
//! mu_c = 45.0
//!
//! [mclc.noise]
//! kind = "salt"
//! intensity = 0.05
//! seed = 0
//!
//! [crf]
//! window_radius = 32
//!
//! [metrics]
//! match_radius = 3.0
//! ```
//!
//! Omitting `[crf]` from a file disables refinement. The built-in default
//! used when no file is given refines with [`CrfParams::default`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::annotation::TargetCategory;
use crate::error::{Error, Result};
use crate::metrics::DEFAULT_MATCH_RADIUS;
use crate::monte_carlo::MclcParams;
use crate::refine::CrfParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Centroid distance in pixels within which a predicted component
    /// counts as detecting a ground-truth target.
    pub match_radius: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            match_radius: DEFAULT_MATCH_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mclc: MclcParams,
    /// Missing in a config file means no refinement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub crf: Option<CrfParams>,
    pub metrics: MetricsConfig,
    pub output_dir: PathBuf,
    /// Worker threads; 0 lets the thread pool decide.
    pub jobs: usize,
    /// Optional per-category cluster count. Speculative: categories are
    /// otherwise recorded but unused.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub category_clusters: BTreeMap<TargetCategory, usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mclc: MclcParams::default(),
            crf: Some(CrfParams::default()),
            metrics: MetricsConfig::default(),
            output_dir: PathBuf::from("mclc-out"),
            jobs: 0,
            category_clusters: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.mclc.validate()?;
        if let Some(crf) = &self.crf {
            crf.validate()?;
        }
        if !(self.metrics.match_radius >= 0.0) {
            return Err(Error::InvalidParams(
                "match_radius must be non-negative".into(),
            ));
        }
        if self.category_clusters.values().any(|&n| n == 0) {
            return Err(Error::InvalidParams(
                "category cluster counts must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Parses JSON when the extension is `.json`, TOML otherwise.
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = if is_json(path) {
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if is_json(path) {
            serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?
        };
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// MCLC parameters for one target, applying the category preset.
    pub fn params_for(&self, category: Option<TargetCategory>) -> MclcParams {
        let mut p = self.mclc.clone();
        if let Some(n) = category.and_then(|c| self.category_clusters.get(&c)) {
            p.cluster.n_clusters = *n;
        }
        p
    }
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}
