//! TOML run configuration and artifact provenance.

use std::path::Path;

use anyhow::{Context, Result};
use msm_core::design::DesignSpec;
use msm_core::fit::{BundleOptions, FitConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Version stamped into every artifact this crate writes.
pub const FORMAT_VERSION: u32 = 1;

/// Column kind overrides for panel CSVs without a `# columns` directive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PanelSection {
    pub numeric: Vec<String>,
    pub time_varying: Vec<String>,
    pub categorical: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub n: usize,
    pub horizon: u32,
    pub sigma: f64,
    pub curve_seed: u64,
    pub include_interaction: bool,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            n: 10_000,
            horizon: msm_core::sim::DEFAULT_HORIZON,
            sigma: msm_core::sim::DEFAULT_RW_SIGMA,
            curve_seed: msm_core::sim::DEFAULT_CURVE_SEED,
            include_interaction: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSection {
    /// `(t1, t2)` pairs.
    pub spans: Vec<(u32, u32)>,
    pub bins: usize,
}

impl Default for EvaluateSection {
    fn default() -> Self {
        Self { spans: Vec::new(), bins: 10 }
    }
}

/// Everything a run can take from `--config`; command-line flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub design: Option<DesignSpec>,
    pub fit: Option<FitConfig>,
    pub bundle: BundleOptions,
    pub panel: PanelSection,
    pub simulate: SimulateSection,
    pub evaluate: EvaluateSection,
    /// Candidate configurations for `grid-search`.
    pub grid: Vec<FitConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Provenance written at the top of every artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub format_version: u32,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
}

impl ArtifactMeta {
    /// `settings` is the effective configuration of the command after flag
    /// overrides; its canonical JSON form is hashed.
    pub fn new(command: &str, seed: u64, settings: &impl Serialize) -> Result<Self> {
        let canonical = serde_json::to_value(settings)?.to_string();
        Ok(Self {
            format_version: FORMAT_VERSION,
            command: command.to_string(),
            seed,
            config_sha256: hex::encode(Sha256::digest(canonical.as_bytes())),
        })
    }

    pub fn header_line(&self) -> String {
        format!(
            "# msm format_version={} command={} seed={} config_sha256={}",
            self.format_version, self.command, self.seed, self.config_sha256
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("sed = 3").is_err());
        assert!(toml::from_str::<RunConfig>("[fit]\nbatchsize = 3").is_err());
        let cfg: RunConfig =
            toml::from_str("seed = 3\n[fit]\nbatch_size = 64\n[design]\nlinear_terms = [\"x1\"]").unwrap();
        assert_eq!(cfg.seed, Some(3));
        assert_eq!(cfg.fit.unwrap().batch_size, 64);
        assert_eq!(cfg.design.unwrap().linear_terms, vec!["x1".to_string()]);
    }

    #[test]
    fn hash_tracks_settings() {
        let a = ArtifactMeta::new("fit", 1, &FitConfig::default()).unwrap();
        let b = ArtifactMeta::new("fit", 1, &FitConfig::default()).unwrap();
        let c = ArtifactMeta::new("fit", 1, &FitConfig { batch_size: 3, ..FitConfig::default() }).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.config_sha256, c.config_sha256);
        assert_eq!(a.config_sha256.len(), 64);
        assert!(a.header_line().starts_with("# msm format_version=1 command=fit seed=1 "));
    }
}
