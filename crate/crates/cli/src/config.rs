//! Optional TOML or JSON run configuration. Command-line flags override the
//! file, which overrides built-in defaults.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use swmparc::synthdata::GenConfig;
use swmparc::train::TrainConfig;
use swmparc::ArchDescriptor;

use crate::Failure;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    /// Applies to both data generation and training unless a section sets
    /// its own seed.
    pub seed: Option<u64>,
    pub gen: Option<GenConfig>,
    pub train: Option<TrainConfig>,
    pub arch: ArchSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchSection {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub encoder_dims: Option<Vec<usize>>,
    pub classifier_hidden: Option<Vec<usize>>,
    pub projector_dims: Option<Vec<usize>>,
}

impl ArchSection {
    /// Defaults overlaid with this section, then with the flag values.
    pub fn resolve(&self, n: Option<usize>, k: Option<usize>, fallback_k: usize) -> ArchDescriptor {
        let d = ArchDescriptor::default();
        ArchDescriptor {
            n: n.or(self.n).unwrap_or(d.n),
            k: k.or(self.k).unwrap_or(fallback_k),
            encoder_dims: self.encoder_dims.clone().unwrap_or(d.encoder_dims),
            classifier_hidden: self.classifier_hidden.clone().unwrap_or(d.classifier_hidden),
            projector_dims: self.projector_dims.clone().unwrap_or(d.projector_dims),
            with_tnets: false,
        }
    }
}

#[derive(Debug, Deserialize)]
struct SectionSeed {
    seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            serde_json::from_str::<serde_json::Value>(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str::<serde_json::Value>(&text).map_err(|e| e.to_string())
        }
        .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))?;
        let mut cfg: FileConfig = serde_json::from_value(parsed.clone())
            .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))?;
        // a top-level seed fills in sections that do not name one
        if let Some(seed) = cfg.seed {
            let has_seed = |section: &str| {
                parsed
                    .get(section)
                    .and_then(|v| serde_json::from_value::<SectionSeed>(v.clone()).ok())
                    .is_some_and(|s| s.seed.is_some())
            };
            if !has_seed("gen") {
                cfg.gen.get_or_insert_with(GenConfig::default).seed = seed;
            }
            if !has_seed("train") {
                cfg.train.get_or_insert_with(TrainConfig::default).seed = seed;
            }
        }
        Ok(cfg)
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self, Failure> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}
