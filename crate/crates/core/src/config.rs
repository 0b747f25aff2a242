//! Declarative pipeline configuration (TOML).
//!
//! Every field has a default, so an empty file reproduces the reference
//! protocol: −20 dBFS normalization, log-MMSE enhancement, the v1 feature
//! manifest, 10% mRMR selection, the standard grids, a 150-epoch network and
//! 5-fold subject-independent CV.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio::{ConditioningOrder, EnhancementConfig};
use crate::error::{CoreError, Result};
use crate::evaluation::{CvConfig, FeatureSource, Task};
use crate::features::{FeatureConfig, FeatureManifest};
use crate::models::ModelFamily;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub metadata: PathBuf,
    pub audio_dir: PathBuf,
    /// Directory of per-sample deep feature matrices (`<sample_id>.csv`).
    pub deep_dir: Option<PathBuf>,
    pub feature_source: FeatureSource,
    /// Restrict runs to these tasks; empty keeps every task.
    pub tasks: Vec<Task>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            metadata: PathBuf::from("corpus/metadata.csv"),
            audio_dir: PathBuf::from("corpus/audio"),
            deep_dir: Some(PathBuf::from("corpus/deep")),
            feature_source: FeatureSource::Conventional,
            tasks: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioConfig {
    pub target_dbfs: f64,
    pub enhance: bool,
    pub order: ConditioningOrder,
    pub enhancement: EnhancementConfig,
}

impl Default for AudioConfig {
    fn default() -> Self {
        AudioConfig {
            target_dbfs: -20.0,
            enhance: true,
            order: ConditioningOrder::NormalizeFirst,
            enhancement: EnhancementConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    /// `"conventional-v1"` for the bundled manifest, or a path to a manifest file.
    pub manifest: String,
    pub extraction: FeatureConfig,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        FeaturesConfig {
            manifest: "conventional-v1".into(),
            extraction: FeatureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub warmup_runs: usize,
    pub timed_runs: usize,
    pub families: Vec<ModelFamily>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            warmup_runs: 1,
            timed_runs: 3,
            families: ModelFamily::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub audio: AudioConfig,
    pub features: FeaturesConfig,
    pub evaluation: CvConfig,
    pub benchmark: BenchmarkConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            output_dir: PathBuf::from("out"),
            data: DataConfig::default(),
            audio: AudioConfig::default(),
            features: FeaturesConfig::default(),
            evaluation: CvConfig::default(),
            benchmark: BenchmarkConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CoreError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CoreError::Config(e.to_string()))
    }

    /// Load a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::io::read_to_string(path)?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.data.metadata);
        fix(&mut self.data.audio_dir);
        if let Some(d) = self.data.deep_dir.as_mut() {
            fix(d);
        }
        if !self.features.manifest.is_empty() && self.features.manifest != "conventional-v1" {
            let mut m = PathBuf::from(&self.features.manifest);
            fix(&mut m);
            self.features.manifest = m.to_string_lossy().into_owned();
        }
    }

    /// Point every data path at a corpus written by the synthesizer.
    pub fn with_corpus(mut self, root: &Path) -> Self {
        self.data.metadata = root.join("metadata.csv");
        self.data.audio_dir = root.join("audio");
        self.data.deep_dir = Some(root.join("deep"));
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.audio.enhancement.validate()?;
        self.evaluation.validate()?;
        if self.benchmark.timed_runs == 0 {
            return Err(CoreError::Config("benchmark.timed_runs must be at least 1".into()));
        }
        if self.benchmark.families.is_empty() {
            return Err(CoreError::Config("benchmark.families is empty".into()));
        }
        Ok(())
    }

    /// Checks that the inputs a command needs exist.
    pub fn validate_paths(&self, need_audio: bool, need_deep: bool) -> Result<()> {
        let missing = |p: &Path| CoreError::Config(format!("path does not exist: {}", p.display()));
        if !self.data.metadata.is_file() {
            return Err(missing(&self.data.metadata));
        }
        if need_audio && !self.data.audio_dir.is_dir() {
            return Err(missing(&self.data.audio_dir));
        }
        if need_deep {
            match &self.data.deep_dir {
                Some(d) if d.is_dir() => {}
                Some(d) => return Err(missing(d)),
                None => return Err(CoreError::Config("data.deep_dir is not set".into())),
            }
        }
        Ok(())
    }

    pub fn manifest(&self) -> Result<FeatureManifest> {
        if self.features.manifest == "conventional-v1" || self.features.manifest.is_empty() {
            Ok(FeatureManifest::v1())
        } else {
            FeatureManifest::load(Path::new(&self.features.manifest))
        }
    }

    /// SHA-256 of the effective configuration, ignoring where outputs go.
    pub fn hash(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let digest = Sha256::digest(c.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
