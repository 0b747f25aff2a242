use std::collections::HashSet;
use std::path::Path;

use super::functionals::FunctionalSet;
use crate::error::{CoreError, Result};

/// The shipped v1 manifest file.
pub const MANIFEST_V1_TEXT: &str = include_str!("../../manifests/conventional_v1.txt");

/// Ordered, versioned list of feature names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureManifest {
    pub version: String,
    pub entries: Vec<String>,
}

impl FeatureManifest {
    /// The canonical 158-entry conventional set.
    pub fn v1() -> Self {
        let mut entries = Vec::with_capacity(158);
        let push = |entries: &mut Vec<String>, prefix: &str, set: FunctionalSet| {
            for f in set.names() {
                entries.push(format!("{prefix}_{f}"));
            }
        };
        for i in 0..13 {
            push(&mut entries, &format!("mfcc{i}"), FunctionalSet::Full6);
        }
        for i in 0..13 {
            push(&mut entries, &format!("mfcc{i}_d1"), FunctionalSet::Shape2);
        }
        for i in 0..13 {
            push(&mut entries, &format!("mfcc{i}_d2"), FunctionalSet::Shape2);
        }
        push(&mut entries, "zcr", FunctionalSet::Full6);
        push(&mut entries, "intensity", FunctionalSet::Basic4);
        push(&mut entries, "F0", FunctionalSet::Basic4);
        push(&mut entries, "HNR", FunctionalSet::Basic4);
        entries.extend(
            [
                "jitter_local",
                "jitter_abs",
                "shimmer_local",
                "total_dur",
                "speech_dur",
                "pause_count",
                "mean_pause",
                "pause_rate",
                "phonation_rate",
                "voiced_fraction",
            ]
            .map(String::from),
        );
        FeatureManifest {
            version: "conventional-v1".into(),
            entries,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parse manifest text: `# version: <v>` header, `#` comments, one entry per line.
    /// Every entry must be a name the extractor knows how to compute.
    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut entries = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("version:") {
                    version = Some(v.trim().to_string());
                }
                continue;
            }
            if !line.is_empty() {
                entries.push(line.to_string());
            }
        }
        let version = version.ok_or_else(|| CoreError::Format("manifest lacks a '# version:' line".into()))?;
        let known: HashSet<String> = FeatureManifest::v1().entries.into_iter().collect();
        let mut seen = HashSet::new();
        for e in &entries {
            if !known.contains(e) {
                return Err(CoreError::Format(format!("unknown manifest entry {e:?}")));
            }
            if !seen.insert(e) {
                return Err(CoreError::Format(format!("duplicate manifest entry {e:?}")));
            }
        }
        if entries.is_empty() {
            return Err(CoreError::EmptyInput("manifest has no entries".into()));
        }
        Ok(FeatureManifest { version, entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        FeatureManifest::parse(&crate::io::read_to_string(path)?)
    }
}
