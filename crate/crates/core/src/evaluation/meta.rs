use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
    Other,
}

impl Gender {
    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Other => "other",
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Gender {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Gender::Male,
            "female" | "f" => Gender::Female,
            _ => Gender::Other,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Phoneme,
    PhonemicFluency,
    PictureDescription,
    SemanticFluency,
    PromptedNarrative,
}

impl Task {
    pub const ALL: [Task; 5] = [
        Task::Phoneme,
        Task::PhonemicFluency,
        Task::PictureDescription,
        Task::SemanticFluency,
        Task::PromptedNarrative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Phoneme => "phoneme",
            Task::PhonemicFluency => "phonemic_fluency",
            Task::PictureDescription => "picture_description",
            Task::SemanticFluency => "semantic_fluency",
            Task::PromptedNarrative => "prompted_narrative",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Task::Phoneme => "Phoneme task",
            Task::PhonemicFluency => "Phonemic fluency",
            Task::PictureDescription => "Picture description",
            Task::SemanticFluency => "Semantic fluency",
            Task::PromptedNarrative => "Prompted narrative",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s.trim())
            .ok_or_else(|| CoreError::Data(format!("unknown task {s:?}")))
    }
}

/// One recording's metadata row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub sample_id: String,
    pub subject_id: String,
    pub gender: Gender,
    pub task: Task,
    pub phq8: u8,
    pub duration_s: f64,
}

pub const METADATA_HEADER: [&str; 6] = ["sample_id", "subject_id", "gender", "task", "phq8", "duration_s"];

pub fn parse_metadata(text: &str) -> Result<Vec<SampleMeta>> {
    let mut r = csv::Reader::from_reader(text.trim_start_matches('\u{feff}').as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != METADATA_HEADER {
        return Err(CoreError::Format(format!(
            "metadata header must be {}, got {}",
            METADATA_HEADER.join(","),
            header.join(",")
        )));
    }
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |what: &str| CoreError::Format(format!("metadata line {line}: {what}"));
        let sample_id = rec[0].trim().to_string();
        let subject_id = rec[1].trim().to_string();
        if sample_id.is_empty() || subject_id.is_empty() {
            return Err(bad("empty sample or subject id"));
        }
        if !seen.insert(sample_id.clone()) {
            return Err(bad("duplicate sample id"));
        }
        let phq8: u8 = rec[4].trim().parse().map_err(|_| bad("phq8 is not an integer"))?;
        if phq8 > 24 {
            return Err(bad("phq8 outside 0..=24"));
        }
        let duration_s: f64 = rec[5].trim().parse().map_err(|_| bad("bad duration"))?;
        out.push(SampleMeta {
            sample_id,
            subject_id,
            gender: rec[2].parse()?,
            task: rec[3].parse().map_err(|_| bad("unknown task"))?,
            phq8,
            duration_s,
        });
    }
    if out.is_empty() {
        return Err(CoreError::EmptyInput("metadata has no rows".into()));
    }
    Ok(out)
}

pub fn load_metadata(path: &Path) -> Result<Vec<SampleMeta>> {
    parse_metadata(&crate::io::read_to_string(path)?)
}

pub fn metadata_csv(rows: &[SampleMeta]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METADATA_HEADER)?;
    for m in rows {
        w.write_record([
            m.sample_id.clone(),
            m.subject_id.clone(),
            m.gender.to_string(),
            m.task.to_string(),
            m.phq8.to_string(),
            m.duration_s.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| CoreError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CoreError::Format(e.to_string()))
}
