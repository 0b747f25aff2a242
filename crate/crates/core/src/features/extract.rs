use std::collections::HashMap;

use super::functionals::{functionals, FunctionalSet};
use super::perturbation::jitter_shimmer;
use super::pitch::{f0_from_frames, hnr_from_frames, pitch_analysis};
use super::spectral::{delta_track, mfcc_track};
use super::temporal::{intensity_track, pause_features, zcr_track};
use super::{FeatureConfig, FeatureManifest, FeatureVector, FrameTrack};
use crate::audio::AudioClip;
use crate::error::{CoreError, Result};

/// A feature vector plus the names of entries that were undefined and imputed as 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub vector: FeatureVector,
    pub flags: Vec<String>,
}

fn add_functionals(out: &mut HashMap<String, Option<f64>>, prefix: &str, track: &FrameTrack, set: FunctionalSet) {
    let present: Vec<f64> = track.present().collect();
    for (name, v) in functionals(&present, set) {
        out.insert(format!("{prefix}_{name}"), v);
    }
}

/// Every known descriptor for `clip`, keyed by manifest entry name.
fn all_features(clip: &AudioClip, cfg: &FeatureConfig) -> Result<HashMap<String, Option<f64>>> {
    let mut out = HashMap::with_capacity(160);

    for track in mfcc_track(clip, cfg)? {
        add_functionals(&mut out, &track.name, &track, FunctionalSet::Full6);
        let d1 = delta_track(&track, 1, cfg.delta_window)?;
        add_functionals(&mut out, &d1.name, &d1, FunctionalSet::Shape2);
        let d2 = delta_track(&track, 2, cfg.delta_window)?;
        add_functionals(&mut out, &d2.name, &d2, FunctionalSet::Shape2);
    }
    add_functionals(&mut out, "zcr", &zcr_track(clip, cfg)?, FunctionalSet::Full6);
    add_functionals(
        &mut out,
        "intensity",
        &intensity_track(clip, cfg)?,
        FunctionalSet::Basic4,
    );

    let pitch = pitch_analysis(clip, cfg)?;
    let f0 = f0_from_frames(&pitch, cfg);
    add_functionals(&mut out, "F0", &f0, FunctionalSet::Basic4);
    add_functionals(&mut out, "HNR", &hnr_from_frames(&pitch, cfg), FunctionalSet::Basic4);
    let voiced_fraction = f0.present_count() as f64 / f0.len() as f64;

    let pert = jitter_shimmer(clip, &f0);
    out.insert("jitter_local".into(), pert.map(|p| p.jitter_local));
    out.insert("jitter_abs".into(), pert.map(|p| p.jitter_abs));
    out.insert("shimmer_local".into(), pert.map(|p| p.shimmer_local));

    let pauses = pause_features(clip, cfg)?;
    out.insert("total_dur".into(), Some(pauses.total_dur_s));
    out.insert("speech_dur".into(), Some(pauses.speech_dur_s));
    out.insert("pause_count".into(), Some(pauses.pause_count as f64));
    out.insert("mean_pause".into(), Some(pauses.mean_pause_s));
    out.insert("pause_rate".into(), Some(pauses.pause_rate));
    out.insert("phonation_rate".into(), Some(pauses.phonation_rate));
    out.insert("voiced_fraction".into(), Some(voiced_fraction));
    Ok(out)
}

/// Assemble the conventional feature vector in manifest order. Undefined
/// statistics are written as 0 and listed in [`Extracted::flags`].
pub fn extract_conventional(clip: &AudioClip, manifest: &FeatureManifest, cfg: &FeatureConfig) -> Result<Extracted> {
    let all = all_features(clip, cfg)?;
    let mut values = Vec::with_capacity(manifest.len());
    let mut flags = Vec::new();
    for entry in &manifest.entries {
        let v = all
            .get(entry)
            .ok_or_else(|| CoreError::Format(format!("manifest entry {entry:?} is not computed")))?;
        match v {
            Some(x) if x.is_finite() => values.push(*x),
            _ => {
                values.push(0.0);
                flags.push(entry.clone());
            }
        }
    }
    Ok(Extracted {
        vector: FeatureVector {
            manifest_id: manifest.version.clone(),
            values,
        },
        flags,
    })
}
