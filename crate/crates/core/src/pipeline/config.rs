use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audio::Encoding;
use crate::deid::DeidStrategy;
use crate::error::{Error, Result};
use crate::eval::MfccConfig;
use crate::fda::CurveSettings;
use crate::pitch::PitchConfig;
use crate::resynth::FormantShiftConfig;

use super::manifest::Manifest;

pub const CONFIG_VERSION: u32 = 1;

/// Donor group placeholder resolved to "the one other group in the model".
pub const AUTO_DONOR: &str = "auto";

/// The de-identification method: optional f0 strategy, then optional formant shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodConfig {
    pub label: String,
    #[serde(default)]
    pub f0: Option<DeidStrategy>,
    /// Multiplier for the lowest formants; `None` leaves the envelope untouched.
    #[serde(default)]
    pub formant_factor: Option<f64>,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            label: "none".into(),
            f0: None,
            formant_factor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    pub groups: Vec<String>,
    pub conditions: Vec<String>,
    pub sessions: Vec<String>,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self {
            groups: vec![],
            conditions: vec!["modal".into()],
            sessions: vec![],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnonymizeSettings {
    /// Conditions that are anonymized; other rows are left alone.
    pub conditions: Vec<String>,
    /// Empty means every session.
    pub sessions: Vec<String>,
    pub encoding: Encoding,
}

impl Default for AnonymizeSettings {
    fn default() -> Self {
        Self {
            conditions: vec!["modal".into()],
            sessions: vec![],
            encoding: Encoding::Pcm16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationSettings {
    pub mfcc: MfccConfig,
    pub stoi: bool,
    /// Enrollment material: original audio of these rows of the enrolled speaker.
    pub enroll_session: String,
    pub enroll_condition: String,
    /// Add a row scoring the original test audio.
    pub baseline: bool,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        Self {
            mfcc: MfccConfig::default(),
            stoi: true,
            enroll_session: "1".into(),
            enroll_condition: "modal".into(),
            baseline: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub version: u32,
    pub corpus_id: String,
    /// Tracker settings per speaker group.
    pub pitch: BTreeMap<String, PitchConfig>,
    pub curves: CurveSettings,
    pub method: MethodConfig,
    /// Analysis settings of the formant shifter; its factor is taken from `method`.
    pub formant: FormantShiftConfig,
    pub fit: FitSettings,
    pub anonymize: AnonymizeSettings,
    pub evaluation: EvaluationSettings,
    /// Worker threads; `None` uses every core. Outputs do not depend on it, so it is
    /// neither written out nor hashed.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let mut pitch = BTreeMap::new();
        pitch.insert("female".to_string(), PitchConfig::new(140.0, 520.0));
        pitch.insert("male".to_string(), PitchConfig::new(65.0, 380.0));
        Self {
            version: CONFIG_VERSION,
            corpus_id: "corpus".into(),
            pitch,
            curves: CurveSettings::default(),
            method: MethodConfig::default(),
            formant: FormantShiftConfig::default(),
            fit: FitSettings::default(),
            anonymize: AnonymizeSettings::default(),
            evaluation: EvaluationSettings::default(),
            workers: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Checks that do not depend on the corpus.
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if self.version != CONFIG_VERSION {
            return cfg_err(format!("config version {} is not {CONFIG_VERSION}", self.version));
        }
        for (g, p) in &self.pitch {
            p.validate(16000)
                .map_err(|e| Error::Config(format!("pitch settings of {g:?}: {e}")))?;
        }
        self.curves
            .basis()
            .map_err(|e| Error::Config(format!("curve settings: {e}")))?;
        if !(self.curves.lambda >= 0.0 && self.curves.grid_size >= 2 && self.curves.semitone_ref > 0.0) {
            return cfg_err("curve lambda, grid size or semitone reference out of range".into());
        }
        if let Some(s) = &self.method.f0 {
            s.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(f) = self.method.formant_factor {
            self.formant_config(f)
                .validate(16000)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        self.evaluation
            .mfcc
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        if self.workers == Some(0) {
            return cfg_err("workers must be at least 1".into());
        }
        Ok(())
    }

    /// Checks against a manifest: every group in it needs tracker settings, and every
    /// group the config names must occur in it.
    pub fn validate_for(&self, manifest: &Manifest) -> Result<()> {
        let groups = manifest.groups();
        for g in &groups {
            if !self.pitch.contains_key(g) {
                return Err(Error::Config(format!("no pitch settings for group {g:?}")));
            }
        }
        let mut named: Vec<&String> = self.fit.groups.iter().collect();
        if let Some(DeidStrategy::CrossGroup { donor_group, .. }) = &self.method.f0 {
            if donor_group != AUTO_DONOR {
                named.push(donor_group);
            }
        }
        for g in named {
            if !groups.contains(g) {
                return Err(Error::Config(format!("group {g:?} does not occur in the manifest")));
            }
        }
        Ok(())
    }

    pub fn pitch_for(&self, group: &str) -> Result<&PitchConfig> {
        self.pitch
            .get(group)
            .ok_or_else(|| Error::Config(format!("no pitch settings for group {group:?}")))
    }

    pub fn formant_config(&self, factor: f64) -> FormantShiftConfig {
        FormantShiftConfig {
            factor,
            ..self.formant.clone()
        }
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        hex::encode(&digest[..8])
    }
}
