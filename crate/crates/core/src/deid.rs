//! f0 anonymization strategies.
//!
//! The two model-based strategies replace the first principal score of an utterance's
//! f0 curve and rebuild the curve from the mean, the new first score and the speaker's
//! own remaining scores. The constant strategy scales f0 by a fixed percentage.

use serde::{Deserialize, Serialize};

use crate::fda::{
    curve_from_trajectory, fpca_project, normalized_times, reconstruct, FpcaModel, ScoreVector,
};
use crate::error::{Error, Result};
use crate::pitch::{interpolate_unvoiced, F0Trajectory, PitchRange, Unit};

/// How many leading components take part in the reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComponentSelection {
    /// Retain the smallest number of components whose cumulative variance exceeds this.
    pub variance_threshold: f64,
    /// Upper bound on retained components.
    pub max_components: usize,
}

impl Default for ComponentSelection {
    fn default() -> Self {
        Self {
            variance_threshold: 0.9,
            max_components: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DeidStrategy {
    /// First score replaced by the mean absolute first score of the same speaker's
    /// disguised curves.
    DisguiseModel {
        donor_condition: String,
        #[serde(default)]
        selection: ComponentSelection,
    },
    /// First score replaced by the mean first score of another group's curves.
    CrossGroup {
        donor_group: String,
        #[serde(default)]
        selection: ComponentSelection,
    },
    /// f0 multiplied by `1 + percent / 100`.
    ConstantShift { percent: f64 },
}

impl DeidStrategy {
    pub fn validate(&self) -> Result<()> {
        match self {
            DeidStrategy::ConstantShift { percent } if !(*percent > -100.0) => {
                Err(Error::invalid(format!("shift of {percent}% is not above -100%")))
            }
            DeidStrategy::DisguiseModel { selection, .. } | DeidStrategy::CrossGroup { selection, .. }
                if !(selection.variance_threshold > 0.0 && selection.variance_threshold <= 1.0) =>
            {
                Err(Error::invalid("variance threshold must lie in (0, 1]"))
            }
            _ => Ok(()),
        }
    }
}

/// `min(cap, smallest n with cumulative variance fraction > threshold)`, at least 1.
/// When no prefix exceeds the threshold every component is retained.
pub fn select_n_components(model: &FpcaModel, threshold: f64, cap: usize) -> usize {
    select_from_fractions(model.variance_fraction(), threshold, cap)
}

pub fn select_from_fractions(fractions: &[f64], threshold: f64, cap: usize) -> usize {
    let mut cumulative = 0.0;
    let mut n = fractions.len();
    for (i, f) in fractions.iter().enumerate() {
        cumulative += f;
        if cumulative > threshold {
            n = i + 1;
            break;
        }
    }
    n.min(cap).max(1)
}

/// The first score that will be written into every anonymized curve of `speaker`.
pub fn replacement_first_score(strategy: &DeidStrategy, model: &FpcaModel, speaker: &str) -> Result<f64> {
    if model.n_components() == 0 {
        return Err(Error::invalid("model has no principal components"));
    }
    let rows = model.labels().iter().zip(model.training_scores());
    let (donors, absolute): (Vec<f64>, bool) = match strategy {
        DeidStrategy::DisguiseModel { donor_condition, .. } => (
            rows.filter(|(l, _)| l.speaker == speaker && &l.condition == donor_condition)
                .map(|(_, s)| s[0])
                .collect(),
            true,
        ),
        DeidStrategy::CrossGroup { donor_group, .. } => (
            rows.filter(|(l, _)| &l.group == donor_group)
                .map(|(_, s)| s[0])
                .collect(),
            false,
        ),
        DeidStrategy::ConstantShift { .. } => {
            return Err(Error::invalid("constant shift does not use principal scores"))
        }
    };
    if donors.is_empty() {
        let what = match strategy {
            DeidStrategy::DisguiseModel { donor_condition, .. } => {
                format!("speaker {speaker:?} has no {donor_condition:?} curves in the model")
            }
            DeidStrategy::CrossGroup { donor_group, .. } => {
                format!("group {donor_group:?} has no curves in the model")
            }
            DeidStrategy::ConstantShift { .. } => unreachable!(),
        };
        return Err(Error::EmptyDonorSet(what));
    }
    let sum: f64 = if absolute {
        donors.iter().map(|v| v.abs()).sum()
    } else {
        donors.iter().sum()
    };
    Ok(sum / donors.len() as f64)
}

/// Keeps the first `n` scores and overwrites the first with `replacement`.
pub fn anonymize_scores(original: &ScoreVector, replacement: f64, n: usize) -> Result<ScoreVector> {
    if n == 0 || n > original.len() {
        return Err(Error::invalid(format!(
            "cannot keep {n} of {} scores",
            original.len()
        )));
    }
    let mut values = original.values[..n].to_vec();
    values[0] = replacement;
    Ok(ScoreVector {
        values,
        curve_id: original.curve_id.clone(),
    })
}

/// Multiplies every value by `1 + percent / 100`. Results above a quarter of the
/// sample rate are rejected.
pub fn constant_pitch_shift(t: &F0Trajectory, percent: f64, sample_rate: u32) -> Result<F0Trajectory> {
    if t.unit != Unit::Hz {
        return Err(Error::invalid("constant shift expects Hz"));
    }
    if !(percent > -100.0) {
        return Err(Error::invalid(format!("shift of {percent}% is not above -100%")));
    }
    let factor = 1.0 + percent / 100.0;
    let out = t.map_values(|v| v * factor, Unit::Hz);
    let limit = sample_rate as f64 / 4.0;
    if let Some(v) = out.values.iter().find(|v| v.is_finite() && **v > limit) {
        return Err(Error::OutOfRange(format!(
            "shifted f0 {v:.1} Hz exceeds {limit} Hz"
        )));
    }
    Ok(out)
}

/// Result of [`anonymize_trajectory`] with bookkeeping for the pipeline log.
#[derive(Debug, Clone)]
pub struct AnonymizedTrajectory {
    pub trajectory: F0Trajectory,
    /// Components used in the reconstruction (0 for the constant shift).
    pub n_components: usize,
    pub original_s1: Option<f64>,
    pub replacement_s1: Option<f64>,
    /// Frames clamped to the safe range after reconstruction.
    pub clamped: usize,
}

/// Runs the full f0 anonymization for one utterance.
///
/// Model strategies: interpolate, semitones, smooth, project, replace the first score,
/// reconstruct with the selected number of components, sample back onto the input
/// frames and convert to Hz. Output frames keep the input times and voicing flags.
/// Reconstructed values are clamped to `[floor / 2, 2 · ceiling]` of `range`.
pub fn anonymize_trajectory(
    t: &F0Trajectory,
    model: &FpcaModel,
    strategy: &DeidStrategy,
    speaker: &str,
    range: PitchRange,
    sample_rate: u32,
) -> Result<AnonymizedTrajectory> {
    strategy.validate()?;
    let selection = match strategy {
        DeidStrategy::ConstantShift { percent } => {
            let filled = interpolate_unvoiced(t)?;
            return Ok(AnonymizedTrajectory {
                trajectory: constant_pitch_shift(&filled, *percent, sample_rate)?,
                n_components: 0,
                original_s1: None,
                replacement_s1: None,
                clamped: 0,
            });
        }
        DeidStrategy::DisguiseModel { selection, .. } | DeidStrategy::CrossGroup { selection, .. } => {
            selection
        }
    };
    let settings = model.settings();
    let curve = curve_from_trajectory(t, settings, model.basis())?;
    let scores = fpca_project(&curve, model)?;
    let replacement = replacement_first_score(strategy, model, speaker)?;
    let n = select_n_components(model, selection.variance_threshold, selection.max_components)
        .min(model.n_components());
    let new_scores = anonymize_scores(&scores, replacement, n)?;
    let rebuilt = reconstruct(model, &new_scores, n)?;

    let (lo, hi) = (range.floor / 2.0, range.ceiling * 2.0);
    let mut clamped = 0;
    let values = normalized_times(t.len())
        .into_iter()
        .map(|u| {
            let hz = settings.semitone_ref * (rebuilt.eval(u) / 12.0).exp2();
            if hz < lo || hz > hi {
                clamped += 1;
            }
            hz.clamp(lo, hi)
        })
        .collect();
    Ok(AnonymizedTrajectory {
        trajectory: F0Trajectory::new(t.times.clone(), values, t.voiced.clone(), Unit::Hz)?,
        n_components: n,
        original_s1: scores.values.first().copied(),
        replacement_s1: Some(replacement),
        clamped,
    })
}
