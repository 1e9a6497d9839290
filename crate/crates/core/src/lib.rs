//! Speaker de-identification through functional PCA of f0 trajectories.
//!
//! The crate is organized the way the processing chain runs:
//!
//! * [`audio`] reads, writes and resamples mono waveforms.
//! * [`pitch`] extracts autocorrelation f0 tracks and converts between Hz and semitones.
//! * [`fda`] turns f0 tracks into penalized B-spline curves and fits functional PCA models.
//! * [`deid`] rewrites the first principal score of a curve to disguise the speaker.
//! * [`resynth`] imposes the new f0 with TD-PSOLA and raises formants by Burg-LPC pole scaling.
//! * [`eval`] measures the result with STOI and an MFCC-statistics speaker scorer plus EER.
//! * [`pipeline`] ties everything together over a corpus manifest.

pub mod audio;
pub mod deid;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod fda;
pub mod pipeline;
pub mod pitch;
pub mod resynth;
pub mod synth;

pub use audio::{read_wav, resample, write_wav, Encoding, Waveform, WriteReport};
pub use deid::{anonymize_trajectory, ComponentSelection, DeidStrategy};
pub use error::{Error, Result};

pub use resynth::{psola_modify, shift_formants, track_formants, FormantShiftConfig};
pub use eval::{compute_eer, mfcc_embed, score_trials, stoi, EerResult, EvalReport, MfccConfig, TrialSet};
pub use fda::{BSplineBasis, FpcaModel, FunctionalCurve, ScoreVector};
pub use pitch::{extract_f0, F0Trajectory, PitchConfig, PitchRange, Unit};

