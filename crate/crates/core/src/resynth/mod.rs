//! Resynthesis: TD-PSOLA f0 modification and LPC formant shifting.

mod epochs;
mod formant;
pub mod lpc;
mod psola;

pub use epochs::{detect_epochs, EpochSequence, UNVOICED_ANCHOR_SPACING};
pub use formant::{
    median_formant, shift_formants, track_formants, Formant, FormantFrame, FormantShiftConfig,
    FormantShiftResult, MAX_POLE_RADIUS,
};
pub use psola::{psola_modify, psola_with_epochs, MIN_TARGET_F0};
