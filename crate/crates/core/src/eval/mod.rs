//! Objective evaluation: STOI, an MFCC-statistics speaker scorer and the EER harness.

mod eer;
mod mfcc;
mod report;
mod stoi;

pub use eer::{compute_eer, EerResult, TrialSet};
pub use mfcc::{mfcc_embed, mfcc_frames, score_trials, sliding_cmn, MfccConfig};
pub use report::{
    read_trials, write_scores, write_trials, EvalReport, GroupResult, MethodRow, ScoredTrial,
    StoiSummary, Trial, TrialLabel,
};
pub use stoi::{stoi, stoi_at_10k, STOI_RATE, STOI_TOO_SHORT};
