//! Batch orchestration: manifests, configuration, model fitting, anonymization,
//! evaluation and figure-data export.

mod commands;
mod config;
mod corpus;
mod manifest;
mod presets;

pub use commands::{
    anonymized_path, check_anonymize_setup, cmd_anonymize, cmd_evaluate, cmd_export_curves,
    cmd_extract_f0, cmd_fit, f0_path, with_workers, AnonymizeLogRow, AnonymizeOutcome, CurveExport,
    EvaluateOutcome, Failure, FitOutcome, ANONYMIZE_LOG, ANON_SUFFIX, F0_SUFFIX, SCORER,
};
pub use config::{
    AnonymizeSettings, EvaluationSettings, FitSettings, MethodConfig, PipelineConfig, AUTO_DONOR,
    CONFIG_VERSION,
};
pub use corpus::{corpus_trials, make_synth_corpus, SynthCorpusConfig};
pub use manifest::{read_exclusions, Manifest, ManifestRow, RowFilter, MANIFEST_HEADER};
pub use presets::{all_presets, preset, DISGUISE_CONDITION, PRESET_NAMES};
