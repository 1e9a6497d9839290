use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::audio::{read_wav, write_wav, Waveform};
use crate::deid::{anonymize_trajectory, constant_pitch_shift, AnonymizedTrajectory, DeidStrategy};
use crate::dsp::median;
use crate::error::{Error, Result};
use crate::eval::{
    compute_eer, mfcc_embed, score_trials, stoi, EvalReport, GroupResult, MethodRow, ScoredTrial,
    StoiSummary, Trial, TrialLabel, TrialSet,
};
use crate::fda::{curve_from_trajectory, fpca_fit, CurveLabel, FpcaModel};
use crate::pitch::{extract_f0, interpolate_unvoiced, read_trajectory_csv, write_trajectory_csv, F0Trajectory};
use crate::resynth::{psola_modify, shift_formants};

use super::config::{PipelineConfig, AUTO_DONOR};
use super::manifest::{Manifest, ManifestRow, RowFilter};

pub const ANON_SUFFIX: &str = ".anon.wav";
pub const F0_SUFFIX: &str = ".f0.csv";
pub const ANONYMIZE_LOG: &str = "anonymize_log.csv";

/// Description of the speaker scorer written into every report.
pub const SCORER: &str = "mfcc23-meanstd-cosine";

/// Runs `f` on a pool of `workers` threads (all cores when `None`).
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(f))
}

pub fn anonymized_path(dir: &Path, utterance_id: &str) -> PathBuf {
    dir.join(format!("{utterance_id}{ANON_SUFFIX}"))
}

pub fn f0_path(dir: &Path, utterance_id: &str) -> PathBuf {
    dir.join(format!("{utterance_id}{F0_SUFFIX}"))
}

/// The utterance's f0 track: read from `f0_dir` when given, otherwise extracted.
fn trajectory_for(
    w: &Waveform,
    row: &ManifestRow,
    config: &PipelineConfig,
    f0_dir: Option<&Path>,
) -> Result<F0Trajectory> {
    let t = match f0_dir {
        Some(dir) => {
            let p = f0_path(dir, &row.utterance_id);
            if !p.exists() {
                return Err(Error::MissingFile(p));
            }
            read_trajectory_csv(std::fs::File::open(p)?)?
        }
        None => extract_f0(w, config.pitch_for(&row.group)?)?,
    };
    if t.n_voiced() == 0 {
        return Err(Error::NoVoicedFrames);
    }
    Ok(t)
}

fn load_trajectory(
    manifest: &Manifest,
    row: &ManifestRow,
    config: &PipelineConfig,
    f0_dir: Option<&Path>,
) -> Result<F0Trajectory> {
    if let Some(dir) = f0_dir {
        let p = f0_path(dir, &row.utterance_id);
        if p.exists() {
            let t = read_trajectory_csv(std::fs::File::open(p)?)?;
            return if t.n_voiced() == 0 { Err(Error::NoVoicedFrames) } else { Ok(t) };
        }
    }
    let w = read_wav(manifest.resolve(row))?;
    trajectory_for(&w, row, config, None)
}

/// An utterance that could not be processed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub utterance_id: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: FpcaModel,
    pub used: Vec<String>,
    pub failures: Vec<Failure>,
}

/// Fits an fPCA model on the f0 curves of the rows matching `filter`.
pub fn cmd_fit(
    manifest: &Manifest,
    config: &PipelineConfig,
    filter: &RowFilter,
    f0_dir: Option<&Path>,
) -> Result<FitOutcome> {
    config.validate_for(manifest)?;
    let rows = manifest.select(filter);
    if rows.is_empty() {
        return Err(Error::Config(format!("no manifest rows match {}", filter.describe())));
    }
    if rows.len() < 2 {
        return Err(Error::invalid(format!(
            "functional PCA needs at least two utterances, {} matches one",
            filter.describe()
        )));
    }
    let basis = config.curves.basis()?;
    let results: Vec<(usize, Result<_>)> = with_workers(config.workers, || {
        rows.par_iter()
            .enumerate()
            .map(|(i, row)| {
                let r = load_trajectory(manifest, row, config, f0_dir)
                    .and_then(|t| curve_from_trajectory(&t, &config.curves, &basis));
                (i, r)
            })
            .collect()
    })?;
    let (mut curves, mut labels, mut used, mut failures) = (vec![], vec![], vec![], vec![]);
    for (i, r) in results {
        let row = rows[i];
        match r {
            Ok(c) => {
                curves.push(c);
                labels.push(CurveLabel {
                    curve_id: row.utterance_id.clone(),
                    speaker: row.speaker_id.clone(),
                    group: row.group.clone(),
                    condition: row.condition.clone(),
                    session: row.session.clone(),
                });
                used.push(row.utterance_id.clone());
            }
            Err(e) => failures.push(Failure {
                utterance_id: row.utterance_id.clone(),
                error: e.to_string(),
            }),
        }
    }
    let model = fpca_fit(&curves, labels, config.curves.clone())?;
    Ok(FitOutcome { model, used, failures })
}

/// One line of the anonymization log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnonymizeLogRow {
    pub utterance_id: String,
    pub speaker_id: String,
    pub group: String,
    pub status: String,
    pub original_median_f0: Option<f64>,
    pub target_median_f0: Option<f64>,
    pub n_components: usize,
    pub original_s1: Option<f64>,
    pub replacement_s1: Option<f64>,
    pub formant_factor: f64,
    pub f0_clamped: usize,
    pub poles_clamped: usize,
    pub invalid_lpc_frames: usize,
    pub samples_clipped: usize,
    pub error: String,
}

impl AnonymizeLogRow {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone)]
pub struct AnonymizeOutcome {
    pub log: Vec<AnonymizeLogRow>,
}

impl AnonymizeOutcome {
    pub fn failures(&self) -> usize {
        self.log.iter().filter(|r| !r.ok()).count()
    }
}

/// The strategy to apply to an utterance of `group`, with `auto` donors resolved.
fn resolve_strategy(strategy: &DeidStrategy, model: &FpcaModel, group: &str) -> Result<DeidStrategy> {
    match strategy {
        DeidStrategy::CrossGroup { donor_group, selection } if donor_group == AUTO_DONOR => {
            let others: Vec<String> = model.groups().into_iter().filter(|g| g != group).collect();
            match others.as_slice() {
                [one] => Ok(DeidStrategy::CrossGroup {
                    donor_group: one.clone(),
                    selection: *selection,
                }),
                _ => Err(Error::Config(format!(
                    "donor group \"auto\" needs exactly one other group in the model, found {others:?}"
                ))),
            }
        }
        other => Ok(other.clone()),
    }
}

fn model_for<'m>(models: &'m [FpcaModel], group: &str) -> Option<&'m FpcaModel> {
    models.iter().find(|m| m.groups().iter().any(|g| g == group))
}

fn anonymize_one(
    manifest: &Manifest,
    row: &ManifestRow,
    config: &PipelineConfig,
    models: &[FpcaModel],
    out_dir: &Path,
    f0_dir: Option<&Path>,
) -> Result<AnonymizeLogRow> {
    let input = manifest.resolve(row);
    let output = anonymized_path(out_dir, &row.utterance_id);
    if input == output {
        return Err(Error::Config("output would overwrite the input".into()));
    }
    let w = read_wav(&input)?;
    let pitch = config.pitch_for(&row.group)?;
    let t = trajectory_for(&w, row, config, f0_dir)?;
    let src = interpolate_unvoiced(&t)?;
    let voiced_median = |tr: &F0Trajectory| {
        let v: Vec<f64> = (0..tr.len()).filter(|&i| tr.voiced[i]).map(|i| tr.values[i]).collect();
        median(&v)
    };
    let mut log = AnonymizeLogRow {
        utterance_id: row.utterance_id.clone(),
        speaker_id: row.speaker_id.clone(),
        group: row.group.clone(),
        status: "ok".into(),
        original_median_f0: voiced_median(&src),
        target_median_f0: voiced_median(&src),
        n_components: 0,
        original_s1: None,
        replacement_s1: None,
        formant_factor: config.method.formant_factor.unwrap_or(1.0),
        f0_clamped: 0,
        poles_clamped: 0,
        invalid_lpc_frames: 0,
        samples_clipped: 0,
        error: String::new(),
    };

    // step order is fixed: f0 first, formants second
    let mut y = w.clone();
    if let Some(strategy) = &config.method.f0 {
        let anon = match strategy {
            DeidStrategy::ConstantShift { percent } => AnonymizedTrajectory {
                trajectory: constant_pitch_shift(&src, *percent, w.sample_rate())?,
                n_components: 0,
                original_s1: None,
                replacement_s1: None,
                clamped: 0,
            },
            _ => {
                let m = model_for(models, &row.group).ok_or_else(|| {
                    Error::Config(format!("no model covers group {:?}", row.group))
                })?;
                let strategy = resolve_strategy(strategy, m, &row.group)?;
                anonymize_trajectory(&t, m, &strategy, &row.speaker_id, pitch.range, w.sample_rate())?
            }
        };
        log.target_median_f0 = voiced_median(&anon.trajectory);
        log.n_components = anon.n_components;
        log.original_s1 = anon.original_s1;
        log.replacement_s1 = anon.replacement_s1;
        log.f0_clamped = anon.clamped;
        y = psola_modify(&w, &src, &anon.trajectory, pitch.range)?;
    }
    if let Some(factor) = config.method.formant_factor {
        let r = shift_formants(&y, &config.formant_config(factor))?;
        log.poles_clamped = r.clamped_poles;
        log.invalid_lpc_frames = r.invalid_frames;
        y = r.waveform;
    }
    log.samples_clipped = write_wav(&output, &y, config.anonymize.encoding)?.clipped;
    Ok(log)
}

/// Checks that can fail before any audio is read.
pub fn check_anonymize_setup(manifest: &Manifest, config: &PipelineConfig, models: &[FpcaModel]) -> Result<()> {
    config.validate_for(manifest)?;
    if let Some(strategy) = &config.method.f0 {
        if !matches!(strategy, DeidStrategy::ConstantShift { .. }) {
            let groups: BTreeSet<&str> = manifest
                .select(&anonymize_filter(config))
                .iter()
                .map(|r| r.group.as_str())
                .collect();
            for g in groups {
                let m = model_for(models, g)
                    .ok_or_else(|| Error::Config(format!("no model covers group {g:?}")))?;
                resolve_strategy(strategy, m, g)?;
            }
        }
    }
    Ok(())
}

fn anonymize_filter(config: &PipelineConfig) -> RowFilter {
    RowFilter {
        conditions: config.anonymize.conditions.clone(),
        sessions: config.anonymize.sessions.clone(),
        ..RowFilter::default()
    }
}

/// Anonymizes every selected utterance into `out_dir/<id>.anon.wav` and writes
/// `out_dir/anonymize_log.csv`. Per-utterance failures are logged, not raised.
pub fn cmd_anonymize(
    manifest: &Manifest,
    config: &PipelineConfig,
    models: &[FpcaModel],
    out_dir: &Path,
    f0_dir: Option<&Path>,
) -> Result<AnonymizeOutcome> {
    check_anonymize_setup(manifest, config, models)?;
    std::fs::create_dir_all(out_dir)?;
    let rows = manifest.select(&anonymize_filter(config));
    let log: Vec<AnonymizeLogRow> = with_workers(config.workers, || {
        rows.par_iter()
            .map(|row| {
                anonymize_one(manifest, row, config, models, out_dir, f0_dir).unwrap_or_else(|e| {
                    AnonymizeLogRow {
                        utterance_id: row.utterance_id.clone(),
                        speaker_id: row.speaker_id.clone(),
                        group: row.group.clone(),
                        status: "failed".into(),
                        original_median_f0: None,
                        target_median_f0: None,
                        n_components: 0,
                        original_s1: None,
                        replacement_s1: None,
                        formant_factor: config.method.formant_factor.unwrap_or(1.0),
                        f0_clamped: 0,
                        poles_clamped: 0,
                        invalid_lpc_frames: 0,
                        samples_clipped: 0,
                        error: e.to_string(),
                    }
                })
            })
            .collect()
    })?;
    let mut wtr = csv::Writer::from_path(out_dir.join(ANONYMIZE_LOG))?;
    for r in &log {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    std::fs::write(out_dir.join("config.json"), config.to_json()?)?;
    Ok(AnonymizeOutcome { log })
}

#[derive(Debug, Clone)]
pub struct EvaluateOutcome {
    pub report: EvalReport,
    /// Trial scores per method row, in trial-file order.
    pub scores: Vec<(String, Vec<ScoredTrial>)>,
}

fn embed_all(
    manifest: &Manifest,
    ids: &[String],
    config: &PipelineConfig,
    path_of: &(dyn Fn(&ManifestRow) -> PathBuf + Sync),
) -> Vec<(String, Result<Vec<f64>>)> {
    ids.par_iter()
        .map(|id| {
            let row = manifest.get(id).expect("checked ids");
            let r = read_wav(path_of(row)).and_then(|w| mfcc_embed(&w, &config.evaluation.mfcc));
            (id.clone(), r)
        })
        .collect()
}

/// Scores `trials` with enrollment on original audio and tests on each anonymized
/// directory in turn, plus the untouched originals when the baseline is enabled.
pub fn cmd_evaluate(
    manifest: &Manifest,
    config: &PipelineConfig,
    trials: &[Trial],
    anonymized: &[(String, PathBuf)],
) -> Result<EvaluateOutcome> {
    if trials.is_empty() {
        return Err(Error::invalid("trial list is empty"));
    }
    let ev = &config.evaluation;
    let mut enroll_ids: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for t in trials {
        if manifest.get(&t.test_utterance).is_none() {
            return Err(Error::Config(format!(
                "trial utterance {:?} is not in the manifest",
                t.test_utterance
            )));
        }
        enroll_ids.entry(t.enroll_speaker.as_str()).or_default();
    }
    for (spk, ids) in enroll_ids.iter_mut() {
        *ids = manifest
            .rows
            .iter()
            .filter(|r| r.speaker_id == *spk && r.session == ev.enroll_session && r.condition == ev.enroll_condition)
            .map(|r| r.utterance_id.clone())
            .collect();
        ids.sort();
        if ids.is_empty() {
            return Err(Error::Config(format!(
                "speaker {spk:?} has no enrollment rows (session {:?}, condition {:?})",
                ev.enroll_session, ev.enroll_condition
            )));
        }
    }
    let test_ids: Vec<String> = trials
        .iter()
        .map(|t| t.test_utterance.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let all_enroll: Vec<String> = enroll_ids.values().flatten().cloned().collect::<BTreeSet<_>>().into_iter().collect();

    with_workers(config.workers, || -> Result<EvaluateOutcome> {
        let original = |r: &ManifestRow| manifest.resolve(r);
        let enroll_emb: BTreeMap<String, Vec<f64>> = embed_all(manifest, &all_enroll, config, &original)
            .into_iter()
            .map(|(id, r)| r.map(|e| (id, e)))
            .collect::<Result<_>>()?;
        let models: BTreeMap<&str, Vec<Vec<f64>>> = enroll_ids
            .iter()
            .map(|(s, ids)| (*s, ids.iter().map(|id| enroll_emb[id].clone()).collect()))
            .collect();

        let mut methods: Vec<(String, Option<PathBuf>)> = Vec::new();
        if ev.baseline {
            methods.push(("none".into(), None));
        }
        methods.extend(anonymized.iter().map(|(l, d)| (l.clone(), Some(d.clone()))));
        let mut seen = BTreeSet::new();
        for (l, _) in &methods {
            if !seen.insert(l.clone()) {
                return Err(Error::Config(format!("method label {l:?} used twice")));
            }
        }

        let mut rows = Vec::new();
        let mut all_scores = Vec::new();
        for (label, dir) in &methods {
            let mut errors = Vec::new();
            let test_path = |r: &ManifestRow| match dir {
                Some(d) => anonymized_path(d, &r.utterance_id),
                None => manifest.resolve(r),
            };
            let test_emb: BTreeMap<String, Vec<f64>> = embed_all(manifest, &test_ids, config, &test_path)
                .into_iter()
                .filter_map(|(id, r)| match r {
                    Ok(e) => Some((id, e)),
                    Err(e) => {
                        errors.push(format!("{id}: {e}"));
                        None
                    }
                })
                .collect();
            // intelligibility of each anonymized test utterance against its original
            let stoi_values: Vec<(String, f64)> = match (dir, ev.stoi) {
                (Some(_), true) => {
                    let res: Vec<(String, Result<f64>)> = test_ids
                        .par_iter()
                        .filter(|id| test_emb.contains_key(*id))
                        .map(|id| {
                            let row = manifest.get(id).expect("checked ids");
                            let r = read_wav(manifest.resolve(row))
                                .and_then(|a| read_wav(test_path(row)).and_then(|b| stoi(&a, &b)));
                            (id.clone(), r)
                        })
                        .collect();
                    res.into_iter()
                        .filter_map(|(id, r)| match r {
                            Ok(v) => Some((id, v)),
                            Err(e) => {
                                errors.push(format!("{id}: STOI: {e}"));
                                None
                            }
                        })
                        .collect()
                }
                _ => vec![],
            };

            let mut by_group: BTreeMap<String, TrialSet> = BTreeMap::new();
            let mut pooled = TrialSet::default();
            let mut scored = Vec::new();
            for t in trials {
                let Some(test) = test_emb.get(&t.test_utterance) else { continue };
                let s = score_trials(&models[t.enroll_speaker.as_str()], test)?;
                let group = manifest.get(&t.test_utterance).expect("checked ids").group.clone();
                let set = by_group.entry(group).or_default();
                match t.label {
                    TrialLabel::Genuine => {
                        set.genuine.push(s);
                        pooled.genuine.push(s);
                    }
                    TrialLabel::Impostor => {
                        set.impostor.push(s);
                        pooled.impostor.push(s);
                    }
                }
                scored.push(ScoredTrial {
                    trial_id: format!("{}:{}", t.enroll_speaker, t.test_utterance),
                    score: s,
                    label: t.label,
                });
            }
            let mut groups: Vec<GroupResult> = Vec::new();
            for (name, set) in by_group.iter().chain(std::iter::once((&"all".to_string(), &pooled))) {
                let eer = compute_eer(set).ok();
                let values: Vec<f64> = stoi_values
                    .iter()
                    .filter(|(id, _)| {
                        name == "all" || manifest.get(id).is_some_and(|r| &r.group == name)
                    })
                    .map(|(_, v)| *v)
                    .collect();
                groups.push(GroupResult {
                    group: name.clone(),
                    eer_percent: eer.map(|e| e.eer_percent),
                    threshold: eer.map(|e| e.threshold),
                    n_genuine: set.genuine.len(),
                    n_impostor: set.impostor.len(),
                    stoi: StoiSummary::from_values(&values),
                });
            }
            rows.push(MethodRow {
                method: label.clone(),
                groups,
                errors,
            });
            all_scores.push((label.clone(), scored));
        }
        Ok(EvaluateOutcome {
            report: EvalReport {
                corpus_id: config.corpus_id.clone(),
                config_hash: config.hash(),
                scorer: SCORER.into(),
                rows,
            },
            scores: all_scores,
        })
    })?
}

/// CSV text of one component's mean, plus and minus curves and of the score scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveExport {
    pub curves_csv: String,
    pub scatter_csv: String,
}

/// `plus/minus = mean ± SD(s_i) · PC_i` on `n_points` normalized times, in semitones
/// and Hz; the scatter has one row per training curve. `component` counts from 1.
pub fn cmd_export_curves(model: &FpcaModel, component: usize, n_points: usize) -> Result<CurveExport> {
    if component == 0 || component > model.n_components() {
        return Err(Error::invalid(format!(
            "component {component} is not in 1..={}",
            model.n_components()
        )));
    }
    if n_points < 2 {
        return Err(Error::invalid("need at least two points"));
    }
    let i = component - 1;
    let sd = model.score_sd(i).unwrap_or(0.0);
    let pc = &model.components()[i];
    let plus = model.mean().add_scaled(pc, sd)?;
    let minus = model.mean().add_scaled(pc, -sd)?;
    let reference = model.settings().semitone_ref;
    let hz = |st: f64| reference * (st / 12.0).exp2();
    let mut curves = String::from("t,mean_st,plus_st,minus_st,mean_hz,plus_hz,minus_hz\n");
    for k in 0..n_points {
        let t = k as f64 / (n_points - 1) as f64;
        let (m, p, n) = (model.mean().eval(t), plus.eval(t), minus.eval(t));
        let _ = writeln!(curves, "{t},{m},{p},{n},{},{},{}", hz(m), hz(p), hz(n));
    }
    let mut wtr = csv::Writer::from_writer(vec![]);
    wtr.write_record(["curve_id", "speaker", "group", "condition", "session", "s1", "s2"])?;
    for (l, s) in model.labels().iter().zip(model.training_scores()) {
        let s2 = s.get(1).map_or(String::new(), |v| v.to_string());
        wtr.write_record([
            l.curve_id.as_str(),
            &l.speaker,
            &l.group,
            &l.condition,
            &l.session,
            &s[0].to_string(),
            &s2,
        ])?;
    }
    let scatter = String::from_utf8(wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .expect("CSV of UTF-8 fields");
    Ok(CurveExport {
        curves_csv: curves,
        scatter_csv: scatter,
    })
}

/// Writes `out_dir/<id>.f0.csv` for every matching row; returns the failures.
pub fn cmd_extract_f0(
    manifest: &Manifest,
    config: &PipelineConfig,
    filter: &RowFilter,
    out_dir: &Path,
) -> Result<Vec<Failure>> {
    config.validate_for(manifest)?;
    std::fs::create_dir_all(out_dir)?;
    let rows = manifest.select(filter);
    let res: Vec<Option<Failure>> = with_workers(config.workers, || {
        rows.par_iter()
            .map(|row| {
                let r = read_wav(manifest.resolve(row))
                    .and_then(|w| extract_f0(&w, config.pitch_for(&row.group)?))
                    .and_then(|t| {
                        let f = std::fs::File::create(f0_path(out_dir, &row.utterance_id))?;
                        write_trajectory_csv(&t, f)
                    });
                r.err().map(|e| Failure {
                    utterance_id: row.utterance_id.clone(),
                    error: e.to_string(),
                })
            })
            .collect()
    })?;
    Ok(res.into_iter().flatten().collect())
}
