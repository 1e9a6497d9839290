//! Deterministic synthetic corpus: glottal-pulse speakers behind time-varying
//! resonators, read sentences with declining f0 and accent peaks, two sessions,
//! modal and child-mimicking disguised speech.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audio::{write_wav, Encoding, Waveform};
use crate::error::{Error, Result};
use crate::eval::{write_trials, Trial, TrialLabel};

use super::manifest::{Manifest, ManifestRow};
use super::presets::DISGUISE_CONDITION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthCorpusConfig {
    pub seed: u64,
    pub sample_rate: u32,
    pub speakers_per_group: usize,
    pub sentences: usize,
    pub sessions: usize,
    /// Mean f0 of the high and low groups, Hz.
    pub female_f0: f64,
    pub male_f0: f64,
    /// Mean f0 raise of the disguised condition, semitones.
    pub disguise_semitones: f64,
}

impl Default for SynthCorpusConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            sample_rate: 16000,
            speakers_per_group: 12,
            sentences: 6,
            sessions: 2,
            female_f0: 210.0,
            male_f0: 110.0,
            disguise_semitones: 5.0,
        }
    }
}

/// Peterson-Barney style adult male formant targets.
const VOWELS: [[f64; 3]; 8] = [
    [270.0, 2290.0, 3010.0],
    [390.0, 1990.0, 2550.0],
    [530.0, 1840.0, 2480.0],
    [660.0, 1720.0, 2410.0],
    [730.0, 1090.0, 2440.0],
    [570.0, 840.0, 2410.0],
    [300.0, 870.0, 2240.0],
    [520.0, 1190.0, 2390.0],
];

#[derive(Debug, Clone)]
struct Speaker {
    id: String,
    group: &'static str,
    f0: f64,
    formant_scale: f64,
    f4: f64,
    bandwidth_scale: f64,
    open_phase: f64,
    closing_phase: f64,
    lowpass: f64,
    rate: f64,
    disguise_st: f64,
    /// Idiosyncratic per-vowel formant multipliers.
    vowel_offsets: Vec<[f64; 3]>,
    /// Time constant of formant transitions, seconds.
    glide: f64,
    breathiness: f64,
    jitter: f64,
    accent_loudness: f64,
    ramp: f64,
    fricative_hz: f64,
    fricative_level: f64,
}

#[derive(Debug, Clone)]
struct Syllable {
    vowel: usize,
    accent: bool,
    pause_after: bool,
}

fn rng_for(seed: u64, parts: &[u64]) -> ChaCha8Rng {
    let mut s = seed ^ 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        s = s.rotate_left(17) ^ p.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        s = s.wrapping_mul(0x94D0_49BB_1331_11EB);
    }
    ChaCha8Rng::seed_from_u64(s)
}

fn speakers(cfg: &SynthCorpusConfig) -> Vec<Speaker> {
    let mut out = Vec::new();
    for (gi, (group, prefix, f0, scale)) in [
        ("female", "f", cfg.female_f0, 1.15),
        ("male", "m", cfg.male_f0, 1.0),
    ]
    .into_iter()
    .enumerate()
    {
        for k in 0..cfg.speakers_per_group {
            let mut r = rng_for(cfg.seed, &[1, gi as u64, k as u64]);
            let formant_scale = scale * (1.0 + r.gen_range(-0.15..0.15));
            out.push(Speaker {
                id: format!("{prefix}{:02}", k + 1),
                group,
                f0: f0 * (r.gen_range(-4.0..4.0) / 12.0f64).exp2(),
                formant_scale,
                f4: r.gen_range(3300.0..3800.0) * formant_scale,
                bandwidth_scale: r.gen_range(0.8..1.4),
                open_phase: r.gen_range(0.3..0.5),
                closing_phase: r.gen_range(0.08..0.2),
                lowpass: r.gen_range(0.0..0.5),
                rate: r.gen_range(0.85..1.15),
                disguise_st: cfg.disguise_semitones + r.gen_range(-1.0..1.0),
                vowel_offsets: (0..VOWELS.len())
                    .map(|_| [0; 3].map(|_| 1.0 + r.gen_range(-0.12..0.12)))
                    .collect(),
                glide: r.gen_range(0.015..0.045),
                breathiness: r.gen_range(0.002..0.03),
                jitter: r.gen_range(0.002..0.02),
                accent_loudness: r.gen_range(1.0..1.8),
                ramp: r.gen_range(0.01..0.04),
                fricative_hz: r.gen_range(3500.0..6000.0),
                fricative_level: r.gen_range(0.002..0.006),
            });
        }
    }
    out
}

/// Sentence texts are shared by all speakers.
fn sentence(seed: u64, j: usize) -> Vec<Syllable> {
    let mut r = rng_for(seed, &[2, j as u64]);
    let n = r.gen_range(20..=26);
    let mut syl: Vec<Syllable> = (0..n)
        .map(|i| Syllable {
            vowel: r.gen_range(0..VOWELS.len()),
            accent: false,
            pause_after: i + 1 < n && r.gen_bool(0.3),
        })
        .collect();
    let accents = r.gen_range(2..=3);
    for _ in 0..accents {
        let k = r.gen_range(0..n);
        syl[k].accent = true;
    }
    syl
}

/// Rosenberg glottal flow at phase `p` in `[0, 1)`.
fn glottal_flow(p: f64, open: f64, closing: f64) -> f64 {
    if p < open {
        0.5 * (1.0 - (PI * p / open).cos())
    } else if p < open + closing {
        (PI * (p - open) / (2.0 * closing)).cos()
    } else {
        0.0
    }
}

/// Renders one utterance.
fn render(
    spk: &Speaker,
    text: &[Syllable],
    disguised: bool,
    sample_rate: u32,
    rng: &mut ChaCha8Rng,
) -> Result<Waveform> {
    let fs = sample_rate as f64;
    // session-level drift
    let f0_base = spk.f0 * (rng.gen_range(-0.5..0.5) / 12.0f64).exp2()
        * if disguised { (spk.disguise_st / 12.0).exp2() } else { 1.0 };
    let scale = spk.formant_scale * (1.0 + rng.gen_range(-0.01..0.01)) * if disguised { 1.06 } else { 1.0 };
    let accent_gain = if disguised { 1.6 } else { 1.0 };

    // timeline: (start, end, syllable index) for voiced stretches
    let lead = 0.15;
    let mut t = lead;
    let mut segs = Vec::new();
    let mut frics = Vec::new();
    for (k, s) in text.iter().enumerate() {
        let d = rng.gen_range(0.16..0.24) * spk.rate;
        segs.push((t, t + d, k));
        t += d;
        if s.pause_after {
            // voiceless fricative between words
            let d = rng.gen_range(0.06..0.11) * spk.rate;
            frics.push((t, t + d));
            t += d;
        }
    }
    let speech_end = t;
    let total = t + 0.15;
    let n = (total * fs).round() as usize;
    let accents: Vec<(f64, f64)> = segs
        .iter()
        .filter(|(_, _, k)| text[*k].accent)
        .map(|(a, b, _)| (0.5 * (a + b), rng.gen_range(2.0..4.0) * accent_gain))
        .collect();
    let drift_phase = rng.gen_range(0.0..2.0 * PI);

    let f0_at = |time: f64| {
        let u = ((time - lead) / (speech_end - lead)).clamp(0.0, 1.0);
        let decl = 1.5 - 4.0 * u;
        let acc: f64 = accents
            .iter()
            .map(|(c, a)| a * (-0.5 * ((time - c) / 0.07).powi(2)).exp())
            .sum();
        let drift = 0.3 * (2.0 * PI * 1.3 * time + drift_phase).sin();
        f0_base * ((decl + acc + drift) / 12.0).exp2()
    };

    let mut source = vec![0.0; n];
    let mut targets = vec![[0.0f64; 3]; n];
    let mut seg_i = 0;
    let mut phase = 0.0f64;
    let mut prev_flow = 0.0;
    let mut period_jitter = 1.0;
    let v0 = text[0].vowel;
    let mut current = [0, 1, 2].map(|j| VOWELS[v0][j] * spk.vowel_offsets[v0][j]);
    for i in 0..n {
        let time = i as f64 / fs;
        while seg_i < segs.len() && time >= segs[seg_i].1 {
            seg_i += 1;
        }
        let env = match segs.get(seg_i) {
            Some(&(a, b, k)) if time >= a => {
                let v = text[k].vowel;
                current = [0, 1, 2].map(|j| VOWELS[v][j] * spk.vowel_offsets[v][j]);
                let gain = if text[k].accent { spk.accent_loudness } else { 1.0 };
                gain * ((time - a) / spk.ramp).min((b - time) / spk.ramp).clamp(0.0, 1.0)
            }
            _ => 0.0,
        };
        targets[i] = current;
        if env > 0.0 {
            phase += f0_at(time) * period_jitter / fs;
            if phase >= 1.0 {
                phase -= 1.0;
                period_jitter = 1.0 + spk.jitter * rng.gen_range(-1.0..1.0);
            }
            let flow = glottal_flow(phase, spk.open_phase, spk.closing_phase);
            source[i] = env * (flow - prev_flow) + env * spk.breathiness * rng.gen_range(-1.0..1.0);
            prev_flow = flow;
        } else {
            phase = 0.0;
            prev_flow = 0.0;
            source[i] = 1e-4 * rng.gen_range(-1.0..1.0);
        }
    }
    // spectral tilt
    let mut y1 = 0.0;
    for v in source.iter_mut() {
        y1 = *v + spk.lowpass * y1;
        *v = y1;
    }

    // time-varying resonator cascade with smoothed formant targets
    let smooth = (-1.0 / (spk.glide * fs)).exp();
    let mut f = [current[0] * scale, current[1] * scale, current[2] * scale];
    let mut state = [[0.0f64; 2]; 4];
    let bw = [60.0, 90.0, 130.0, 200.0].map(|b| b * spk.bandwidth_scale);
    let mut out = vec![0.0; n];
    let mut first = true;
    for i in 0..n {
        for (k, fk) in f.iter_mut().enumerate() {
            let target = targets[i][k] * scale;
            *fk = if first { target } else { smooth * *fk + (1.0 - smooth) * target };
        }
        first = false;
        let freqs = [f[0], f[1], f[2], spk.f4];
        let mut x = source[i];
        for k in 0..4 {
            let radius = (-PI * bw[k] / fs).exp();
            let a1 = -2.0 * radius * (2.0 * PI * freqs[k] / fs).cos();
            let a2 = radius * radius;
            let y = (1.0 + a1 + a2) * x - a1 * state[k][0] - a2 * state[k][1];
            state[k][1] = state[k][0];
            state[k][0] = y;
            x = y;
        }
        out[i] = x;
    }
    // fricatives: noise through one broad speaker-specific resonance
    let radius = (-PI * 1500.0 / fs).exp();
    let a1 = -2.0 * radius * (2.0 * PI * spk.fricative_hz / fs).cos();
    let a2 = radius * radius;
    for &(a, b) in &frics {
        let (i0, i1) = ((a * fs) as usize, ((b * fs) as usize).min(n));
        let (mut y1, mut y2) = (0.0, 0.0);
        for (i, o) in out.iter_mut().enumerate().take(i1).skip(i0) {
            let time = i as f64 / fs;
            let env = ((time - a) / 0.015).min((b - time) / 0.015).clamp(0.0, 1.0);
            let y = spk.fricative_level * env * rng.gen_range(-1.0..1.0) - a1 * y1 - a2 * y2;
            y2 = y1;
            y1 = y;
            *o += y;
        }
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(peak > 0.0) {
        return Err(Error::Silent("synthetic utterance is silent".into()));
    }
    let g = rng.gen_range(0.4..0.6) / peak;
    out.iter_mut().for_each(|v| *v *= g);
    Waveform::new(out, sample_rate)
}

/// Writes `wav/<id>.wav`, `manifest.csv` and `trials.csv` under `out_dir`.
///
/// Every speaker reads every sentence in both conditions in every session. Trials pair
/// each speaker's first-session modal recordings (enrollment) with every last-session
/// modal recording of the same group.
pub fn make_synth_corpus(cfg: &SynthCorpusConfig, out_dir: &Path) -> Result<Manifest> {
    if cfg.speakers_per_group < 2 || cfg.sentences == 0 || cfg.sessions < 2 {
        return Err(Error::invalid("need two speakers per group, a sentence and two sessions"));
    }
    std::fs::create_dir_all(out_dir.join("wav"))?;
    let spk = speakers(cfg);
    let texts: Vec<Vec<Syllable>> = (0..cfg.sentences).map(|j| sentence(cfg.seed, j)).collect();
    let mut jobs = Vec::new();
    for (si, s) in spk.iter().enumerate() {
        for session in 1..=cfg.sessions {
            for (ci, cond) in ["modal", DISGUISE_CONDITION].iter().enumerate() {
                for j in 0..cfg.sentences {
                    jobs.push((si, s, session, ci, *cond, j));
                }
            }
        }
    }
    use rayon::prelude::*;
    let rows: Vec<ManifestRow> = jobs
        .par_iter()
        .map(|&(si, s, session, ci, cond, j)| -> Result<ManifestRow> {
            let id = format!("{}_s{session}_{cond}_{j:02}", s.id);
            let mut rng = rng_for(cfg.seed, &[3, si as u64, session as u64, ci as u64, j as u64]);
            let w = render(s, &texts[j], ci == 1, cfg.sample_rate, &mut rng)?;
            let rel = format!("wav/{id}.wav");
            write_wav(out_dir.join(&rel), &w, Encoding::Pcm16)?;
            Ok(ManifestRow {
                utterance_id: id,
                path: rel,
                speaker_id: s.id.clone(),
                group: s.group.into(),
                condition: cond.into(),
                session: session.to_string(),
            })
        })
        .collect::<Result<_>>()?;
    let manifest = Manifest::new(rows, out_dir)?;
    manifest.write(std::fs::File::create(out_dir.join("manifest.csv"))?)?;
    let trials = corpus_trials(&manifest, &cfg.sessions.to_string());
    write_trials(&trials, std::fs::File::create(out_dir.join("trials.csv"))?)?;
    Ok(manifest)
}

/// Within-group trials: every speaker enrolled against every modal utterance of
/// `test_session`.
pub fn corpus_trials(manifest: &Manifest, test_session: &str) -> Vec<Trial> {
    let mut speakers: Vec<(&str, &str)> = manifest
        .rows
        .iter()
        .map(|r| (r.speaker_id.as_str(), r.group.as_str()))
        .collect();
    speakers.sort_unstable();
    speakers.dedup();
    let mut tests: Vec<&ManifestRow> = manifest
        .rows
        .iter()
        .filter(|r| r.session == test_session && r.condition == "modal")
        .collect();
    tests.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
    let mut out = Vec::new();
    for t in tests {
        for &(s, g) in &speakers {
            if g == t.group {
                out.push(Trial {
                    enroll_speaker: s.into(),
                    test_utterance: t.utterance_id.clone(),
                    label: if s == t.speaker_id { TrialLabel::Genuine } else { TrialLabel::Impostor },
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::median;
    use crate::pitch::{extract_f0, PitchConfig};

    #[test]
    fn groups_are_separated_by_construction() {
        let cfg = SynthCorpusConfig::default();
        let spk = speakers(&cfg);
        let med = |g: &str| {
            let v: Vec<f64> = spk.iter().filter(|s| s.group == g).map(|s| s.f0).collect();
            median(&v).unwrap()
        };
        let sep = 12.0 * (med("female") / med("male")).log2();
        assert!(sep >= 6.0, "{sep}");
    }

    #[test]
    fn rendering_is_deterministic_and_tracks() {
        let cfg = SynthCorpusConfig::default();
        let spk = &speakers(&cfg)[0];
        let text = sentence(cfg.seed, 0);
        let a = render(spk, &text, false, 16000, &mut rng_for(1, &[9])).unwrap();
        let b = render(spk, &text, false, 16000, &mut rng_for(1, &[9])).unwrap();
        assert_eq!(a, b);
        let t = extract_f0(&a, &PitchConfig::new(140.0, 520.0)).unwrap();
        let med = t.median_voiced().unwrap();
        assert!((med / spk.f0).log2().abs() * 12.0 < 3.0, "{med} vs {}", spk.f0);
        assert!(t.n_voiced() as f64 > 0.5 * t.len() as f64);
        let d = render(spk, &text, true, 16000, &mut rng_for(1, &[9])).unwrap();
        let td = extract_f0(&d, &PitchConfig::new(140.0, 520.0)).unwrap();
        assert!(td.median_voiced().unwrap() > med * 1.2);
    }

    #[test]
    fn trials_stay_within_groups() {
        let row = |id: &str, s: &str, g: &str, sess: &str| ManifestRow {
            utterance_id: id.into(),
            path: "x.wav".into(),
            speaker_id: s.into(),
            group: g.into(),
            condition: "modal".into(),
            session: sess.into(),
        };
        let m = Manifest::new(
            vec![
                row("a1", "a", "f", "1"),
                row("a2", "a", "f", "2"),
                row("b2", "b", "f", "2"),
                row("c2", "c", "m", "2"),
                row("d1", "d", "m", "1"),
            ],
            ".",
        )
        .unwrap();
        let t = corpus_trials(&m, "2");
        assert_eq!(t.len(), 2 + 2 + 2);
        assert_eq!(t.iter().filter(|t| t.label == TrialLabel::Genuine).count(), 3);
    }
}
