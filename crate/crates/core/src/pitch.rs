//! Autocorrelation f0 tracking, unvoiced-gap interpolation and semitone conversion.
//!
//! The tracker follows the window-normalized autocorrelation scheme: each frame is
//! mean-removed, Hann-windowed and autocorrelated, and the result is divided by the
//! autocorrelation of the window itself so that peak heights approximate the true
//! normalized autocorrelation of the signal. Peaks are refined by parabolic
//! interpolation and scored with a small octave cost; frames whose best candidate does
//! not beat an intensity-dependent unvoiced strength are marked unvoiced.

use std::io::{Read, Write};

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::Waveform;
use crate::dsp::{self, autocorrelation, hann_symmetric, parabolic_peak};
use crate::error::{Error, Result};

/// Search band of the tracker in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchRange {
    pub floor: f64,
    pub ceiling: f64,
}

impl PitchRange {
    pub const fn new(floor: f64, ceiling: f64) -> Self {
        Self { floor, ceiling }
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.floor && f <= self.ceiling
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSearch {
    /// Per-frame best candidate with an octave-jump penalty against the previous frame.
    #[default]
    Greedy,
    /// Dynamic-programming search over all frames.
    Viterbi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PitchConfig {
    #[serde(flatten)]
    pub range: PitchRange,
    /// Frame step in seconds.
    pub hop: f64,
    pub voicing_threshold: f64,
    /// Analysis window length in periods of the floor frequency.
    pub window_periods: f64,
    pub silence_threshold: f64,
    pub octave_cost: f64,
    pub octave_jump_cost: f64,
    pub voiced_unvoiced_cost: f64,
    pub path: PathSearch,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            range: PitchRange::new(75.0, 600.0),
            hop: 0.01,
            voicing_threshold: 0.45,
            window_periods: 3.0,
            silence_threshold: 0.03,
            octave_cost: 0.01,
            octave_jump_cost: 0.35,
            voiced_unvoiced_cost: 0.14,
            path: PathSearch::Greedy,
        }
    }
}

impl PitchConfig {
    pub fn new(floor: f64, ceiling: f64) -> Self {
        Self {
            range: PitchRange::new(floor, ceiling),
            ..Self::default()
        }
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let PitchRange { floor, ceiling } = self.range;
        if !(floor > 0.0 && floor < ceiling && ceiling < sample_rate as f64 / 2.0) {
            return Err(Error::invalid(format!(
                "pitch range {floor}..{ceiling} Hz is not valid at {sample_rate} Hz"
            )));
        }
        if !(self.hop > 0.0) {
            return Err(Error::invalid("hop must be positive"));
        }
        if !(self.voicing_threshold > 0.0 && self.voicing_threshold < 1.0) {
            return Err(Error::invalid("voicing threshold must lie in (0, 1)"));
        }
        if !(self.window_periods >= 1.0) {
            return Err(Error::invalid("window must span at least one floor period"));
        }
        Ok(())
    }

    pub fn window_seconds(&self) -> f64 {
        self.window_periods / self.range.floor
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Hz,
    Semitone,
}

/// Frame-wise f0 values with voicing decisions.
///
/// Unvoiced frames carry `NaN` until [`interpolate_unvoiced`] fills them; the `voiced`
/// flags are kept through every later transformation.
#[derive(Debug, Clone, PartialEq)]
pub struct F0Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub voiced: Vec<bool>,
    pub unit: Unit,
}

impl F0Trajectory {
    pub fn new(times: Vec<f64>, values: Vec<f64>, voiced: Vec<bool>, unit: Unit) -> Result<Self> {
        if times.len() != values.len() || times.len() != voiced.len() {
            return Err(Error::invalid("times, values and voicing must have equal length"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("frame times must be strictly increasing"));
        }
        if values.iter().zip(&voiced).any(|(v, &vo)| vo && !v.is_finite()) {
            return Err(Error::invalid("voiced frames must carry finite values"));
        }
        Ok(Self {
            times,
            values,
            voiced,
            unit,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_voiced(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }

    /// Median over voiced frames.
    pub fn median_voiced(&self) -> Option<f64> {
        let v: Vec<f64> = self
            .values
            .iter()
            .zip(&self.voiced)
            .filter(|(_, &vo)| vo)
            .map(|(&x, _)| x)
            .collect();
        dsp::median(&v)
    }

    /// Linearly interpolated value at `time`, held constant beyond the first and last frame.
    pub fn value_at(&self, time: f64) -> f64 {
        dsp::interp_linear(&self.times, &self.values, time)
    }

    /// Voicing of the frame nearest to `time`.
    pub fn voiced_at(&self, time: f64) -> bool {
        if self.is_empty() {
            return false;
        }
        let i = self.times.partition_point(|&t| t < time);
        let idx = if i == 0 {
            0
        } else if i >= self.len() {
            self.len() - 1
        } else if (self.times[i] - time) < (time - self.times[i - 1]) {
            i
        } else {
            i - 1
        };
        self.voiced[idx]
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64, unit: Unit) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            voiced: self.voiced.clone(),
            unit,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    freq: f64,
    strength: f64,
}

struct FrameAnalysis {
    candidates: Vec<Candidate>,
    unvoiced_strength: f64,
}

const MAX_CANDIDATES: usize = 15;
/// A higher-frequency peak at least this fraction as strong as a candidate marks the
/// candidate as a subharmonic of an out-of-band periodicity.
const SUBHARMONIC_RATIO: f64 = 0.9;

/// Extracts an f0 track with one frame per hop.
pub fn extract_f0(w: &Waveform, cfg: &PitchConfig) -> Result<F0Trajectory> {
    if w.is_empty() {
        return Err(Error::TooShort("empty waveform".into()));
    }
    cfg.validate(w.sample_rate())?;
    let fs = w.sample_rate() as f64;
    let x = w.samples();
    let win_len = (cfg.window_seconds() * fs).round() as usize;
    if x.len() < win_len || win_len < 4 {
        return Err(Error::TooShort(format!(
            "{} samples is shorter than the {win_len}-sample analysis window",
            x.len()
        )));
    }
    let hop = cfg.hop * fs;
    let n_frames = ((x.len() - win_len) as f64 / hop).floor() as usize + 1;

    let mean_all = x.iter().sum::<f64>() / x.len() as f64;
    let global_peak = x.iter().map(|v| (v - mean_all).abs()).fold(0.0, f64::max);

    let window = hann_symmetric(win_len);
    let mut planner = FftPlanner::new();
    let r_win = autocorrelation(&mut planner, &window);
    let min_lag = fs / cfg.range.ceiling;
    let max_lag = fs / cfg.range.floor;
    let search_hi = (max_lag.ceil() as usize + 1).min(win_len / 2);

    let mut frames = Vec::with_capacity(n_frames);
    let mut times = Vec::with_capacity(n_frames);
    let mut seg = vec![0.0; win_len];
    for k in 0..n_frames {
        let start = (k as f64 * hop).round() as usize;
        let start = start.min(x.len() - win_len);
        times.push((start as f64 + win_len as f64 / 2.0) / fs);
        let frame = &x[start..start + win_len];
        let mean = frame.iter().sum::<f64>() / win_len as f64;
        let local_peak = frame.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        for (i, s) in seg.iter_mut().enumerate() {
            *s = (frame[i] - mean) * window[i];
        }
        let unvoiced_strength = if global_peak > 0.0 {
            cfg.voicing_threshold
                + (2.0
                    - (local_peak / global_peak)
                        / (cfg.silence_threshold / (1.0 + cfg.voicing_threshold)))
                    .max(0.0)
        } else {
            f64::INFINITY
        };
        let r_a = autocorrelation(&mut planner, &seg);
        if r_a[0] <= 0.0 || local_peak == 0.0 {
            frames.push(FrameAnalysis {
                candidates: Vec::new(),
                unvoiced_strength,
            });
            continue;
        }
        let r: Vec<f64> = (0..=search_hi.min(win_len - 1))
            .map(|lag| (r_a[lag] / r_a[0]) / (r_win[lag] / r_win[0]))
            .collect();
        let candidates = frame_candidates(&r, fs, min_lag, max_lag, cfg);
        frames.push(FrameAnalysis {
            candidates,
            unvoiced_strength,
        });
    }

    let choice = match cfg.path {
        PathSearch::Greedy => greedy_path(&frames, cfg),
        PathSearch::Viterbi => viterbi_path(&frames, cfg),
    };
    let mut values = Vec::with_capacity(n_frames);
    let mut voiced = Vec::with_capacity(n_frames);
    for (frame, c) in frames.iter().zip(choice) {
        match c {
            Some(i) => {
                values.push(frame.candidates[i].freq);
                voiced.push(true);
            }
            None => {
                values.push(f64::NAN);
                voiced.push(false);
            }
        }
    }
    F0Trajectory::new(times, values, voiced, Unit::Hz)
}

fn frame_candidates(
    r: &[f64],
    fs: f64,
    min_lag: f64,
    max_lag: f64,
    cfg: &PitchConfig,
) -> Vec<Candidate> {
    let peaks: Vec<(f64, f64)> = (2..r.len().saturating_sub(1))
        .filter(|&t| r[t] > 0.0 && r[t] >= r[t - 1] && r[t] > r[t + 1])
        .map(|t| {
            let (off, val) = parabolic_peak(r[t - 1], r[t], r[t + 1]);
            let val = if val > 1.0 { 1.0 / val } else { val };
            (t as f64 + off, val)
        })
        .collect();
    let above_band: Vec<(f64, f64)> = peaks.iter().copied().filter(|p| p.0 < min_lag).collect();
    let mut out: Vec<Candidate> = peaks
        .iter()
        .filter(|(lag, _)| *lag >= min_lag && *lag <= max_lag)
        .filter(|(lag, val)| {
            !above_band.iter().any(|&(short, v)| {
                let ratio = lag / short;
                v >= SUBHARMONIC_RATIO * val && ratio >= 1.5 && (ratio - ratio.round()).abs() < 0.1
            })
        })
        .map(|&(lag, val)| Candidate {
            freq: fs / lag,
            strength: val - cfg.octave_cost * (cfg.range.floor * lag / fs).log2(),
        })
        .filter(|c| cfg.range.contains(c.freq))
        .collect();
    out.sort_by(|a, b| b.strength.total_cmp(&a.strength));
    out.truncate(MAX_CANDIDATES);
    out
}

fn greedy_path(frames: &[FrameAnalysis], cfg: &PitchConfig) -> Vec<Option<usize>> {
    let mut prev: Option<f64> = None;
    frames
        .iter()
        .map(|f| {
            let best_raw = f.candidates.first().map(|c| c.strength);
            let voiced = matches!(best_raw, Some(s) if s > f.unvoiced_strength);
            if !voiced {
                prev = None;
                return None;
            }
            let score = |c: &Candidate| match prev {
                Some(p) => c.strength - cfg.octave_jump_cost * (c.freq / p).log2().abs(),
                None => c.strength,
            };
            let (idx, c) = f
                .candidates
                .iter()
                .enumerate()
                .max_by(|a, b| score(a.1).total_cmp(&score(b.1)))
                .expect("voiced frame has a candidate");
            prev = Some(c.freq);
            Some(idx)
        })
        .collect()
}

fn viterbi_path(frames: &[FrameAnalysis], cfg: &PitchConfig) -> Vec<Option<usize>> {
    if frames.is_empty() {
        return Vec::new();
    }
    // state 0 is unvoiced, state i + 1 is candidate i
    let time_correction = 0.01 / cfg.hop;
    let states = |f: &FrameAnalysis| f.candidates.len() + 1;
    let local = |f: &FrameAnalysis, s: usize| {
        if s == 0 {
            f.unvoiced_strength
        } else {
            f.candidates[s - 1].strength
        }
    };
    let freq = |f: &FrameAnalysis, s: usize| {
        if s == 0 {
            0.0
        } else {
            f.candidates[s - 1].freq
        }
    };
    let transition = |fa: f64, fb: f64| {
        let cost = match (fa > 0.0, fb > 0.0) {
            (false, false) => 0.0,
            (true, true) => cfg.octave_jump_cost * (fb / fa).log2().abs(),
            _ => cfg.voiced_unvoiced_cost,
        };
        cost * time_correction
    };

    let mut score: Vec<f64> = (0..states(&frames[0])).map(|s| local(&frames[0], s)).collect();
    let mut back: Vec<Vec<usize>> = vec![vec![0; score.len()]];
    for k in 1..frames.len() {
        let (pf, cf) = (&frames[k - 1], &frames[k]);
        let mut next = Vec::with_capacity(states(cf));
        let mut bp = Vec::with_capacity(states(cf));
        for s in 0..states(cf) {
            let (arg, best) = (0..score.len())
                .map(|p| (p, score[p] - transition(freq(pf, p), freq(cf, s))))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("at least the unvoiced state");
            next.push(best + local(cf, s));
            bp.push(arg);
        }
        score = next;
        back.push(bp);
    }
    let mut s = (0..score.len())
        .max_by(|&a, &b| score[a].total_cmp(&score[b]))
        .unwrap_or(0);
    let mut path = vec![None; frames.len()];
    for k in (0..frames.len()).rev() {
        path[k] = (s > 0).then(|| s - 1);
        s = back[k][s];
    }
    path
}

/// Fills unvoiced frames: linear interpolation in Hz inside the utterance and
/// nearest-value extension at the edges. Voicing flags are left untouched.
pub fn interpolate_unvoiced(t: &F0Trajectory) -> Result<F0Trajectory> {
    if t.unit != Unit::Hz {
        return Err(Error::invalid("interpolation expects a trajectory in Hz"));
    }
    let anchors: Vec<usize> = (0..t.len()).filter(|&i| t.voiced[i]).collect();
    let (first, last) = match (anchors.first(), anchors.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::NoVoicedFrames),
    };
    let mut values = t.values.clone();
    for v in values.iter_mut().take(first) {
        *v = t.values[first];
    }
    for v in values.iter_mut().skip(last + 1) {
        *v = t.values[last];
    }
    for pair in anchors.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for i in a + 1..b {
            let frac = (t.times[i] - t.times[a]) / (t.times[b] - t.times[a]);
            values[i] = t.values[a] + frac * (t.values[b] - t.values[a]);
        }
    }
    Ok(F0Trajectory {
        times: t.times.clone(),
        values,
        voiced: t.voiced.clone(),
        unit: Unit::Hz,
    })
}

/// `12 * log2(f / reference)`; every value must be a positive frequency.
pub fn hz_to_semitones(t: &F0Trajectory, reference: f64) -> Result<F0Trajectory> {
    if t.unit != Unit::Hz {
        return Err(Error::invalid("trajectory is not in Hz"));
    }
    if !(reference > 0.0) {
        return Err(Error::invalid("reference frequency must be positive"));
    }
    if let Some(v) = t.values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::OutOfRange(format!("cannot convert {v} Hz to semitones")));
    }
    Ok(t.map_values(|v| 12.0 * (v / reference).log2(), Unit::Semitone))
}

pub fn semitones_to_hz(t: &F0Trajectory, reference: f64) -> Result<F0Trajectory> {
    if t.unit != Unit::Semitone {
        return Err(Error::invalid("trajectory is not in semitones"));
    }
    Ok(t.map_values(|v| reference * (v / 12.0).exp2(), Unit::Hz))
}

/// Writes `time_s,f0_hz,voiced` rows; unvoiced `NaN` values become empty fields.
pub fn write_trajectory_csv<W: Write>(t: &F0Trajectory, out: W) -> Result<()> {
    if t.unit != Unit::Hz {
        return Err(Error::invalid("trajectory CSV holds Hz values"));
    }
    let mut wr = csv::Writer::from_writer(out);
    wr.write_record(["time_s", "f0_hz", "voiced"])?;
    for i in 0..t.len() {
        let v = t.values[i];
        let f0 = if v.is_finite() { v.to_string() } else { String::new() };
        wr.write_record([t.times[i].to_string(), f0, u8::from(t.voiced[i]).to_string()])?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<F0Trajectory> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["time_s", "f0_hz", "voiced"] {
        return Err(Error::Format(format!("unexpected trajectory header {headers:?}")));
    }
    let (mut times, mut values, mut voiced) = (Vec::new(), Vec::new(), Vec::new());
    for (line, rec) in rd.records().enumerate() {
        let rec = rec?;
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("row {}: {e}", line + 1)))
        };
        times.push(parse(&rec[0])?);
        values.push(if rec[1].trim().is_empty() { f64::NAN } else { parse(&rec[1])? });
        voiced.push(match rec[2].trim() {
            "1" => true,
            "0" => false,
            other => return Err(Error::Format(format!("row {}: voiced flag {other:?}", line + 1))),
        });
    }
    F0Trajectory::new(times, values, voiced, Unit::Hz)
}
