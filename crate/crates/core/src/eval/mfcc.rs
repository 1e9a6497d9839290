use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::audio::{resample, Waveform};
use crate::dsp::{hamming, real_fft};
use crate::error::{Error, Result};

/// Front-end settings of the speaker scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub n_coeffs: usize,
    pub frame: f64,
    pub hop: f64,
    pub n_mel_filters: usize,
    pub low_freq: f64,
    pub preemphasis: f64,
    /// Length of the sliding cepstral-mean window, seconds.
    pub cmn_window: f64,
    pub vad: bool,
    /// Frames more than this many dB below the loudest frame are dropped by the VAD.
    pub vad_range_db: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16000,
            n_coeffs: 23,
            frame: 0.025,
            hop: 0.01,
            n_mel_filters: 30,
            low_freq: 20.0,
            preemphasis: 0.97,
            cmn_window: 3.0,
            vad: true,
            vad_range_db: 30.0,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame > self.hop && self.hop > 0.0) {
            return Err(Error::invalid("MFCC frame must exceed hop and hop must be positive"));
        }
        if self.n_coeffs == 0 || self.n_coeffs > self.n_mel_filters {
            return Err(Error::invalid("need 1 ≤ n_coeffs ≤ n_mel_filters"));
        }
        if self.sample_rate == 0 || !(self.low_freq >= 0.0 && self.low_freq < self.sample_rate as f64 / 2.0) {
            return Err(Error::invalid("invalid MFCC sample rate or low frequency"));
        }
        Ok(())
    }
}

fn hz_to_mel(f: f64) -> f64 {
    1127.0 * (1.0 + f / 700.0).ln()
}

/// Triangular filters on the mel scale between `low` and Nyquist, as bin weight rows.
fn mel_filterbank(n_filters: usize, n_fft: usize, fs: f64, low: f64) -> Vec<Vec<f64>> {
    let n_bins = n_fft / 2 + 1;
    let (ml, mh) = (hz_to_mel(low), hz_to_mel(fs / 2.0));
    let delta = (mh - ml) / (n_filters + 1) as f64;
    (0..n_filters)
        .map(|m| {
            let left = ml + m as f64 * delta;
            let centre = left + delta;
            let right = centre + delta;
            (0..n_bins)
                .map(|k| {
                    let mel = hz_to_mel(k as f64 * fs / n_fft as f64);
                    if mel > left && mel < right {
                        if mel <= centre {
                            (mel - left) / (centre - left)
                        } else {
                            (right - mel) / (right - centre)
                        }
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Per-frame MFCCs (`[frame][coeff]`) and raw frame log-energies in dB.
pub fn mfcc_frames(w: &Waveform, cfg: &MfccConfig) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    cfg.validate()?;
    let w = if w.sample_rate() == cfg.sample_rate {
        w.clone()
    } else {
        resample(w, cfg.sample_rate)?
    };
    let fs = cfg.sample_rate as f64;
    let len = (cfg.frame * fs).round() as usize;
    let hop = (cfg.hop * fs).round() as usize;
    let x = w.samples();
    if x.len() < len {
        return Err(Error::TooShort("signal shorter than one MFCC frame".into()));
    }
    let n_fft = len.next_power_of_two();
    let win = hamming(len);
    let bank = mel_filterbank(cfg.n_mel_filters, n_fft, fs, cfg.low_freq);
    let nf = cfg.n_mel_filters;
    let mut planner = FftPlanner::new();
    let mut ceps = Vec::new();
    let mut energies = Vec::new();
    for start in (0..=(x.len() - len)).step_by(hop) {
        let raw = &x[start..start + len];
        let energy: f64 = raw.iter().map(|v| v * v).sum();
        energies.push(10.0 * energy.max(f64::MIN_POSITIVE).log10());
        let mean = raw.iter().sum::<f64>() / len as f64;
        let frame: Vec<f64> = (0..len)
            .map(|i| {
                let prev = if i > 0 { raw[i - 1] - mean } else { raw[0] - mean };
                ((raw[i] - mean) - cfg.preemphasis * prev) * win[i]
            })
            .collect();
        let power: Vec<f64> = real_fft(&mut planner, &frame, n_fft)
            .iter()
            .take(n_fft / 2 + 1)
            .map(|c| c.norm_sqr())
            .collect();
        let logmel: Vec<f64> = bank
            .iter()
            .map(|row| {
                let e: f64 = row.iter().zip(&power).map(|(a, b)| a * b).sum();
                e.max(f64::EPSILON).ln()
            })
            .collect();
        let c: Vec<f64> = (0..cfg.n_coeffs)
            .map(|k| {
                let scale = if k == 0 { (1.0 / nf as f64).sqrt() } else { (2.0 / nf as f64).sqrt() };
                scale
                    * logmel
                        .iter()
                        .enumerate()
                        .map(|(m, v)| v * (PI * k as f64 * (m as f64 + 0.5) / nf as f64).cos())
                        .sum::<f64>()
            })
            .collect();
        ceps.push(c);
    }
    Ok((ceps, energies))
}

/// Subtracts the mean over a centred sliding window of `window` frames.
pub fn sliding_cmn(frames: &[Vec<f64>], window: usize) -> Vec<Vec<f64>> {
    let n = frames.len();
    if n == 0 {
        return vec![];
    }
    let dim = frames[0].len();
    let window = window.clamp(1, n);
    // prefix sums per coefficient
    let mut prefix = vec![vec![0.0; dim]; n + 1];
    for i in 0..n {
        for d in 0..dim {
            prefix[i + 1][d] = prefix[i][d] + frames[i][d];
        }
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(window / 2).min(n - window);
            let hi = lo + window;
            (0..dim)
                .map(|d| frames[i][d] - (prefix[hi][d] - prefix[lo][d]) / window as f64)
                .collect()
        })
        .collect()
}

/// Frames below this energy (dB re. unit sample power) count as digital silence.
const SILENT_DB: f64 = -200.0;

/// Utterance embedding: means and standard deviations of mean-normalized MFCCs over
/// VAD-selected frames, scaled to unit length.
pub fn mfcc_embed(w: &Waveform, cfg: &MfccConfig) -> Result<Vec<f64>> {
    let (ceps, energies) = mfcc_frames(w, cfg)?;
    let window = (cfg.cmn_window / cfg.hop).round() as usize;
    let normed = sliding_cmn(&ceps, window);
    let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let selected: Vec<&Vec<f64>> = normed
        .iter()
        .zip(&energies)
        .filter(|(_, &e)| e > SILENT_DB && (!cfg.vad || e > max - cfg.vad_range_db))
        .map(|(c, _)| c)
        .collect();
    if selected.is_empty() {
        return Err(Error::Silent("no frames pass voice activity detection".into()));
    }
    let n = selected.len() as f64;
    let dim = cfg.n_coeffs;
    let mut emb = vec![0.0; 2 * dim];
    for c in &selected {
        for d in 0..dim {
            emb[d] += c[d] / n;
        }
    }
    for c in &selected {
        for d in 0..dim {
            emb[dim + d] += (c[d] - emb[d]).powi(2) / n;
        }
    }
    for v in emb[dim..].iter_mut() {
        *v = v.sqrt();
    }
    let norm = emb.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Silent("degenerate embedding".into()));
    }
    emb.iter_mut().for_each(|v| *v /= norm);
    Ok(emb)
}

/// Cosine similarity between the re-normalized mean of `enroll` and `test`.
pub fn score_trials(enroll: &[Vec<f64>], test: &[f64]) -> Result<f64> {
    if enroll.is_empty() {
        return Err(Error::invalid("empty enrollment"));
    }
    let dim = test.len();
    if enroll.iter().any(|e| e.len() != dim) {
        return Err(Error::invalid("embedding dimensions differ"));
    }
    let unit = |v: &[f64]| {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| if n > 0.0 { x / n } else { 0.0 }).collect::<Vec<f64>>()
    };
    let mut mean = vec![0.0; dim];
    for e in enroll {
        for (m, v) in mean.iter_mut().zip(unit(e)) {
            *m += v;
        }
    }
    let a = unit(&mean);
    let b = unit(test);
    Ok(a.iter().zip(&b).map(|(x, y)| x * y).sum())
}
