use std::f64::consts::PI;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use super::lpc::{burg, is_formant, pole_to_formant, polynomial_from_roots, polynomial_roots};
use crate::audio::Waveform;
use crate::dsp::hann_interior;
use crate::error::{Error, Result};

/// Largest pole radius allowed in a modified synthesis filter.
pub const MAX_POLE_RADIUS: f64 = 0.998;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FormantShiftConfig {
    pub factor: f64,
    pub n_formants: usize,
    /// `None` selects `round(sample_rate / 1000) + 2`.
    pub lpc_order: Option<usize>,
    pub frame: f64,
    pub hop: f64,
    pub preemphasis_hz: f64,
}

impl Default for FormantShiftConfig {
    fn default() -> Self {
        Self {
            factor: 1.0,
            n_formants: 3,
            lpc_order: None,
            frame: 0.025,
            hop: 0.01,
            preemphasis_hz: 50.0,
        }
    }
}

impl FormantShiftConfig {
    pub fn with_factor(factor: f64) -> Self {
        Self {
            factor,
            ..Self::default()
        }
    }

    pub fn order_for(&self, sample_rate: u32) -> usize {
        self.lpc_order
            .unwrap_or_else(|| (sample_rate as f64 / 1000.0).round() as usize + 2)
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if !(self.factor > 0.0 && self.factor.is_finite()) {
            return Err(Error::invalid("formant factor must be positive"));
        }
        if self.n_formants == 0 {
            return Err(Error::invalid("n_formants must be at least 1"));
        }
        let order = self.order_for(sample_rate);
        if order < 2 * self.n_formants + 2 {
            return Err(Error::invalid(format!(
                "LPC order {order} is too low for {} formants",
                self.n_formants
            )));
        }
        if !(self.frame > 0.0 && self.hop > 0.0 && self.hop <= self.frame) {
            return Err(Error::invalid("frame and hop must be positive with hop <= frame"));
        }
        if (self.frame * sample_rate as f64).round() as usize <= order {
            return Err(Error::invalid("analysis frame is shorter than the LPC order"));
        }
        if !(self.preemphasis_hz >= 0.0) {
            return Err(Error::invalid("pre-emphasis frequency must be non-negative"));
        }
        Ok(())
    }
}

/// Output of [`shift_formants`].
#[derive(Debug, Clone)]
pub struct FormantShiftResult {
    pub waveform: Waveform,
    /// Poles pulled back to [`MAX_POLE_RADIUS`].
    pub clamped_poles: usize,
    /// Frames without a usable LPC model, copied through unchanged.
    pub invalid_frames: usize,
}

fn preemphasis_coefficient(hz: f64, fs: f64) -> f64 {
    (-2.0 * PI * hz / fs).exp()
}

fn preemphasize(x: &[f64], alpha: f64) -> Vec<f64> {
    (0..x.len())
        .map(|n| x[n] - if n > 0 { alpha * x[n - 1] } else { 0.0 })
        .collect()
}

fn deemphasize(y: &[f64], alpha: f64) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    let mut prev = 0.0;
    for (o, &v) in out.iter_mut().zip(y) {
        prev = v + alpha * prev;
        *o = prev;
    }
    out
}

struct Framing {
    len: usize,
    hop: usize,
    count: usize,
}

fn framing(n: usize, frame: f64, hop: f64, fs: f64) -> Framing {
    let len = ((frame * fs).round() as usize).max(1);
    let hop = ((hop * fs).round() as usize).max(1);
    let count = if n <= len { 1 } else { (n - len).div_ceil(hop) + 1 };
    Framing { len, hop, count }
}

fn windowed(y: &[f64], start: usize, win: &[f64]) -> Vec<f64> {
    win.iter()
        .enumerate()
        .map(|(i, w)| y.get(start + i).copied().unwrap_or(0.0) * w)
        .collect()
}

/// Scales the angles of the `n` lowest formant pole pairs by `factor`, keeping radii.
/// Returns the new polynomial (or `None` when nothing changed) and the clamp count.
fn modify_poles(a: &[f64], factor: f64, n: usize, fs: f64) -> Option<(Option<Vec<f64>>, usize)> {
    let mut roots = polynomial_roots(a)?;
    let mut formants: Vec<(usize, f64)> = roots
        .iter()
        .enumerate()
        .filter(|(_, r)| r.im > 0.0)
        .filter_map(|(i, r)| {
            let (f, b) = pole_to_formant(*r, fs);
            is_formant(f, b, fs).then_some((i, f))
        })
        .collect();
    formants.sort_by(|x, y| x.1.total_cmp(&y.1));
    formants.truncate(n);
    let mut changed = false;
    if factor != 1.0 {
        for &(i, _) in &formants {
            let r = roots[i];
            let angle = (r.arg() * factor).min(0.95 * PI);
            let new = Complex::from_polar(r.norm(), angle);
            // the conjugate partner is the root closest to conj(r)
            let partner = roots
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .min_by(|x, y| (x.1 - r.conj()).norm().total_cmp(&(y.1 - r.conj()).norm()))
                .map(|(j, _)| j);
            roots[i] = new;
            if let Some(j) = partner {
                roots[j] = new.conj();
            }
            changed = true;
        }
    }
    let mut clamped = 0;
    for r in roots.iter_mut() {
        if r.norm() >= 1.0 {
            *r = Complex::from_polar(MAX_POLE_RADIUS, r.arg());
            clamped += 1;
            changed = true;
        }
    }
    Some((changed.then(|| polynomial_from_roots(&roots)), clamped))
}

/// Shifts the lowest formants of `w` by `cfg.factor` through frame-wise Burg LPC.
///
/// Each frame's residual, obtained by inverse filtering the pre-emphasized signal with
/// the frame's own polynomial, drives the modified all-pole filter. The filter state is
/// seeded with the input a warm-up period before the frame, the frame is gain-matched to
/// the input frame, and frames are overlap-added with a Hann window normalized by the
/// window sum. A factor of 1 reproduces the input.
pub fn shift_formants(w: &Waveform, cfg: &FormantShiftConfig) -> Result<FormantShiftResult> {
    let sr = w.sample_rate();
    cfg.validate(sr)?;
    let fs = sr as f64;
    let order = cfg.order_for(sr);
    let alpha = preemphasis_coefficient(cfg.preemphasis_hz, fs);
    let x = w.samples();
    let n = x.len();
    if n == 0 {
        return Ok(FormantShiftResult {
            waveform: w.clone(),
            clamped_poles: 0,
            invalid_frames: 0,
        });
    }
    let y = preemphasize(x, alpha);
    let fr = framing(n, cfg.frame, cfg.hop, fs);
    let win = hann_interior(fr.len);
    let warmup = 4 * order;

    let mut acc = vec![0.0; n];
    let mut wsum = vec![0.0; n];
    let mut clamped_poles = 0;
    let mut invalid_frames = 0;
    for m in 0..fr.count {
        let start = m * fr.hop;
        let end = (start + fr.len).min(n);
        let model = burg(&windowed(&y, start, &win), order);
        let synthesized: Vec<f64> = match model.and_then(|a| {
            modify_poles(&a, cfg.factor, cfg.n_formants, fs).map(|(new, c)| (a, new, c))
        }) {
            None => {
                invalid_frames += 1;
                y[start..end].to_vec()
            }
            Some((_, None, c)) => {
                clamped_poles += c;
                y[start..end].to_vec()
            }
            Some((a, Some(new), c)) => {
                clamped_poles += c;
                let from = start.saturating_sub(warmup);
                // output history before `from` is the input itself
                let mut out: Vec<f64> = Vec::with_capacity(end - from);
                for i in from..end {
                    let e: f64 = (0..=order)
                        .map(|k| if i >= k { a[k] * y[i - k] } else { 0.0 })
                        .sum();
                    let fb: f64 = (1..=order)
                        .map(|k| {
                            if i < k {
                                0.0
                            } else if i - k >= from {
                                new[k] * out[i - k - from]
                            } else {
                                new[k] * y[i - k]
                            }
                        })
                        .sum();
                    out.push(e - fb);
                }
                let seg = out[start - from..].to_vec();
                let target: f64 = seg.iter().zip(&y[start..end]).zip(&win).map(|((_, v), w)| (v * w).powi(2)).sum();
                let got: f64 = seg.iter().zip(&win).map(|(v, w)| (v * w).powi(2)).sum();
                let gain = if got > 0.0 { (target / got).sqrt() } else { 1.0 };
                seg.iter().map(|v| v * gain).collect()
            }
        };
        for (i, v) in synthesized.iter().enumerate() {
            acc[start + i] += win[i] * v;
            wsum[start + i] += win[i];
        }
    }
    let mixed: Vec<f64> = acc
        .iter()
        .zip(&wsum)
        .zip(&y)
        .map(|((a, s), orig)| if *s > 1e-12 { a / s } else { *orig })
        .collect();
    Ok(FormantShiftResult {
        waveform: Waveform::new(deemphasize(&mixed, alpha), sr)?,
        clamped_poles,
        invalid_frames,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Formant {
    pub frequency: f64,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormantFrame {
    /// Centre of the analysis frame, seconds.
    pub time: f64,
    /// Formants in ascending frequency; empty when `valid` is false.
    pub formants: Vec<Formant>,
    pub valid: bool,
}

/// Frame-wise Burg LPC formant tracking with 50 Hz pre-emphasis and a Hann window.
pub fn track_formants(w: &Waveform, lpc_order: usize, frame: f64, hop: f64) -> Result<Vec<FormantFrame>> {
    if lpc_order < 2 {
        return Err(Error::invalid("LPC order must be at least 2"));
    }
    if !(frame > 0.0 && hop > 0.0) {
        return Err(Error::invalid("frame and hop must be positive"));
    }
    let fs = w.sample_rate() as f64;
    let y = preemphasize(w.samples(), preemphasis_coefficient(50.0, fs));
    let fr = framing(y.len(), frame, hop, fs);
    if fr.len <= lpc_order || y.len() < fr.len {
        return Err(Error::TooShort("signal shorter than one analysis frame".into()));
    }
    let win = hann_interior(fr.len);
    let count = (y.len() - fr.len) / fr.hop + 1;
    Ok((0..count)
        .map(|m| {
            let start = m * fr.hop;
            let time = (start as f64 + fr.len as f64 / 2.0) / fs;
            let roots = burg(&windowed(&y, start, &win), lpc_order).and_then(|a| polynomial_roots(&a));
            match roots {
                None => FormantFrame {
                    time,
                    formants: vec![],
                    valid: false,
                },
                Some(roots) => {
                    let mut formants: Vec<Formant> = roots
                        .iter()
                        .filter(|r| r.im > 0.0)
                        .map(|r| {
                            let (frequency, bandwidth) = pole_to_formant(*r, fs);
                            Formant { frequency, bandwidth }
                        })
                        .filter(|f| is_formant(f.frequency, f.bandwidth, fs))
                        .collect();
                    formants.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
                    FormantFrame {
                        time,
                        formants,
                        valid: true,
                    }
                }
            }
        })
        .collect())
}

/// Median of the `k`-th formant frequency over valid frames that have one.
pub fn median_formant(frames: &[FormantFrame], k: usize) -> Option<f64> {
    let v: Vec<f64> = frames
        .iter()
        .filter(|f| f.valid)
        .filter_map(|f| f.formants.get(k).map(|x| x.frequency))
        .collect();
    crate::dsp::median(&v)
}
