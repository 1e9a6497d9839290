//! Source-filter vowel synthesis used for the synthetic corpus and test fixtures.

use std::f64::consts::PI;

use crate::audio::Waveform;
use crate::error::Result;

/// A single resonance of the vocal-tract filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub frequency: f64,
    pub bandwidth: f64,
}

impl Resonance {
    pub const fn new(frequency: f64, bandwidth: f64) -> Self {
        Self { frequency, bandwidth }
    }
}

/// Band-limited harmonic source following an f0 contour, harmonic `h` weighted by
/// `h^-tilt`. Samples where `f0(t) <= 0` are silent.
pub fn harmonic_source(f0: &dyn Fn(f64) -> f64, sample_rate: u32, n_samples: usize, tilt: f64) -> Vec<f64> {
    let fs = sample_rate as f64;
    let nyquist = fs / 2.0;
    let mut phase = 0.0f64;
    let mut out = vec![0.0; n_samples];
    for (n, o) in out.iter_mut().enumerate() {
        let f = f0(n as f64 / fs);
        if f > 0.0 {
            let n_harm = ((nyquist * 0.95) / f).floor() as usize;
            *o = (1..=n_harm)
                .map(|h| (h as f64 * phase).cos() * (h as f64).powf(-tilt))
                .sum();
            phase = (phase + 2.0 * PI * f / fs) % (2.0 * PI);
        }
    }
    out
}

/// Cascade of two-pole resonators with unit gain at DC.
pub fn resonate(x: &[f64], resonances: &[Resonance], sample_rate: u32) -> Vec<f64> {
    let fs = sample_rate as f64;
    let mut y = x.to_vec();
    for r in resonances {
        let radius = (-PI * r.bandwidth / fs).exp();
        let theta = 2.0 * PI * r.frequency / fs;
        let a1 = -2.0 * radius * theta.cos();
        let a2 = radius * radius;
        let g = 1.0 + a1 + a2;
        let (mut y1, mut y2) = (0.0, 0.0);
        for v in y.iter_mut() {
            let out = g * *v - a1 * y1 - a2 * y2;
            y2 = y1;
            y1 = out;
            *v = out;
        }
    }
    y
}

/// All-pole polynomial `1 + a_1 z^-1 + …` of a resonance cascade.
pub fn resonance_polynomial(resonances: &[Resonance], sample_rate: u32) -> Vec<f64> {
    let fs = sample_rate as f64;
    let mut poly = vec![1.0];
    for r in resonances {
        let radius = (-PI * r.bandwidth / fs).exp();
        let theta = 2.0 * PI * r.frequency / fs;
        let sec = [1.0, -2.0 * radius * theta.cos(), radius * radius];
        let mut next = vec![0.0; poly.len() + 2];
        for (i, p) in poly.iter().enumerate() {
            for (j, s) in sec.iter().enumerate() {
                next[i + j] += p * s;
            }
        }
        poly = next;
    }
    poly
}

/// Vowel with the given f0 contour and resonances, peak-normalized to `peak`.
pub fn vowel(
    f0: &dyn Fn(f64) -> f64,
    resonances: &[Resonance],
    sample_rate: u32,
    duration: f64,
    peak: f64,
) -> Result<Waveform> {
    let n = (duration * sample_rate as f64).round() as usize;
    let src = harmonic_source(f0, sample_rate, n, 1.0);
    let mut y = resonate(&src, resonances, sample_rate);
    let max = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max > 0.0 {
        let g = peak / max;
        y.iter_mut().for_each(|v| *v *= g);
    }
    Waveform::new(y, sample_rate)
}

/// Vowel with constant f0 and the given formant frequencies (bandwidths 60, 90, 120, … Hz).
pub fn steady_vowel(f0: f64, formants: &[f64], sample_rate: u32, duration: f64) -> Result<Waveform> {
    let res: Vec<Resonance> = formants
        .iter()
        .enumerate()
        .map(|(i, &f)| Resonance::new(f, 60.0 + 30.0 * i as f64))
        .collect();
    vowel(&|_| f0, &res, sample_rate, duration, 0.5)
}
