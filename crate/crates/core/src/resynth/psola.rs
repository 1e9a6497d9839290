use std::f64::consts::FRAC_PI_2;

use super::epochs::{detect_epochs, EpochSequence};
use crate::audio::Waveform;
use crate::dsp::sinc;
use crate::error::{Error, Result};
use crate::pitch::{F0Trajectory, PitchRange, Unit};

/// Lowest target f0 accepted on voiced frames.
pub const MIN_TARGET_F0: f64 = 20.0;

/// Half-width of the windowed-sinc kernel used for fractional grain placement.
const FRACTIONAL_TAPS: isize = 16;

/// Grain of the asymmetric two-period window: rising half-Hann over `left` samples
/// before the mark, falling half-Hann over `right` samples after it. Neighbouring grains
/// built from the same marks sum to one.
fn grain(x: &[f64], src: usize, left: usize, right: usize) -> Vec<f64> {
    let n = x.len() as isize;
    (-(left as isize)..=(right as isize))
        .map(|k| {
            let w = if k < 0 {
                let u = (left as isize + k) as f64 / left as f64;
                (FRAC_PI_2 * u).sin().powi(2)
            } else if k == 0 {
                1.0
            } else {
                let u = k as f64 / right as f64;
                (FRAC_PI_2 * u).cos().powi(2)
            };
            let s = src as isize + k;
            if s >= 0 && s < n {
                w * x[s as usize]
            } else {
                0.0
            }
        })
        .collect()
}

/// Adds `g` (whose first sample belongs at `pos - left`) to `out`, shifting by the
/// fractional part of `pos` with a Hann-windowed sinc kernel.
fn place_grain(out: &mut [f64], g: &[f64], pos: f64, left: usize) {
    let m = out.len() as isize;
    let base = pos.floor();
    let frac = pos - base;
    let origin = base as isize - left as isize;
    if frac < 1e-9 {
        for (i, v) in g.iter().enumerate() {
            let d = origin + i as isize;
            if d >= 0 && d < m {
                out[d as usize] += v;
            }
        }
        return;
    }
    let kernel: Vec<f64> = (-FRACTIONAL_TAPS + 1..=FRACTIONAL_TAPS)
        .map(|j| {
            let t = j as f64 - frac;
            let w = 0.5 + 0.5 * (std::f64::consts::PI * t / FRACTIONAL_TAPS as f64).cos();
            sinc(t) * w
        })
        .collect();
    for (i, v) in g.iter().enumerate() {
        for (jj, h) in kernel.iter().enumerate() {
            let d = origin + i as isize + jj as isize - FRACTIONAL_TAPS + 1;
            if d >= 0 && d < m {
                out[d as usize] += v * h;
            }
        }
    }
}

fn validate_tracks(source: &F0Trajectory, target: &F0Trajectory, sample_rate: u32) -> Result<()> {
    if source.unit != Unit::Hz || target.unit != Unit::Hz {
        return Err(Error::invalid("PSOLA expects f0 in Hz"));
    }
    if source.times != target.times {
        return Err(Error::invalid("source and target f0 must share the frame grid"));
    }
    let hi = sample_rate as f64 / 4.0;
    for (v, &voiced) in target.values.iter().zip(&target.voiced) {
        if voiced && !(*v >= MIN_TARGET_F0 && *v <= hi) {
            return Err(Error::OutOfRange(format!(
                "target f0 {v} Hz outside [{MIN_TARGET_F0}, {hi}] Hz"
            )));
        }
    }
    Ok(())
}

/// Imposes `target_f0` on `w` by TD-PSOLA. Both tracks must be interpolated (finite on
/// every frame) and share the frame grid; `range` bounds the epoch search.
///
/// Unvoiced stretches keep their marks, so they are reproduced exactly, and
/// `target_f0 == source_f0` returns the input unchanged. The output has the input length.
pub fn psola_modify(
    w: &Waveform,
    source_f0: &F0Trajectory,
    target_f0: &F0Trajectory,
    range: PitchRange,
) -> Result<Waveform> {
    validate_tracks(source_f0, target_f0, w.sample_rate())?;
    let epochs = detect_epochs(w, source_f0, range)?;
    psola_with_epochs(w, &epochs, source_f0, target_f0)
}

/// TD-PSOLA with precomputed analysis marks.
pub fn psola_with_epochs(
    w: &Waveform,
    epochs: &EpochSequence,
    source_f0: &F0Trajectory,
    target_f0: &F0Trajectory,
) -> Result<Waveform> {
    validate_tracks(source_f0, target_f0, w.sample_rate())?;
    let x = w.samples();
    let fs = w.sample_rate() as f64;
    let a = &epochs.positions;
    let mut out = vec![0.0; x.len()];
    if a.len() < 2 {
        return Waveform::new(x.to_vec(), w.sample_rate());
    }
    let left = |k: usize| if k == 0 { a[1] - a[0] } else { a[k] - a[k - 1] };
    let right = |k: usize| {
        if k + 1 == a.len() {
            a[k] - a[k - 1]
        } else {
            a[k + 1] - a[k]
        }
    };

    let mut k = 0;
    while k < a.len() {
        if !epochs.voiced[k] {
            place_grain(&mut out, &grain(x, a[k], left(k), right(k)), a[k] as f64, left(k));
            k += 1;
            continue;
        }
        // voiced run a[k..=end]
        let mut end = k;
        while end + 1 < a.len() && epochs.voiced[end + 1] {
            end += 1;
        }
        let mut s = a[k] as f64;
        let mut nearest = k;
        while s <= a[end] as f64 + 1e-9 {
            while nearest < end && (a[nearest + 1] as f64 - s).abs() <= (a[nearest] as f64 - s).abs() {
                nearest += 1;
            }
            let g = grain(x, a[nearest], left(nearest), right(nearest));
            place_grain(&mut out, &g, s, left(nearest));
            let t = s / fs;
            let src = source_f0.value_at(t);
            let tgt = target_f0.value_at(t);
            let ratio = if src.is_finite() && tgt.is_finite() && tgt > 0.0 { src / tgt } else { 1.0 };
            let period = if nearest < end {
                a[nearest + 1] - a[nearest]
            } else if nearest > k {
                a[nearest] - a[nearest - 1]
            } else {
                right(nearest)
            };
            s += period as f64 * ratio;
        }
        k = end + 1;
    }
    Waveform::new(out, w.sample_rate())
}
