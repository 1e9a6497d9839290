use rustfft::FftPlanner;

use crate::audio::{resample, Waveform};
use crate::dsp::{hann_interior, real_fft};
use crate::error::{Error, Result};

pub const STOI_RATE: u32 = 10_000;
const FRAME: usize = 256;
const HOP: usize = FRAME / 2;
const NFFT: usize = 512;
const N_BANDS: usize = 15;
const MIN_FREQ: f64 = 150.0;
/// Frames per intermediate intelligibility segment (384 ms).
const SEGMENT: usize = 30;
const BETA_DB: f64 = -15.0;
const DYN_RANGE_DB: f64 = 40.0;
/// Value returned when fewer than one segment of speech frames remains.
pub const STOI_TOO_SHORT: f64 = 1e-5;

/// One-third octave band matrix over the `NFFT / 2 + 1` bins: `obm[band]` is the bin range.
fn third_octave_bands() -> Vec<(usize, usize)> {
    let n_bins = NFFT / 2 + 1;
    let freqs: Vec<f64> = (0..n_bins)
        .map(|i| i as f64 * STOI_RATE as f64 / NFFT as f64)
        .collect();
    let nearest = |target: f64| {
        let mut best = 0;
        for (i, f) in freqs.iter().enumerate() {
            if (f - target).powi(2) < (freqs[best] - target).powi(2) {
                best = i;
            }
        }
        best
    };
    (0..N_BANDS)
        .map(|k| {
            let lo = MIN_FREQ * 2f64.powf((2.0 * k as f64 - 1.0) / 6.0);
            let hi = MIN_FREQ * 2f64.powf((2.0 * k as f64 + 1.0) / 6.0);
            (nearest(lo), nearest(hi))
        })
        .collect()
}

/// Windowed frames starting at `0, HOP, …`; the last start is `len - FRAME` when
/// `inclusive`, otherwise strictly before it.
fn frames(x: &[f64], win: &[f64], inclusive: bool) -> Vec<Vec<f64>> {
    if x.len() < FRAME {
        return vec![];
    }
    let end = x.len() - FRAME + usize::from(inclusive);
    (0..end)
        .step_by(HOP)
        .map(|s| x[s..s + FRAME].iter().zip(win).map(|(a, w)| a * w).collect())
        .collect()
}

fn overlap_add(frames: &[&Vec<f64>]) -> Vec<f64> {
    if frames.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; (frames.len() - 1) * HOP + FRAME];
    for (i, f) in frames.iter().enumerate() {
        for (j, v) in f.iter().enumerate() {
            out[i * HOP + j] += v;
        }
    }
    out
}

/// Drops frames more than 40 dB below the loudest frame of `x`, from both signals.
fn remove_silent_frames(x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let win = hann_interior(FRAME);
    let xf = frames(x, &win, true);
    let yf = frames(y, &win, true);
    let energies: Vec<f64> = xf
        .iter()
        .map(|f| 20.0 * (f.iter().map(|v| v * v).sum::<f64>().sqrt() + f64::EPSILON).log10())
        .collect();
    let max = energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let keep: Vec<usize> = (0..xf.len())
        .filter(|&i| max - DYN_RANGE_DB - energies[i] < 0.0)
        .collect();
    let xs: Vec<&Vec<f64>> = keep.iter().map(|&i| &xf[i]).collect();
    let ys: Vec<&Vec<f64>> = keep.iter().map(|&i| &yf[i]).collect();
    (overlap_add(&xs), overlap_add(&ys))
}

/// Band envelopes `[band][frame]` of the one-third octave analysis.
fn band_envelopes(planner: &mut FftPlanner<f64>, x: &[f64], bands: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let win = hann_interior(FRAME);
    let spectra: Vec<Vec<f64>> = frames(x, &win, false)
        .iter()
        .map(|f| {
            real_fft(planner, f, NFFT)
                .iter()
                .take(NFFT / 2 + 1)
                .map(|c| c.norm_sqr())
                .collect()
        })
        .collect();
    bands
        .iter()
        .map(|&(lo, hi)| {
            spectra
                .iter()
                .map(|p| p[lo..hi].iter().sum::<f64>().sqrt())
                .collect()
        })
        .collect()
}

/// Short-time objective intelligibility of `processed` against `clean`.
///
/// Both signals are taken to 10 kHz; lengths may differ by at most one STOI hop at the
/// input rate and the longer signal is truncated. Returns [`STOI_TOO_SHORT`] when fewer
/// than 30 speech frames remain.
pub fn stoi(clean: &Waveform, processed: &Waveform) -> Result<f64> {
    if clean.sample_rate() != processed.sample_rate() {
        return Err(Error::invalid("STOI inputs must share a sample rate"));
    }
    let tolerance = (HOP as f64 * clean.sample_rate() as f64 / STOI_RATE as f64).ceil() as usize;
    let difference = clean.len().abs_diff(processed.len());
    if difference > tolerance {
        return Err(Error::LengthMismatch { difference, tolerance });
    }
    let n = clean.len().min(processed.len());
    let x = resample(&Waveform::new(clean.samples()[..n].to_vec(), clean.sample_rate())?, STOI_RATE)?;
    let y = resample(&Waveform::new(processed.samples()[..n].to_vec(), processed.sample_rate())?, STOI_RATE)?;
    stoi_at_10k(x.samples(), y.samples())
}

/// STOI on signals already at 10 kHz and of equal length.
pub fn stoi_at_10k(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            difference: x.len().abs_diff(y.len()),
            tolerance: 0,
        });
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::Silent("clean signal is silent".into()));
    }
    let (x, y) = remove_silent_frames(x, y);
    if x.is_empty() {
        return Err(Error::Silent("no frames above the silence threshold".into()));
    }
    let bands = third_octave_bands();
    let mut planner = FftPlanner::new();
    let xb = band_envelopes(&mut planner, &x, &bands);
    let yb = band_envelopes(&mut planner, &y, &bands);
    let n_frames = xb[0].len();
    if n_frames < SEGMENT {
        return Ok(STOI_TOO_SHORT);
    }
    let clip = 10f64.powf(-BETA_DB / 20.0);
    let eps = f64::EPSILON;
    let mut total = 0.0;
    let mut count = 0usize;
    for m in SEGMENT..=n_frames {
        for b in 0..N_BANDS {
            let xs = &xb[b][m - SEGMENT..m];
            let ys = &yb[b][m - SEGMENT..m];
            let xn = xs.iter().map(|v| v * v).sum::<f64>().sqrt();
            let yn = ys.iter().map(|v| v * v).sum::<f64>().sqrt();
            let k = xn / (yn + eps);
            let yp: Vec<f64> = ys
                .iter()
                .zip(xs)
                .map(|(yv, xv)| (yv * k).min(xv * (1.0 + clip)))
                .collect();
            let xm = xs.iter().sum::<f64>() / SEGMENT as f64;
            let ym = yp.iter().sum::<f64>() / SEGMENT as f64;
            let xc: Vec<f64> = xs.iter().map(|v| v - xm).collect();
            let yc: Vec<f64> = yp.iter().map(|v| v - ym).collect();
            let xcn = xc.iter().map(|v| v * v).sum::<f64>().sqrt() + eps;
            let ycn = yc.iter().map(|v| v * v).sum::<f64>().sqrt() + eps;
            total += xc.iter().zip(&yc).map(|(a, b)| (a / xcn) * (b / ycn)).sum::<f64>();
            count += 1;
        }
    }
    Ok(total / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::steady_vowel;

    fn noise(n: usize, seed: u64, scale: f64) -> Vec<f64> {
        let mut s = seed;
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * scale
            })
            .collect()
    }

    fn speechlike(sr: u32) -> Waveform {
        let a = steady_vowel(130.0, &[700.0, 1200.0, 2600.0], sr, 0.6).unwrap();
        let b = steady_vowel(180.0, &[300.0, 2200.0, 3000.0], sr, 0.6).unwrap();
        let gap = vec![0.0; (sr as f64 * 0.15) as usize];
        let x: Vec<f64> = a
            .samples()
            .iter()
            .chain(&gap)
            .chain(b.samples())
            .chain(&gap)
            .chain(a.samples())
            .copied()
            .collect();
        Waveform::new(x, sr).unwrap()
    }

    #[test]
    fn band_edges_follow_third_octaves() {
        let b = third_octave_bands();
        assert_eq!(b.len(), 15);
        // 133.6 Hz and 168.4 Hz are nearest to bins 7 (136.7 Hz) and 9 (175.8 Hz)
        assert_eq!(b[0], (7, 9));
        assert!(b.windows(2).all(|w| w[0].1 == w[1].0));
    }

    #[test]
    fn identical_signals_score_one() {
        let x = speechlike(16000);
        let s = stoi(&x, &x).unwrap();
        assert!((s - 1.0).abs() < 1e-6, "{s}");
    }

    #[test]
    fn noise_scores_low() {
        let x = speechlike(16000);
        let y = Waveform::new(noise(x.len(), 5, 0.5), 16000).unwrap();
        let s = stoi(&x, &y).unwrap();
        assert!(s < 0.2, "{s}");
    }

    #[test]
    fn mild_noise_degrades_gracefully() {
        let x = speechlike(16000);
        let n = noise(x.len(), 11, 0.02);
        let y = Waveform::new(x.samples().iter().zip(&n).map(|(a, b)| a + b).collect(), 16000).unwrap();
        let s = stoi(&x, &y).unwrap();
        assert!(s > 0.6 && s < 1.0, "{s}");
    }

    #[test]
    fn invariances() {
        let x = speechlike(16000);
        let n = noise(x.len(), 3, 0.05);
        let y: Vec<f64> = x.samples().iter().zip(&n).map(|(a, b)| a + b).collect();
        let yw = Waveform::new(y.clone(), 16000).unwrap();
        let base = stoi(&x, &yw).unwrap();
        let neg = |v: &[f64]| Waveform::new(v.iter().map(|a| -a).collect(), 16000).unwrap();
        let flipped = stoi(&neg(x.samples()), &neg(&y)).unwrap();
        assert!((base - flipped).abs() < 1e-9);
        let scaled = stoi(&x.scaled(3.0).unwrap(), &yw.scaled(3.0).unwrap()).unwrap();
        assert!((base - scaled).abs() < 1e-6);
    }

    #[test]
    fn errors() {
        let x = speechlike(16000);
        let short = Waveform::new(x.samples()[..x.len() - 1000].to_vec(), 16000).unwrap();
        assert!(matches!(stoi(&x, &short), Err(Error::LengthMismatch { .. })));
        let slightly = Waveform::new(x.samples()[..x.len() - 100].to_vec(), 16000).unwrap();
        assert!(stoi(&x, &slightly).is_ok());
        let silent = Waveform::new(vec![0.0; 16000], 16000).unwrap();
        assert!(matches!(stoi(&silent, &silent), Err(Error::Silent(_))));
        let other_rate = Waveform::new(vec![0.1; 100], 8000).unwrap();
        assert!(stoi(&x, &other_rate).is_err());
    }
}
