//! Small numeric helpers shared by the analysis modules.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// Symmetric Hann window of `n` points (both end points zero).
pub fn hann_symmetric(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Hann window of `n` points that does not include the zero end points,
/// i.e. the interior of a symmetric window of length `n + 2`.
pub fn hann_interior(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / (n + 1) as f64).cos())
        .collect()
}

pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Modified Bessel function of the first kind, order zero.
pub fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Median of the finite values in `x`; `None` when there are none.
pub fn median(x: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = x.iter().copied().filter(|v| v.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// Piecewise-linear interpolation of `(xs, ys)` at `x`, holding the end values outside.
pub fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let hi = xs.partition_point(|&v| v <= x);
    let lo = hi - 1;
    let span = xs[hi] - xs[lo];
    if span <= 0.0 {
        return ys[lo];
    }
    let a = (x - xs[lo]) / span;
    ys[lo] + a * (ys[hi] - ys[lo])
}

/// Vertex offset of the parabola through three equally spaced points, in (-1, 1).
pub fn parabolic_peak(left: f64, mid: f64, right: f64) -> (f64, f64) {
    let denom = left - 2.0 * mid + right;
    if denom.abs() < 1e-300 {
        return (0.0, mid);
    }
    let offset = (0.5 * (left - right) / denom).clamp(-1.0, 1.0);
    let value = mid - 0.25 * (left - right) * offset;
    (offset, value)
}

/// Forward FFT of a real signal zero-padded to `n`.
pub fn real_fft(planner: &mut FftPlanner<f64>, x: &[f64], n: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x
        .iter()
        .take(n)
        .map(|&v| Complex64::new(v, 0.0))
        .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
        .take(n)
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    buf
}

/// Linear autocorrelation for lags `0..x.len()`, computed through a zero-padded FFT.
pub fn autocorrelation(planner: &mut FftPlanner<f64>, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let size = (2 * n).next_power_of_two();
    let mut spec = real_fft(planner, x, size);
    for c in spec.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut spec);
    spec.iter().take(n).map(|c| c.re / size as f64).collect()
}

/// Second-order Butterworth low-pass biquad coefficients `(b, a)` with `a[0] = 1`.
pub fn butter_lowpass(cutoff_hz: f64, sample_rate: f64) -> ([f64; 3], [f64; 3]) {
    let k = (PI * cutoff_hz / sample_rate).tan();
    let q = std::f64::consts::FRAC_1_SQRT_2;
    let norm = 1.0 / (1.0 + k / q + k * k);
    let b0 = k * k * norm;
    (
        [b0, 2.0 * b0, b0],
        [1.0, 2.0 * (k * k - 1.0) * norm, (1.0 - k / q + k * k) * norm],
    )
}

pub fn biquad(x: &[f64], b: &[f64; 3], a: &[f64; 3]) -> Vec<f64> {
    let mut y = vec![0.0; x.len()];
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    for (i, &xi) in x.iter().enumerate() {
        let yi = b[0] * xi + b[1] * x1 + b[2] * x2 - a[1] * y1 - a[2] * y2;
        x2 = x1;
        x1 = xi;
        y2 = y1;
        y1 = yi;
        y[i] = yi;
    }
    y
}

/// Zero-phase (forward-backward) second-order low-pass.
pub fn lowpass_zero_phase(x: &[f64], cutoff_hz: f64, sample_rate: f64) -> Vec<f64> {
    let (b, a) = butter_lowpass(cutoff_hz, sample_rate);
    let mut y = biquad(x, &b, &a);
    y.reverse();
    let mut y = biquad(&y, &b, &a);
    y.reverse();
    y
}

/// Filters `x` through the all-zero polynomial `a` (with `a[0] = 1`), zero initial state.
pub fn fir_filter(a: &[f64], x: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|n| {
            a.iter()
                .enumerate()
                .take(n + 1)
                .map(|(k, &ak)| ak * x[n - k])
                .sum()
        })
        .collect()
}
