//! Mono waveform container, RIFF/WAVE input and output, and band-limited resampling.

use std::path::Path;
use std::sync::Arc;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::dsp::{bessel_i0, gcd, sinc};
use crate::error::{Error, Result};

/// Mono audio. Samples are nominally in `[-1, 1]` and always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Arc<[f64]>,
    sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples: samples.into(),
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// A copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self> {
        Self::new(self.samples.iter().map(|v| v * gain).collect(), self.sample_rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Pcm16,
    Float32,
}

/// Metadata returned by [`write_wav`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WriteReport {
    /// Number of samples outside `[-1, 1]` that were saturated (PCM-16 only).
    pub clipped: usize,
}

impl WriteReport {
    pub fn clipped_any(&self) -> bool {
        self.clipped > 0
    }
}

fn map_hound(e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(io) => Error::Io(io),
        hound::Error::Unsupported => Error::UnsupportedFormat("unsupported WAV feature".into()),
        hound::Error::FormatError(msg) => Error::Format(msg.to_string()),
        other => Error::Format(other.to_string()),
    }
}

/// Reads a PCM-16 or IEEE float-32 WAV file. Multi-channel files are averaged to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = WavReader::open(path).map_err(map_hound)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Format("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(map_hound)?,
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat(format!(
                "{bits}-bit {fmt:?} samples (expected 16-bit PCM or 32-bit float)"
            )))
        }
    };
    let mono = if channels == 1 {
        interleaved
    } else {
        interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    Waveform::new(mono, spec.sample_rate)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Writes `w` as a mono WAV file. PCM-16 output saturates out-of-range samples.
pub fn write_wav(path: impl AsRef<Path>, w: &Waveform, encoding: Encoding) -> Result<WriteReport> {
    let (bits, format) = match encoding {
        Encoding::Pcm16 => (16, SampleFormat::Int),
        Encoding::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: bits,
        sample_format: format,
    };
    let mut writer = WavWriter::create(path.as_ref(), spec).map_err(map_hound)?;
    let mut report = WriteReport::default();
    match encoding {
        Encoding::Pcm16 => {
            for &s in w.samples() {
                if !(-1.0..=1.0).contains(&s) {
                    report.clipped += 1;
                }
                let q = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0);
                writer.write_sample(q as i16).map_err(map_hound)?;
            }
        }
        Encoding::Float32 => {
            for &s in w.samples() {
                writer.write_sample(s as f32).map_err(map_hound)?;
            }
        }
    }
    writer.finalize().map_err(map_hound)?;
    Ok(report)
}

/// Number of zero crossings of the windowed-sinc kernel on each side, measured at the lower rate.
const ZERO_CROSSINGS: usize = 32;
const KAISER_BETA: f64 = 8.0;
const CUTOFF_FRACTION: f64 = 0.95;
/// Above this many polyphase branches the coefficients are computed on the fly.
const MAX_TABLE_PHASES: u64 = 4096;

struct SincKernel {
    /// Normalized cutoff relative to the input rate (cycles per input sample, times 2).
    bandwidth: f64,
    /// Half-length of the kernel in input samples.
    half_width: f64,
    i0_beta: f64,
}

impl SincKernel {
    fn eval(&self, d: f64) -> f64 {
        let r = d / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / self.i0_beta;
        self.bandwidth * sinc(self.bandwidth * d) * window
    }

    /// Taps for an output located `frac` input samples after input index `base`.
    /// Returns the index of the first tap and the normalized coefficients.
    fn taps(&self, frac: f64) -> (isize, Vec<f64>) {
        let reach = self.half_width.ceil() as isize;
        let first = -reach + 1;
        let mut coeffs: Vec<f64> = (first..=reach)
            .map(|k| self.eval(frac - k as f64))
            .collect();
        let sum: f64 = coeffs.iter().sum();
        if sum.abs() > 1e-12 {
            for c in coeffs.iter_mut() {
                *c /= sum;
            }
        }
        (first, coeffs)
    }
}

/// Converts `w` to `target_rate` with a Kaiser-windowed sinc polyphase filter whose cutoff
/// sits at 95% of the lower Nyquist frequency.
pub fn resample(w: &Waveform, target_rate: u32) -> Result<Waveform> {
    if target_rate == 0 {
        return Err(Error::invalid("target rate must be positive"));
    }
    let source_rate = w.sample_rate;
    if target_rate == source_rate {
        return Ok(w.clone());
    }
    let g = gcd(source_rate as u64, target_rate as u64);
    let up = target_rate as u64 / g;
    let down = source_rate as u64 / g;
    let bandwidth = CUTOFF_FRACTION * (target_rate.min(source_rate) as f64) / source_rate as f64;
    let kernel = SincKernel {
        bandwidth,
        half_width: ZERO_CROSSINGS as f64 / bandwidth,
        i0_beta: bessel_i0(KAISER_BETA),
    };

    let x = w.samples();
    let out_len = ((x.len() as u64 * up).div_ceil(down)) as usize;
    let table: Option<Vec<(isize, Vec<f64>)>> = (up <= MAX_TABLE_PHASES)
        .then(|| (0..up).map(|p| kernel.taps(p as f64 / up as f64)).collect());

    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len as u64 {
        let pos = n * down;
        let base = (pos / up) as isize;
        let phase = pos % up;
        let computed;
        let (first, coeffs) = match &table {
            Some(t) => (t[phase as usize].0, &t[phase as usize].1),
            None => {
                computed = kernel.taps(phase as f64 / up as f64);
                (computed.0, &computed.1)
            }
        };
        let mut acc = 0.0;
        for (j, c) in coeffs.iter().enumerate() {
            let idx = base + first + j as isize;
            if idx >= 0 && (idx as usize) < x.len() {
                acc += c * x[idx as usize];
            }
        }
        out.push(acc);
    }
    Waveform::new(out, target_rate)
}
