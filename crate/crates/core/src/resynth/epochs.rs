use crate::audio::Waveform;
use crate::dsp::lowpass_zero_phase;
use crate::error::{Error, Result};
use crate::pitch::{F0Trajectory, PitchRange, Unit};

/// Spacing of the synthetic anchors placed in unvoiced stretches, in seconds.
pub const UNVOICED_ANCHOR_SPACING: f64 = 0.01;

/// Pitch marks of a waveform: glottal-cycle anchors in voiced spans and uniformly
/// spaced anchors elsewhere. The first and last sample are always anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSequence {
    pub positions: Vec<usize>,
    pub voiced: Vec<bool>,
}

impl EpochSequence {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Sample distances between consecutive voiced epochs of the same span.
    pub fn voiced_periods(&self) -> Vec<usize> {
        self.positions
            .windows(2)
            .zip(self.voiced.windows(2))
            .filter(|(_, v)| v[0] && v[1])
            .map(|(p, _)| p[1] - p[0])
            .collect()
    }
}

/// Maximal runs `[start, end)` of samples whose nearest f0 frame is voiced.
pub(crate) fn voiced_spans(f0: &F0Trajectory, n_samples: usize, fs: f64) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for n in 0..n_samples {
        let v = f0.voiced_at(n as f64 / fs);
        match (v, start) {
            (true, None) => start = Some(n),
            (false, Some(s)) => {
                spans.push((s, n));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, n_samples));
    }
    spans
}

fn argmax(x: &[f64], lo: usize, hi: usize) -> usize {
    let mut best = lo;
    for i in lo..hi {
        if x[i] > x[best] {
            best = i;
        }
    }
    best
}

/// Places pitch marks on `w` following the voicing and values of `f0`.
///
/// In each voiced span the signal is low-passed at the range ceiling; the first mark is
/// the largest peak within one local period of the span start and each further mark is
/// the largest peak between 0.8 and 1.2 local periods after the previous one, with the
/// search interval kept inside `[1/ceiling, 1/floor]`.
pub fn detect_epochs(w: &Waveform, f0: &F0Trajectory, range: PitchRange) -> Result<EpochSequence> {
    if f0.unit != Unit::Hz {
        return Err(Error::invalid("epoch detection expects f0 in Hz"));
    }
    if !(range.floor > 0.0 && range.ceiling > range.floor) {
        return Err(Error::invalid("invalid pitch range"));
    }
    let fs = w.sample_rate() as f64;
    let n = w.len();
    if n == 0 {
        return Ok(EpochSequence {
            positions: vec![],
            voiced: vec![],
        });
    }
    let lowpassed = lowpass_zero_phase(w.samples(), range.ceiling.min(fs * 0.45), fs);
    let min_step = (fs / range.ceiling).ceil() as usize;
    let max_step = ((fs / range.floor).floor() as usize).max(min_step);

    let mut marks: Vec<(usize, bool)> = Vec::new();
    for (start, end) in voiced_spans(f0, n, fs) {
        let local_period = |pos: usize| {
            let f = f0.value_at(pos as f64 / fs);
            let f = if f.is_finite() && f > 0.0 { f } else { range.floor };
            fs / f.clamp(range.floor, range.ceiling)
        };
        let first_hi = (start + local_period(start).round() as usize).min(end);
        if first_hi <= start {
            continue;
        }
        let mut last = argmax(&lowpassed, start, first_hi);
        marks.push((last, true));
        loop {
            let t = local_period(last);
            let lo = last + ((0.8 * t).round() as usize).max(min_step);
            let hi = last + ((1.2 * t).round() as usize).min(max_step) + 1;
            // stop when the span ends or the search window runs off the signal
            if lo >= end || hi > n {
                break;
            }
            let next = argmax(&lowpassed, lo, hi);
            marks.push((next, true));
            last = next;
        }
    }

    // unvoiced anchors fill everything outside voiced marks
    let step = ((UNVOICED_ANCHOR_SPACING * fs).round() as usize).max(1);
    let voiced_marks = marks.clone();
    let mut filled: Vec<(usize, bool)> = Vec::new();
    let mut cursor = 0usize;
    let push_gap = |from: usize, to: usize, out: &mut Vec<(usize, bool)>| {
        // anchors strictly inside (from, to), spaced by `step`
        let mut p = from + step;
        while p + step / 2 < to {
            out.push((p, false));
            p += step;
        }
    };
    filled.push((0, false));
    for (i, &(pos, v)) in voiced_marks.iter().enumerate() {
        let prev_voiced = i > 0 && pos - voiced_marks[i - 1].0 <= max_step && voiced_marks[i - 1].1;
        if !prev_voiced {
            push_gap(cursor, pos, &mut filled);
        }
        filled.push((pos, v));
        cursor = pos;
    }
    push_gap(cursor, n - 1, &mut filled);
    filled.push((n - 1, false));
    filled.sort_by_key(|m| m.0);
    filled.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1 |= b.1;
            true
        } else {
            false
        }
    });
    Ok(EpochSequence {
        positions: filled.iter().map(|m| m.0).collect(),
        voiced: filled.iter().map(|m| m.1).collect(),
    })
}
