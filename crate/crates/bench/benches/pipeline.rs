use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use f0deid::deid::constant_pitch_shift;
use f0deid::fda::{fpca_fit, smooth_curve, CurveLabel, CurveSettings};
use f0deid::pitch::{extract_f0, interpolate_unvoiced, PitchConfig};
use f0deid::synth::steady_vowel;
use f0deid::{psola_modify, shift_formants, stoi, BSplineBasis, FormantShiftConfig};

fn vowel() -> f0deid::Waveform {
    steady_vowel(120.0, &[700.0, 1200.0, 2600.0], 16000, 2.0).unwrap()
}

fn pitch(c: &mut Criterion) {
    let w = vowel();
    let cfg = PitchConfig::new(65.0, 380.0);
    c.bench_function("extract_f0 2 s", |b| b.iter(|| extract_f0(black_box(&w), &cfg).unwrap()));
}

fn fda(c: &mut Criterion) {
    let settings = CurveSettings::default();
    let basis = Arc::new(BSplineBasis::new(settings.n_basis, settings.order).unwrap());
    let samples: Vec<Vec<f64>> = (0..40)
        .map(|k| {
            (0..settings.grid_size)
                .map(|i| {
                    let t = i as f64 / (settings.grid_size - 1) as f64;
                    10.0 + (k as f64 * 0.1) * (6.0 * t + k as f64).sin() - 2.0 * t
                })
                .collect()
        })
        .collect();
    c.bench_function("smooth_curve 600 points", |b| {
        b.iter(|| smooth_curve(black_box(&samples[0]), &basis, settings.lambda).unwrap())
    });
    let curves: Vec<_> = samples
        .iter()
        .map(|s| smooth_curve(s, &basis, settings.lambda).unwrap())
        .collect();
    let labels: Vec<CurveLabel> = (0..curves.len())
        .map(|i| CurveLabel {
            curve_id: format!("c{i}"),
            speaker: format!("s{}", i / 4),
            group: "g".into(),
            condition: "modal".into(),
            session: "1".into(),
        })
        .collect();
    c.bench_function("fpca_fit 40 curves", |b| {
        b.iter(|| fpca_fit(black_box(&curves), labels.clone(), settings.clone()).unwrap())
    });
}

fn resynth(c: &mut Criterion) {
    let w = vowel();
    let cfg = PitchConfig::new(65.0, 380.0);
    let src = interpolate_unvoiced(&extract_f0(&w, &cfg).unwrap()).unwrap();
    let tgt = constant_pitch_shift(&src, 15.0, 16000).unwrap();
    c.bench_function("psola +15% 2 s", |b| {
        b.iter(|| psola_modify(black_box(&w), &src, &tgt, cfg.range).unwrap())
    });
    let fc = FormantShiftConfig::with_factor(1.2);
    c.bench_function("shift_formants x1.2 2 s", |b| b.iter(|| shift_formants(black_box(&w), &fc).unwrap()));
}

fn eval(c: &mut Criterion) {
    let w = vowel();
    let y = shift_formants(&w, &FormantShiftConfig::with_factor(1.2)).unwrap().waveform;
    c.bench_function("stoi 2 s", |b| b.iter(|| stoi(black_box(&w), &y).unwrap()));
}

criterion_group!(benches, pitch, fda, resynth, eval);
criterion_main!(benches);
