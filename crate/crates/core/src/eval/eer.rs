use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Genuine and impostor similarity scores.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
}

impl TrialSet {
    pub fn new(genuine: Vec<f64>, impostor: Vec<f64>) -> Self {
        Self { genuine, impostor }
    }

    pub fn extend(&mut self, other: &TrialSet) {
        self.genuine.extend_from_slice(&other.genuine);
        self.impostor.extend_from_slice(&other.impostor);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EerResult {
    pub eer_percent: f64,
    pub threshold: f64,
}

/// Share of `scores` at or above `theta`.
fn share_at_or_above(sorted: &[f64], theta: f64) -> f64 {
    let below = sorted.partition_point(|&s| s < theta);
    (sorted.len() - below) as f64 / sorted.len() as f64
}

/// Equal error rate by sweeping every distinct score (plus +∞) as the threshold.
///
/// FAR is the share of impostor scores `>= θ`, FRR the share of genuine scores `< θ`.
/// The EER is read where `FAR - FRR` changes sign, interpolating linearly between the
/// two neighbouring thresholds; the returned threshold is interpolated the same way.
pub fn compute_eer(trials: &TrialSet) -> Result<EerResult> {
    if trials.genuine.is_empty() || trials.impostor.is_empty() {
        return Err(Error::invalid("EER needs genuine and impostor scores"));
    }
    if trials.genuine.iter().chain(&trials.impostor).any(|s| !s.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let mut gen = trials.genuine.clone();
    let mut imp = trials.impostor.clone();
    gen.sort_by(f64::total_cmp);
    imp.sort_by(f64::total_cmp);
    let mut thresholds: Vec<f64> = gen.iter().chain(&imp).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);

    let point = |theta: f64| {
        let far = share_at_or_above(&imp, theta);
        let frr = 1.0 - share_at_or_above(&gen, theta);
        (far, frr)
    };
    // FAR - FRR is non-increasing in θ: +1 at the lowest score, -1 at +∞
    let mut prev: Option<(f64, f64, f64)> = None;
    for &theta in &thresholds {
        let (far, frr) = point(theta);
        let d = far - frr;
        if d == 0.0 {
            return Ok(EerResult {
                eer_percent: 100.0 * far,
                threshold: theta,
            });
        }
        if d < 0.0 {
            let (t0, far0, frr0) = prev.expect("FAR - FRR is positive at the lowest score");
            let d0 = far0 - frr0;
            let a = d0 / (d0 - d);
            let eer = far0 + a * (far - far0);
            let threshold = if theta.is_finite() { t0 + a * (theta - t0) } else { t0 };
            return Ok(EerResult {
                eer_percent: 100.0 * eer,
                threshold,
            });
        }
        prev = Some((theta, far, frr));
    }
    unreachable!("FAR - FRR is negative at +inf")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eer(g: &[f64], i: &[f64]) -> f64 {
        compute_eer(&TrialSet::new(g.to_vec(), i.to_vec())).unwrap().eer_percent
    }

    #[test]
    fn worked_examples() {
        assert_eq!(eer(&[0.9, 0.8], &[0.2, 0.1]), 0.0);
        assert!((eer(&[0.3, 0.5, 0.7], &[0.3, 0.5, 0.7]) - 50.0).abs() < 1e-9);
        assert!((eer(&[0.9, 0.6, 0.4], &[0.7, 0.5, 0.2]) - 100.0 / 3.0).abs() < 1e-9);
        // complete inversion
        assert_eq!(eer(&[0.1, 0.2], &[0.8, 0.9]), 100.0);
    }

    #[test]
    fn threshold_separates_perfectly() {
        let r = compute_eer(&TrialSet::new(vec![0.9, 0.8], vec![0.2, 0.1])).unwrap();
        assert!(r.threshold > 0.2 && r.threshold <= 0.8);
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert!(compute_eer(&TrialSet::new(vec![], vec![0.1])).is_err());
        assert!(compute_eer(&TrialSet::new(vec![f64::NAN], vec![0.1])).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn monotone_transform_invariance(
                g in prop::collection::vec(-1.0f64..1.0, 1..60),
                i in prop::collection::vec(-1.0f64..1.0, 1..60),
            ) {
                let base = eer(&g, &i);
                let f = |v: &f64| (3.0 * v).exp() + 2.0;
                let t = eer(&g.iter().map(f).collect::<Vec<_>>(), &i.iter().map(f).collect::<Vec<_>>());
                prop_assert!((base - t).abs() < 1e-9);
                prop_assert!((0.0..=100.0).contains(&base));
            }
        }
    }
}
