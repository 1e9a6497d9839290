//! Functional data analysis of f0 trajectories: B-spline bases, roughness-penalized
//! smoothing, and functional PCA with projection and reconstruction.
//!
//! Every trajectory is mapped onto the normalized time axis `[0, 1]` and resampled to
//! a fixed grid before smoothing, so one basis serves utterances of any length.

mod basis;
mod curve;
mod fpca;
pub mod quadrature;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use basis::BSplineBasis;
pub use curve::{smooth_curve, FunctionalCurve};
pub use fpca::{fpca_fit, fpca_project, reconstruct, CurveLabel, FpcaModel, ScoreVector, MODEL_FILE_VERSION};

use crate::dsp::interp_linear;
use crate::error::{Error, Result};
use crate::pitch::{hz_to_semitones, interpolate_unvoiced, F0Trajectory};

/// Curve representation parameters shared by model fitting and anonymization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveSettings {
    pub n_basis: usize,
    pub order: usize,
    /// Weight of the integrated squared second derivative.
    pub lambda: f64,
    /// Number of points of the normalized-time grid each trajectory is resampled to.
    pub grid_size: usize,
    /// Reference frequency of the semitone scale, in Hz.
    pub semitone_ref: f64,
}

impl Default for CurveSettings {
    fn default() -> Self {
        Self {
            n_basis: 202,
            order: 4,
            lambda: 1e-8,
            grid_size: 600,
            semitone_ref: 100.0,
        }
    }
}

impl CurveSettings {
    pub fn basis(&self) -> Result<Arc<BSplineBasis>> {
        Ok(Arc::new(BSplineBasis::new(self.n_basis, self.order)?))
    }
}

/// Normalized time `k / (n - 1)` of each of `n` frames.
pub fn normalized_times(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
}

/// Linearly resamples frame values onto `grid_size` equally spaced points of `[0, 1]`.
pub fn to_grid(values: &[f64], grid_size: usize) -> Result<Vec<f64>> {
    if values.len() < 2 {
        return Err(Error::TooShort("a trajectory needs at least two frames".into()));
    }
    let xs = normalized_times(values.len());
    Ok(normalized_times(grid_size)
        .into_iter()
        .map(|u| interp_linear(&xs, values, u))
        .collect())
}

/// Interpolate unvoiced gaps, convert to semitones, resample to the grid and smooth.
pub fn curve_from_trajectory(
    t: &F0Trajectory,
    settings: &CurveSettings,
    basis: &Arc<BSplineBasis>,
) -> Result<FunctionalCurve> {
    let filled = interpolate_unvoiced(t)?;
    let st = hz_to_semitones(&filled, settings.semitone_ref)?;
    let grid = to_grid(&st.values, settings.grid_size)?;
    smooth_curve(&grid, basis, settings.lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pitch::Unit;

    #[test]
    fn grid_resampling_is_linear() {
        let g = to_grid(&[0.0, 10.0], 5).unwrap();
        assert_eq!(g, vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert!(to_grid(&[1.0], 5).is_err());
    }

    #[test]
    fn constant_trajectory_becomes_constant_curve() {
        let n = 150;
        let t = F0Trajectory::new(
            (0..n).map(|i| i as f64 * 0.01).collect(),
            (0..n).map(|i| if i % 7 == 3 { f64::NAN } else { 200.0 }).collect(),
            (0..n).map(|i| i % 7 != 3).collect(),
            Unit::Hz,
        )
        .unwrap();
        let s = CurveSettings::default();
        let c = curve_from_trajectory(&t, &s, &s.basis().unwrap()).unwrap();
        for v in c.sample(50).unwrap() {
            assert!((v - 12.0).abs() < 1e-8);
        }
    }
}
