use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::basis::BSplineBasis;
use crate::error::{Error, Result};

/// A curve on `[0, 1]` expressed in a B-spline basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalCurve {
    basis: Arc<BSplineBasis>,
    coefficients: Vec<f64>,
}

impl FunctionalCurve {
    pub fn new(basis: Arc<BSplineBasis>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.n_basis() {
            return Err(Error::invalid(format!(
                "{} coefficients for a basis of {}",
                coefficients.len(),
                basis.n_basis()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("curve coefficients must be finite"));
        }
        Ok(Self {
            basis,
            coefficients,
        })
    }

    pub fn constant(basis: Arc<BSplineBasis>, value: f64) -> Result<Self> {
        let n = basis.n_basis();
        Self::new(basis, vec![value; n])
    }

    pub fn basis(&self) -> &Arc<BSplineBasis> {
        &self.basis
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub(crate) fn coefficient_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.coefficients)
    }

    /// de Boor evaluation at `t` (clamped to `[0, 1]`).
    pub fn eval(&self, t: f64) -> f64 {
        let b = &self.basis;
        let t = t.clamp(0.0, 1.0);
        let k = b.order();
        let p = k - 1;
        let span = b.find_span(t);
        let knots = b.knots();
        let mut d: Vec<f64> = (0..k).map(|j| self.coefficients[span - p + j]).collect();
        for r in 1..=p {
            for j in (r..=p).rev() {
                let left = knots[span - p + j];
                let right = knots[span + 1 + j - r];
                let alpha = if right > left { (t - left) / (right - left) } else { 0.0 };
                d[j] = (1.0 - alpha) * d[j - 1] + alpha * d[j];
            }
        }
        d[p]
    }

    /// `sample_curve`: values at `k / (n_points - 1)`, `k = 0..n_points`.
    pub fn sample(&self, n_points: usize) -> Result<Vec<f64>> {
        if n_points < 2 {
            return Err(Error::invalid("need at least two sample points"));
        }
        Ok((0..n_points)
            .map(|k| self.eval(k as f64 / (n_points - 1) as f64))
            .collect())
    }

    pub fn same_basis(&self, other: &FunctionalCurve) -> bool {
        Arc::ptr_eq(&self.basis, &other.basis) || *self.basis == *other.basis
    }

    /// `L2` inner product using a precomputed Gram matrix of the shared basis.
    pub fn inner(&self, other: &FunctionalCurve, gram: &DMatrix<f64>) -> Result<f64> {
        if !self.same_basis(other) {
            return Err(Error::BasisMismatch);
        }
        Ok(self.coefficient_vector().dot(&(gram * other.coefficient_vector())))
    }

    pub fn l2_distance(&self, other: &FunctionalCurve, gram: &DMatrix<f64>) -> Result<f64> {
        let diff = self.sub(other)?;
        Ok(diff.inner(&diff, gram)?.max(0.0).sqrt())
    }

    pub fn sub(&self, other: &FunctionalCurve) -> Result<FunctionalCurve> {
        if !self.same_basis(other) {
            return Err(Error::BasisMismatch);
        }
        Ok(FunctionalCurve {
            basis: self.basis.clone(),
            coefficients: self
                .coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `self + scale · other`.
    pub fn add_scaled(&self, other: &FunctionalCurve, scale: f64) -> Result<FunctionalCurve> {
        if !self.same_basis(other) {
            return Err(Error::BasisMismatch);
        }
        FunctionalCurve::new(
            self.basis.clone(),
            self.coefficients
                .iter()
                .zip(&other.coefficients)
                .map(|(a, b)| a + scale * b)
                .collect(),
        )
    }
}

/// Penalized least-squares fit of `samples`, taken at `k / (m - 1)` on `[0, 1]`,
/// minimizing `Σ (y_k - f(t_k))² + λ ∫ (f'')²`.
pub fn smooth_curve(samples: &[f64], basis: &Arc<BSplineBasis>, lambda: f64) -> Result<FunctionalCurve> {
    let m = samples.len();
    let n = basis.n_basis();
    if m < 2 || 3 * m < n {
        return Err(Error::invalid(format!(
            "{m} samples are too few for {n} basis functions"
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid("smoothing weight must be non-negative"));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    let k = basis.order();
    let mut normal = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    for (i, &y) in samples.iter().enumerate() {
        let t = i as f64 / (m - 1) as f64;
        let span = basis.find_span(t);
        let vals = basis.basis_funs(span, t);
        let first = span + 1 - k;
        for r in 0..k {
            rhs[first + r] += vals[r] * y;
            for c in 0..k {
                normal[(first + r, first + c)] += vals[r] * vals[c];
            }
        }
    }
    if lambda > 0.0 {
        normal += basis.penalty_matrix()? * lambda;
    }
    let chol = normal
        .cholesky()
        .ok_or_else(|| Error::Singular("smoothing normal equations are not positive definite".into()))?;
    let coef = chol.solve(&rhs);
    FunctionalCurve::new(basis.clone(), coef.iter().copied().collect())
        .map_err(|_| Error::Singular("smoothing produced non-finite coefficients".into()))
}
