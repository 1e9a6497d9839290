use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::quadrature::gauss_legendre;
use crate::error::{Error, Result};

/// Clamped B-spline basis with equally spaced interior knots on `[0, 1]`.
///
/// `n_basis = interior knots + order`, so `(n_basis, order) = (4, 4)` is the cubic
/// Bernstein basis on a single interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "BasisSpec", into = "BasisSpec")]
pub struct BSplineBasis {
    order: usize,
    n_basis: usize,
    knots: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BasisSpec {
    n_basis: usize,
    order: usize,
}

impl TryFrom<BasisSpec> for BSplineBasis {
    type Error = Error;
    fn try_from(s: BasisSpec) -> Result<Self> {
        BSplineBasis::new(s.n_basis, s.order)
    }
}

impl From<BSplineBasis> for BasisSpec {
    fn from(b: BSplineBasis) -> Self {
        BasisSpec {
            n_basis: b.n_basis,
            order: b.order,
        }
    }
}

impl PartialEq for BSplineBasis {
    fn eq(&self, other: &Self) -> bool {
        self.order == other.order && self.n_basis == other.n_basis
    }
}

impl BSplineBasis {
    /// `build_basis`: fails when `n_basis < order` or `order < 2`.
    pub fn new(n_basis: usize, order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::invalid(format!("spline order {order} must be at least 2")));
        }
        if n_basis < order {
            return Err(Error::invalid(format!(
                "{n_basis} basis functions cannot carry order {order}"
            )));
        }
        let intervals = n_basis - order + 1;
        let mut knots = Vec::with_capacity(n_basis + order);
        knots.extend(std::iter::repeat(0.0).take(order));
        knots.extend((1..intervals).map(|i| i as f64 / intervals as f64));
        knots.extend(std::iter::repeat(1.0).take(order));
        Ok(Self {
            order,
            n_basis,
            knots,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn degree(&self) -> usize {
        self.order - 1
    }

    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n_intervals(&self) -> usize {
        self.n_basis - self.order + 1
    }

    pub fn n_interior_knots(&self) -> usize {
        self.n_basis - self.order
    }

    /// Breakpoints `0 = x_0 < … < x_m = 1`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.knots[self.order - 1..=self.n_basis]
    }

    /// Knot span index `μ` with `knots[μ] <= t < knots[μ + 1]`; `t = 1` maps to the last span.
    pub fn find_span(&self, t: f64) -> usize {
        let t = t.clamp(0.0, 1.0);
        let lo = self.order - 1;
        let hi = self.n_basis - 1;
        if t >= self.knots[hi + 1] {
            return hi;
        }
        // first knot strictly greater than t, minus one
        let idx = self.knots[lo..=hi + 1].partition_point(|&k| k <= t) + lo;
        (idx - 1).clamp(lo, hi)
    }

    /// Values of the `order` basis functions that are nonzero on `span`, at `t`.
    pub fn basis_funs(&self, span: usize, t: f64) -> Vec<f64> {
        let p = self.degree();
        let mut n = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        n[0] = 1.0;
        for j in 1..=p {
            left[j] = t - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        n
    }

    /// Derivatives `0..=nd` of the nonzero basis functions on `span` at `t`.
    /// Row `k` holds the `k`-th derivatives.
    pub fn basis_derivs(&self, span: usize, t: f64, nd: usize) -> Vec<Vec<f64>> {
        let p = self.degree();
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = t - self.knots[span + 1 - j];
            right[j] = self.knots[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = vec![vec![0.0; p + 1]; nd + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for k in 1..=nd.min(p) {
                let mut d = 0.0;
                let rk = r as isize - k as isize;
                let pk = p - k;
                if r >= k {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                    d += a[s2][k] * ndu[r][pk];
                }
                ders[k][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for (k, row) in ders.iter_mut().enumerate().skip(1) {
            if k > p {
                row.iter_mut().for_each(|v| *v = 0.0);
                continue;
            }
            row.iter_mut().for_each(|v| *v *= factor);
            factor *= (p - k) as f64;
        }
        ders
    }

    /// Dense row of all basis function values at `t`.
    pub fn eval_row(&self, t: f64) -> Vec<f64> {
        let span = self.find_span(t);
        let vals = self.basis_funs(span, t.clamp(0.0, 1.0));
        let mut row = vec![0.0; self.n_basis];
        row[span + 1 - self.order..=span].copy_from_slice(&vals);
        row
    }

    /// `∫₀¹ φ_j(t) dt = (knots[j + order] - knots[j]) / order`.
    pub fn integrals(&self) -> Vec<f64> {
        (0..self.n_basis)
            .map(|j| (self.knots[j + self.order] - self.knots[j]) / self.order as f64)
            .collect()
    }

    /// `∫ φ_i⁽ᵈ⁾ φ_j⁽ᵈ⁾` assembled span by span with `(order + 1)`-point Gauss–Legendre.
    fn derivative_product_matrix(&self, d: usize) -> DMatrix<f64> {
        let n = self.n_basis;
        let k = self.order;
        let (gx, gw) = gauss_legendre(k + 1);
        let mut m = DMatrix::zeros(n, n);
        let bp = self.breakpoints();
        for iv in 0..self.n_intervals() {
            let (a, b) = (bp[iv], bp[iv + 1]);
            let half = 0.5 * (b - a);
            let span = iv + k - 1;
            for (x, w) in gx.iter().zip(&gw) {
                let t = a + half * (x + 1.0);
                let vals = &self.basis_derivs(span, t, d)[d];
                let first = span + 1 - k;
                for r in 0..k {
                    for c in 0..k {
                        m[(first + r, first + c)] += w * half * vals[r] * vals[c];
                    }
                }
            }
        }
        m
    }

    /// Gram matrix `∫ φ_i φ_j`.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        self.derivative_product_matrix(0)
    }

    /// Roughness penalty `∫ φ_i'' φ_j''`; needs at least cubic-capable order 3.
    pub fn penalty_matrix(&self) -> Result<DMatrix<f64>> {
        if self.order < 3 {
            return Err(Error::invalid(format!(
                "second-derivative penalty needs order >= 3, got {}",
                self.order
            )));
        }
        Ok(self.derivative_product_matrix(2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn construction_and_errors() {
        let b = BSplineBasis::new(4, 4).unwrap();
        assert_eq!(b.n_intervals(), 1);
        assert_eq!(b.knots(), &[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]);

        let default_basis = BSplineBasis::new(202, 4).unwrap();
        assert_eq!(default_basis.n_interior_knots(), 198);
        assert_eq!(default_basis.knots().len(), 206);
        assert!(default_basis.knots().windows(2).all(|w| w[0] <= w[1]));

        assert!(BSplineBasis::new(3, 4).is_err());
        assert!(BSplineBasis::new(5, 1).is_err());
    }

    #[test]
    fn partition_of_unity_on_bernstein_and_default_basis() {
        for (n, k) in [(4, 4), (202, 4), (10, 3), (7, 2)] {
            let b = BSplineBasis::new(n, k).unwrap();
            for i in 0..=1000 {
                let t = i as f64 / 1000.0;
                let s: f64 = b.eval_row(t).iter().sum();
                assert!((s - 1.0).abs() < 1e-12, "({n},{k}) t={t}: {s}");
            }
        }
    }

    #[test]
    fn spans_cover_the_domain() {
        let b = BSplineBasis::new(8, 4).unwrap();
        assert_eq!(b.find_span(0.0), 3);
        assert_eq!(b.find_span(1.0), 7);
        assert_eq!(b.find_span(0.2 - 1e-12), 3);
        assert_eq!(b.find_span(0.2), 4);
    }

    #[test]
    fn derivatives_match_bernstein_closed_form() {
        // single-interval cubic basis: B_i(t) = C(3,i) t^i (1-t)^(3-i)
        let b = BSplineBasis::new(4, 4).unwrap();
        let t = 0.3;
        let d = b.basis_derivs(3, t, 2);
        let exact0 = [(1.0f64 - t).powi(3), 3.0 * t * (1.0 - t).powi(2), 3.0 * t * t * (1.0 - t), t.powi(3)];
        let exact2 = [6.0 * (1.0 - t), 18.0 * t - 12.0, 6.0 - 18.0 * t, 6.0 * t];
        for i in 0..4 {
            assert!((d[0][i] - exact0[i]).abs() < 1e-14);
            assert!((d[2][i] - exact2[i]).abs() < 1e-12, "i={i} {} {}", d[2][i], exact2[i]);
        }
    }

    #[test]
    fn gram_of_bernstein_basis_is_closed_form() {
        let b = BSplineBasis::new(4, 4).unwrap();
        let g = b.gram_matrix();
        for i in 0..4 {
            for j in 0..4 {
                let exact = binom(3, i) * binom(3, j) / (binom(6, i + j) * 7.0);
                assert!((g[(i, j)] - exact).abs() < 1e-14, "({i},{j})");
            }
        }
    }

    #[test]
    fn gram_properties() {
        let b = BSplineBasis::new(202, 4).unwrap();
        let g = b.gram_matrix();
        assert!((&g - g.transpose()).abs().max() < 1e-12);
        let ones = nalgebra::DVector::from_element(202, 1.0);
        let q = (ones.transpose() * &g * &ones)[(0, 0)];
        assert!((q - 1.0).abs() < 1e-12);
        assert!(g.clone().cholesky().is_some());
    }

    #[test]
    fn penalty_properties() {
        let b = BSplineBasis::new(30, 4).unwrap();
        let p = b.penalty_matrix().unwrap();
        assert!((&p - p.transpose()).abs().max() < 1e-12 * p.abs().max());
        // affine curve a + b t has Greville-abscissa coefficients
        let greville: Vec<f64> = (0..30)
            .map(|j| (b.knots()[j + 1] + b.knots()[j + 2] + b.knots()[j + 3]) / 3.0)
            .collect();
        let c = nalgebra::DVector::from_iterator(30, greville.iter().map(|g| 2.0 - 3.0 * g));
        let q = (c.transpose() * &p * &c)[(0, 0)];
        assert!(q.abs() < 1e-12 * p.abs().max() * c.norm_squared(), "{q}");
        assert!(BSplineBasis::new(5, 2).unwrap().penalty_matrix().is_err());
    }

    #[test]
    fn integrals_sum_to_one() {
        let b = BSplineBasis::new(17, 4).unwrap();
        assert!((b.integrals().iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn serde_rebuilds_knots() {
        let b = BSplineBasis::new(12, 4).unwrap();
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"n_basis":12,"order":4}"#);
        let back: BSplineBasis = serde_json::from_str(&s).unwrap();
        assert_eq!(back.knots(), b.knots());
        assert!(serde_json::from_str::<BSplineBasis>(r#"{"n_basis":2,"order":4}"#).is_err());
    }
}
