use nalgebra::{Complex, DMatrix, Schur};

/// Burg estimate of the prediction polynomial `[1, a_1, …, a_order]` of `x`.
/// Returns `None` when the frame has no energy.
pub fn burg(x: &[f64], order: usize) -> Option<Vec<f64>> {
    let n = x.len();
    if n <= order || x.iter().all(|&v| v == 0.0) {
        return None;
    }
    let mut a = vec![1.0];
    let mut f: Vec<f64> = x.to_vec();
    let mut b: Vec<f64> = x.to_vec();
    for m in 0..order {
        // f[m+1..n] and b[m..n-1] hold the current forward and backward errors
        let mut num = 0.0;
        let mut den = 0.0;
        for i in (m + 1)..n {
            num += f[i] * b[i - 1];
            den += f[i] * f[i] + b[i - 1] * b[i - 1];
        }
        if den <= 0.0 {
            break;
        }
        let k = -2.0 * num / den;
        let mut next = vec![0.0; a.len() + 1];
        for i in 0..next.len() {
            let ai = if i < a.len() { a[i] } else { 0.0 };
            let rev = if i >= 1 { a[a.len() - i] } else { 0.0 };
            next[i] = ai + k * rev;
        }
        a = next;
        for i in ((m + 1)..n).rev() {
            let fi = f[i];
            f[i] = fi + k * b[i - 1];
            b[i] = b[i - 1] + k * fi;
        }
    }
    a.resize(order + 1, 0.0);
    if a.iter().all(|v| v.is_finite()) {
        Some(a)
    } else {
        None
    }
}

/// Roots of `z^p + a_1 z^(p-1) + … + a_p`, the pole positions of `1 / A(z)`.
/// `None` when the eigenvalue iteration does not converge.
pub fn polynomial_roots(a: &[f64]) -> Option<Vec<Complex<f64>>> {
    let p = a.len() - 1;
    if p == 0 {
        return Some(vec![]);
    }
    let mut c = DMatrix::<f64>::zeros(p, p);
    for j in 0..p {
        c[(0, j)] = -a[j + 1] / a[0];
    }
    for i in 1..p {
        c[(i, i - 1)] = 1.0;
    }
    let schur = Schur::try_new(c, 1e-14, 10_000)?;
    let roots: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
    if roots.iter().all(|r| r.re.is_finite() && r.im.is_finite()) {
        Some(roots)
    } else {
        None
    }
}

/// Real polynomial `[1, a_1, …]` with the given roots (complex roots in conjugate pairs).
pub fn polynomial_from_roots(roots: &[Complex<f64>]) -> Vec<f64> {
    let mut poly = vec![Complex::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex::new(0.0, 0.0); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        poly = next;
    }
    poly.iter().map(|c| c.re).collect()
}

/// Pole frequency and bandwidth in Hz.
pub fn pole_to_formant(r: Complex<f64>, sample_rate: f64) -> (f64, f64) {
    let f = r.arg() * sample_rate / (2.0 * std::f64::consts::PI);
    let b = -r.norm().ln() * sample_rate / std::f64::consts::PI;
    (f, b)
}

/// Formant classification: frequency in `[90, Nyquist - 200]` Hz and bandwidth below 700 Hz.
pub fn is_formant(frequency: f64, bandwidth: f64, sample_rate: f64) -> bool {
    frequency >= 90.0 && frequency <= sample_rate / 2.0 - 200.0 && bandwidth < 700.0
}
