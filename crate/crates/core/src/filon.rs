//! Filon-type quadrature: integrals of a tabulated matrix function against
//! `e^{i omega t}`, exact for integrands linear on each panel. Plain
//! trapezoid degrades once `omega * step` is no longer small; these weights
//! do not.

use num_complex::Complex64;

use crate::matrix::CMat;

/// Moments `w0 = int_0^1 e^{i theta s} ds` and `w1 = int_0^1 s e^{i theta s} ds`,
/// evaluated by series for small `theta` to dodge cancellation.
pub fn panel_moments(theta: f64) -> (Complex64, Complex64) {
    if theta.abs() < 0.5 {
        let it = Complex64::new(0.0, theta);
        let mut w0 = Complex64::new(0.0, 0.0);
        let mut w1 = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0); // (i theta)^m / m!
        for m in 0..20 {
            w0 += pow / (m as f64 + 1.0);
            w1 += pow / (m as f64 + 2.0);
            pow = pow * it / (m as f64 + 1.0);
        }
        (w0, w1)
    } else {
        let it = Complex64::new(0.0, theta);
        let e = it.exp();
        let w0 = (e - 1.0) / it;
        let w1 = (e * (it - 1.0) + 1.0) / (it * it);
        (w0, w1)
    }
}

/// `int_{t0}^{t0 + (m-1) h} M(t) e^{i omega t} dt` for `M` tabulated on the
/// uniform grid `t_j = t0 + j h` and treated as linear on each panel.
pub fn oscillatory_integral(values: &[CMat], h: f64, t0: f64, omega: f64) -> CMat {
    assert!(values.len() >= 2, "need at least one panel");
    let n = values[0].nrows();
    let theta = omega * h;
    let (w0, w1) = panel_moments(theta);
    let left = w0 - w1;
    let mut acc = CMat::zeros(n, n);
    // e^{i omega t_a} accumulated multiplicatively panel to panel
    let step_phase = Complex64::new(0.0, theta).exp();
    let mut phase = (Complex64::new(0.0, omega * t0)).exp() * Complex64::new(h, 0.0);
    for pair in values.windows(2) {
        for idx in 0..n * n {
            acc[idx] += phase * (left * pair[0][idx] + w1 * pair[1][idx]);
        }
        phase *= step_phase;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{from_rows, mat_norm};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn moments_match_closed_forms_across_regimes() {
        for &theta in &[1e-8, 0.01, 0.4999, 0.5001, 3.0, 40.0] {
            let (w0, w1) = panel_moments(theta);
            // reference by fine quadrature
            let m = 20_000;
            let dt = 1.0 / m as f64;
            let mut r0 = Complex64::new(0.0, 0.0);
            let mut r1 = Complex64::new(0.0, 0.0);
            for i in 0..=m {
                let s = i as f64 * dt;
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                let e = Complex64::new(0.0, theta * s).exp();
                r0 += e * w;
                r1 += e * (s * w);
            }
            r0 *= dt;
            r1 *= dt;
            assert!((w0 - r0).norm() < 1e-7, "theta={theta}");
            assert!((w1 - r1).norm() < 1e-7, "theta={theta}");
        }
    }

    #[test]
    fn integrates_exponential_against_oscillation() {
        // int_0^L e^{-t} e^{i omega t} dt = (1 - e^{(i omega - 1) L})/(1 - i omega)
        let l = 30.0;
        let h = 0.01;
        let m = (l / h) as usize;
        let values: Vec<CMat> = (0..=m)
            .map(|j| from_rows(1, &[c((-(j as f64) * h).exp(), 0.0)]))
            .collect();
        for &omega in &[0.0, 0.7, 5.0, 60.0] {
            let got = oscillatory_integral(&values, h, 0.0, omega);
            let iw = Complex64::new(-1.0, omega);
            let expected = (1.0 - (iw * l).exp()) / (-iw);
            assert!(
                (got[(0, 0)] - expected).norm() < 2e-5,
                "omega={omega} err={}",
                (got[(0, 0)] - expected).norm()
            );
        }
    }

    #[test]
    fn exact_for_linear_integrands() {
        // M(t) = 2 - 3t on a coarse grid must integrate exactly for any omega.
        let h = 0.5;
        let values: Vec<CMat> = (0..=8).map(|j| from_rows(1, &[c(2.0 - 3.0 * (j as f64) * h, 0.0)])).collect();
        let omega = 11.0;
        let got = oscillatory_integral(&values, h, 0.0, omega);
        // analytic: int (2-3t) e^{i w t} dt
        let l = 4.0;
        let iw = Complex64::new(0.0, omega);
        let e = (iw * l).exp();
        let expected = (Complex64::new(2.0, 0.0) * (e - 1.0)) / iw
            - Complex64::new(3.0, 0.0) * ((e * (iw * l - 1.0) + 1.0) / (iw * iw));
        assert!(mat_norm(&(got - from_rows(1, &[expected]))) < 1e-12);
    }
}
