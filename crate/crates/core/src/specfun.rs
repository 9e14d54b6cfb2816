//! Special functions for the oscillatory tail corrections: the complex
//! exponential integral E1 and the sine integral derived from it.

use num_complex::Complex64;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral `E1(w)` for complex `w` off the negative real axis.
///
/// Power series for small `|w|`, modified-Lentz continued fraction otherwise.
/// The key identity used elsewhere: `int_z^inf e^{iu}/u du = E1(-iz)` for z > 0.
pub fn exp1(w: Complex64) -> Complex64 {
    assert!(
        w.norm() > 0.0 && !(w.im == 0.0 && w.re < 0.0),
        "E1 undefined at the origin and on the negative real axis"
    );
    if w.norm() <= 4.0 {
        // E1(w) = -gamma - ln w + sum_{m>=1} (-1)^{m+1} w^m / (m m!)
        let mut sum = Complex64::new(0.0, 0.0);
        let mut term = w; // m = 1 term
        let mut m = 1usize;
        loop {
            sum += term / m as f64;
            m += 1;
            term = -term * w / m as f64;
            if term.norm() < 1e-18 * sum.norm().max(1e-300) || m > 120 {
                break;
            }
        }
        -Complex64::new(EULER_GAMMA, 0.0) - w.ln() + sum
    } else {
        // E1(w) = e^{-w} / (w + 1 - 1/(w + 3 - 4/(w + 5 - 9/( ... ))))
        let tiny = Complex64::new(1e-300, 0.0);
        let mut f = w + Complex64::new(1.0, 0.0);
        if f.norm() == 0.0 {
            f = tiny;
        }
        let mut c = f;
        let mut d = Complex64::new(0.0, 0.0);
        for j in 1..=200 {
            let a = Complex64::new(-((j * j) as f64), 0.0);
            let b = w + Complex64::new(2.0 * j as f64 + 1.0, 0.0);
            d = b + a * d;
            if d.norm() == 0.0 {
                d = tiny;
            }
            c = b + a / c;
            if c.norm() == 0.0 {
                c = tiny;
            }
            d = Complex64::new(1.0, 0.0) / d;
            let delta = c * d;
            f *= delta;
            if (delta - Complex64::new(1.0, 0.0)).norm() < 1e-15 {
                break;
            }
        }
        (-w).exp() / f
    }
}

/// Sine integral `Si(z) = int_0^z sin(u)/u du` for real `z`.
pub fn sin_integral(z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let a = z.abs();
    let si = std::f64::consts::FRAC_PI_2 - exp1(Complex64::new(0.0, -a)).im;
    si * z.signum()
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference values good to 15 digits (standard tables).
    #[test]
    fn sine_integral_reference_values() {
        assert!((sin_integral(1.0) - 0.946_083_070_367_183_1).abs() < 1e-13);
        assert!((sin_integral(10.0) - 1.658_347_594_218_874).abs() < 1e-13);
        assert!((sin_integral(-1.0) + 0.946_083_070_367_183_1).abs() < 1e-13);
    }

    #[test]
    fn exp1_on_negative_imaginary_axis() {
        // E1(-2i) = -Ci(2) + i(pi/2 - Si(2))
        let v = exp1(Complex64::new(0.0, -2.0));
        assert!((v.re + 0.422_980_828_774_864_76).abs() < 1e-13);
        assert!((v.im + 0.034_616_650_007_798_01).abs() < 1e-13);
    }

    #[test]
    fn exp1_matches_quadrature_of_oscillatory_tail() {
        // int_z^inf e^{iu}/u du by brute-force quadrature out to a large cutoff,
        // with the remainder beyond handled by one integration by parts.
        for &z in &[0.7, 3.0, 12.0] {
            let big = 4000.0;
            let m = 2_000_000usize;
            let h = (big - z) / m as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..=m {
                let u = z + i as f64 * h;
                let w = if i == 0 || i == m { 0.5 } else { 1.0 };
                acc += Complex64::new(0.0, u).exp() / u * w;
            }
            acc *= h;
            // int_big^inf e^{iu}/u du = i e^{i big}/big + O(1/big^2)
            acc += Complex64::new(0.0, 1.0) * Complex64::new(0.0, big).exp() / big;
            let direct = exp1(Complex64::new(0.0, -z));
            assert!((acc - direct).norm() < 1e-6, "z={z} diff={}", (acc - direct).norm());
        }
    }
}
