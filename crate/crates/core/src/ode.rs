//! Adaptive Dormand-Prince 5(4) integration of the matrix envelope equation
//! `g'' + 2ik g' = V(x) g`,
//! integrated backward from `x_max` with `g = I`, `g' = 0` there. The Jost
//! solution is recovered as `f = e^{ikx} g`, `f' = e^{ikx} (g' + ik g)`;
//! working with the envelope keeps the state O(1) for bound-state wavenumbers
//! where `e^{ikx}` itself underflows.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::CMat;
use crate::potential::HermitianPotential;

#[derive(Debug, Clone, Copy)]
pub struct OdeTol {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for OdeTol {
    fn default() -> Self {
        OdeTol { rtol: 1e-10, atol: 1e-12 }
    }
}

// Dormand-Prince coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// Difference between the 5th- and 4th-order weights, applied to stages 1..=7.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One state of the second-order system: the envelope and its derivative.
#[derive(Debug, Clone)]
pub struct Envelope {
    pub g: CMat,
    pub gp: CMat,
}

fn mat_acc(dst: &mut CMat, alpha: Complex64, src: &CMat) {
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d += alpha * s;
    }
}

impl Envelope {
    fn zeros(n: usize) -> Self {
        Envelope { g: CMat::zeros(n, n), gp: CMat::zeros(n, n) }
    }

    fn copy_from(&mut self, other: &Envelope) {
        self.g.copy_from(&other.g);
        self.gp.copy_from(&other.gp);
    }

    fn axpy(&mut self, alpha: f64, other: &Envelope) {
        let a = Complex64::new(alpha, 0.0);
        mat_acc(&mut self.g, a, &other.g);
        mat_acc(&mut self.gp, a, &other.gp);
    }
}

struct Rhs<'a> {
    potential: &'a HermitianPotential,
    two_ik: Complex64,
    vbuf: CMat,
}

impl<'a> Rhs<'a> {
    fn eval(&mut self, x: f64, y: &Envelope, out: &mut Envelope) {
        out.g.copy_from(&y.gp);
        self.potential.eval_into(x, &mut self.vbuf);
        // gp' = V g - 2ik g'
        self.vbuf.mul_to(&y.g, &mut out.gp);
        mat_acc(&mut out.gp, -self.two_ik, &y.gp);
    }
}

/// Integrates the envelope backward from `x_max`, recording the state at each
/// requested output position (ascending, all within `[0, x_max]`).
pub fn integrate_envelope(
    potential: &HermitianPotential,
    k: Complex64,
    x_max: f64,
    outputs: &[f64],
    tol: OdeTol,
) -> Result<Vec<Envelope>> {
    let n = potential.n();
    assert!(outputs.windows(2).all(|w| w[0] < w[1]), "outputs must be ascending");
    assert!(outputs.iter().all(|&x| x >= 0.0 && x <= x_max + 1e-12));

    let mut results: Vec<Envelope> = Vec::with_capacity(outputs.len());

    let mut y = Envelope::zeros(n);
    y.g = CMat::identity(n, n);
    let mut x = x_max;

    let mut rhs = Rhs { potential, two_ik: Complex64::new(0.0, 2.0) * k, vbuf: CMat::zeros(n, n) };

    let mut stages: Vec<Envelope> = (0..7).map(|_| Envelope::zeros(n)).collect();
    let mut ytmp = Envelope::zeros(n);
    let mut ynew = Envelope::zeros(n);

    let h_max = (x_max / 8.0).min(1.0).max(1e-3);
    let mut h = -(0.05_f64.min(0.5 / (1.0 + k.norm()))).min(h_max);
    let mut fresh_k1 = false;

    // Consume outputs from the top of the interval downward.
    let mut pending: Vec<f64> = outputs.to_vec();
    while let Some(&target) = pending.last() {
        if target >= x - 1e-12 {
            results.push(y.clone());
            pending.pop();
        } else {
            break;
        }
    }

    while let Some(&target) = pending.last() {
        // Clamp the step so it lands exactly on the next output.
        let mut h_step = h;
        let mut clamped = false;
        if x + h_step < target {
            h_step = target - x;
            clamped = true;
        }

        if !fresh_k1 {
            rhs.eval(x, &y, &mut stages[0]);
        }

        for s in 1..7 {
            ytmp.copy_from(&y);
            for j in 0..s {
                let a = A[s - 1][j];
                if a != 0.0 {
                    ytmp.axpy(h_step * a, &stages[j]);
                }
            }
            let (head, tail) = stages.split_at_mut(s);
            let _ = head;
            rhs.eval(x + C[s - 1] * h_step, &ytmp, &mut tail[0]);
            if s == 6 {
                // stage 6 input is already the 5th-order solution
                ynew.copy_from(&ytmp);
            }
        }

        // Scaled error estimate from the embedded 4th-order weights.
        let mut err: f64 = 0.0;
        for idx in 0..n * n {
            let mut eg = Complex64::new(0.0, 0.0);
            let mut ep = Complex64::new(0.0, 0.0);
            for s in 0..7 {
                if E[s] != 0.0 {
                    eg += stages[s].g[idx] * E[s];
                    ep += stages[s].gp[idx] * E[s];
                }
            }
            let sc_g = tol.atol + tol.rtol * y.g[idx].norm().max(ynew.g[idx].norm());
            let sc_p = tol.atol + tol.rtol * y.gp[idx].norm().max(ynew.gp[idx].norm());
            err = err.max(h_step.abs() * eg.norm() / sc_g);
            err = err.max(h_step.abs() * ep.norm() / sc_p);
        }

        if !err.is_finite() {
            return Err(Error::NonFinite { context: "envelope integration" });
        }

        if err <= 1.0 {
            x += h_step;
            y.copy_from(&ynew);
            // FSAL: the last stage evaluation is the first of the next step.
            let (first, rest) = stages.split_at_mut(1);
            first[0].copy_from(&rest[5]);
            fresh_k1 = true;

            while let Some(&t) = pending.last() {
                if t >= x - 1e-12 {
                    results.push(y.clone());
                    pending.pop();
                } else {
                    break;
                }
            }

            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !clamped {
                h = (h_step * factor).max(-h_max);
            } else {
                // keep the controller's natural step for the next attempt
                h = (h * factor).max(-h_max);
            }
        } else {
            let factor = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h = h_step * factor;
            fresh_k1 = false;
            if h.abs() < 1e-13 * x.abs().max(1.0) {
                return Err(Error::StepFailure { x, step: h });
            }
        }
    }

    results.reverse();
    Ok(results)
}

/// Converts envelope samples at `x` to Jost values `f`, `f'`.
pub fn envelope_to_jost(k: Complex64, x: f64, env: &Envelope) -> (CMat, CMat) {
    let phase = (Complex64::new(0.0, 1.0) * k * x).exp();
    let f = &env.g * phase;
    let fp = (&env.gp + &env.g * (Complex64::new(0.0, 1.0) * k)) * phase;
    (f, fp)
}
