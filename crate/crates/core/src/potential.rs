//! Hermitian matrix potentials on the half line: presets and sampled tables.
//!
//! Sampled potentials are evaluated by monotone cubic (Fritsch-Carlson)
//! interpolation between samples, with an exponential tail fitted beyond the
//! last sample so the integrability weight `(1+x) |V|` stays summable.

use num_complex::Complex64;
use crate::error::{Error, Result};
use crate::matrix::{check_dimension, check_finite, hermitian_part, hermitian_residual, mat_norm, CMat};

#[derive(Debug, Clone)]
pub enum PotentialKind {
    Zero,
    /// `V(x) = coeff * sech^2(kappa x)`.
    Sech2 { kappa: f64, coeff: CMat },
    /// `V(x) = coeff * exp(-rate x)`.
    ExpDecay { rate: f64, coeff: CMat },
    /// Table of strictly increasing positions with Hermitian values.
    Sampled {
        xs: Vec<f64>,
        vs: Vec<CMat>,
        /// Decay rate of the extrapolated tail beyond the last sample.
        tail_rate: f64,
    },
}

#[derive(Debug, Clone)]
pub struct HermitianPotential {
    n: usize,
    kind: PotentialKind,
    /// Interpolant slopes for sampled tables, one per sample.
    slopes: Option<Vec<CMat>>,
}

/// Absolute Hermitian-deviation accepted on inputs.
const HERMITIAN_TOL: f64 = 1e-12;

impl HermitianPotential {
    pub fn zero(n: usize) -> Result<Self> {
        check_dimension(n)?;
        Ok(HermitianPotential { n, kind: PotentialKind::Zero, slopes: None })
    }

    pub fn sech2(kappa: f64, coeff: CMat) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidInput("sech2 width must be positive".into()));
        }
        let coeff = validated_coefficient(coeff)?;
        Ok(HermitianPotential { n: coeff.nrows(), kind: PotentialKind::Sech2 { kappa, coeff }, slopes: None })
    }

    /// The classic reflectionless well `-2 kappa^2 sech^2(kappa x)` (scalar).
    pub fn one_soliton(kappa: f64) -> Result<Self> {
        let coeff = CMat::from_element(1, 1, Complex64::new(-2.0 * kappa * kappa, 0.0));
        Self::sech2(kappa, coeff)
    }

    pub fn exp_decay(rate: f64, coeff: CMat) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::InvalidInput("decay rate must be positive".into()));
        }
        let coeff = validated_coefficient(coeff)?;
        Ok(HermitianPotential { n: coeff.nrows(), kind: PotentialKind::ExpDecay { rate, coeff }, slopes: None })
    }

    pub fn sampled(xs: Vec<f64>, vs: Vec<CMat>) -> Result<Self> {
        if xs.len() != vs.len() || xs.len() < 2 {
            return Err(Error::InvalidInput("sampled potential needs at least two matching samples".into()));
        }
        if !xs.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidInput("sample positions must be strictly increasing".into()));
        }
        if !(xs[0] >= 0.0) {
            return Err(Error::InvalidInput("sample positions must be nonnegative".into()));
        }
        let n = vs[0].nrows();
        check_dimension(n)?;
        let mut clean = Vec::with_capacity(vs.len());
        for v in &vs {
            if v.nrows() != n || v.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.nrows() });
            }
            clean.push(validated_coefficient(v.clone())?);
        }
        let tail_rate = fit_tail_rate(&xs, &clean);
        let slopes = pchip_slopes(&xs, &clean);
        Ok(HermitianPotential {
            n,
            kind: PotentialKind::Sampled { xs, vs: clean, tail_rate },
            slopes: Some(slopes),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    /// Rebuild interpolation state after deserialization.
    pub fn rebuild(mut self) -> Result<Self> {
        if let PotentialKind::Sampled { xs, vs, .. } = &self.kind {
            self.slopes = Some(pchip_slopes(xs, vs));
        }
        Ok(self)
    }

    /// Writes `V(x)` into `buf` without allocating; the integrator's hot path.
    pub fn eval_into(&self, x: f64, buf: &mut CMat) {
        match &self.kind {
            PotentialKind::Zero => buf.fill(Complex64::new(0.0, 0.0)),
            PotentialKind::Sech2 { kappa, coeff } => {
                let s = 1.0 / (kappa * x).cosh();
                let s2 = s * s;
                for (dst, src) in buf.iter_mut().zip(coeff.iter()) {
                    *dst = src * s2;
                }
            }
            PotentialKind::ExpDecay { rate, coeff } => {
                let d = (-rate * x).exp();
                for (dst, src) in buf.iter_mut().zip(coeff.iter()) {
                    *dst = src * d;
                }
            }
            PotentialKind::Sampled { xs, vs, tail_rate } => {
                let last = xs.len() - 1;
                if x >= xs[last] {
                    let decay = (-(tail_rate) * (x - xs[last])).exp();
                    for (dst, src) in buf.iter_mut().zip(vs[last].iter()) {
                        *dst = src * decay;
                    }
                    return;
                }
                if x <= xs[0] {
                    buf.copy_from(&vs[0]);
                    return;
                }
                let i = match xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
                    Ok(i) => {
                        buf.copy_from(&vs[i]);
                        return;
                    }
                    Err(i) => i - 1,
                };
                let slopes = self.slopes.as_ref().expect("sampled potential has slopes");
                let h = xs[i + 1] - xs[i];
                let t = (x - xs[i]) / h;
                let t2 = t * t;
                let t3 = t2 * t;
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = (t3 - 2.0 * t2 + t) * h;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = (t3 - t2) * h;
                for idx in 0..buf.len() {
                    buf[idx] = vs[i][idx] * h00
                        + slopes[i][idx] * h10
                        + vs[i + 1][idx] * h01
                        + slopes[i + 1][idx] * h11;
                }
            }
        }
    }

    pub fn eval(&self, x: f64) -> CMat {
        let mut buf = CMat::zeros(self.n, self.n);
        self.eval_into(x, &mut buf);
        buf
    }

    /// `int_x^inf |V(t)| dt`, analytic for presets and extrapolated for tables.
    pub fn tail_mass(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Zero => 0.0,
            PotentialKind::Sech2 { kappa, coeff } => mat_norm(coeff) * (1.0 - (kappa * x).tanh()) / kappa,
            PotentialKind::ExpDecay { rate, coeff } => mat_norm(coeff) * (-rate * x).exp() / rate,
            PotentialKind::Sampled { xs, vs, tail_rate } => {
                let last = xs.len() - 1;
                let tail_from_last = mat_norm(&vs[last]) / tail_rate;
                if x >= xs[last] {
                    return tail_from_last * (-(tail_rate) * (x - xs[last])).exp();
                }
                let mut sum = tail_from_last;
                let mut i = last;
                while i > 0 && xs[i - 1] >= x {
                    sum += 0.5 * (mat_norm(&vs[i - 1]) + mat_norm(&vs[i])) * (xs[i] - xs[i - 1]);
                    i -= 1;
                }
                if i > 0 {
                    let v_here = self.eval(x);
                    sum += 0.5 * (mat_norm(&v_here) + mat_norm(&vs[i])) * (xs[i] - x);
                }
                sum
            }
        }
    }

    /// Numeric `int_0^x_max (1 + x) |V(x)| dx` (trapezoid on a fine grid).
    pub fn weighted_l11(&self, x_max: f64, samples: usize) -> f64 {
        let m = samples.max(2);
        let h = x_max / m as f64;
        let mut sum = 0.0;
        for i in 0..=m {
            let x = i as f64 * h;
            let w = if i == 0 || i == m { 0.5 } else { 1.0 };
            sum += w * (1.0 + x) * mat_norm(&self.eval(x));
        }
        sum * h
    }
}

fn validated_coefficient(m: CMat) -> Result<CMat> {
    let n = m.nrows();
    check_dimension(n)?;
    if m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
    }
    check_finite(&m, "potential coefficient")?;
    let scale = mat_norm(&m).max(1.0);
    if hermitian_residual(&m) > HERMITIAN_TOL * scale {
        return Err(Error::InvalidInput("potential matrix is not Hermitian".into()));
    }
    Ok(hermitian_part(&m))
}

fn fit_tail_rate(xs: &[f64], vs: &[CMat]) -> f64 {
    let last = xs.len() - 1;
    let tail_norm = mat_norm(&vs[last]);
    if tail_norm == 0.0 {
        return 1.0;
    }
    let back = (xs.len() / 8).max(1).min(last);
    let ref_norm = mat_norm(&vs[last - back]);
    let span = xs[last] - xs[last - back];
    if ref_norm > tail_norm && span > 0.0 {
        ((ref_norm / tail_norm).ln() / span).clamp(0.05, 50.0)
    } else {
        1.0
    }
}

/// Fritsch-Carlson slopes applied componentwise to real and imaginary parts.
fn pchip_slopes(xs: &[f64], vs: &[CMat]) -> Vec<CMat> {
    let n = vs[0].nrows();
    let m = xs.len();
    let mut slopes = vec![CMat::zeros(n, n); m];
    for r in 0..n {
        for c in 0..n {
            let re: Vec<f64> = vs.iter().map(|v| v[(r, c)].re).collect();
            let im: Vec<f64> = vs.iter().map(|v| v[(r, c)].im).collect();
            let dre = pchip_slopes_scalar(xs, &re);
            let dim = pchip_slopes_scalar(xs, &im);
            for i in 0..m {
                slopes[i][(r, c)] = Complex64::new(dre[i], dim[i]);
            }
        }
    }
    slopes
}

fn pchip_slopes_scalar(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let m = xs.len();
    let mut d = vec![0.0; m];
    if m == 2 {
        let s = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return vec![s, s];
    }
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = ys.windows(2).zip(&h).map(|(w, hi)| (w[1] - w[0]) / hi).collect();
    for i in 1..m - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            d[i] = 0.0;
        } else {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = pchip_endpoint(h[0], h[1], delta[0], delta[1]);
    d[m - 1] = pchip_endpoint(h[m - 2], h[m - 3], delta[m - 2], delta[m - 3]);
    d
}

fn pchip_endpoint(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let mut d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        d = 0.0;
    } else if d0 * d1 < 0.0 && d.abs() > 3.0 * d0.abs() {
        d = 3.0 * d0;
    }
    d
}
