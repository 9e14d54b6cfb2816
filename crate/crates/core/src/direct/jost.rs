//! Jost solutions and the Jost matrix.

use num_complex::Complex64;

use crate::boundary::BoundaryCondition;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::matrix::{check_finite, CMat};
use crate::ode::{envelope_to_jost, integrate_envelope, OdeTol};
use crate::potential::HermitianPotential;

/// Potential tails larger than this at `x_max` make the far-field
/// initialization meaningless and are rejected outright.
const TAIL_HARD_LIMIT: f64 = 1e-3;

/// The Jost solution `f(k, x)` sampled along a position grid, together with
/// its spatial derivative. Solves the Schrodinger equation and behaves like
/// `e^{ikx} I` for large `x`.
#[derive(Debug, Clone)]
pub struct JostSample {
    pub k: Complex64,
    pub xs: Vec<f64>,
    pub f: Vec<CMat>,
    pub f_prime: Vec<CMat>,
}

pub(crate) fn require_upper_half_plane(k: Complex64) -> Result<()> {
    if k.im < 0.0 {
        return Err(Error::InvalidInput(format!(
            "wavenumber must satisfy Im k >= 0, got {k}"
        )));
    }
    Ok(())
}

pub(crate) fn require_decayed_tail(v: &HermitianPotential, x_max: f64) -> Result<()> {
    let tail = v.tail_mass(x_max);
    if tail > TAIL_HARD_LIMIT {
        return Err(Error::InvalidInput(format!(
            "potential tail beyond x_max carries weight {tail:.3e}; increase X_max"
        )));
    }
    Ok(())
}

/// Jost solution values `(f, f')` at the given ascending positions.
pub(crate) fn jost_on(
    v: &HermitianPotential,
    k: Complex64,
    x_max: f64,
    outputs: &[f64],
) -> Result<(Vec<CMat>, Vec<CMat>)> {
    require_upper_half_plane(k)?;
    require_decayed_tail(v, x_max)?;
    let envs = integrate_envelope(v, k, x_max, outputs, OdeTol::default())?;
    let mut fs = Vec::with_capacity(envs.len());
    let mut fps = Vec::with_capacity(envs.len());
    for (env, &x) in envs.iter().zip(outputs) {
        let (f, fp) = envelope_to_jost(k, x, env);
        check_finite(&f, "Jost solution")?;
        check_finite(&fp, "Jost solution derivative")?;
        fs.push(f);
        fps.push(fp);
    }
    Ok((fs, fps))
}

/// Jost solution values at the origin only; the workhorse of the k sweep.
pub(crate) fn jost_at_zero(v: &HermitianPotential, k: Complex64, x_max: f64) -> Result<(CMat, CMat)> {
    let (mut fs, mut fps) = jost_on(v, k, x_max, &[0.0])?;
    Ok((fs.remove(0), fps.remove(0)))
}

/// Computes the Jost solution on the grid's position samples by integrating
/// the Schrodinger equation backward from `x_max`, where the solution is
/// matched to its outgoing asymptotic form.
pub fn jost_solution(v: &HermitianPotential, k: Complex64, grid: &GridSpec) -> Result<JostSample> {
    grid.validate()?;
    let xs = grid.x_grid();
    let (f, f_prime) = jost_on(v, k, grid.x_max, &xs)?;
    Ok(JostSample { k, xs, f, f_prime })
}

impl JostSample {
    /// Max deviation of `[f(k,.)^dag; f(k,.)](x) - 2ik I` over the samples
    /// (vanishes identically for real `k` and Hermitian potentials).
    pub fn wronskian_residual(&self) -> f64 {
        let n = self.f[0].nrows();
        let two_ik = Complex64::new(0.0, 2.0) * self.k;
        let target = CMat::identity(n, n) * two_ik;
        let mut worst = 0.0_f64;
        for (f, fp) in self.f.iter().zip(&self.f_prime) {
            let w = f.adjoint() * fp - fp.adjoint() * f;
            worst = worst.max(crate::matrix::mat_norm(&(w - &target)));
        }
        worst
    }
}

/// The Jost matrix `J(k) = f(-conj(k), 0)^dag B - f'(-conj(k), 0)^dag A`.
///
/// For real `k` this evaluates the Jost solution at `-k`; on the positive
/// imaginary axis the reflection is the identity, and zeros of `det J(i kappa)`
/// are the bound states.
pub fn jost_matrix(
    v: &HermitianPotential,
    bc: &BoundaryCondition,
    k: Complex64,
    grid: &GridSpec,
) -> Result<CMat> {
    require_upper_half_plane(k)?;
    if v.n() != bc.n() {
        return Err(Error::DimensionMismatch { expected: v.n(), got: bc.n() });
    }
    let reflected = -k.conj();
    let (f0, fp0) = jost_at_zero(v, reflected, grid.x_max)?;
    Ok(jost_matrix_from_values(&f0, &fp0, bc))
}

/// Assembles `J` from already-computed Jost values at the origin for the
/// reflected wavenumber.
pub(crate) fn jost_matrix_from_values(f0: &CMat, fp0: &CMat, bc: &BoundaryCondition) -> CMat {
    f0.adjoint() * bc.b() - fp0.adjoint() * bc.a()
}
