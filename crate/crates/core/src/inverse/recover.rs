//! Reading the potential and the boundary matrix off a solved Marchenko
//! kernel, and the end-to-end inverse pipeline.

use num_complex::Complex64;

use crate::direct::ScatteringDataset;
use crate::error::{Error, Result};
use crate::filon::oscillatory_integral;
use crate::grid::GridSpec;
use crate::matrix::{
    anti_hermitian_part, hermitian_part, identity, mat_norm, polar_unitary, unitarity_residual,
    CMat,
};
use crate::potential::HermitianPotential;

use super::fkernel::{build_f_kernel, FKernel};
use super::marchenko::{marchenko_sweep, MarchenkoKernel};

/// Boundary-recovery sample matrices with condition numbers beyond this are
/// discarded; if every sample fails, recovery is ill-conditioned.
const RECOVERY_COND_LIMIT: f64 = 1e10;

/// Margins below this mean the homogeneous Marchenko equation admits a
/// numerically nonzero solution and the whole reconstruction is untrusted.
const MARGIN_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct InverseDiagnostics {
    /// worst off-node Marchenko residual across rows
    pub marchenko_residual: f64,
    /// sampled `(x, sigma_min)` margins along the sweep
    pub margins: Vec<(f64, f64)>,
    /// kernel magnitude at the truncation edge
    pub kernel_tail_norm: f64,
    /// worst anti-Hermitian part removed from the recovered potential
    pub anti_hermitian_residual: f64,
    /// per-sample `(k, |U_est(k) - U|)` spread of the boundary estimates
    pub boundary_spread: Vec<(f64, f64)>,
    pub warnings: Vec<String>,
}

/// Output of the inverse pipeline: potential samples on the position grid
/// and the recovered unitary boundary matrix.
#[derive(Debug, Clone)]
pub struct RecoveredModel {
    pub xs: Vec<f64>,
    pub v: Vec<CMat>,
    pub u: CMat,
    pub diagnostics: InverseDiagnostics,
}

impl RecoveredModel {
    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    /// Repackages the samples as an interpolated potential, e.g. to re-run
    /// the direct solver on the reconstruction.
    pub fn to_potential(&self) -> Result<HermitianPotential> {
        HermitianPotential::sampled(self.xs.clone(), self.v.clone())
    }
}

/// `V(x) = -2 d/dx K(x,x)` by fourth-order finite differences of the kernel
/// diagonal (one-sided stencils at the ends). Returns positions, Hermitized
/// samples, and the worst anti-Hermitian residual that was removed.
pub fn recover_potential(kernel: &MarchenkoKernel) -> Result<(Vec<f64>, Vec<CMat>, f64)> {
    let rows = &kernel.rows;
    if rows.len() < 5 {
        return Err(Error::InvalidInput("need at least five kernel rows to differentiate".into()));
    }
    let h = kernel.h;
    let diag: Vec<&CMat> = rows.iter().map(|r| r.diagonal()).collect();
    let m = diag.len();
    let scale = Complex64::new(-2.0 / (12.0 * h), 0.0);

    let stencil = |coeffs: [(usize, f64); 5]| -> CMat {
        let n = diag[0].nrows();
        let mut acc = CMat::zeros(n, n);
        for (idx, w) in coeffs {
            acc += diag[idx] * Complex64::new(w, 0.0);
        }
        acc
    };

    let mut xs = Vec::with_capacity(m);
    let mut vs = Vec::with_capacity(m);
    let mut worst_anti = 0.0_f64;
    for i in 0..m {
        let d = if i >= 2 && i + 2 < m {
            stencil([(i - 2, 1.0), (i - 1, -8.0), (i, 0.0), (i + 1, 8.0), (i + 2, -1.0)])
        } else if i == 0 {
            stencil([(0, -25.0), (1, 48.0), (2, -36.0), (3, 16.0), (4, -3.0)])
        } else if i == 1 {
            stencil([(0, -3.0), (1, -10.0), (2, 18.0), (3, -6.0), (4, 1.0)])
        } else if i + 2 == m {
            stencil([(m - 1, 3.0), (m - 2, 10.0), (m - 3, -18.0), (m - 4, 6.0), (m - 5, -1.0)])
        } else {
            stencil([(m - 1, 25.0), (m - 2, -48.0), (m - 3, 36.0), (m - 4, -16.0), (m - 5, 3.0)])
        };
        let v_raw = d * scale;
        worst_anti = worst_anti.max(mat_norm(&anti_hermitian_part(&v_raw)));
        xs.push(rows[i].x);
        vs.push(hermitian_part(&v_raw));
    }
    Ok((xs, vs, worst_anti))
}

/// Jost boundary values reconstructed from a kernel row:
/// `f(k, x_p) = e^{ikx_p} (1 + m_p)` with
/// `m_p = e^{-ikx_p} int K(x_p, t) e^{ikt} dt`, so the `x`-derivative of the
/// smooth factor `m` can be differenced across the first few rows without
/// fighting the `e^{ikx}` oscillation.
fn smooth_factor(kernel: &MarchenkoKernel, p: usize, k: f64) -> CMat {
    let row = &kernel.rows[p];
    let integral = oscillatory_integral(&row.k, kernel.h, row.x, k);
    integral * (Complex64::new(0.0, -k * row.x)).exp()
}

fn jost_values_from_kernel(kernel: &MarchenkoKernel, k: f64) -> Result<(CMat, CMat)> {
    if kernel.rows.len() < 4 {
        return Err(Error::InvalidInput("need four kernel rows for boundary recovery".into()));
    }
    let n = kernel.rows[0].k[0].nrows();
    let h = kernel.h;
    let m: Vec<CMat> = (0..4).map(|p| smooth_factor(kernel, p, k)).collect();
    // one-sided third-order first derivative
    let m_prime = (&m[0] * Complex64::new(-11.0, 0.0)
        + &m[1] * Complex64::new(18.0, 0.0)
        + &m[2] * Complex64::new(-9.0, 0.0)
        + &m[3] * Complex64::new(2.0, 0.0))
        * Complex64::new(1.0 / (6.0 * h), 0.0);
    let f0 = identity(n) + &m[0];
    let fp0 = &f0 * (Complex64::new(0.0, k)) + m_prime;
    Ok((f0, fp0))
}

/// Recovers the boundary matrix from the kernel rows near the origin and the
/// scattering matrix at the sampled wavenumbers:
/// `U(k) = [G - iG'][G + iG']^{-1}` with `G = f(-k,0) + f(k,0) S(k)`;
/// estimates are averaged with condition-number weights and projected onto
/// the unitary group. Also returns the per-sample spread `|U_est(k) - U|`.
pub fn recover_boundary(
    kernel: &MarchenkoKernel,
    data: &ScatteringDataset,
    k_samples: &[f64],
) -> Result<(CMat, Vec<(f64, f64)>)> {
    if k_samples.is_empty() {
        return Err(Error::InvalidInput("no wavenumber samples for boundary recovery".into()));
    }
    let n = data.n;
    let mut estimates: Vec<(f64, CMat, f64)> = Vec::new(); // (k, U_est, weight)
    for &k in k_samples {
        let s = data
            .s_at(k)
            .ok_or_else(|| Error::InvalidInput(format!("k = {k} is not on the data grid")))?;
        let (f_plus, fp_plus) = jost_values_from_kernel(kernel, k)?;
        let (f_minus, fp_minus) = jost_values_from_kernel(kernel, -k)?;
        let g = &f_minus + &f_plus * s;
        let gp = &fp_minus + &fp_plus * s;
        let i_unit = Complex64::new(0.0, 1.0);
        let plus = &g + &gp * i_unit;
        let minus = &g - &gp * i_unit;
        let svd = plus.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if smin <= 0.0 || smax / smin > RECOVERY_COND_LIMIT {
            continue;
        }
        let inv = match plus.clone().try_inverse() {
            Some(inv) => inv,
            None => continue,
        };
        let u_est = &minus * inv;
        estimates.push((k, u_est, smin / smax));
    }
    if estimates.is_empty() {
        return Err(Error::IllConditionedRecovery);
    }
    let total: f64 = estimates.iter().map(|(_, _, w)| w).sum();
    let mut avg = CMat::zeros(n, n);
    for (_, u_est, w) in &estimates {
        avg += u_est * Complex64::new(w / total, 0.0);
    }
    let u = polar_unitary(&avg)?;
    let spread: Vec<(f64, f64)> = estimates
        .iter()
        .map(|(k, u_est, _)| (*k, mat_norm(&(u_est - &u))))
        .collect();
    Ok((u, spread))
}

/// Default recovery wavenumbers: a handful of nodes near the geometric
/// middle of the grid, where the kernel transform is well resolved and the
/// scattering matrix still carries phase information.
pub fn default_boundary_samples(data: &ScatteringDataset) -> Vec<f64> {
    let k_lo = data.k_grid[0];
    let k_hi = *data.k_grid.last().unwrap();
    let mid = (k_lo * k_hi).sqrt();
    let mut out: Vec<f64> = Vec::new();
    for factor in [0.35, 0.5, 0.7, 1.0, 1.4, 2.0] {
        let target = mid * factor;
        let nearest = data
            .k_grid
            .iter()
            .copied()
            .min_by(|a, b| (a - target).abs().partial_cmp(&(b - target).abs()).unwrap())
            .unwrap();
        if !out.iter().any(|&k| (k - nearest).abs() < 1e-12) {
            out.push(nearest);
        }
    }
    out
}

/// The full reconstruction: data kernel, Marchenko sweep, potential readout,
/// boundary-matrix recovery.
pub fn run_inverse(data: &ScatteringDataset, grid: &GridSpec) -> Result<RecoveredModel> {
    grid.validate()?;
    if grid.n_x < 8 {
        return Err(Error::InvalidInput("inverse run needs at least 8 position nodes".into()));
    }
    let f = build_f_kernel(data, grid)?;
    let mut warnings = Vec::new();
    if f.bound_part_terms().len() < data.bound_states.len() {
        warnings.push(format!(
            "dropped {} bound state(s) with vanishing normalization matrix",
            data.bound_states.len() - f.bound_part_terms().len()
        ));
    }
    run_inverse_with_kernel(&f, data, grid, warnings)
}

pub(crate) fn run_inverse_with_kernel(
    f: &FKernel,
    data: &ScatteringDataset,
    grid: &GridSpec,
    mut warnings: Vec<String>,
) -> Result<RecoveredModel> {
    let kernel = marchenko_sweep(f, grid)?;
    if let Some(&(x, sigma)) = kernel
        .margins
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
    {
        if sigma < MARGIN_FLOOR {
            return Err(Error::NearSingularSystem { x, cond: 1.0 / sigma });
        }
    }
    let (xs, v, anti) = recover_potential(&kernel)?;
    let samples = default_boundary_samples(data);
    let (u, spread) = recover_boundary(&kernel, data, &samples)?;
    let residual = unitarity_residual(&u);
    if residual > 1e-8 {
        warnings.push(format!("projected boundary matrix deviates from unitary by {residual:.2e}"));
    }

    let diagnostics = InverseDiagnostics {
        marchenko_residual: kernel.max_residual,
        margins: kernel.margins.clone(),
        kernel_tail_norm: kernel.tail_norm,
        anti_hermitian_residual: anti,
        boundary_spread: spread,
        warnings,
    };
    Ok(RecoveredModel { xs, v, u, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryCondition;
    use crate::direct::scattering_dataset;
    use crate::inverse::fkernel::FKernel;

    fn soliton_kernel(h: f64) -> FKernel {
        let c2 = CMat::from_element(1, 1, Complex64::new(2.0, 0.0));
        FKernel::from_parts(1, h, Vec::new(), vec![(1.0, c2)], 1e-8).unwrap()
    }

    #[test]
    fn soliton_potential_from_closed_form_kernel() {
        // F = 2e^{-t} leads to V = -2 sech^2 x.
        let grid = GridSpec { n_x: 260, x_max: 6.5, ..GridSpec::default() };
        let f = soliton_kernel(grid.x_step());
        let kernel = marchenko_sweep(&f, &grid).unwrap();
        let (xs, vs, anti) = recover_potential(&kernel).unwrap();
        assert!(anti < 1e-12);
        let mut worst = 0.0_f64;
        for (x, v) in xs.iter().zip(&vs) {
            if *x <= 6.0 {
                let expected = -2.0 / x.cosh().powi(2);
                worst = worst.max((v[(0, 0)].re - expected).abs());
            }
        }
        assert!(worst < 1e-3, "sup error {worst}");
    }

    #[test]
    fn derivative_of_diagonal_matches_analytic_form() {
        // feeds the closed-form diagonal through the stencils alone
        let grid = GridSpec { n_x: 300, x_max: 6.0, ..GridSpec::default() };
        let f = soliton_kernel(grid.x_step());
        let kernel = marchenko_sweep(&f, &grid).unwrap();
        let (xs, vs, _) = recover_potential(&kernel).unwrap();
        // compare against the analytic derivative of K(x,x) = -2e^{-2x}/(1+e^{-2x})
        for (x, v) in xs.iter().zip(&vs).step_by(19) {
            let expected = -2.0 / x.cosh().powi(2);
            assert!((v[(0, 0)].re - expected).abs() < 2e-4, "x={x}");
        }
    }

    #[test]
    fn free_dirichlet_roundtrip_trivial() {
        let v = HermitianPotential::zero(1).unwrap();
        let bc = BoundaryCondition::dirichlet(1);
        let grid = GridSpec { n_k: 200, k_max: 20.0, x_max: 10.0, n_x: 100, ..GridSpec::default() };
        let data = scattering_dataset(&v, &bc, &grid, 4.0).unwrap();
        let model = run_inverse(&data, &grid).unwrap();
        for v_rec in &model.v {
            assert!(mat_norm(v_rec) < 1e-6);
        }
        assert!(mat_norm(&(&model.u + identity(1))) < 1e-6, "U = {}", model.u[(0, 0)]);
    }

    #[test]
    fn free_neumann_roundtrip_trivial() {
        let v = HermitianPotential::zero(1).unwrap();
        let bc = BoundaryCondition::neumann(1);
        let grid = GridSpec { n_k: 200, k_max: 20.0, x_max: 10.0, n_x: 100, ..GridSpec::default() };
        let data = scattering_dataset(&v, &bc, &grid, 4.0).unwrap();
        let model = run_inverse(&data, &grid).unwrap();
        for v_rec in &model.v {
            assert!(mat_norm(v_rec) < 1e-6);
        }
        assert!(mat_norm(&(&model.u - identity(1))) < 1e-6);
    }
}
