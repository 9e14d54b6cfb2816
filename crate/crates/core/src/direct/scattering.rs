//! Scattering matrix, its high-energy limit, bound states, and the
//! normalization matrices attached to them.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::boundary::BoundaryCondition;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::matrix::{
    check_finite, hermitian_part, identity, mat_norm, nullspace_projector_abs, psd_inv_sqrt, CMat,
};
use crate::ode::{integrate_envelope, OdeTol};
use crate::potential::HermitianPotential;

use super::jost::{jost_at_zero, jost_matrix_from_values, require_decayed_tail};

/// Condition-number ceiling beyond which the Jost matrix counts as singular.
const JOST_COND_LIMIT: f64 = 1e12;

/// Natural size of the Jost matrix family near `k = i kappa`; rank decisions
/// are made relative to this, because at a bound state of full multiplicity
/// every singular value of `J` itself collapses.
fn jost_scale(bc: &BoundaryCondition, kappa: f64) -> f64 {
    (mat_norm(bc.b()) + (1.0 + kappa.abs()) * mat_norm(bc.a())).max(f64::MIN_POSITIVE)
}

/// A bound state: `-kappa^2` is the eigenvalue, `multiplicity` the dimension
/// of the corresponding kernel of the Jost matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundState {
    pub kappa: f64,
    pub multiplicity: usize,
}

/// Scattering data produced by the forward solver: the scattering matrix on a
/// positive wavenumber grid, its unitary Hermitian high-energy limit, and the
/// bound states paired with their normalization matrices.
#[derive(Debug, Clone)]
pub struct ScatteringDataset {
    pub n: usize,
    pub k_grid: Vec<f64>,
    pub s: Vec<CMat>,
    pub u0: CMat,
    /// `(kappa_j, C_j)` with `kappa_j` strictly increasing.
    pub bound_states: Vec<(f64, CMat)>,
}

impl ScatteringDataset {
    pub fn s_at(&self, k: f64) -> Option<&CMat> {
        self.k_grid
            .iter()
            .position(|&kk| (kk - k).abs() <= 1e-9 * k.abs().max(1.0))
            .map(|i| &self.s[i])
    }
}

fn jost_pair_at(
    v: &HermitianPotential,
    bc: &BoundaryCondition,
    k: f64,
    x_max: f64,
) -> Result<(CMat, CMat)> {
    // J(k) uses the Jost solution at -k, J(-k) the one at +k.
    let (f_plus, fp_plus) = jost_at_zero(v, Complex64::new(k, 0.0), x_max)?;
    let (f_minus, fp_minus) = jost_at_zero(v, Complex64::new(-k, 0.0), x_max)?;
    let j_pos = jost_matrix_from_values(&f_minus, &fp_minus, bc);
    let j_neg = jost_matrix_from_values(&f_plus, &fp_plus, bc);
    Ok((j_pos, j_neg))
}

fn s_from_jost_pair(j_pos: &CMat, j_neg: &CMat, k: f64) -> Result<CMat> {
    let svd = j_pos.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 0.0 || smax / smin > JOST_COND_LIMIT {
        return Err(Error::SingularJostMatrix { k, cond: if smin > 0.0 { smax / smin } else { f64::INFINITY } });
    }
    let inv = j_pos.clone().try_inverse().ok_or(Error::SingularJostMatrix { k, cond: f64::INFINITY })?;
    let s = -(j_neg * inv);
    check_finite(&s, "scattering matrix")?;
    Ok(s)
}

/// `S(k) = -J(-k) J(k)^{-1}` for real `k > 0`.
pub fn scattering_matrix(
    v: &HermitianPotential,
    bc: &BoundaryCondition,
    k: f64,
    grid: &GridSpec,
) -> Result<CMat> {
    if !(k > 0.0) {
        return Err(Error::InvalidInput("scattering matrix needs k > 0".into()));
    }
    let (j_pos, j_neg) = jost_pair_at(v, bc, k, grid.x_max)?;
    s_from_jost_pair(&j_pos, &j_neg, k)
}

/// `(S(k), S(-k))` from one pair of Jost solves; used by the symmetry checks.
pub fn scattering_matrix_pair(
    v: &HermitianPotential,
    bc: &BoundaryCondition,
    k: f64,
    grid: &GridSpec,
) -> Result<(CMat, CMat)> {
    if !(k > 0.0) {
        return Err(Error::InvalidInput("scattering matrix needs k > 0".into()));
    }
    let (j_pos, j_neg) = jost_pair_at(v, bc, k, grid.x_max)?;
    let s_pos = s_from_jost_pair(&j_pos, &j_neg, k)?;
    let s_neg = s_from_jost_pair(&j_neg, &j_pos, -k)?;
    Ok((s_pos, s_neg))
}

/// High-energy limit of the scattering matrix, computed from the boundary
/// matrix alone: eigenvectors of `U` with eigenvalue `-1` map to `-1`, all
/// others map to `+1`. Always unitary Hermitian.
pub fn high_energy_limit(bc: &BoundaryCondition) -> CMat {
    let n = bc.n();
    let shifted = bc.unitary() + identity(n);
    // Eigenvalue -1 of a unitary matrix means a zero singular value of U + I;
    // the threshold is absolute because singular values of U + I live in [0, 2].
    let svd = shifted.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let mut p = CMat::zeros(n, n);
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv < 1e-8 {
            let col = u.column(i);
            for r in 0..n {
                for c in 0..n {
                    p[(r, c)] += col[r] * col[c].conj();
                }
            }
        }
    }
    let u0 = identity(n) - p * Complex64::new(2.0, 0.0);
    hermitian_part(&u0)
}

fn abs_det_sq(v: &HermitianPotential, bc: &BoundaryCondition, kappa: f64, x_max: f64) -> Result<(f64, CMat)> {
    let (f0, fp0) = jost_at_zero(v, Complex64::new(0.0, kappa), x_max)?;
    let j = jost_matrix_from_values(&f0, &fp0, bc);
    let d = j.determinant();
    Ok((d.norm_sqr(), j))
}

/// Golden-section minimization of `|det J(i kappa)|^2` on a bracket.
fn refine_root(
    v: &HermitianPotential,
    bc: &BoundaryCondition,
    mut a: f64,
    mut b: f64,
    x_max: f64,
    tol: f64,
) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = abs_det_sq(v, bc, c, x_max)?.0;
    let mut fd = abs_det_sq(v, bc, d, x_max)?.0;
    while (b - a) > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = abs_det_sq(v, bc, c, x_max)?.0;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = abs_det_sq(v, bc, d, x_max)?.0;
        }
    }
    Ok(0.5 * (a + b))
}

/// Refinement tolerance on bound-state wavenumbers.
const KAPPA_TOL: f64 = 1e-10;
/// Default number of scan samples.
const SCAN_SAMPLES: usize = 512;

/// Locates all zeros of `det J(i kappa)` in `(kappa_min, kappa_max]` by
/// sampling `|det|` on a logarithmic grid, bracketing local minima, and
/// refining each by golden-section search. Multiplicity is the numerical
/// rank deficiency of `J(i kappa)`.
pub fn find_bound_states(
    v: &HermitianPotential,
    bc: &BoundaryCondition,
    grid: &GridSpec,
    kappa_max: f64,
) -> Result<Vec<BoundState>> {
    if !(kappa_max > 0.0) {
        return Err(Error::InvalidInput("kappa_max must be positive".into()));
    }
    require_decayed_tail(v, grid.x_max)?;
    let kappa_min = 1e-3 * kappa_max;
    let m = SCAN_SAMPLES;
    let ratio = kappa_max / kappa_min;
    let kappas: Vec<f64> = (0..m).map(|i| kappa_min * ratio.powf(i as f64 / (m - 1) as f64)).collect();
    let dets: Vec<f64> = kappas
        .par_iter()
        .map(|&kp| abs_det_sq(v, bc, kp, grid.x_max).map(|(d, _)| d))
        .collect::<Result<Vec<_>>>()?;

    let mut roots: Vec<f64> = Vec::new();
    for i in 1..m - 1 {
        if dets[i] <= dets[i - 1] && dets[i] <= dets[i + 1] && dets[i] < dets[i - 1].max(dets[i + 1]) {
            let kappa = refine_root(v, bc, kappas[i - 1], kappas[i + 1], grid.x_max, KAPPA_TOL)?;
            roots.push(kappa);
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut states: Vec<BoundState> = Vec::new();
    for &kappa in &roots {
        if let Some(prev) = states.last() {
            if (kappa - prev.kappa).abs() < 10.0 * KAPPA_TOL {
                return Err(Error::ClusterAmbiguity {
                    kappa,
                    detail: format!("two refined roots within {:.1e}; refine the scan grid", 10.0 * KAPPA_TOL),
                });
            }
        }
        let (_, j) = abs_det_sq(v, bc, kappa, grid.x_max)?;
        let cut = grid.tol_rank * jost_scale(bc, kappa);
        let multiplicity = rank_deficiency_checked(&j, cut, kappa)?;
        if multiplicity > 0 {
            states.push(BoundState { kappa, multiplicity });
        }
    }
    Ok(states)
}

/// Rank deficiency with an ambiguity guard: singular values within a factor
/// 10 of the threshold are neither clearly zero nor clearly nonzero.
fn rank_deficiency_checked(j: &CMat, cut: f64, kappa: f64) -> Result<usize> {
    let svd = j.clone().svd(false, false);
    let mut deficiency = 0;
    for &s in svd.singular_values.iter() {
        if s < cut {
            deficiency += 1;
        } else if s < 10.0 * cut && s > 0.1 * cut {
            return Err(Error::ClusterAmbiguity {
                kappa,
                detail: format!("singular value {s:.3e} sits within a factor 10 of the rank threshold {cut:.3e}"),
            });
        }
    }
    Ok(deficiency)
}

/// Normalization matrix of the bound state at `i kappa`:
/// `C = P (P A_kappa P + I - P)^{-1/2}` with `P` the orthogonal projector onto
/// `ker J(i kappa)^dag` and `A_kappa = int_0^inf f(i kappa, x)^dag f(i kappa, x) dx`.
pub fn norming_matrix(
    v: &HermitianPotential,
    bc: &BoundaryCondition,
    kappa: f64,
    grid: &GridSpec,
) -> Result<CMat> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidInput("bound-state wavenumber must be positive".into()));
    }
    let n = v.n();
    let k = Complex64::new(0.0, kappa);

    // Fine quadrature grid for the norming integral (Simpson, 4x the x grid).
    let quad_n = 4 * grid.n_x;
    let h = grid.x_max / quad_n as f64;
    let xs: Vec<f64> = (0..=quad_n).map(|i| i as f64 * h).collect();
    let envs = integrate_envelope(v, k, grid.x_max, &xs, OdeTol::default())?;

    let mut a_mat = CMat::zeros(n, n);
    for (i, env) in envs.iter().enumerate() {
        let w = if i == 0 || i == quad_n {
            h / 3.0
        } else if i % 2 == 1 {
            4.0 * h / 3.0
        } else {
            2.0 * h / 3.0
        };
        // f^dag f = e^{-2 kappa x} g^dag g
        let scale = (-2.0 * kappa * xs[i]).exp() * w;
        let gg = env.g.adjoint() * &env.g;
        a_mat += gg * Complex64::new(scale, 0.0);
    }
    // Exponential tail beyond x_max, using the envelope limit g(x_max) = I.
    let tail = (-2.0 * kappa * grid.x_max).exp() / (2.0 * kappa);
    let g_end = &envs[quad_n].g;
    a_mat += (g_end.adjoint() * g_end) * Complex64::new(tail, 0.0);
    a_mat = hermitian_part(&a_mat);

    let last = envs.len() - 1;
    let (f0, fp0) = crate::ode::envelope_to_jost(k, 0.0, &envs[0]);
    let _ = last;
    let j = jost_matrix_from_values(&f0, &fp0, bc);
    let cut = grid.tol_rank * jost_scale(bc, kappa);
    let (p, deficiency) = nullspace_projector_abs(&j, cut);
    if deficiency == 0 {
        return Err(Error::InvalidInput(format!(
            "det J(i kappa) is not numerically zero at kappa = {kappa}; not a bound state"
        )));
    }

    let core = &p * &a_mat * &p + identity(n) - &p;
    let inv_sqrt = psd_inv_sqrt(&core)?;
    let c = hermitian_part(&(&p * inv_sqrt));
    check_finite(&c, "normalization matrix")?;
    Ok(c)
}

/// Runs the full forward map: scattering matrix on the k grid, high-energy
/// limit, bound states, and normalization matrices.
pub fn scattering_dataset(
    v: &HermitianPotential,
    bc: &BoundaryCondition,
    grid: &GridSpec,
    kappa_max: f64,
) -> Result<ScatteringDataset> {
    grid.validate()?;
    if v.n() != bc.n() {
        return Err(Error::DimensionMismatch { expected: v.n(), got: bc.n() });
    }
    require_decayed_tail(v, grid.x_max)?;

    let k_grid = grid.k_grid();
    let s: Vec<CMat> = k_grid
        .par_iter()
        .map(|&k| scattering_matrix(v, bc, k, grid))
        .collect::<Result<Vec<_>>>()?;

    let u0 = high_energy_limit(bc);
    let states = find_bound_states(v, bc, grid, kappa_max)?;
    let mut bound_states = Vec::with_capacity(states.len());
    for st in &states {
        let c = norming_matrix(v, bc, st.kappa, grid)?;
        bound_states.push((st.kappa, c));
    }

    Ok(ScatteringDataset { n: v.n(), k_grid, s, u0, bound_states })
}
