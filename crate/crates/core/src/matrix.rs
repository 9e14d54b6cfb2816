//! Dense complex matrices and the small linear-algebra kernels used everywhere:
//! Hermitian projectors, positive-definite inverse square roots, unitarity checks.
//!
//! Matrices are kept dense; supported dimensions are 1..=8, so every solve here
//! is O(1)-sized. The matrix norm is the maximum absolute row sum.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Largest matrix dimension the library supports.
pub const MAX_DIM: usize = 8;

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

/// Maximum absolute row sum, `max_l sum_s |M_ls|`.
pub fn mat_norm(m: &CMat) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        let mut row = 0.0;
        for j in 0..m.ncols() {
            row += m[(i, j)].norm();
        }
        worst = worst.max(row);
    }
    worst
}

pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn anti_hermitian_part(m: &CMat) -> CMat {
    (m - m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Deviation from Hermitian symmetry in the matrix norm.
pub fn hermitian_residual(m: &CMat) -> f64 {
    mat_norm(&(m - m.adjoint()))
}

/// Deviation of `m` from unitarity, `norm(m^dag m - I)`.
pub fn unitarity_residual(m: &CMat) -> f64 {
    let n = m.nrows();
    mat_norm(&(m.adjoint() * m - identity(n)))
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn check_finite(m: &CMat, context: &'static str) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite { context })
    }
}

pub fn check_dimension(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        return Err(Error::UnsupportedDimension { n, max: MAX_DIM });
    }
    Ok(())
}

/// Condition number from singular values; `f64::INFINITY` for a singular matrix.
pub fn condition_number(m: &CMat) -> f64 {
    let svd = m.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Orthogonal projector onto the span of left singular vectors of `m` whose
/// singular value falls below `tol_rank` times the largest singular value
/// (an absolute floor of `tol_rank` applies when `m` is the zero matrix).
///
/// The returned projector `p` satisfies `p = p^dag = p^2` and `norm(p * m)`
/// of order `n * tol_rank`; the second value is the dimension it projects onto.
pub fn nullspace_projector(m: &CMat, tol_rank: f64) -> (CMat, usize) {
    let n = m.nrows();
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let cut = if smax > 0.0 { tol_rank * smax } else { tol_rank };
    let mut p = zeros(n);
    let mut deficiency = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s < cut {
            let col = u.column(i);
            for r in 0..n {
                for c in 0..n {
                    p[(r, c)] += col[r] * col[c].conj();
                }
            }
            deficiency += 1;
        }
    }
    // Exact Hermitian symmetry, independent of summation order.
    p = hermitian_part(&p);
    (p, deficiency)
}

/// Like [`nullspace_projector`] but with an absolute singular-value cut,
/// for callers that know the natural scale of the matrix family (a matrix
/// that is singular in every direction has no usable largest singular value).
pub fn nullspace_projector_abs(m: &CMat, cut: f64) -> (CMat, usize) {
    let n = m.nrows();
    let svd = m.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let mut p = zeros(n);
    let mut deficiency = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s < cut {
            let col = u.column(i);
            for r in 0..n {
                for c in 0..n {
                    p[(r, c)] += col[r] * col[c].conj();
                }
            }
            deficiency += 1;
        }
    }
    p = hermitian_part(&p);
    (p, deficiency)
}

/// Inverse square root of a Hermitian positive definite matrix.
///
/// Returns `r` with `r = r^dag > 0` and `r * m * r = I`. Fails with
/// `NotPositiveDefinite` when the smallest eigenvalue is at or below
/// `1e-12 * max(1, |largest eigenvalue|)`.
pub fn psd_inv_sqrt(m: &CMat) -> Result<CMat> {
    let n = m.nrows();
    let herm = hermitian_part(m);
    let eig = herm.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let tol = 1e-12 * lmax.max(1.0);
    let mut r = zeros(n);
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= tol {
            return Err(Error::NotPositiveDefinite { eigenvalue: lambda });
        }
        let w = 1.0 / lambda.sqrt();
        let v = eig.eigenvectors.column(i);
        for r_i in 0..n {
            for c_i in 0..n {
                r[(r_i, c_i)] += v[r_i] * v[c_i].conj() * Complex64::new(w, 0.0);
            }
        }
    }
    Ok(hermitian_part(&r))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let eig = hermitian_part(m).symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

/// Nearest unitary matrix in the Frobenius sense (polar factor from the SVD).
pub fn polar_unitary(m: &CMat) -> Result<CMat> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().ok_or(Error::NonFinite { context: "polar factor" })?;
    let vt = svd.v_t.as_ref().ok_or(Error::NonFinite { context: "polar factor" })?;
    let q = u * vt;
    check_finite(&q, "polar factor")?;
    Ok(q)
}

/// Numerical rank against `tol_rank` times the largest singular value.
pub fn numerical_rank(m: &CMat, tol_rank: f64) -> usize {
    let n = m.nrows().min(m.ncols());
    let (_, deficiency) = nullspace_projector(m, tol_rank);
    n - deficiency
}

pub fn from_rows(n: usize, entries: &[Complex64]) -> CMat {
    assert_eq!(entries.len(), n * n);
    CMat::from_fn(n, n, |i, j| entries[i * n + j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norm_is_max_row_sum() {
        let m = from_rows(2, &[c(1.0, 0.0), c(0.0, -2.0), c(0.5, 0.0), c(0.0, 0.0)]);
        assert_eq!(mat_norm(&m), 3.0);
    }

    #[test]
    fn projector_of_identity_is_zero() {
        let (p, d) = nullspace_projector(&identity(2), 1e-8);
        assert_eq!(d, 0);
        assert!(mat_norm(&p) < 1e-14);
    }

    #[test]
    fn projector_of_zero_is_identity() {
        let (p, d) = nullspace_projector(&zeros(2), 1e-8);
        assert_eq!(d, 2);
        assert!(mat_norm(&(p - identity(2))) < 1e-14);
    }

    #[test]
    fn projector_of_near_singular_diagonal() {
        // SVD of a diagonal matrix is the matrix itself, so the small singular
        // direction is the second coordinate axis.
        let m = from_rows(2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1e-14, 0.0)]);
        let (p, d) = nullspace_projector(&m, 1e-8);
        assert_eq!(d, 1);
        let expected = from_rows(2, &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(mat_norm(&(p - expected)) < 1e-12);
    }

    #[test]
    fn inv_sqrt_identity() {
        let r = psd_inv_sqrt(&identity(2)).unwrap();
        assert!(mat_norm(&(r - identity(2))) < 1e-14);
    }

    #[test]
    fn inv_sqrt_diagonal() {
        let m = from_rows(2, &[c(4.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(9.0, 0.0)]);
        let r = psd_inv_sqrt(&m).unwrap();
        let expected = from_rows(2, &[c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0 / 3.0, 0.0)]);
        assert!(mat_norm(&(r - expected)) < 1e-14);
    }

    #[test]
    fn inv_sqrt_dense_verified_by_eigendecomposition() {
        let m = from_rows(2, &[c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        let r = psd_inv_sqrt(&m).unwrap();
        assert!(hermitian_residual(&r) < 1e-12);
        assert!(mat_norm(&(&r * &m * &r - identity(2))) < 1e-10);
    }

    #[test]
    fn inv_sqrt_rejects_indefinite() {
        let m = from_rows(2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        assert!(matches!(psd_inv_sqrt(&m), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn polar_recovers_unitary_from_scaled_input() {
        let s = 1.0 / 2.0_f64.sqrt();
        let u = from_rows(2, &[c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)]);
        let m = &u * c(3.0, 0.0);
        let q = polar_unitary(&m).unwrap();
        assert!(mat_norm(&(q - u)) < 1e-12);
    }

    fn arb_complex_matrix(n: usize) -> impl Strategy<Value = CMat> {
        proptest::collection::vec(
            (-3.0..3.0f64).prop_flat_map(|re| (Just(re), -3.0..3.0f64)),
            n * n,
        )
        .prop_map(move |v| CMat::from_fn(n, n, |i, j| c(v[i * n + j].0, v[i * n + j].1)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn projector_is_hermitian_idempotent(m in arb_complex_matrix(3)) {
            let (p, _) = nullspace_projector(&m, 1e-8);
            prop_assert!(mat_norm(&(&p * &p - &p)) < 1e-10);
            prop_assert!(hermitian_residual(&p) < 1e-10);
            prop_assert!(mat_norm(&(&p * &m)) <= 3.0 * 1e-8 * mat_norm(&m).max(1.0));
        }

        #[test]
        fn inv_sqrt_inverts_random_hpd(m in arb_complex_matrix(3)) {
            // m^dag m + I is Hermitian positive definite by construction.
            let hpd = m.adjoint() * &m + identity(3);
            let r = psd_inv_sqrt(&hpd).unwrap();
            prop_assert!(mat_norm(&(&r * &hpd * &r - identity(3))) < 1e-10);
        }
    }
}
