//! Self-adjoint boundary conditions `-B^dag psi(0) + A^dag psi'(0) = 0`
//! parametrized by a unitary matrix.

use num_complex::Complex64;
use crate::error::{Error, Result};
use crate::matrix::{
    check_dimension, check_finite, hermitian_eigenvalues, identity, mat_norm, unitarity_residual,
    CMat,
};

/// Unitarity tolerance accepted on input matrices.
pub const UNITARY_TOL: f64 = 1e-10;

/// A boundary condition together with the coefficient pair it generates:
/// `A = (U + I)/2`, `B = i(U - I)/2`.
///
/// `U = -I` is Dirichlet, `U = I` is Neumann; everything else mixes the
/// components. The pair always satisfies `B^dag A = A^dag B` with
/// `A^dag A + B^dag B` positive definite.
#[derive(Debug, Clone)]
pub struct BoundaryCondition {
    u: CMat,
    a: CMat,
    b: CMat,
}

impl BoundaryCondition {
    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn unitary(&self) -> &CMat {
        &self.u
    }

    pub fn a(&self) -> &CMat {
        &self.a
    }

    pub fn b(&self) -> &CMat {
        &self.b
    }

    pub fn dirichlet(n: usize) -> Self {
        boundary_pair(&(identity(n) * Complex64::new(-1.0, 0.0))).expect("-I is unitary")
    }

    pub fn neumann(n: usize) -> Self {
        boundary_pair(&identity(n)).expect("I is unitary")
    }

    /// Scalar boundary condition `U = exp(i alpha)`.
    pub fn robin(alpha: f64) -> Self {
        let u = CMat::from_element(1, 1, Complex64::from_polar(1.0, alpha));
        boundary_pair(&u).expect("phase is unitary")
    }
}

/// Builds the coefficient pair from a unitary matrix.
///
/// Rejects matrices whose unitarity deviation exceeds [`UNITARY_TOL`].
pub fn boundary_pair(u: &CMat) -> Result<BoundaryCondition> {
    let n = u.nrows();
    check_dimension(n)?;
    if u.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: u.ncols() });
    }
    check_finite(u, "boundary matrix")?;
    let residual = unitarity_residual(u);
    if residual > UNITARY_TOL {
        return Err(Error::NonUnitary { residual, tol: UNITARY_TOL });
    }
    let half = Complex64::new(0.5, 0.0);
    let a = (u + identity(n)) * half;
    let b = (u - identity(n)) * Complex64::new(0.0, 0.5);

    let bc = BoundaryCondition { u: u.clone(), a, b };
    debug_assert!(bc.self_adjointness_residual() < 1e-12);
    Ok(bc)
}

impl BoundaryCondition {
    /// Deviation from `B^dag A = A^dag B`.
    pub fn self_adjointness_residual(&self) -> f64 {
        mat_norm(&(self.b.adjoint() * &self.a - self.a.adjoint() * &self.b))
    }

    /// Smallest eigenvalue of `A^dag A + B^dag B`; positive for valid input.
    pub fn coercivity(&self) -> f64 {
        let m = self.a.adjoint() * &self.a + self.b.adjoint() * &self.b;
        hermitian_eigenvalues(&m)[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::zeros;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn dirichlet_pair() {
        let bc = BoundaryCondition::dirichlet(2);
        assert!(mat_norm(bc.a()) < 1e-15);
        let expected_b = identity(2) * Complex64::new(0.0, -1.0);
        assert!(mat_norm(&(bc.b() - expected_b)) < 1e-15);
    }

    #[test]
    fn neumann_pair() {
        let bc = BoundaryCondition::neumann(2);
        assert!(mat_norm(&(bc.a() - identity(2))) < 1e-15);
        assert!(mat_norm(bc.b()) < 1e-15);
    }

    #[test]
    fn scalar_phase_pair_matches_direct_arithmetic() {
        // U = exp(i pi/2): A = exp(i pi/4) cos(pi/4), B = -exp(i pi/4) sin(pi/4).
        let bc = BoundaryCondition::robin(FRAC_PI_2);
        let a_expected = Complex64::from_polar(FRAC_PI_4.cos(), FRAC_PI_4);
        let b_expected = -Complex64::from_polar(FRAC_PI_4.sin(), FRAC_PI_4);
        assert!((bc.a()[(0, 0)] - a_expected).norm() < 1e-15);
        assert!((bc.b()[(0, 0)] - b_expected).norm() < 1e-15);
    }

    #[test]
    fn pair_identities_hold_for_mixed_unitary() {
        let u = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => Complex64::from_polar(1.0, FRAC_PI_2),
            (1, 1) => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, 0.0),
        });
        let bc = boundary_pair(&u).unwrap();
        assert!(bc.self_adjointness_residual() <= 1e-12);
        assert!(bc.coercivity() > 0.0);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = zeros(2) + identity(2) * Complex64::new(1.5, 0.0);
        assert!(matches!(boundary_pair(&m), Err(Error::NonUnitary { .. })));
    }
}
