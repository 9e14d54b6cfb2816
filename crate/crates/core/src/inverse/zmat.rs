//! Split-complex dense matrices: real and imaginary parts stored as separate
//! `f64` matrices so products run through the fast real-gemm kernels. Used by
//! the Marchenko sweep, where matrices reach a few thousand rows; everything
//! else in the crate stays on `Complex64` storage.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::matrix::CMat;

#[derive(Debug, Clone)]
pub(crate) struct ZMat {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl ZMat {
    pub fn zeros(r: usize, c: usize) -> Self {
        ZMat { re: DMatrix::zeros(r, c), im: DMatrix::zeros(r, c) }
    }

    pub fn from_cmat(m: &CMat) -> Self {
        ZMat {
            re: DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re),
            im: DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].im),
        }
    }

    pub fn to_cmat(&self) -> CMat {
        CMat::from_fn(self.re.nrows(), self.re.ncols(), |i, j| {
            Complex64::new(self.re[(i, j)], self.im[(i, j)])
        })
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    /// Extracts a rectangular block as a new `ZMat`.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> ZMat {
        ZMat {
            re: self.re.view((r0, c0), (nr, nc)).into_owned(),
            im: self.im.view((r0, c0), (nr, nc)).into_owned(),
        }
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, src: &ZMat) {
        self.re.view_mut((r0, c0), (src.nrows(), src.ncols())).copy_from(&src.re);
        self.im.view_mut((r0, c0), (src.nrows(), src.ncols())).copy_from(&src.im);
    }

    /// `self += sign * a * b`, four real gemms.
    pub fn gemm_acc(&mut self, sign: f64, a: &ZMat, b: &ZMat) {
        self.re.gemm(sign, &a.re, &b.re, 1.0);
        self.re.gemm(-sign, &a.im, &b.im, 1.0);
        self.im.gemm(sign, &a.re, &b.im, 1.0);
        self.im.gemm(sign, &a.im, &b.re, 1.0);
    }

    pub fn mul(&self, other: &ZMat) -> ZMat {
        let mut out = ZMat::zeros(self.nrows(), other.ncols());
        out.gemm_acc(1.0, self, other);
        out
    }

    /// `self^dag * other`, via transposed gemms (no explicit adjoint copy).
    pub fn adjoint_mul(&self, other: &ZMat) -> ZMat {
        let mut out = ZMat::zeros(self.ncols(), other.ncols());
        out.re.gemm_tr(1.0, &self.re, &other.re, 0.0);
        out.re.gemm_tr(1.0, &self.im, &other.im, 1.0);
        out.im.gemm_tr(1.0, &self.re, &other.im, 0.0);
        out.im.gemm_tr(-1.0, &self.im, &other.re, 1.0);
        out
    }

    pub fn scale_in_place(&mut self, s: f64) {
        self.re *= s;
        self.im *= s;
    }

    pub fn frobenius_norm(&self) -> f64 {
        (self.re.norm_squared() + self.im.norm_squared()).sqrt()
    }
}

/// In-place Woodbury-style update on a sub-window of a large split-complex
/// inverse lives in the sweep code; this module only supplies the primitives.
#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{from_rows, mat_norm};

    #[test]
    fn product_matches_complex_reference() {
        let a = from_rows(2, &[
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.3),
            Complex64::new(0.0, -1.0),
            Complex64::new(2.0, 0.0),
        ]);
        let b = from_rows(2, &[
            Complex64::new(0.5, -1.0),
            Complex64::new(1.5, 0.2),
            Complex64::new(-2.0, 0.7),
            Complex64::new(0.1, 0.1),
        ]);
        let za = ZMat::from_cmat(&a);
        let zb = ZMat::from_cmat(&b);
        assert!(mat_norm(&(za.mul(&zb).to_cmat() - &a * &b)) < 1e-14);
        assert!(mat_norm(&(za.adjoint_mul(&zb).to_cmat() - a.adjoint() * &b)) < 1e-14);
    }
}
