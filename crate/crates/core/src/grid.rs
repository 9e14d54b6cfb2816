//! Uniform wavenumber and position grids with truncation tolerances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discretization parameters shared by the direct and inverse solvers.
///
/// The wavenumber grid is `k_i = i * K_max / n_k` for `i = 1..=n_k`, so it
/// never contains `k = 0`. The position grid is `x_i = i * X_max / n_x` for
/// `i = 0..=n_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub k_max: f64,
    pub n_k: usize,
    pub x_max: f64,
    pub n_x: usize,
    /// Relative singular-value threshold for numerical rank decisions.
    pub tol_rank: f64,
    /// Truncation tolerance for decaying tails.
    pub tol_tail: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            k_max: 40.0,
            n_k: 800,
            x_max: 12.0,
            n_x: 240,
            tol_rank: 1e-6,
            tol_tail: 1e-8,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.k_max > 0.0) || !(self.x_max > 0.0) {
            return Err(Error::InvalidInput("grid cutoffs must be positive".into()));
        }
        if self.n_k < 2 || self.n_x < 2 {
            return Err(Error::InvalidInput("grid counts must be at least 2".into()));
        }
        if !(self.tol_rank > 0.0) || !(self.tol_tail > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn k_step(&self) -> f64 {
        self.k_max / self.n_k as f64
    }

    pub fn x_step(&self) -> f64 {
        self.x_max / self.n_x as f64
    }

    /// Positive wavenumber samples; the smallest is `k_max / n_k > 0`.
    pub fn k_grid(&self) -> Vec<f64> {
        (1..=self.n_k).map(|i| i as f64 * self.k_step()).collect()
    }

    /// Position samples on `[0, x_max]` inclusive.
    pub fn x_grid(&self) -> Vec<f64> {
        (0..=self.n_x).map(|i| i as f64 * self.x_step()).collect()
    }
}
