//! Direct and inverse scattering for self-adjoint matrix Schrodinger
//! operators on the half line.
//!
//! The direct solver maps a Hermitian matrix potential and a unitary boundary
//! matrix to scattering data (scattering matrix, its high-energy limit, bound
//! states with normalization matrices). The inverse solver runs the Marchenko
//! reconstruction: it assembles the data kernel, solves the Marchenko integral
//! equation, and reads off the potential and the boundary matrix. A validation
//! layer checks the characterization conditions and identity suite on both.

pub mod boundary;
pub mod direct;
pub mod error;
pub mod filon;
pub mod grid;
pub mod inverse;
pub mod io;
pub mod matrix;
pub mod ode;
pub mod potential;
pub mod specfun;
pub mod validate;

pub use boundary::{boundary_pair, BoundaryCondition};
pub use error::{Error, Result};
pub use grid::GridSpec;
pub use matrix::CMat;
pub use potential::HermitianPotential;
