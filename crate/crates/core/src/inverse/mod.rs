//! The Marchenko reconstruction: scattering data to potential and boundary matrix.

mod fkernel;
mod marchenko;
mod recover;
mod zmat;

pub use fkernel::{build_f_kernel, FKernel};
pub use marchenko::{
    homogeneous_margin, marchenko_solve, marchenko_sweep, MarchenkoKernel, MarchenkoRow,
};
pub use recover::{
    default_boundary_samples, recover_boundary, recover_potential, run_inverse,
    InverseDiagnostics, RecoveredModel,
};
