//! The forward map: potential and boundary condition to scattering data.

mod jost;
mod scattering;

pub use jost::{jost_matrix, jost_solution, JostSample};
pub use scattering::{
    find_bound_states, high_energy_limit, norming_matrix, scattering_dataset, scattering_matrix,
    scattering_matrix_pair, BoundState, ScatteringDataset,
};
