//! Moving-least-squares material point method with von Mises plasticity.

mod material;
mod plasticity;
mod solver;

pub use material::{lame_from_elastic_constants, Material, YieldPreset};
pub use plasticity::{deviator, kirchhoff_stress, stress_at, von_mises_return_map, yield_excess, Svd3};
pub use solver::{
    grid_to_particle, grid_update, mpm_substep, particle_to_grid, ContactField, Grid, Mat3, MpmState, Particle,
    Stencil, SubstepConfig, Vec3,
};
