//! Exact computation and perfect sampling for the hierarchical Coulomb gas on
//! the unit cube `[0,1)^d`, `d >= 3`.
//!
//! The pair interaction between two points depends only on the first dyadic
//! level at which they land in different cubes, so the Hamiltonian is a
//! function of the occupancy counts of the dyadic tree. That structure gives
//!
//! * closed-form ground-state energies and configurations ([`groundstate`]),
//! * an exact log-domain dynamic program for the partition function
//!   ([`zfun`]),
//! * a perfect sampler that descends the tree drawing children counts from
//!   their exact conditional law ([`sampler`]),
//! * brute-force oracles for small systems ([`oracle`]) and Monte Carlo
//!   fluctuation experiments ([`experiments`]).

pub mod error;
pub mod experiments;
pub mod groundstate;
pub mod numtheory;
pub mod oracle;
pub mod partition;
pub mod sampler;
pub mod special;
pub mod stats;
pub mod verify;
pub mod zfun;

pub use error::{Error, Result};
pub use groundstate::{
    count_ground_states, energy_increment, ground_energy, ground_state_weight, is_ground_state,
    log_z_ground, min_partition, sample_ground_state, GroundEnergyTable,
};
pub use numtheory::{base_level, digits_base, gamma, DigitVector, DimConstant};
pub use partition::{
    hamiltonian, hamiltonian_points, induce_tree, pair_potential, perm_distance,
    separation_level, CountTree, DyadicCube, FixedPoint, PointConfiguration,
};
pub use sampler::SamplerState;
pub use zfun::{build_tables, log_partition, log_partition_ratio, LevelTables, LogWeight};

/// Smallest supported dimension.
pub const MIN_DIM: u32 = 3;
/// Largest supported dimension; `2^d` children per node must stay tabulable.
pub const MAX_DIM: u32 = 16;
/// Deepest dyadic level resolvable with 64-bit fixed-point coordinates.
pub const MAX_LEVEL: u32 = 64;

pub(crate) fn check_dim(d: u32) -> Result<()> {
    if (MIN_DIM..=MAX_DIM).contains(&d) {
        Ok(())
    } else {
        Err(Error::InvalidDimension(d))
    }
}
