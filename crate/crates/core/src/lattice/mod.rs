//! Index algebra, monomial constellation, transmit synthesis and the exact
//! observation sums of the aligned lattice scheme.

mod channel;
mod index;
mod params;
mod signal;
mod tables;

pub use channel::{
    monomial_value, monomial_value_log, ChannelMatrix, ChannelStructure, MonomialTable,
    DEFAULT_COLLISION_TOLERANCE, DEFAULT_SINGULARITY_THRESHOLD,
};
pub use index::{Coord, IndexCube, IndexVector, DIM};
pub use params::{derive_params, derive_params_unchecked, SchemeParams, DEFAULT_C1, DEFAULT_C2};
pub use signal::{
    apply_channel, exact_observations, observation_at, observation_coord, reconstruct_received,
    synthesize_transmit, synthesize_with, CompensatedSum,
};
pub use tables::{ObservationTable, PartialTable, StreamSet, SubstreamTable};
