//! Bounds and quantum certificates for Bell functionals in the
//! one-way, one-bit communication setting.
//!
//! The crate is organised around four engines that all consume the same
//! [`BellFunctional`]:
//!
//! - [`classical`]: exact local bound and exact one-bit bound, the latter
//!   computed by sweeping bipartitions of Alice's inputs and summing the
//!   local bounds of the two induced subgames.
//! - [`ns_lp`]: exact no-signaling bound via a rational simplex.
//! - [`quantum`]: seesaw-style measurement optimisation on a fixed state.
//! - [`experiments`]: drivers that tabulate bounds and sweep state noise.

pub mod classical;
pub mod error;
pub mod experiments;
mod json;
pub mod ns_lp;
pub mod quantum;
pub mod scenario;

pub use classical::{
    behavior_of_strategy, count_onebit_vertices, enumerate_bipartitions, local_bound,
    one_bit_bound, one_bit_bound_bruteforce, partition_score, BoundResult, LocalStrategy,
    OneBitStrategy, Strategy,
};
pub use error::{Error, Result};
pub use ns_lp::{build_ns_lp, ns_bound, simplex_maximize, trivial_upper_bound, LpResult, LpStatus};
pub use quantum::{
    maximally_entangled_state, seesaw_optimize, ComplexMatrix, MeasurementSet, QuantumModel,
    QuantumState, SeesawConfig,
};
pub use scenario::{
    flat_index, is_no_signaling, make_truncated_xor_game, mix, ns_behavior_from_functional,
    restrict, score, white_noise_behavior, Behavior, BellFunctional, Bipartition, Scenario,
};
