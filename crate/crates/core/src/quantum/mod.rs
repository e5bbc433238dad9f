//! States, rank-1 projective measurements and the seesaw optimiser.

pub mod linalg;
pub mod measurement;
pub mod seesaw;
pub mod state;

pub use linalg::{fourier_matrix, hermitian_eig, random_unitary, ComplexMatrix, C64};
pub use measurement::{
    behavior_of_model, fit_decomposition, mub_deviation, neighbor_overlap_spread,
    neighbor_overlap_spread_above, neighbor_overlaps, DecompositionFit, MeasurementSet,
    QuantumModel,
};
pub use seesaw::{seesaw_optimize, seesaw_restart, SeesawConfig, SeesawTrace};
pub use state::{
    fidelity, maximally_entangled_state, maximally_entangled_vector, perturb_state, QuantumState,
};
