//! Fixtures shared by the criterion benches.

use onebit_core::{
    make_truncated_xor_game, maximally_entangled_state, BellFunctional, QuantumState,
};

pub fn xor_fixture(d: usize) -> (BellFunctional, QuantumState) {
    (
        make_truncated_xor_game(d).expect("d >= 2"),
        maximally_entangled_state(d).expect("d >= 2"),
    )
}
