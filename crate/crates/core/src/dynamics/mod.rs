//! Exact statevector dynamics of the full chain.
//!
//! Everything here acts on `2^N` amplitude vectors through the compiled
//! [`SparsePauliOperator`]; dense `2^N x 2^N` matrices only appear in the
//! validation helpers of [`dense`] (capped at 10 qubits).

mod dense;
mod kick;
mod kicked;
mod propagate;
mod reduced;
mod sparse;
mod state;

pub use dense::{dense_evolution, dense_sequence_unitary, MAX_SEQUENCE_QUBITS};
pub use kick::{KickSpec, DEFAULT_XI};
pub use kicked::{kicked_evolve, kicked_evolve_with, trotter_kicked_evolve, BackKick, IsingParams};
pub use propagate::{evolve, Propagator, DEFAULT_TOL, MAX_TERMS, MAX_TOL};
pub use reduced::{reduced_density, ReducedDensity, MAX_REDUCED_QUBITS};
pub use sparse::{apply_hamiltonian, SparsePauliOperator};
pub use state::{StateVector, MAX_STATE_QUBITS, NORM_TOL};

#[cfg(test)]
mod tests;
