//! Process tomography of one- and two-qubit patches.
//!
//! Each patch is prepared in every product of the six Pauli eigenstates and
//! measured in every tensor Pauli basis. The resulting probability matrix is
//! inverted to a transfer matrix, projected onto the closest unitary, and the
//! patch Hamiltonian is read off the matrix logarithm.

mod channel;
mod record;
mod settings;


pub use channel::{
    choi_from_transfer, closest_unitary, diamond_bracket, estimate_channel, hamiltonian_from_unitary,
    linear_inversion, normalize_choi, transfer_from_choi, unitary_choi, unitary_diamond_distance,
    unitary_transfer, ChannelEstimate, DiamondBracket, UnitaryFit, UnitaryProjection, BRANCH_MARGIN,
    UNITARY_MAX_ITERATIONS, UNITARY_STEP_TOL,
};
pub use record::{sample_counts, RecordHeader, Shots, TomographyRecord};
pub use settings::{
    basis_count, design, effect_count, fiducial_count, fiducial_density, fiducial_state, povm_effects,
    probabilities, single_qubit_fiducial, Design, PROBABILITY_TOL, SINGLE_QUBIT_BASES,
    SINGLE_QUBIT_FIDUCIALS,
};
