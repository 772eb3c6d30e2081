//! Hamiltonian learning for geometrically 2-local Pauli chains.
//!
//! Unitary Z kicks on a subset of "frozen" qubits confine the dynamics of a
//! chain to independent two-qubit patches (quantum Zeno reshaping). Each patch
//! is characterized by process tomography, the recovered unitary is turned into
//! a patch Hamiltonian by a matrix logarithm, and three reshaping
//! configurations are combined into the full coefficient vector.
//!
//! Module map:
//!
//! * [`pauli`], [`hamiltonian`]: Pauli strings, chain Hamiltonians, dense realizations.
//! * [`dynamics`]: statevector propagation, kicked and Trotterized sequences.
//! * [`zeno`]: reshaping configurations, Zeno projection, contamination model.
//! * [`qpt`]: patch tomography, linear inversion, unitary projection.
//! * [`bounds`]: Zeno and tomography resource calculators.
//! * [`pipeline`]: the end-to-end protocol, sweeps and the Ising experiment.
//! * [`io`]: run configuration files, reports and CSV series.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod io;
pub mod linalg;
pub mod pauli;
pub mod pipeline;
pub mod qpt;
pub mod zeno;

pub use error::{Error, Result};
pub use hamiltonian::{DenseOperator, PauliHamiltonian};
pub use pauli::{Pauli, PauliString, Phase};
