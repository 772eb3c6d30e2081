//! The learning protocol end to end.
//!
//! A run has two stages. [`simulate`] evolves every (configuration, fiducial)
//! pair and stores each patch's exact outcome probabilities; it depends only
//! on the dynamics. [`reconstruct`] then injects noise, samples counts,
//! reconstructs each patch channel and combines the patch Hamiltonians into
//! global coefficients. Sweeps over shot numbers reuse one simulation.
//!
//! Patch outcomes are sampled from each patch's marginal distribution; the
//! correlations between patches that a joint sample would carry vanish in the
//! Zeno limit.

mod experiments;
mod metrics;
mod run;
pub mod seeds;
mod spec;


pub use experiments::{
    ising_experiment, shots_for_copies, sweep, IsingOutcome, SweepAxis, SweepPoint, SweepTable, DEFAULT_REPEATS,
};
pub use metrics::{log_log_slope, mean_std, median, Metrics, TermError, RELATIVE_FLOOR};
pub use run::{
    initial_state, inject_depolarizing, patch_probabilities, reconstruct, run_protocol, simulate, total_copies,
    ConfigSummary, PatchColumns, PatchReport, Provenance, RunResult, SimulatedData, SETTINGS_PER_CONFIG,
};
pub use spec::{EvolutionMode, HamiltonianSource, ProtocolSpec};
