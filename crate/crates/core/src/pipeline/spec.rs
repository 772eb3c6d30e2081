use serde::{Deserialize, Serialize};

use crate::bounds::{ErrorBudget, NormChoice, DEFAULT_DELTA, DEFAULT_EPSILON};
use crate::dynamics::{BackKick, IsingParams, MAX_STATE_QUBITS};
use crate::error::{Error, Result};
use crate::hamiltonian::{random_2local_chain, PauliHamiltonian, TermRecord};
use crate::qpt::{Shots, UnitaryProjection};

/// How the chain is evolved between preparation and measurement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionMode {
    /// `r` rounds of exact evolution for `T/r`, each followed by a kick.
    #[default]
    ExactKicked,
    /// First-order Trotter steps of an Ising chain, one kick per step.
    TrotterKicked,
    /// Exact evolution under the Zeno-projected Hamiltonian (infinite-kick limit).
    ExactZenoOracle,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_delta() -> f64 {
    DEFAULT_DELTA
}

/// Inputs of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub n_qubits: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub r: u64,
    pub shots: Shots,
    #[serde(default)]
    pub evolution: EvolutionMode,
    #[serde(default)]
    pub back_kick: BackKick,
    /// Depolarizing strength mixed into every patch channel.
    #[serde(default)]
    pub noise: Option<f64>,
    pub seed: u64,
    #[serde(default)]
    pub projection: UnitaryProjection,
    /// Total channel error budget, split evenly between Zeno and tomography.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub norm: NormChoice,
}

impl ProtocolSpec {
    /// Exact-kicked evolution with default budget and projection.
    pub fn new(n_qubits: usize, t: f64, r: u64, shots: Shots, seed: u64) -> Self {
        Self {
            n_qubits,
            t,
            r,
            shots,
            evolution: EvolutionMode::default(),
            back_kick: BackKick::default(),
            noise: None,
            seed,
            projection: UnitaryProjection::default(),
            epsilon: DEFAULT_EPSILON,
            delta: DEFAULT_DELTA,
            norm: NormChoice::default(),
        }
    }

    pub fn with_evolution(mut self, mode: EvolutionMode) -> Self {
        self.evolution = mode;
        self
    }

    pub fn with_noise(mut self, lambda: Option<f64>) -> Self {
        self.noise = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=MAX_STATE_QUBITS).contains(&self.n_qubits) {
            return Err(Error::input(format!(
                "n_qubits must be in 2..={MAX_STATE_QUBITS}, got {}",
                self.n_qubits
            )));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::input(format!("T must be positive, got {}", self.t)));
        }
        if self.r == 0 {
            return Err(Error::input("r must be at least 1"));
        }
        if self.back_kick == BackKick::Elide && self.r % 2 == 1 {
            return Err(Error::input("back-kick elision needs an even r"));
        }
        if let Some(l) = self.noise {
            if !(0.0..1.0).contains(&l) {
                return Err(Error::input(format!("noise lambda must lie in [0, 1), got {l}")));
            }
        }
        self.budget().map(|_| ())
    }

    pub fn budget(&self) -> Result<ErrorBudget> {
        ErrorBudget::even(self.epsilon, self.delta)
    }
}

/// Where the true Hamiltonian comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum HamiltonianSource {
    /// Explicit terms on the chain.
    Inline { terms: Vec<TermRecord> },
    /// Uniform random 2-local chain; each repeat of a sweep draws a new one.
    Random { seed: u64 },
    Ising(IsingParams),
}

impl HamiltonianSource {
    /// The Hamiltonian for an `n`-qubit chain; `stream` selects the draw of a
    /// random source (ignored otherwise).
    pub fn build(&self, n: usize, stream: u64) -> Result<PauliHamiltonian> {
        match self {
            HamiltonianSource::Inline { terms } => {
                let h = PauliHamiltonian::from_records(terms)?;
                if h.n_qubits() != n {
                    return Err(Error::input(format!(
                        "inline Hamiltonian has {} qubits, run has {n}",
                        h.n_qubits()
                    )));
                }
                Ok(h)
            }
            HamiltonianSource::Random { seed } => {
                random_2local_chain(n, super::seeds::derive_seed(*seed, &[super::seeds::STREAM_HAMILTONIAN, stream]))
            }
            HamiltonianSource::Ising(p) => p.hamiltonian(n),
        }
    }
}
