use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default inverse-spectral-gap parameter for Z-type kicks: eigenvalues
/// `{+1, -1}` sit a distance 2 apart on the unit circle.
pub const DEFAULT_XI: f64 = 0.5;

/// The unitary kick `prod_{i in frozen} Z_i` on an `n`-qubit chain.
///
/// The kick is diagonal with entry `(-1)^(number of frozen qubits in |1>)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KickSpec {
    n_qubits: usize,
    frozen: BTreeSet<usize>,
    xi: f64,
}

impl KickSpec {
    pub fn new(n_qubits: usize, frozen: impl IntoIterator<Item = usize>) -> Result<Self> {
        let frozen: BTreeSet<usize> = frozen.into_iter().collect();
        if let Some(&q) = frozen.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::input(format!("frozen qubit {q} outside {n_qubits}-qubit chain")));
        }
        Ok(Self {
            n_qubits,
            frozen,
            xi: DEFAULT_XI,
        })
    }

    /// No kicks at all.
    pub fn none(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            frozen: BTreeSet::new(),
            xi: DEFAULT_XI,
        }
    }

    pub fn with_xi(mut self, xi: f64) -> Result<Self> {
        if !(xi > 0.0 && xi.is_finite()) {
            return Err(Error::input(format!("xi must be positive, got {xi}")));
        }
        self.xi = xi;
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn frozen(&self) -> &BTreeSet<usize> {
        &self.frozen
    }

    pub fn is_trivial(&self) -> bool {
        self.frozen.is_empty()
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Number of Zeno subspaces (parity sectors).
    pub fn subspaces(&self) -> usize {
        if self.frozen.is_empty() {
            1
        } else {
            2
        }
    }

    /// Register bit mask of the frozen qubits.
    pub fn mask(&self) -> usize {
        self.frozen
            .iter()
            .fold(0usize, |m, &q| m | 1usize << (self.n_qubits - 1 - q))
    }

    /// Kick eigenvalue on basis state `b`.
    pub fn sign(&self, b: usize) -> f64 {
        if (b & self.mask()).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// The full diagonal of the kick operator.
    pub fn diagonal(&self) -> Vec<f64> {
        let mask = self.mask();
        (0..1usize << self.n_qubits)
            .map(|b| if (b & mask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 })
            .collect()
    }
}
