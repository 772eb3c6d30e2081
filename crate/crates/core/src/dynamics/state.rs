use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ZERO;

/// Tolerance on `| |psi| - 1 |` for a valid state.
pub const NORM_TOL: f64 = 1e-9;

/// Largest chain simulated as a full statevector.
pub const MAX_STATE_QUBITS: usize = 14;

/// Pure state of an `n`-qubit register, qubit 0 the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::input(format!("basis index {index} out of range")));
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n_qubits = log2_dim(amps.len())?;
        let state = Self { n_qubits, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::input(format!("state has norm {norm}, expected 1")));
        }
        Ok(state)
    }

    /// Normalizes `amps` first; rejects the zero vector.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let n_qubits = log2_dim(amps.len())?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::input("cannot normalize a zero or non-finite vector"));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Ok(Self { n_qubits, amps })
    }

    /// Tensor product of single-qubit states, qubit 0 first.
    pub fn product(qubits: &[[Complex64; 2]]) -> Result<Self> {
        check_size(qubits.len())?;
        let mut amps = vec![Complex64::new(1.0, 0.0)];
        for q in qubits {
            let norm = (q[0].norm_sqr() + q[1].norm_sqr()).sqrt();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::input("single-qubit factor is not normalized"));
            }
            amps = amps.iter().flat_map(|&a| [a * q[0], a * q[1]]).collect();
        }
        Ok(Self {
            n_qubits: qubits.len(),
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > MAX_STATE_QUBITS {
        return Err(Error::input(format!(
            "statevector size must be 1..={MAX_STATE_QUBITS} qubits, got {n}"
        )));
    }
    Ok(())
}

fn log2_dim(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::input(format!("amplitude count {len} is not a power of two >= 2")));
    }
    let n = len.trailing_zeros() as usize;
    check_size(n)?;
    Ok(n)
}
