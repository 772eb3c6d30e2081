use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};

use super::state::StateVector;

/// Largest subsystem returned by [`reduced_density`].
pub const MAX_REDUCED_QUBITS: usize = 4;

/// Density matrix of a subset of qubits, in the order given.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensity {
    qubits: Vec<usize>,
    rho: CMatrix,
}

impl ReducedDensity {
    /// Validates Hermiticity, unit trace and positivity to `1e-9`.
    pub fn new(qubits: Vec<usize>, rho: CMatrix) -> Result<Self> {
        let d = 1usize << qubits.len();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::input("density matrix size does not match its qubits"));
        }
        let herm = linalg::hermiticity_defect(&rho);
        if herm > 1e-9 {
            return Err(Error::numeric(format!("density matrix not Hermitian ({herm:.2e})")));
        }
        let tr = linalg::trace(&rho);
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-9 {
            return Err(Error::numeric(format!("density matrix trace {tr} is not 1")));
        }
        let (vals, _) = linalg::hermitian_eigen(&rho);
        if vals[0] < -1e-9 {
            return Err(Error::numeric(format!(
                "density matrix has negative eigenvalue {:.3e}",
                vals[0]
            )));
        }
        Ok(Self { qubits, rho })
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }
}

/// Partial trace of `|psi><psi|` onto `qubits` (first listed is the most
/// significant factor of the result).
pub fn reduced_density(psi: &StateVector, qubits: &[usize]) -> Result<ReducedDensity> {
    let n = psi.n_qubits();
    let k = qubits.len();
    if k == 0 || k > MAX_REDUCED_QUBITS {
        return Err(Error::input(format!(
            "reduced density needs 1..={MAX_REDUCED_QUBITS} qubits, got {k}"
        )));
    }
    let mut sub_mask = 0usize;
    for &q in qubits {
        if q >= n {
            return Err(Error::input(format!("qubit {q} outside {n}-qubit state")));
        }
        let bit = 1usize << (n - 1 - q);
        if sub_mask & bit != 0 {
            return Err(Error::input(format!("qubit {q} listed twice")));
        }
        sub_mask |= bit;
    }
    let d = 1usize << k;
    // Register offset of each subsystem basis state.
    let offsets: Vec<usize> = (0..d)
        .map(|a| {
            qubits.iter().enumerate().fold(0usize, |acc, (i, &q)| {
                if (a >> (k - 1 - i)) & 1 == 1 {
                    acc | 1usize << (n - 1 - q)
                } else {
                    acc
                }
            })
        })
        .collect();

    let amps = psi.amplitudes();
    let mut rho = CMatrix::zeros(d, d);
    let mut v = vec![ZERO; d];
    for rest in (0..amps.len()).filter(|b| b & sub_mask == 0) {
        for (a, slot) in v.iter_mut().enumerate() {
            *slot = amps[rest | offsets[a]];
        }
        for r in 0..d {
            if v[r] == ZERO {
                continue;
            }
            for c in 0..d {
                rho[(r, c)] += v[r] * v[c].conj();
            }
        }
    }
    ReducedDensity::new(qubits.to_vec(), rho)
}
