use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::{to_dense, DenseOperator, PauliHamiltonian};
use crate::linalg::{self, CMatrix};

use super::kick::KickSpec;
use super::kicked::{check_reps, BackKick};

/// Largest chain for which full sequence unitaries are built.
pub const MAX_SEQUENCE_QUBITS: usize = 10;

fn full_dense(h: &PauliHamiltonian) -> Result<CMatrix> {
    let n = h.n_qubits();
    if n > MAX_SEQUENCE_QUBITS {
        return Err(Error::input(format!(
            "dense sequence unitaries are capped at {MAX_SEQUENCE_QUBITS} qubits, got {n}"
        )));
    }
    let all: Vec<usize> = (0..n).collect();
    Ok(to_dense(h, &all)?.into_matrix())
}

/// Dense `V_r(T) = (U_kick^dag)^r (U_kick exp(-i H T/r))^r`.
pub fn dense_sequence_unitary(
    h: &PauliHamiltonian,
    kick: &KickSpec,
    total_time: f64,
    r: usize,
    back_kick: BackKick,
) -> Result<DenseOperator> {
    check_reps(r, back_kick)?;
    if kick.n_qubits() != h.n_qubits() {
        return Err(Error::input("kick and Hamiltonian sizes differ"));
    }
    let step = linalg::expm_hermitian(&full_dense(h)?, total_time / r as f64);
    let diag = kick.diagonal();
    // U_kick * step: scale row b by the kick sign.
    let kicked = CMatrix::from_fn(step.nrows(), step.ncols(), |row, col| {
        step[(row, col)] * diag[row]
    });
    let mut v = linalg::identity(step.nrows());
    for _ in 0..r {
        v = &kicked * v;
    }
    if back_kick == BackKick::Apply && r % 2 == 1 {
        for row in 0..v.nrows() {
            let s = Complex64::new(diag[row], 0.0);
            v.row_mut(row).iter_mut().for_each(|z| *z *= s);
        }
    }
    DenseOperator::new(v)
}

/// Dense `exp(-i H t)` of the whole chain.
pub fn dense_evolution(h: &PauliHamiltonian, t: f64) -> Result<DenseOperator> {
    DenseOperator::new(linalg::expm_hermitian(&full_dense(h)?, t))
}
