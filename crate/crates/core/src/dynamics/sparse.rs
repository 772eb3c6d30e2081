use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::PauliHamiltonian;
use crate::linalg::ZERO;

use super::state::StateVector;

/// Registers at least this large are multiplied in parallel.
const PARALLEL_DIM: usize = 1 << 10;

/// A Pauli Hamiltonian compiled for repeated matrix-vector products.
///
/// Terms sharing an X mask are merged into one diagonal, so `H|psi>` costs
/// `(number of distinct X masks) * 2^n` operations and never materializes
/// the `2^n x 2^n` matrix.
#[derive(Debug, Clone)]
pub struct SparsePauliOperator {
    n_qubits: usize,
    /// `(x_mask, d)` with `H = sum_x D_x X^x` and `(H psi)[a] = sum_x d_x[a ^ x] psi[a ^ x]`.
    groups: Vec<(usize, Vec<Complex64>)>,
    norm_bound: f64,
}

impl SparsePauliOperator {
    pub fn new(h: &PauliHamiltonian) -> Result<Self> {
        let n = h.n_qubits();
        if n > super::state::MAX_STATE_QUBITS {
            return Err(Error::input(format!("{n} qubits exceeds the statevector cap")));
        }
        let dim = 1usize << n;
        let mut groups: BTreeMap<usize, Vec<Complex64>> = BTreeMap::new();
        for (p, c) in h.terms() {
            let (x, z) = p.masks();
            let base = p.y_phase().to_complex() * c;
            let diag = groups.entry(x).or_insert_with(|| vec![ZERO; dim]);
            for (b, d) in diag.iter_mut().enumerate() {
                if (b & z).count_ones() % 2 == 0 {
                    *d += base;
                } else {
                    *d -= base;
                }
            }
        }
        Ok(Self {
            n_qubits: n,
            groups: groups.into_iter().collect(),
            norm_bound: h.op_norm_upper(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Certified bound `sum_j |c_j|` on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// Writes `H v` into `out`.
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        let kernel = |(a, o): (usize, &mut Complex64)| {
            let mut acc = ZERO;
            for (x, d) in &self.groups {
                let src = a ^ x;
                acc += d[src] * v[src];
            }
            *o = acc;
        };
        if v.len() >= PARALLEL_DIM {
            out.par_iter_mut().enumerate().for_each(kernel);
        } else {
            out.iter_mut().enumerate().for_each(kernel);
        }
    }

    pub fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; v.len()];
        self.apply_into(v, &mut out);
        out
    }
}

/// `H|psi>` without normalization.
pub fn apply_hamiltonian(h: &PauliHamiltonian, psi: &StateVector) -> Result<Vec<Complex64>> {
    if h.n_qubits() != psi.n_qubits() {
        return Err(Error::input(format!(
            "Hamiltonian on {} qubits applied to a {}-qubit state",
            h.n_qubits(),
            psi.n_qubits()
        )));
    }
    Ok(SparsePauliOperator::new(h)?.apply_vec(psi.amplitudes()))
}
