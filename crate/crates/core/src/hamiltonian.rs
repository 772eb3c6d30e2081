//! Pauli-basis Hamiltonians on a chain and their dense realizations.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::pauli::{Pauli, PauliString};

/// Largest register realized densely.
pub const MAX_DENSE_QUBITS: usize = 14;

/// Tolerance on `|H - H^dag|` (max entry) accepted by [`coeff_inner`].
pub const HERMITICITY_TOL: f64 = 1e-9;

/// A Hermitian operator given as real coefficients on Pauli strings.
///
/// Zero coefficients and the identity string are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    n_qubits: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl PauliHamiltonian {
    pub fn new(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::input("Hamiltonian needs at least one qubit"));
        }
        Ok(Self {
            n_qubits,
            terms: BTreeMap::new(),
        })
    }

    pub fn from_terms(
        n_qubits: usize,
        terms: impl IntoIterator<Item = (PauliString, f64)>,
    ) -> Result<Self> {
        let mut h = Self::new(n_qubits)?;
        for (p, c) in terms {
            h.add_term(p, c)?;
        }
        Ok(h)
    }

    /// Adds `coeff * pauli`, merging with an existing term.
    ///
    /// Identity strings are skipped: the traceless convention drops them.
    pub fn add_term(&mut self, pauli: PauliString, coeff: f64) -> Result<()> {
        if pauli.len() != self.n_qubits {
            return Err(Error::input(format!(
                "term {pauli} has length {} but the Hamiltonian has {} qubits",
                pauli.len(),
                self.n_qubits
            )));
        }
        if !coeff.is_finite() {
            return Err(Error::input(format!("non-finite coefficient on {pauli}")));
        }
        if pauli.is_identity() {
            return Ok(());
        }
        match self.terms.entry(pauli) {
            Entry::Occupied(mut e) => {
                *e.get_mut() += coeff;
                if *e.get() == 0.0 {
                    e.remove();
                }
            }
            Entry::Vacant(e) => {
                if coeff != 0.0 {
                    e.insert(coeff);
                }
            }
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.terms.iter().map(|(p, &c)| (p, c))
    }

    pub fn coefficient(&self, p: &PauliString) -> f64 {
        self.terms.get(p).copied().unwrap_or(0.0)
    }

    /// Every term acts on at most two qubits that are nearest neighbours.
    pub fn is_geometrically_two_local(&self) -> bool {
        self.terms.keys().all(|p| {
            let s = p.support();
            s.len() <= 2 && (s.len() < 2 || s[1] - s[0] == 1)
        })
    }

    /// `sum_j |c_j|`, a certified upper bound on the spectral norm.
    pub fn op_norm_upper(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).sum()
    }

    /// Exact spectral norm by dense eigensolve.
    pub fn op_norm_exact(&self) -> Result<f64> {
        let all: Vec<usize> = (0..self.n_qubits).collect();
        let dense = to_dense(self, &all)?;
        let (vals, _) = linalg::hermitian_eigen(dense.matrix());
        Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// Coefficients in the order of `basis`, zero for absent terms.
    pub fn coefficients_in(&self, basis: &[PauliString]) -> Vec<f64> {
        basis.iter().map(|p| self.coefficient(p)).collect()
    }

    pub fn from_coefficients(n_qubits: usize, basis: &[PauliString], coeffs: &[f64]) -> Result<Self> {
        if basis.len() != coeffs.len() {
            return Err(Error::input("basis and coefficient vector differ in length"));
        }
        Self::from_terms(n_qubits, basis.iter().cloned().zip(coeffs.iter().copied()))
    }

    pub fn to_records(&self) -> Vec<TermRecord> {
        self.terms
            .iter()
            .map(|(p, &c)| TermRecord {
                pauli: p.clone(),
                coeff: c,
            })
            .collect()
    }

    pub fn from_records(records: &[TermRecord]) -> Result<Self> {
        let n = records
            .first()
            .map(|r| r.pauli.len())
            .ok_or_else(|| Error::input("no terms given; qubit count is undetermined"))?;
        Self::from_terms(n, records.iter().map(|r| (r.pauli.clone(), r.coeff)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_records())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let records: Vec<TermRecord> = serde_json::from_str(s)?;
        Self::from_records(&records)
    }
}

/// Serialized form of one Hamiltonian term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub pauli: PauliString,
    pub coeff: f64,
}

/// Every single-qubit Pauli on every site, then every two-qubit Pauli on
/// every nearest-neighbour edge; letters in X, Y, Z order.
///
/// This is the global coefficient ordering used by the learner.
pub fn chain_basis(n: usize) -> Vec<PauliString> {
    let mut out = Vec::with_capacity(3 * n + 9 * n.saturating_sub(1));
    for q in 0..n {
        for a in Pauli::NON_IDENTITY {
            out.push(PauliString::from_sparse(n, &[(q, a)]).unwrap());
        }
    }
    for q in 0..n.saturating_sub(1) {
        for a in Pauli::NON_IDENTITY {
            for b in Pauli::NON_IDENTITY {
                out.push(PauliString::from_sparse(n, &[(q, a), (q + 1, b)]).unwrap());
            }
        }
    }
    out
}

/// All non-identity Pauli strings on `n` qubits (3 for one qubit, 15 for
/// two), ordered by base-4 index with qubit 0 most significant.
pub fn local_basis(n: usize) -> Vec<PauliString> {
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    (1..4usize.pow(n as u32))
        .map(|mut k| {
            let mut ops = vec![Pauli::I; n];
            for q in (0..n).rev() {
                ops[q] = letters[k % 4];
                k /= 4;
            }
            PauliString::new(ops)
        })
        .collect()
}

/// Random chain Hamiltonian with every 1- and 2-local nearest-neighbour term
/// and coefficients i.i.d. uniform on [-1, 1].
pub fn random_2local_chain(n: usize, seed: u64) -> Result<PauliHamiltonian> {
    if n < 2 {
        return Err(Error::input(format!("random chain needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = chain_basis(n);
    let coeffs: Vec<f64> = basis.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
    PauliHamiltonian::from_coefficients(n, &basis, &coeffs)
}

/// A dense operator on a small register.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    n_qubits: usize,
    matrix: CMatrix,
}

impl DenseOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let d = matrix.nrows();
        if d != matrix.ncols() || !d.is_power_of_two() {
            return Err(Error::input(format!(
                "dense operator must be square with power-of-two size, got {}x{}",
                d,
                matrix.ncols()
            )));
        }
        Ok(Self {
            n_qubits: d.trailing_zeros() as usize,
            matrix,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }
}

/// Adds `coeff * p` into `out`, where `p` is already restricted to the register.
fn accumulate_string(out: &mut CMatrix, p: &PauliString, coeff: Complex64) {
    let (x, z) = p.masks();
    let base = coeff * p.y_phase().to_complex();
    for col in 0..out.ncols() {
        let sign = if (col & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        out[(col ^ x, col)] += base * sign;
    }
}

fn check_register(n_total: usize, qubits: &[usize]) -> Result<()> {
    if qubits.is_empty() || qubits.len() > MAX_DENSE_QUBITS {
        return Err(Error::input(format!(
            "dense register must have 1..={MAX_DENSE_QUBITS} qubits, got {}",
            qubits.len()
        )));
    }
    let mut seen = vec![false; n_total];
    for &q in qubits {
        if q >= n_total || seen[q] {
            return Err(Error::input(format!("bad register qubit {q}")));
        }
        seen[q] = true;
    }
    Ok(())
}

/// Dense matrix of `h` on the ordered register `qubits` (first listed qubit
/// is the most significant factor).
pub fn to_dense(h: &PauliHamiltonian, qubits: &[usize]) -> Result<DenseOperator> {
    check_register(h.n_qubits(), qubits)?;
    let d = 1usize << qubits.len();
    let mut out = CMatrix::zeros(d, d);
    for (p, c) in h.terms() {
        let outside = p.support().into_iter().find(|q| !qubits.contains(q));
        if let Some(q) = outside {
            return Err(Error::input(format!(
                "term {p} acts on qubit {q} outside register {qubits:?}"
            )));
        }
        accumulate_string(&mut out, &p.restrict(qubits), Complex64::new(c, 0.0));
    }
    DenseOperator::new(out)
}

/// Dense matrix of a single Pauli string on the register `qubits`.
pub fn pauli_to_dense(p: &PauliString, qubits: &[usize]) -> Result<DenseOperator> {
    check_register(p.len(), qubits)?;
    if let Some(q) = p.support().into_iter().find(|q| !qubits.contains(q)) {
        return Err(Error::input(format!(
            "string {p} acts on qubit {q} outside register {qubits:?}"
        )));
    }
    let d = 1usize << qubits.len();
    let mut out = CMatrix::zeros(d, d);
    accumulate_string(&mut out, &p.restrict(qubits), linalg::ONE);
    DenseOperator::new(out)
}

/// Normalized Hilbert-Schmidt projection `Re Tr(p h) / 2^n`.
///
/// `p` must have the same number of qubits as `h`.
pub fn coeff_inner(h: &DenseOperator, p: &PauliString) -> Result<f64> {
    if p.len() != h.n_qubits() {
        return Err(Error::input(format!(
            "string {p} does not match a {}-qubit operator",
            h.n_qubits()
        )));
    }
    let defect = linalg::hermiticity_defect(h.matrix());
    if defect > HERMITICITY_TOL {
        return Err(Error::numeric(format!(
            "operator is not Hermitian (max |H - H^dag| = {defect:.3e})"
        )));
    }
    let (x, z) = p.masks();
    let yp = p.y_phase().to_complex();
    // Tr(P h) = sum_col <col| P h |col> = sum_col sum_row P[col,row] h[row,col]
    // with P[row ^ x, row] nonzero only.
    let m = h.matrix();
    let mut acc = Complex64::new(0.0, 0.0);
    for row in 0..m.nrows() {
        let col = row ^ x;
        let sign = if (row & z).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        acc += yp * sign * m[(row, col)];
    }
    Ok(acc.re / m.nrows() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;

    fn kron_oracle(h: &PauliHamiltonian) -> CMatrix {
        let d = 1 << h.n_qubits();
        let mut out = CMatrix::zeros(d, d);
        for (p, c) in h.terms() {
            let m = p
                .ops()
                .iter()
                .map(|l| {
                    let m = l.matrix();
                    CMatrix::from_fn(2, 2, |r, c| m[r][c])
                })
                .reduce(|a, b| kron(&a, &b))
                .unwrap();
            out += m * Complex64::new(c, 0.0);
        }
        out
    }

    #[test]
    fn dense_single_z() {
        let h = PauliHamiltonian::from_terms(1, [("Z".parse().unwrap(), 1.0)]).unwrap();
        let d = to_dense(&h, &[0]).unwrap();
        assert_eq!(d.matrix()[(0, 0)].re, 1.0);
        assert_eq!(d.matrix()[(1, 1)].re, -1.0);
        assert_eq!(d.matrix()[(0, 1)].norm(), 0.0);
    }

    #[test]
    fn dense_zz_diagonal() {
        let h = PauliHamiltonian::from_terms(2, [("ZZ".parse().unwrap(), 0.5)]).unwrap();
        let d = to_dense(&h, &[0, 1]).unwrap();
        let diag: Vec<f64> = (0..4).map(|k| d.matrix()[(k, k)].re).collect();
        assert_eq!(diag, vec![0.5, -0.5, -0.5, 0.5]);
    }

    #[test]
    fn dense_matches_kron_oracle() {
        for seed in 0..5 {
            let h = random_2local_chain(3, seed).unwrap();
            let ours = to_dense(&h, &[0, 1, 2]).unwrap();
            assert!((ours.matrix() - kron_oracle(&h)).norm() < 1e-12);
        }
    }

    #[test]
    fn dense_register_order_and_errors() {
        let h = PauliHamiltonian::from_terms(3, [("XIZ".parse().unwrap(), 1.0)]).unwrap();
        // Register (2, 0): Z is the top factor, X the bottom one.
        let swapped = to_dense(&h, &[2, 0]).unwrap();
        let zx = PauliHamiltonian::from_terms(2, [("ZX".parse().unwrap(), 1.0)]).unwrap();
        assert_eq!(swapped.matrix(), to_dense(&zx, &[0, 1]).unwrap().matrix());
        assert!(matches!(to_dense(&h, &[0, 1]), Err(Error::Input(_))));
    }

    #[test]
    fn norm_bounds() {
        let h = PauliHamiltonian::from_terms(
            1,
            [("X".parse().unwrap(), 0.3), ("Z".parse().unwrap(), -0.4)],
        )
        .unwrap();
        assert!((h.op_norm_upper() - 0.7).abs() < 1e-15);
        assert!((h.op_norm_exact().unwrap() - 0.5).abs() < 1e-12);
        let z = PauliHamiltonian::from_terms(1, [("Z".parse().unwrap(), 1.0)]).unwrap();
        assert_eq!(z.op_norm_upper(), 1.0);
        assert!((z.op_norm_exact().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn norm_upper_dominates_exact_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..1000 {
            let n = 1 + trial % 3;
            let basis = local_basis(n);
            let mut h = PauliHamiltonian::new(n).unwrap();
            for p in &basis {
                if rng.gen_bool(0.5) {
                    h.add_term(p.clone(), rng.gen_range(-1.0..1.0)).unwrap();
                }
            }
            assert!(h.op_norm_upper() + 1e-12 >= h.op_norm_exact().unwrap());
        }
    }

    #[test]
    fn random_chain_term_counts_and_determinism() {
        assert_eq!(random_2local_chain(2, 1).unwrap().len(), 15);
        let a = random_2local_chain(9, 7).unwrap();
        assert_eq!(a.len(), 99);
        assert!(a.is_geometrically_two_local());
        assert_eq!(a, random_2local_chain(9, 7).unwrap());
        assert!(a.terms().all(|(_, c)| (-1.0..=1.0).contains(&c)));
        assert!(random_2local_chain(1, 0).is_err());
    }

    #[test]
    fn coeff_inner_examples() {
        let h = PauliHamiltonian::from_terms(1, [("Z".parse().unwrap(), 0.7)]).unwrap();
        let d = to_dense(&h, &[0]).unwrap();
        assert!((coeff_inner(&d, &"Z".parse().unwrap()).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(coeff_inner(&d, &"X".parse().unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn coeff_inner_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(
            2,
            2,
            &[linalg::ZERO, linalg::ONE, linalg::ZERO, linalg::ZERO],
        );
        let d = DenseOperator::new(m).unwrap();
        assert!(matches!(
            coeff_inner(&d, &"X".parse().unwrap()),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn coeff_round_trip_two_qubits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let basis = local_basis(2);
        for _ in 0..20 {
            let mut h = PauliHamiltonian::new(2).unwrap();
            for _ in 0..5 {
                let p = basis[rng.gen_range(0..basis.len())].clone();
                h.add_term(p, rng.gen_range(-1.0..1.0)).unwrap();
            }
            let d = to_dense(&h, &[0, 1]).unwrap();
            for p in &basis {
                let got = coeff_inner(&d, p).unwrap();
                assert!((got - h.coefficient(p)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn identity_and_zero_terms_are_not_stored() {
        let mut h = PauliHamiltonian::new(2).unwrap();
        h.add_term("II".parse().unwrap(), 3.0).unwrap();
        h.add_term("XI".parse().unwrap(), 0.5).unwrap();
        h.add_term("XI".parse().unwrap(), -0.5).unwrap();
        assert!(h.is_empty());
        assert!(h.add_term("X".parse().unwrap(), 1.0).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let h = random_2local_chain(4, 99).unwrap();
        let back = PauliHamiltonian::from_json(&h.to_json().unwrap()).unwrap();
        assert_eq!(h, back);
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(chain_basis(9).len(), 99);
        assert_eq!(local_basis(1).len(), 3);
        assert_eq!(local_basis(2).len(), 15);
        assert_eq!(local_basis(2)[0].to_string(), "IX");
    }
}
