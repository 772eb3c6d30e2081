//! Reshaping configurations for 1D chains and the Zeno-projected
//! Hamiltonians they produce.
//!
//! A configuration freezes every third qubit with repeated Z kicks. In the
//! frequent-kick limit the chain splits into independent patches of at most
//! two qubits. Terms that anticommute with the kick vanish; `sigma (x) Z`
//! couplings to a frozen neighbour in `|0>` survive as extra single-qubit
//! fields on the patch. [`ContaminationModel`] records that linear map for
//! all configurations at once, so the global coefficients follow from one
//! least-squares solve.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::KickSpec;
use crate::error::{Error, Result};
use crate::hamiltonian::{chain_basis, local_basis, PauliHamiltonian};
use crate::pauli::{Pauli, PauliString};

/// Eigenvalue of `Z` on the frozen-qubit initial state `|0>`.
pub const FROZEN_Z_EIGENVALUE: f64 = 1.0;

/// Target qubits learned together (one or two adjacent sites).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Patch(Vec<usize>);

impl Patch {
    pub fn new(qubits: Vec<usize>) -> Result<Self> {
        match qubits.as_slice() {
            [_] => Ok(Self(qubits)),
            [a, b] if b == &(a + 1) => Ok(Self(qubits)),
            _ => Err(Error::input(format!(
                "a patch is one qubit or two adjacent qubits, got {qubits:?}"
            ))),
        }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.0.contains(&q)
    }
}

impl std::fmt::Display for Patch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.0.as_slice() {
            [a] => write!(f, "({a})"),
            [a, b] => write!(f, "({a},{b})"),
            _ => write!(f, "{:?}", self.0),
        }
    }
}

/// One reshaping configuration of an `n`-qubit chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReshapingConfig {
    pub offset: usize,
    pub n_qubits: usize,
    pub patches: Vec<Patch>,
    pub frozen: BTreeSet<usize>,
    pub kick: KickSpec,
}

impl ReshapingConfig {
    /// Configuration with frozen qubits `{i : i = offset + 2 (mod 3)}` and
    /// patches formed by the runs of target qubits between them.
    pub fn with_offset(n_qubits: usize, offset: usize) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::input(format!("chain needs at least 2 qubits, got {n_qubits}")));
        }
        if offset > 2 {
            return Err(Error::input(format!("offset must be 0, 1 or 2, got {offset}")));
        }
        let frozen: BTreeSet<usize> = (0..n_qubits).filter(|i| i % 3 == (offset + 2) % 3).collect();
        let mut patches = Vec::new();
        let mut run = Vec::new();
        for q in 0..n_qubits {
            if frozen.contains(&q) {
                if !run.is_empty() {
                    patches.push(Patch::new(std::mem::take(&mut run))?);
                }
            } else {
                run.push(q);
            }
        }
        if !run.is_empty() {
            patches.push(Patch::new(run)?);
        }
        let kick = KickSpec::new(n_qubits, frozen.iter().copied())?;
        Ok(Self {
            offset,
            n_qubits,
            patches,
            frozen,
            kick,
        })
    }

    /// Nearest-neighbour edges learned directly by this configuration.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.patches
            .iter()
            .filter(|p| p.len() == 2)
            .map(|p| (p.qubits()[0], p.qubits()[1]))
            .collect()
    }

    pub fn patch_index(&self, patch: &Patch) -> Result<usize> {
        self.patches
            .iter()
            .position(|p| p == patch)
            .ok_or_else(|| Error::input(format!("patch {patch} is not part of configuration {}", self.offset)))
    }

    /// Text rendering of the chain: `T` target, `F` frozen, `|` between patches.
    pub fn layout(&self) -> String {
        let mut s = String::new();
        for q in 0..self.n_qubits {
            s.push(if self.frozen.contains(&q) { 'F' } else { 'T' });
        }
        s
    }
}

/// The reshaping configurations of an `n`-qubit chain.
///
/// Offsets 0, 1 and 2 are used for `n > 3`; for shorter chains offsets that
/// add no new edge are dropped (a single configuration for `n = 2`, two for
/// `n = 3`).
pub fn plan_configurations(n: usize) -> Result<Vec<ReshapingConfig>> {
    if n < 2 {
        return Err(Error::input(format!("chain needs at least 2 qubits, got {n}")));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for offset in 0..3 {
        let cfg = ReshapingConfig::with_offset(n, offset)?;
        let fresh = cfg.edges().into_iter().filter(|e| seen.insert(*e)).count();
        if fresh > 0 || n > 3 {
            out.push(cfg);
        }
    }
    Ok(out)
}

/// `sum_k P_k H P_k` for the Z-type kick: drops every term that
/// anticommutes with the kick.
pub fn zeno_project(h: &PauliHamiltonian, kick: &KickSpec) -> PauliHamiltonian {
    let frozen = kick.frozen();
    let kept = h
        .terms()
        .filter(|(p, _)| p.commutes_with_kick(frozen))
        .map(|(p, c)| (p.clone(), c));
    PauliHamiltonian::from_terms(h.n_qubits(), kept).expect("terms come from a valid Hamiltonian")
}

/// Hamiltonian acting on a patch, with strings written on the patch qubits
/// only (qubit order as in the patch).
#[derive(Debug, Clone, PartialEq)]
pub struct PatchHamiltonian {
    pub patch: Patch,
    pub hamiltonian: PauliHamiltonian,
}

impl PatchHamiltonian {
    /// Coefficients in [`local_basis`] order.
    pub fn coefficients(&self) -> Vec<f64> {
        self.hamiltonian.coefficients_in(&local_basis(self.patch.len()))
    }
}

/// Where a single global term lands on `patch` after Zeno projection and
/// restriction to frozen `|0>`; `None` when it leaves no trace there.
fn patch_image(
    term: &PauliString,
    cfg: &ReshapingConfig,
    patch: &Patch,
) -> Result<Option<(PauliString, f64)>> {
    if !term.commutes_with_kick(&cfg.frozen) {
        return Ok(None);
    }
    let support = term.support();
    if !support.iter().any(|&q| patch.contains(q)) {
        return Ok(None);
    }
    let mut weight = 1.0;
    for &q in support.iter().filter(|&&q| !patch.contains(q)) {
        match (cfg.frozen.contains(&q), term.get(q)) {
            (true, Pauli::Z) => weight *= FROZEN_Z_EIGENVALUE,
            _ => {
                return Err(Error::input(format!(
                    "term {term} couples patch {patch} to qubit {q} beyond a frozen Z"
                )))
            }
        }
    }
    let local = term.restrict(patch.qubits());
    if local.is_identity() {
        return Ok(None);
    }
    Ok(Some((local, weight)))
}

/// The patch Hamiltonian learned in the ideal Zeno limit.
pub fn expected_patch_hamiltonian(
    h: &PauliHamiltonian,
    cfg: &ReshapingConfig,
    patch: &Patch,
) -> Result<PatchHamiltonian> {
    cfg.patch_index(patch)?;
    let mut local = PauliHamiltonian::new(patch.len())?;
    for (term, c) in h.terms() {
        if let Some((p, w)) = patch_image(term, cfg, patch)? {
            local.add_term(p, w * c)?;
        }
    }
    Ok(PatchHamiltonian {
        patch: patch.clone(),
        hamiltonian: local,
    })
}

/// Identifies one learned coefficient: configuration, patch, local string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowLabel {
    pub config: usize,
    pub patch: Patch,
    pub local: PauliString,
}

/// Sparse linear map from global chain coefficients to every learned
/// patch coefficient.
#[derive(Debug, Clone)]
pub struct ContaminationModel {
    n_qubits: usize,
    basis: Vec<PauliString>,
    rows: Vec<RowLabel>,
    entries: Vec<Vec<(usize, f64)>>,
    pinv: DMatrix<f64>,
    rank: usize,
}

impl ContaminationModel {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Global basis (columns), in [`chain_basis`] order.
    pub fn basis(&self) -> &[PauliString] {
        &self.basis
    }

    pub fn rows(&self) -> &[RowLabel] {
        &self.rows
    }

    /// Nonzero `(column, value)` pairs of row `i`.
    pub fn row_entries(&self, i: usize) -> &[(usize, f64)] {
        &self.entries[i]
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.rows.len(), self.basis.len());
        for (i, row) in self.entries.iter().enumerate() {
            for &(j, v) in row {
                a[(i, j)] += v;
            }
        }
        a
    }

    /// Ideal learned vector `A c`.
    pub fn apply(&self, global: &[f64]) -> Result<Vec<f64>> {
        if global.len() != self.basis.len() {
            return Err(Error::input("global coefficient vector has the wrong length"));
        }
        Ok(self
            .entries
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * global[j]).sum())
            .collect())
    }

    /// Least-squares global coefficients `argmin |A c - learned|_2`.
    pub fn solve(&self, learned: &[f64]) -> Result<Vec<f64>> {
        if learned.len() != self.rows.len() {
            return Err(Error::input(format!(
                "expected {} learned coefficients, got {}",
                self.rows.len(),
                learned.len()
            )));
        }
        let c = &self.pinv * DVector::from_column_slice(learned);
        Ok(c.iter().copied().collect())
    }

    /// Row index of a learned coefficient.
    pub fn row_of(&self, config: usize, patch: &Patch, local: &PauliString) -> Option<usize> {
        self.rows
            .iter()
            .position(|r| r.config == config && &r.patch == patch && &r.local == local)
    }
}

/// Stacks the ideal learned coefficients of every (configuration, patch,
/// local string) as a linear function of the [`chain_basis`] coefficients.
pub fn build_contamination_model(n: usize, configs: &[ReshapingConfig]) -> Result<ContaminationModel> {
    let basis = chain_basis(n);
    let column: BTreeMap<&PauliString, usize> = basis.iter().enumerate().map(|(j, p)| (p, j)).collect();
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for (ci, cfg) in configs.iter().enumerate() {
        if cfg.n_qubits != n {
            return Err(Error::input("configuration size does not match the chain"));
        }
        for patch in &cfg.patches {
            let locals = local_basis(patch.len());
            let mut per_local: Vec<Vec<(usize, f64)>> = vec![Vec::new(); locals.len()];
            for term in &basis {
                if let Some((p, w)) = patch_image(term, cfg, patch)? {
                    let li = locals
                        .iter()
                        .position(|l| l == &p)
                        .ok_or_else(|| Error::internal(format!("{p} missing from local basis")))?;
                    per_local[li].push((column[term], w));
                }
            }
            for (local, row) in locals.into_iter().zip(per_local) {
                rows.push(RowLabel {
                    config: ci,
                    patch: patch.clone(),
                    local,
                });
                entries.push(row);
            }
        }
    }

    let mut model = ContaminationModel {
        n_qubits: n,
        basis,
        rows,
        entries,
        pinv: DMatrix::zeros(0, 0),
        rank: 0,
    };
    let a = model.dense();
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = 1e-10 * smax.max(1.0);
    model.rank = svd.singular_values.iter().filter(|&&s| s > cutoff).count();
    if model.rank < model.basis.len() {
        return Err(Error::internal(format!(
            "contamination model has rank {} < {} columns; configurations do not cover the chain",
            model.rank,
            model.basis.len()
        )));
    }
    // Full column rank, so the normal equations give the exact pseudo-inverse.
    let gram = a.transpose() * &a;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::numeric("normal equations of the contamination model are singular"))?;
    model.pinv = chol.solve(&a.transpose());
    Ok(model)
}
