//! Channel reconstruction: linear inversion, unitary projection, the
//! matrix logarithm, and diamond-distance brackets.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{coeff_inner, local_basis, DenseOperator, PauliHamiltonian};
use crate::linalg::{self, CMatrix};
use crate::zeno::{Patch, PatchHamiltonian};

use super::record::TomographyRecord;
use super::settings::design;

/// Eigenphases must stay this far inside `(-pi, pi)` for the logarithm.
pub const BRANCH_MARGIN: f64 = 0.1;

pub const UNITARY_MAX_ITERATIONS: usize = 200;
pub const UNITARY_STEP_TOL: f64 = 1e-10;

/// Least-squares transfer matrix `S` with `P ~ M S S_fid`.
pub fn linear_inversion(record: &TomographyRecord) -> Result<CMatrix> {
    let d = design(record.n_qubits())?;
    let p = record.probability_matrix().map(|x| Complex64::new(x, 0.0));
    Ok(&d.m_pinv * p * &d.s_pinv)
}

/// Transfer matrix of `rho -> U rho U^dag` (column stacking): `conj(U) (x) U`.
pub fn unitary_transfer(u: &CMatrix) -> CMatrix {
    linalg::kron(&u.conjugate(), u)
}

/// Trace-one Choi matrix `(1/d) sum |a><c| (x) L(|a><c|)` from a transfer matrix.
pub fn choi_from_transfer(s: &CMatrix) -> Result<CMatrix> {
    let d2 = s.nrows();
    let d = (d2 as f64).sqrt().round() as usize;
    if d * d != d2 || s.ncols() != d2 {
        return Err(Error::input("transfer matrix must be d^2 x d^2"));
    }
    let scale = Complex64::new(1.0 / d as f64, 0.0);
    Ok(CMatrix::from_fn(d2, d2, |row, col| {
        let (a, b) = (row / d, row % d);
        let (c, e) = (col / d, col % d);
        s[(b + d * e, a + d * c)] * scale
    }))
}

/// Inverse of [`choi_from_transfer`].
pub fn transfer_from_choi(j: &CMatrix) -> Result<CMatrix> {
    let d2 = j.nrows();
    let d = (d2 as f64).sqrt().round() as usize;
    if d * d != d2 || j.ncols() != d2 {
        return Err(Error::input("Choi matrix must be d^2 x d^2"));
    }
    let scale = Complex64::new(d as f64, 0.0);
    Ok(CMatrix::from_fn(d2, d2, |row, col| {
        let (b, e) = (row % d, row / d);
        let (a, c) = (col % d, col / d);
        j[(a * d + b, c * d + e)] * scale
    }))
}

pub fn unitary_choi(u: &CMatrix) -> CMatrix {
    let v = linalg::vectorize(u);
    &v * v.adjoint() * Complex64::new(1.0 / u.nrows() as f64, 0.0)
}

/// Hermitizes and rescales to unit trace.
pub fn normalize_choi(j: &CMatrix) -> Result<CMatrix> {
    let h = linalg::hermitize(j);
    let tr = linalg::trace(&h).re;
    if !(tr.is_finite() && tr > 1e-12) {
        return Err(Error::numeric(format!("Choi matrix has trace {tr}")));
    }
    Ok(h * Complex64::new(1.0 / tr, 0.0))
}

/// How the closest unitary is found.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitaryProjection {
    /// Polar factor of the leading Choi eigenvector, refined by fixed-point
    /// iteration of `U <- polar(unvec(J vec U))`.
    #[default]
    Iterative,
    /// Polar factor of the leading Choi eigenvector only.
    RankOne,
}

#[derive(Debug, Clone)]
pub struct UnitaryFit {
    pub u: CMatrix,
    /// `1 - <U|J|U> / d`.
    pub lambda_raw: f64,
    /// `lambda_raw / (1 - 1/d^2)`, exact under global depolarizing noise.
    pub lambda_debiased: f64,
    pub iterations: usize,
}

/// Unitary channel maximizing `<vec U| J |vec U>` for a trace-one Choi matrix.
pub fn closest_unitary(choi: &CMatrix, projection: UnitaryProjection) -> Result<UnitaryFit> {
    let d2 = choi.nrows();
    let d = (d2 as f64).sqrt().round() as usize;
    if d * d != d2 {
        return Err(Error::input("Choi matrix must be d^2 x d^2"));
    }
    let j = linalg::hermitize(choi);
    let (_, vecs) = linalg::hermitian_eigen(&j);
    let lead = DVector::from_iterator(d2, vecs.column(d2 - 1).iter().copied());
    let mut u = linalg::polar_unitary(&linalg::unvectorize(&lead, d))?;
    let mut iterations = 0;
    if projection == UnitaryProjection::Iterative {
        loop {
            let next = linalg::polar_unitary(&linalg::unvectorize(&(&j * linalg::vectorize(&u)), d))?;
            let step = (&next - &u).norm();
            u = next;
            iterations += 1;
            if step <= UNITARY_STEP_TOL {
                break;
            }
            if iterations >= UNITARY_MAX_ITERATIONS {
                return Err(Error::numeric(format!(
                    "closest-unitary iteration did not converge (last step {step:.3e}, last iterate {u})"
                )));
            }
        }
    }
    let v = linalg::vectorize(&u);
    let overlap = (v.adjoint() * &j * &v)[(0, 0)].re;
    let lambda_raw = (1.0 - overlap / d as f64).clamp(0.0, 1.0);
    let lambda_debiased = (lambda_raw / (1.0 - 1.0 / (d2 as f64))).clamp(0.0, 1.0);
    Ok(UnitaryFit {
        u,
        lambda_raw,
        lambda_debiased,
        iterations,
    })
}

/// `H = (i/T) log U`, global phase and identity part removed, as a
/// Hamiltonian on the patch. Also returns `max |eigenvalue of H|`.
pub fn hamiltonian_from_unitary(u: &CMatrix, t: f64, patch: &Patch) -> Result<(PatchHamiltonian, f64)> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::input(format!("evolution time must be positive, got {t}")));
    }
    let n = patch.len();
    if u.nrows() != 1 << n {
        return Err(Error::input("unitary size does not match the patch"));
    }
    let (vals, q) = linalg::unitary_eigen(u)?;
    let mean: Complex64 = vals.iter().sum::<Complex64>() / vals.len() as f64;
    if mean.norm() < 1e-6 {
        return Err(Error::numeric("eigenvalues of the unitary have no well-defined mean phase"));
    }
    let unphase = (mean / mean.norm()).conj();
    let mut energies = Vec::with_capacity(vals.len());
    for v in &vals {
        let theta = (v * unphase).arg();
        if theta.abs() >= PI - BRANCH_MARGIN {
            return Err(Error::numeric(format!(
                "eigenphase {theta:.6} is within {BRANCH_MARGIN} of the logarithm branch cut"
            )));
        }
        energies.push(-theta / t);
    }
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(
        energies.len(),
        energies.iter().map(|&e| Complex64::new(e, 0.0)),
    ));
    let h = DenseOperator::new(linalg::hermitize(&(&q * diag * q.adjoint())))?;
    let mut out = PauliHamiltonian::new(n)?;
    for p in local_basis(n) {
        let c = coeff_inner(&h, &p)?;
        out.add_term(p, c)?;
    }
    let tr = energies.iter().sum::<f64>() / energies.len() as f64;
    let op = energies.iter().map(|e| (e - tr).abs()).fold(0.0, f64::max);
    Ok((
        PatchHamiltonian {
            patch: patch.clone(),
            hamiltonian: out,
        },
        op,
    ))
}

/// Interval known to contain a diamond distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiamondBracket {
    pub lower: f64,
    pub upper: f64,
}

impl DiamondBracket {
    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.lower - tol <= x && x <= self.upper + tol
    }
}

/// `[|J_A - J_B|_1, d |J_A - J_B|_1]` for trace-one Choi matrices.
pub fn diamond_bracket(choi_a: &CMatrix, choi_b: &CMatrix) -> Result<DiamondBracket> {
    if choi_a.shape() != choi_b.shape() || choi_a.nrows() != choi_a.ncols() {
        return Err(Error::input("Choi matrices must be square and of equal size"));
    }
    let d = (choi_a.nrows() as f64).sqrt().round();
    let (vals, _) = linalg::hermitian_eigen(&(choi_a - choi_b));
    let lower: f64 = vals.iter().map(|v| v.abs()).sum();
    Ok(DiamondBracket {
        lower,
        upper: d * lower,
    })
}

/// Exact diamond distance between two unitary channels, `2 sqrt(1 - nu^2)`
/// where `nu` is the distance from 0 to the hull of the spectrum of `U^dag V`.
pub fn unitary_diamond_distance(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(Error::input("unitaries must have equal size"));
    }
    let (vals, _) = linalg::unitary_eigen(&(u.adjoint() * v))?;
    let mut angles: Vec<f64> = vals.iter().map(|z| z.arg()).collect();
    angles.sort_by(f64::total_cmp);
    // The smallest arc holding every eigenvalue leaves out the largest gap.
    let mut gap = angles[0] + 2.0 * PI - angles[angles.len() - 1];
    for w in angles.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    let width = 2.0 * PI - gap;
    Ok(if width >= PI { 2.0 } else { 2.0 * (width / 2.0).sin() })
}

/// Everything recovered from one patch record.
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub transfer: CMatrix,
    pub choi: CMatrix,
    pub u_hat: CMatrix,
    pub hamiltonian: PatchHamiltonian,
    /// `|H_patch|_op` of the estimate.
    pub h_op_norm: f64,
    pub lambda_raw: f64,
    pub lambda_debiased: f64,
    /// Bracket on the distance between the unitary fit and the raw inversion.
    pub diamond_gap: DiamondBracket,
}

pub fn estimate_channel(record: &TomographyRecord, projection: UnitaryProjection) -> Result<ChannelEstimate> {
    let transfer = linear_inversion(record)?;
    let choi = normalize_choi(&choi_from_transfer(&transfer)?)?;
    let fit = closest_unitary(&choi, projection)?;
    let header = record.header();
    let (hamiltonian, h_op_norm) = hamiltonian_from_unitary(&fit.u, header.t, &header.patch)?;
    let diamond_gap = diamond_bracket(&unitary_choi(&fit.u), &choi)?;
    Ok(ChannelEstimate {
        transfer,
        choi,
        u_hat: fit.u,
        hamiltonian,
        h_op_norm,
        lambda_raw: fit.lambda_raw,
        lambda_debiased: fit.lambda_debiased,
        diamond_gap,
    })
}
