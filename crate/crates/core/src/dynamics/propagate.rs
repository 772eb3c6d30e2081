use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::PauliHamiltonian;
use crate::linalg::ZERO;

use super::sparse::SparsePauliOperator;
use super::state::StateVector;

/// Default accuracy of one propagation call (2-norm of the state error).
pub const DEFAULT_TOL: f64 = 1e-12;

/// Largest accepted tolerance.
pub const MAX_TOL: f64 = 1e-6;

/// Cap on Taylor terms per substep.
pub const MAX_TERMS: usize = 30;

/// Substeps are chosen so that `|H| dt <= STEP_NORM`.
const STEP_NORM: f64 = 0.5;

/// Short-time propagator `exp(-i H t)` acting on statevectors.
///
/// Each call splits `t` into substeps with `|H|_bound * dt <= 1/2` and sums
/// the Taylor series of every substep until the newest term drops below its
/// share of the tolerance.
#[derive(Debug, Clone)]
pub struct Propagator {
    op: SparsePauliOperator,
}

impl Propagator {
    pub fn new(h: &PauliHamiltonian) -> Result<Self> {
        Ok(Self {
            op: SparsePauliOperator::new(h)?,
        })
    }

    pub fn operator(&self) -> &SparsePauliOperator {
        &self.op
    }

    /// Replaces `psi` by `exp(-i H t) psi`.
    pub fn evolve_in_place(&self, psi: &mut StateVector, t: f64, tol: f64) -> Result<()> {
        if psi.n_qubits() != self.op.n_qubits() {
            return Err(Error::input("state and Hamiltonian sizes differ"));
        }
        if !(tol > 0.0 && tol <= MAX_TOL) {
            return Err(Error::input(format!("tolerance {tol} outside (0, {MAX_TOL}]")));
        }
        let scale = self.op.norm_bound() * t.abs();
        if !scale.is_finite() {
            return Err(Error::input("|H| t is not finite"));
        }
        if t == 0.0 || self.op.norm_bound() == 0.0 {
            return Ok(());
        }
        let steps = ((scale / STEP_NORM).ceil() as usize).max(1);
        let dt = t / steps as f64;
        let term_tol = 0.1 * tol / steps as f64;

        let dim = psi.dim();
        let mut term = vec![ZERO; dim];
        let mut next = vec![ZERO; dim];
        for _ in 0..steps {
            let amps = psi.amplitudes_mut();
            term.copy_from_slice(amps);
            let mut converged = false;
            let mut last = f64::INFINITY;
            for k in 1..=MAX_TERMS {
                self.op.apply_into(&term, &mut next);
                // term_k = (-i dt / k) H term_{k-1}
                let factor = Complex64::new(0.0, -dt / k as f64);
                let mut sq = 0.0;
                for (a, (t_k, n_k)) in amps.iter_mut().zip(term.iter_mut().zip(&next)) {
                    *t_k = factor * n_k;
                    sq += t_k.norm_sqr();
                    *a += *t_k;
                }
                last = sq.sqrt();
                if last <= term_tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::numeric(format!(
                    "Taylor propagator did not converge in {MAX_TERMS} terms (residual {last:.3e})"
                )));
            }
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > 10.0 * tol {
            return Err(Error::numeric(format!(
                "norm drifted to {norm:.15} during propagation (tolerance {:.1e})",
                10.0 * tol
            )));
        }
        psi.amplitudes_mut().iter_mut().for_each(|a| *a /= norm);
        Ok(())
    }
}

/// `exp(-i H t)|psi>` to 2-norm accuracy `tol`.
pub fn evolve(h: &PauliHamiltonian, t: f64, psi: &StateVector, tol: f64) -> Result<StateVector> {
    let prop = Propagator::new(h)?;
    let mut out = psi.clone();
    prop.evolve_in_place(&mut out, t, tol)?;
    Ok(out)
}
