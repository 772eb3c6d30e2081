use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::PauliHamiltonian;
use crate::pauli::{Pauli, PauliString};

use super::kick::KickSpec;
use super::propagate::Propagator;
use super::state::StateVector;

/// What to do with the accumulated kick `(U_kick^dag)^r` after the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackKick {
    /// Apply it (a no-op for even `r`, a single kick for odd `r`).
    #[default]
    Apply,
    /// Skip it; only valid for even `r`, where it is the identity.
    Elide,
}

pub(crate) fn check_reps(r: usize, back_kick: BackKick) -> Result<()> {
    if r == 0 {
        return Err(Error::input("number of kicks r must be at least 1"));
    }
    if back_kick == BackKick::Elide && r % 2 == 1 {
        return Err(Error::input(format!(
            "back-kick elision needs an even number of kicks, got r = {r}"
        )));
    }
    Ok(())
}

pub(crate) fn apply_kick(kick: &KickSpec, psi: &mut StateVector) {
    let mask = kick.mask();
    if mask == 0 {
        return;
    }
    for (b, a) in psi.amplitudes_mut().iter_mut().enumerate() {
        if (b & mask).count_ones() % 2 == 1 {
            *a = -*a;
        }
    }
}

pub(crate) fn apply_back_kick(kick: &KickSpec, r: usize, back_kick: BackKick, psi: &mut StateVector) {
    // Z^dag = Z, so the accumulated back-kick is Z^r.
    if back_kick == BackKick::Apply && r % 2 == 1 {
        apply_kick(kick, psi);
    }
}

/// `V_r(T)|psi>`: `r` rounds of evolution for `T/r` followed by a kick, then
/// the back-kick.
pub fn kicked_evolve_with(
    prop: &Propagator,
    kick: &KickSpec,
    total_time: f64,
    r: usize,
    psi: &StateVector,
    back_kick: BackKick,
    tol: f64,
) -> Result<StateVector> {
    check_reps(r, back_kick)?;
    if kick.n_qubits() != psi.n_qubits() {
        return Err(Error::input("kick and state sizes differ"));
    }
    let dt = total_time / r as f64;
    let mut out = psi.clone();
    for _ in 0..r {
        prop.evolve_in_place(&mut out, dt, tol)?;
        apply_kick(kick, &mut out);
    }
    apply_back_kick(kick, r, back_kick, &mut out);
    Ok(out)
}

pub fn kicked_evolve(
    h: &PauliHamiltonian,
    kick: &KickSpec,
    total_time: f64,
    r: usize,
    psi: &StateVector,
    back_kick: BackKick,
) -> Result<StateVector> {
    let prop = Propagator::new(h)?;
    kicked_evolve_with(
        &prop,
        kick,
        total_time,
        r,
        psi,
        back_kick,
        super::propagate::DEFAULT_TOL,
    )
}

/// Uniform transverse-coupled Ising chain `h sum Z_j + J sum X_j X_{j+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingParams {
    pub h: f64,
    #[serde(rename = "J")]
    pub j: f64,
}

impl IsingParams {
    pub fn hamiltonian(&self, n: usize) -> Result<PauliHamiltonian> {
        let mut out = PauliHamiltonian::new(n)?;
        for q in 0..n {
            out.add_term(PauliString::from_sparse(n, &[(q, Pauli::Z)])?, self.h)?;
        }
        for q in 0..n.saturating_sub(1) {
            out.add_term(
                PauliString::from_sparse(n, &[(q, Pauli::X), (q + 1, Pauli::X)])?,
                self.j,
            )?;
        }
        Ok(out)
    }

    /// Recovers `(h, J)` from a Hamiltonian of exactly the Ising form.
    pub fn from_hamiltonian(ham: &PauliHamiltonian) -> Result<Self> {
        let n = ham.n_qubits();
        let h = ham.coefficient(&PauliString::from_sparse(n, &[(0, Pauli::Z)])?);
        let j = if n > 1 {
            ham.coefficient(&PauliString::from_sparse(n, &[(0, Pauli::X), (1, Pauli::X)])?)
        } else {
            0.0
        };
        let params = Self { h, j };
        if params.hamiltonian(n)? != *ham {
            return Err(Error::input(
                "Hamiltonian is not a uniform h*Z + J*XX Ising chain",
            ));
        }
        Ok(params)
    }
}

/// First-order Trotterized kicked evolution of an Ising chain.
///
/// Each of the `r` steps of length `T/r` applies the Z-field layer, then the
/// XX-coupling layer, then the kick. The back-kick follows as in
/// [`kicked_evolve`].
pub fn trotter_kicked_evolve(
    ising: &IsingParams,
    kick: &KickSpec,
    total_time: f64,
    r: usize,
    psi: &StateVector,
    back_kick: BackKick,
) -> Result<StateVector> {
    check_reps(r, back_kick)?;
    let n = psi.n_qubits();
    if kick.n_qubits() != n {
        return Err(Error::input("kick and state sizes differ"));
    }
    let tau = total_time / r as f64;
    // exp(-i h tau Z) on every qubit: phase exp(-i h tau (n - 2 popcount(b))).
    let field: Vec<Complex64> = (0..psi.dim())
        .map(|b| {
            let s = n as f64 - 2.0 * b.count_ones() as f64;
            Complex64::from_polar(1.0, -ising.h * tau * s)
        })
        .collect();
    let (c, s) = ((ising.j * tau).cos(), (ising.j * tau).sin());
    let cos = Complex64::new(c, 0.0);
    let misin = Complex64::new(0.0, -s);

    let mut out = psi.clone();
    for _ in 0..r {
        let amps = out.amplitudes_mut();
        amps.iter_mut().zip(&field).for_each(|(a, f)| *a *= f);
        for q in 0..n.saturating_sub(1) {
            let mask = (1usize << (n - 1 - q)) | (1usize << (n - 2 - q));
            for b in 0..amps.len() {
                let partner = b ^ mask;
                if b < partner {
                    let (x, y) = (amps[b], amps[partner]);
                    amps[b] = cos * x + misin * y;
                    amps[partner] = cos * y + misin * x;
                }
            }
        }
        apply_kick(kick, &mut out);
    }
    apply_back_kick(kick, r, back_kick, &mut out);
    Ok(out)
}
