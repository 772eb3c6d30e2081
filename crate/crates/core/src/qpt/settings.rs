//! Fiducial states, Pauli-basis measurements and the linear-inversion design.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::dynamics::{ReducedDensity, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, I, ONE, ZERO};

/// Single-qubit fiducials in index order: Z+, Z-, X+, X-, Y+, Y-.
pub const SINGLE_QUBIT_FIDUCIALS: usize = 6;

/// Single-qubit measurement bases in index order: X, Y, Z.
pub const SINGLE_QUBIT_BASES: usize = 3;

/// Slack allowed before a probability outside `[0, 1]` is an error.
pub const PROBABILITY_TOL: f64 = 1e-12;

fn check_patch_size(n: usize) -> Result<()> {
    if n == 1 || n == 2 {
        Ok(())
    } else {
        Err(Error::input(format!("patch tomography supports 1 or 2 qubits, got {n}")))
    }
}

pub fn fiducial_count(n: usize) -> usize {
    SINGLE_QUBIT_FIDUCIALS.pow(n as u32)
}

pub fn basis_count(n: usize) -> usize {
    SINGLE_QUBIT_BASES.pow(n as u32)
}

/// Number of effects, `3^n * 2^n`; effect `k` is basis `k >> n`, outcome `k & (2^n - 1)`.
pub fn effect_count(n: usize) -> usize {
    basis_count(n) << n
}

/// Amplitudes of single-qubit fiducial `k`.
pub fn single_qubit_fiducial(k: usize) -> Result<[Complex64; 2]> {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    Ok(match k {
        0 => [ONE, ZERO],
        1 => [ZERO, ONE],
        2 => [h, h],
        3 => [h, -h],
        4 => [h, I * h],
        5 => [h, -I * h],
        _ => return Err(Error::input(format!("single-qubit fiducial index {k} out of range"))),
    })
}

/// Base-`radix` digits of `index`, qubit 0 first.
pub(crate) fn digits(index: usize, radix: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    let mut rest = index;
    for q in (0..n).rev() {
        out[q] = rest % radix;
        rest /= radix;
    }
    out
}

/// Product of single-qubit fiducials; index digits in base 6, qubit 0 most significant.
pub fn fiducial_state(n: usize, index: usize) -> Result<StateVector> {
    check_patch_size(n)?;
    if index >= fiducial_count(n) {
        return Err(Error::input(format!("fiducial index {index} out of range for {n} qubits")));
    }
    let factors = digits(index, SINGLE_QUBIT_FIDUCIALS, n)
        .into_iter()
        .map(single_qubit_fiducial)
        .collect::<Result<Vec<_>>>()?;
    StateVector::product(&factors)
}

fn projector(v: &[Complex64]) -> CMatrix {
    let col = nalgebra::DVector::from_column_slice(v);
    &col * col.adjoint()
}

pub fn fiducial_density(n: usize, index: usize) -> Result<CMatrix> {
    Ok(projector(fiducial_state(n, index)?.amplitudes()))
}

/// Eigenprojectors of the tensor Pauli basis `basis_index` (base-3 digits,
/// 0 = X, 1 = Y, 2 = Z), ordered by outcome. Outcome bit 0 of a qubit is the
/// +1 eigenstate.
pub fn povm_effects(n: usize, basis_index: usize) -> Result<Vec<CMatrix>> {
    check_patch_size(n)?;
    if basis_index >= basis_count(n) {
        return Err(Error::input(format!("basis index {basis_index} out of range for {n} qubits")));
    }
    let letters = digits(basis_index, SINGLE_QUBIT_BASES, n);
    (0..1usize << n)
        .map(|outcome| {
            let mut e = linalg::identity(1);
            for (q, &b) in letters.iter().enumerate() {
                let bit = (outcome >> (n - 1 - q)) & 1;
                // X eigenstates are fiducials 2/3, Y 4/5, Z 0/1.
                let fid = match b {
                    0 => 2 + bit,
                    1 => 4 + bit,
                    _ => bit,
                };
                e = linalg::kron(&e, &projector(&single_qubit_fiducial(fid)?));
            }
            Ok(e)
        })
        .collect()
}

/// Outcome probabilities for every basis, indexed `basis * 2^n + outcome`.
pub fn probabilities(rho: &ReducedDensity) -> Result<Vec<f64>> {
    let n = rho.n_qubits();
    let d = design(n)?;
    let m = rho.matrix();
    let tr = linalg::trace(m);
    if (tr - ONE).norm() > 1e-9 {
        return Err(Error::input(format!("density matrix trace {tr} is not 1")));
    }
    d.effects
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let p: f64 = e.iter().zip(m.transpose().iter()).map(|(a, b)| (a * b).re).sum();
            if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&p) {
                return Err(Error::numeric(format!("probability {p} of effect {k} is outside [0, 1]")));
            }
            Ok(p.clamp(0.0, 1.0))
        })
        .collect()
}

/// Precomputed design for `n`-qubit linear inversion.
#[derive(Debug)]
pub struct Design {
    pub n: usize,
    /// All effects, indexed `basis * 2^n + outcome`.
    pub effects: Vec<CMatrix>,
    pub fiducials: Vec<CMatrix>,
    /// Rows `vec(E_k)^dag`.
    pub m: CMatrix,
    /// Columns `vec(rho_j)`.
    pub s: CMatrix,
    pub m_pinv: CMatrix,
    pub s_pinv: CMatrix,
}

impl Design {
    fn build(n: usize) -> Result<Self> {
        let dim2 = 1usize << (2 * n);
        let effects: Vec<CMatrix> = (0..basis_count(n))
            .map(|b| povm_effects(n, b))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        let fiducials = (0..fiducial_count(n))
            .map(|j| fiducial_density(n, j))
            .collect::<Result<Vec<_>>>()?;
        let m = CMatrix::from_fn(effects.len(), dim2, |k, a| linalg::vectorize(&effects[k])[a].conj());
        let s = CMatrix::from_fn(dim2, fiducials.len(), |a, j| linalg::vectorize(&fiducials[j])[a]);

        // Both designs are overcomplete with full rank; the normal equations
        // are well conditioned and keep the pseudo-inverses accurate to 1e-15.
        let gram_m = m.adjoint() * &m;
        let gram_s = &s * s.adjoint();
        for (name, g) in [("measurement", &gram_m), ("fiducial", &gram_s)] {
            let (vals, _) = linalg::hermitian_eigen(g);
            if vals[0] < 1e-8 {
                return Err(Error::internal(format!(
                    "{name} design has rank below {dim2} (smallest Gram eigenvalue {:.3e})",
                    vals[0]
                )));
            }
        }
        let m_pinv = gram_m
            .cholesky()
            .ok_or_else(|| Error::internal("measurement Gram matrix not positive definite"))?
            .solve(&m.adjoint());
        let s_pinv = gram_s
            .cholesky()
            .ok_or_else(|| Error::internal("fiducial Gram matrix not positive definite"))?
            .solve(&s)
            .adjoint();
        Ok(Self {
            n,
            effects,
            fiducials,
            m,
            s,
            m_pinv,
            s_pinv,
        })
    }
}

/// Shared design for 1 or 2 qubits.
pub fn design(n: usize) -> Result<&'static Design> {
    static CELLS: [OnceLock<Design>; 2] = [OnceLock::new(), OnceLock::new()];
    check_patch_size(n)?;
    let cell = &CELLS[n - 1];
    if let Some(d) = cell.get() {
        return Ok(d);
    }
    let built = Design::build(n)?;
    Ok(cell.get_or_init(|| built))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::reduced_density;
    use crate::hamiltonian::random_2local_chain;
    use crate::dynamics::evolve;

    fn rank(m: &CMatrix) -> usize {
        let sv = linalg::singular_values(m);
        let top = sv.iter().copied().fold(0.0, f64::max);
        sv.iter().filter(|&&s| s > 1e-10 * top).count()
    }

    #[test]
    fn single_qubit_fiducials() {
        let s = fiducial_state(1, 0).unwrap();
        assert_eq!(s.amplitudes(), &[ONE, ZERO]);
        let plus = fiducial_state(1, 2).unwrap();
        assert!((plus.amplitudes()[0].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((plus.amplitudes()[1].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(fiducial_state(1, 6).is_err());
        assert!(fiducial_state(3, 0).is_err());
        // Index digits: qubit 0 most significant. 6*2 + 1 = X+ (x) Z-.
        let s = fiducial_state(2, 13).unwrap();
        let expected = [0.0, FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2];
        for (a, e) in s.amplitudes().iter().zip(expected) {
            assert!((a.re - e).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn effects_are_pauli_eigenprojectors() {
        let z = povm_effects(1, 2).unwrap();
        assert_eq!(z[0], CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, ZERO]));
        assert_eq!(z[1], CMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ZERO, ONE]));
        let x = povm_effects(1, 0).unwrap();
        let half = Complex64::new(0.5, 0.0);
        assert!((&x[0] - CMatrix::from_element(2, 2, half)).norm() < 1e-15);
        assert!((&x[1] - CMatrix::from_row_slice(2, 2, &[half, -half, -half, half])).norm() < 1e-15);
        for n in 1..=2 {
            for b in 0..basis_count(n) {
                let sum = povm_effects(n, b)
                    .unwrap()
                    .into_iter()
                    .fold(CMatrix::zeros(1 << n, 1 << n), |acc, e| acc + e);
                assert!((sum - linalg::identity(1 << n)).norm() < 1e-15);
            }
        }
        assert!(povm_effects(2, 9).is_err());
    }

    #[test]
    fn designs_span_operator_space() {
        let d = design(2).unwrap();
        assert_eq!(d.m.shape(), (36, 16));
        assert_eq!(d.s.shape(), (16, 36));
        assert_eq!(rank(&d.m), 16);
        assert_eq!(rank(&d.s), 16);
        assert!((&d.m_pinv * &d.m - linalg::identity(16)).norm() < 1e-12);
        assert!((&d.s * &d.s_pinv - linalg::identity(16)).norm() < 1e-12);
        let d1 = design(1).unwrap();
        assert_eq!(rank(&d1.m), 4);
        assert_eq!(rank(&d1.s), 4);
    }

    #[test]
    fn probabilities_of_simple_states() {
        let zero = ReducedDensity::new(vec![0], fiducial_density(1, 0).unwrap()).unwrap();
        let p = probabilities(&zero).unwrap();
        assert_eq!(&p[4..6], &[1.0, 0.0]);
        let mixed = ReducedDensity::new(vec![0], linalg::identity(2) * Complex64::new(0.5, 0.0)).unwrap();
        for p in probabilities(&mixed).unwrap() {
            assert!((p - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn probabilities_match_trace_oracle() {
        let h = random_2local_chain(4, 9).unwrap();
        let psi = evolve(&h, 0.7, &StateVector::zero(4).unwrap(), 1e-12).unwrap();
        let rho = reduced_density(&psi, &[1, 2]).unwrap();
        let ours = probabilities(&rho).unwrap();
        let mut k = 0;
        for b in 0..9 {
            let effects = povm_effects(2, b).unwrap();
            let mut total = 0.0;
            for e in &effects {
                let oracle = linalg::trace(&(e * rho.matrix())).re;
                assert!((ours[k] - oracle).abs() < 1e-12);
                total += ours[k];
                k += 1;
            }
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
