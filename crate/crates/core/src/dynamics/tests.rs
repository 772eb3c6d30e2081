use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::hamiltonian::{random_2local_chain, to_dense, PauliHamiltonian};
use crate::linalg::{self, CMatrix};

fn ham(n: usize, terms: &[(&str, f64)]) -> PauliHamiltonian {
    PauliHamiltonian::from_terms(n, terms.iter().map(|(p, c)| (p.parse().unwrap(), *c))).unwrap()
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let amps = (0..1usize << n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    StateVector::normalized(amps).unwrap()
}

fn dense_apply(m: &CMatrix, psi: &StateVector) -> Vec<Complex64> {
    let v = DVector::from_column_slice(psi.amplitudes());
    (m * v).iter().copied().collect()
}

fn dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

#[test]
fn apply_basis_examples() {
    let psi = StateVector::zero(1).unwrap();
    let z = apply_hamiltonian(&ham(1, &[("Z", 1.0)]), &psi).unwrap();
    assert_eq!(z, psi.amplitudes());
    let x = apply_hamiltonian(&ham(1, &[("X", 1.0)]), &psi).unwrap();
    assert_eq!(x, StateVector::basis(1, 1).unwrap().amplitudes());
}

#[test]
fn apply_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..5 {
        let h = random_2local_chain(3, seed).unwrap();
        let psi = random_state(3, &mut rng);
        let ours = apply_hamiltonian(&h, &psi).unwrap();
        let oracle = dense_apply(to_dense(&h, &[0, 1, 2]).unwrap().matrix(), &psi);
        assert!(dist(&ours, &oracle) < 1e-12);
    }
}

#[test]
fn apply_rejects_size_mismatch() {
    let psi = StateVector::zero(2).unwrap();
    assert!(apply_hamiltonian(&ham(1, &[("Z", 1.0)]), &psi).is_err());
}

#[test]
fn evolve_examples() {
    let zero = StateVector::zero(1).unwrap();
    let out = evolve(&ham(1, &[("Z", 1.0)]), FRAC_PI_2, &zero, 1e-12).unwrap();
    assert!((out.fidelity(&zero) - 1.0).abs() < 1e-12);
    assert!((out.amplitudes()[0] - Complex64::new(0.0, -1.0)).norm() < 1e-10);

    let out = evolve(&ham(1, &[("X", 1.0)]), FRAC_PI_2, &zero, 1e-12).unwrap();
    assert!(out.amplitudes()[0].norm() < 1e-10);
    assert!((out.amplitudes()[1] - Complex64::new(0.0, -1.0)).norm() < 1e-10);
}

#[test]
fn evolve_matches_dense_expm() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for seed in 0..5 {
        let h = random_2local_chain(3, 100 + seed).unwrap();
        let psi = random_state(3, &mut rng);
        let out = evolve(&h, 0.3, &psi, 1e-12).unwrap();
        let u = dense_evolution(&h, 0.3).unwrap();
        let oracle = StateVector::normalized(dense_apply(u.matrix(), &psi)).unwrap();
        assert!(out.fidelity(&oracle) >= 1.0 - 1e-10);
        assert!(dist(out.amplitudes(), oracle.amplitudes()) < 1e-10);
    }
}

#[test]
fn evolve_preserves_norm_before_renormalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = random_2local_chain(6, 4).unwrap();
    let prop = Propagator::new(&h).unwrap();
    let mut psi = random_state(6, &mut rng);
    // Evolve with a loose tolerance; drift must stay inside 10 * tol.
    for _ in 0..5 {
        prop.evolve_in_place(&mut psi, 0.05, 1e-9).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn evolve_rejects_bad_tolerance() {
    let psi = StateVector::zero(1).unwrap();
    assert!(evolve(&ham(1, &[("X", 1.0)]), 0.1, &psi, 1e-3).is_err());
    assert!(evolve(&ham(1, &[("X", 1.0)]), 0.1, &psi, 0.0).is_err());
}

#[test]
fn evolve_is_linear_on_superpositions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = random_2local_chain(5, 8).unwrap();
    let a = random_state(5, &mut rng);
    let b = random_state(5, &mut rng);
    let (ca, cb) = (Complex64::new(0.6, 0.1), Complex64::new(-0.3, 0.7));
    let mix: Vec<Complex64> = a
        .amplitudes()
        .iter()
        .zip(b.amplitudes())
        .map(|(x, y)| ca * x + cb * y)
        .collect();
    let norm = mix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mixed = StateVector::normalized(mix).unwrap();
    let ea = evolve(&h, 0.2, &a, 1e-12).unwrap();
    let eb = evolve(&h, 0.2, &b, 1e-12).unwrap();
    let em = evolve(&h, 0.2, &mixed, 1e-12).unwrap();
    let expect: Vec<Complex64> = ea
        .amplitudes()
        .iter()
        .zip(eb.amplitudes())
        .map(|(x, y)| (ca * x + cb * y) / norm)
        .collect();
    assert!(dist(em.amplitudes(), &expect) < 1e-10);
}

#[test]
fn kicked_without_frozen_equals_evolve() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let h = random_2local_chain(4, 9).unwrap();
    let psi = random_state(4, &mut rng);
    let kicked = kicked_evolve(&h, &KickSpec::none(4), 0.2, 7, &psi, BackKick::Apply).unwrap();
    let plain = evolve(&h, 0.2, &psi, 1e-12).unwrap();
    assert!(dist(kicked.amplitudes(), plain.amplitudes()) < 1e-12);
}

#[test]
fn kicks_freeze_anticommuting_coupling() {
    let h = ham(2, &[("XX", 1.0)]);
    let kick = KickSpec::new(2, [1]).unwrap();
    let psi = StateVector::zero(2).unwrap();
    let out = kicked_evolve(&h, &kick, 0.1, 1000, &psi, BackKick::Elide).unwrap();
    assert!(out.probability(0) >= 1.0 - 1e-3);

    // Same situation via the dense product.
    let v = dense_sequence_unitary(&h, &kick, 0.1, 1000, BackKick::Elide).unwrap();
    let oracle = dense_apply(v.matrix(), &psi);
    assert!(dist(out.amplitudes(), &oracle) < 1e-9);
}

#[test]
fn commuting_kick_is_invisible() {
    let h = ham(2, &[("ZZ", 0.7), ("ZI", -0.2)]);
    let kick = KickSpec::new(2, [1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let psi = random_state(2, &mut rng);
    for r in [1, 2, 5, 10] {
        let out = kicked_evolve(&h, &kick, 0.4, r, &psi, BackKick::Apply).unwrap();
        let plain = evolve(&h, 0.4, &psi, 1e-12).unwrap();
        assert!(dist(out.amplitudes(), plain.amplitudes()) < 1e-12, "r = {r}");
    }
}

#[test]
fn odd_reps_with_elision_rejected() {
    let h = ham(2, &[("XX", 1.0)]);
    let kick = KickSpec::new(2, [1]).unwrap();
    let psi = StateVector::zero(2).unwrap();
    assert!(matches!(
        kicked_evolve(&h, &kick, 0.1, 3, &psi, BackKick::Elide),
        Err(crate::Error::Input(_))
    ));
    assert!(kicked_evolve(&h, &kick, 0.1, 0, &psi, BackKick::Apply).is_err());
}

#[test]
fn kicked_matches_dense_sequence_up_to_eight_qubits() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (n, frozen, r) in [(3usize, vec![1usize], 3usize), (5, vec![2], 4), (8, vec![2, 5], 10)] {
        let h = random_2local_chain(n, 40 + n as u64).unwrap();
        let kick = KickSpec::new(n, frozen).unwrap();
        let psi = random_state(n, &mut rng);
        let out = kicked_evolve(&h, &kick, 0.05, r, &psi, BackKick::Apply).unwrap();
        let v = dense_sequence_unitary(&h, &kick, 0.05, r, BackKick::Apply).unwrap();
        assert!(dist(out.amplitudes(), &dense_apply(v.matrix(), &psi)) < 1e-9, "n = {n}");
    }
}

#[test]
fn dense_sequence_converges_for_frozen_coupling() {
    let h = ham(2, &[("XX", 1.0)]);
    let kick = KickSpec::new(2, [1]).unwrap();
    let id = linalg::identity(4);
    let err = |r: usize| {
        let v = dense_sequence_unitary(&h, &kick, 1.0, r, BackKick::Apply).unwrap();
        linalg::op_norm(&(v.matrix() - &id))
    };
    // Z e^{-i XX t} Z = e^{+i XX t}: consecutive rounds cancel pairwise.
    for r in [4usize, 16, 64, 256] {
        assert!(err(r) < 1e-12, "r = {r}");
    }
    // Odd r leaves one uncancelled slice: V = exp(-i XX T/r).
    let odd: Vec<f64> = [5usize, 17, 65, 257].iter().map(|&r| err(r)).collect();
    assert!(odd.windows(2).all(|w| w[1] < w[0]), "{odd:?}");
    for (r, e) in [5.0f64, 17.0, 65.0, 257.0].iter().zip(&odd) {
        assert!((e - 2.0 * (0.5 / r).sin()).abs() < 1e-12, "r = {r}: {e}");
    }
}

#[test]
fn dense_sequence_size_cap() {
    let h = random_2local_chain(11, 0).unwrap();
    let kick = KickSpec::none(11);
    assert!(dense_sequence_unitary(&h, &kick, 0.1, 2, BackKick::Apply).is_err());
}

#[test]
fn trotter_without_coupling_is_exact() {
    let ising = IsingParams { h: 0.3, j: 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let psi = random_state(3, &mut rng);
    let out = trotter_kicked_evolve(&ising, &KickSpec::none(3), 1.0, 4, &psi, BackKick::Apply)
        .unwrap();
    // Product of single-qubit Z rotations.
    let expect: Vec<Complex64> = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(b, a)| a * Complex64::from_polar(1.0, -0.3 * (3.0 - 2.0 * b.count_ones() as f64)))
        .collect();
    assert!(dist(out.amplitudes(), &expect) < 1e-12);
}

#[test]
fn trotter_tracks_exact_evolution() {
    let ising = IsingParams { h: 0.125, j: 0.0625 };
    let h = ising.hamiltonian(3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let psi = random_state(3, &mut rng);
    let trot = trotter_kicked_evolve(&ising, &KickSpec::none(3), 1.0, 10, &psi, BackKick::Apply)
        .unwrap();
    let exact = evolve(&h, 1.0, &psi, 1e-12).unwrap();
    assert!(trot.fidelity(&exact) >= 0.999);
}

#[test]
fn trotter_kick_holds_frozen_qubit() {
    let ising = IsingParams { h: 0.125, j: 0.0625 };
    let kick = KickSpec::new(3, [1]).unwrap();
    let plus = [Complex64::new(0.5f64.sqrt(), 0.0); 2];
    let zero = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let psi = StateVector::product(&[plus, zero, plus]).unwrap();
    let out = trotter_kicked_evolve(&ising, &kick, 1.0, 10, &psi, BackKick::Elide).unwrap();
    let rho = reduced_density(&out, &[1]).unwrap();
    let target = CMatrix::from_row_slice(
        2,
        2,
        &[linalg::ONE, linalg::ZERO, linalg::ZERO, linalg::ZERO],
    );
    let trace_distance = 0.5 * linalg::trace_norm(&(rho.matrix() - target));
    assert!(trace_distance <= 0.05, "{trace_distance}");
}

#[test]
fn ising_params_round_trip() {
    let p = IsingParams { h: 0.125, j: 0.0625 };
    let h = p.hamiltonian(5).unwrap();
    assert_eq!(IsingParams::from_hamiltonian(&h).unwrap(), p);
    assert!(IsingParams::from_hamiltonian(&random_2local_chain(3, 1).unwrap()).is_err());
}

#[test]
fn reduced_density_examples() {
    let s = Complex64::new(0.5f64.sqrt(), 0.0);
    let zero = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let plus = [s, s];
    let psi = StateVector::product(&[plus, zero, zero]).unwrap();
    let rho = reduced_density(&psi, &[0, 1]).unwrap();
    let pz = StateVector::product(&[plus, zero]).unwrap();
    let v = DVector::from_column_slice(pz.amplitudes());
    assert!((rho.matrix() - &v * v.adjoint()).norm() < 1e-12);

    let bell = StateVector::normalized(vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    ])
    .unwrap();
    let half = reduced_density(&bell, &[0]).unwrap();
    assert!((half.matrix() - linalg::identity(2) * Complex64::new(0.5, 0.0)).norm() < 1e-12);
}

#[test]
fn reduced_density_matches_dense_partial_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let psi = random_state(4, &mut rng);
    let rho = reduced_density(&psi, &[1, 2]).unwrap();
    // Oracle: rho[a, a'] = sum over qubits 0 and 3 of psi psi*.
    let mut oracle = CMatrix::zeros(4, 4);
    for q0 in 0..2 {
        for q3 in 0..2 {
            for a in 0..4 {
                for ap in 0..4 {
                    let i = (q0 << 3) | (a << 1) | q3;
                    let j = (q0 << 3) | (ap << 1) | q3;
                    oracle[(a, ap)] += psi.amplitudes()[i] * psi.amplitudes()[j].conj();
                }
            }
        }
    }
    assert!((rho.matrix() - oracle).norm() < 1e-12);
    // Reversed order swaps tensor factors.
    let rev = reduced_density(&psi, &[2, 1]).unwrap();
    assert!((rev.matrix()[(1, 2)] - rho.matrix()[(2, 1)]).norm() < 1e-14);
}

#[test]
fn reduced_density_errors() {
    let psi = StateVector::zero(3).unwrap();
    assert!(reduced_density(&psi, &[3]).is_err());
    assert!(reduced_density(&psi, &[0, 0]).is_err());
    assert!(reduced_density(&psi, &[]).is_err());
}

#[test]
fn kick_spec_structure() {
    let k = KickSpec::new(6, [2, 5]).unwrap();
    assert_eq!(k.subspaces(), 2);
    assert_eq!(KickSpec::none(6).subspaces(), 1);
    assert_eq!(k.xi(), DEFAULT_XI);
    assert_eq!(k.mask(), 0b001001);
    let d = k.diagonal();
    assert_eq!(d[0], 1.0);
    assert_eq!(d[0b000001], -1.0);
    assert_eq!(d[0b001001], 1.0);
    assert!(KickSpec::new(3, [3]).is_err());
}
