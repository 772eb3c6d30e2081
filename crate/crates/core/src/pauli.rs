//! Single-qubit Pauli letters and Pauli strings.
//!
//! Strings are stored as one letter per qubit. Qubit 0 is the leftmost letter
//! and the most significant tensor factor everywhere in this crate, so the
//! computational-basis index of qubit `q` in an `n`-qubit register is bit
//! `n - 1 - q`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn is_identity(self) -> bool {
        self == Pauli::I
    }

    /// True for letters that flip the computational basis (X and Y).
    pub fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// Has a Z component in the symplectic `X^x Z^z` picture (Y and Z).
    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Y | Pauli::Z)
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            other => Err(Error::input(format!("not a Pauli letter: {other:?}"))),
        }
    }

    /// The 2x2 matrix, row-major.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }

    /// Product `self * other` as (phase, letter).
    pub fn mul(self, other: Pauli) -> (Phase, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (Phase::ONE, p),
            (a, b) if a == b => (Phase::ONE, I),
            (X, Y) => (Phase::I, Z),
            (Y, Z) => (Phase::I, X),
            (Z, X) => (Phase::I, Y),
            (Y, X) => (Phase::MINUS_I, Z),
            (Z, Y) => (Phase::MINUS_I, X),
            (X, Z) => (Phase::MINUS_I, Y),
            _ => unreachable!(),
        }
    }
}

/// A power of `i`, stored as quarter turns mod 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn quarter_turns(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    ops: Vec<Pauli>,
}

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Self {
        Self { ops }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            ops: vec![Pauli::I; n],
        }
    }

    /// String with the given letters at the given sites and identity elsewhere.
    pub fn from_sparse(n: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut ops = vec![Pauli::I; n];
        for &(q, p) in sites {
            if q >= n {
                return Err(Error::input(format!("qubit {q} out of range for {n} qubits")));
            }
            ops[q] = p;
        }
        Ok(Self { ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn get(&self, q: usize) -> Pauli {
        self.ops[q]
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|p| p.is_identity())
    }

    /// Qubits carrying a non-identity letter, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_identity())
            .map(|(q, _)| q)
            .collect()
    }

    pub fn weight(&self) -> usize {
        self.ops.iter().filter(|p| !p.is_identity()).count()
    }

    /// Bit masks `(x, z)` in register order (qubit 0 is the top bit).
    pub fn masks(&self) -> (usize, usize) {
        let n = self.ops.len();
        let mut x = 0usize;
        let mut z = 0usize;
        for (q, p) in self.ops.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            if p.flips() {
                x |= bit;
            }
            if p.has_z() {
                z |= bit;
            }
        }
        (x, z)
    }

    pub fn y_count(&self) -> usize {
        self.ops.iter().filter(|&&p| p == Pauli::Y).count()
    }

    /// `i^(number of Y letters)`, so that `P|b> = y_phase * (-1)^|b & z| |b ^ x>`.
    pub fn y_phase(&self) -> Phase {
        Phase((self.y_count() % 4) as u8)
    }

    /// Letters at the given qubits, in that order.
    pub fn restrict(&self, qubits: &[usize]) -> PauliString {
        PauliString::new(qubits.iter().map(|&q| self.ops[q]).collect())
    }

    /// Product `self * other` as a phase times a Pauli string.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        if self.len() != other.len() {
            return Err(Error::input(format!(
                "length mismatch in Pauli product: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        let mut phase = Phase::ONE;
        let ops = self
            .ops
            .iter()
            .zip(&other.ops)
            .map(|(&a, &b)| {
                let (ph, p) = a.mul(b);
                phase = phase * ph;
                p
            })
            .collect();
        Ok((phase, PauliString { ops }))
    }

    pub fn commutes(&self, other: &PauliString) -> bool {
        let anti = self
            .ops
            .iter()
            .zip(&other.ops)
            .filter(|(a, b)| !a.is_identity() && !b.is_identity() && a != b)
            .count();
        anti % 2 == 0
    }

    /// Whether the string commutes with the product of Z over `frozen`.
    ///
    /// Qubits in `frozen` beyond the string length are ignored.
    pub fn commutes_with_kick(&self, frozen: &BTreeSet<usize>) -> bool {
        frozen
            .iter()
            .filter(|&&q| q < self.ops.len() && self.ops[q].flips())
            .count()
            % 2
            == 0
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.ops {
            write!(f, "{}", p.to_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s.chars().map(Pauli::from_char).collect::<Result<Vec<_>>>()?;
        if ops.is_empty() {
            return Err(Error::input("empty Pauli string"));
        }
        Ok(Self { ops })
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
