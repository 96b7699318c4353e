//! Pauli strings as X/Z bitmasks with a phase in {+1, +i, -1, -i}.
//!
//! Qubit 1 is the leftmost letter and maps to bit 0 of both masks. In dense
//! matrices and state vectors qubit 1 is the most significant tensor factor.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{CMatrix, MAX_DENSE_QUBITS};
use crate::error::{HfError, Result};

/// Largest register a `PauliString` can describe.
pub const MAX_QUBITS: usize = 64;

/// A power of the imaginary unit, `i^k` with `k` taken mod 4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// `+1.0` or `-1.0` for real phases.
    pub fn sign(self) -> Option<f64> {
        match self.0 {
            0 => Some(1.0),
            2 => Some(-1.0),
            _ => None,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl std::ops::Neg for Phase {
    type Output = Phase;
    fn neg(self) -> Phase {
        Phase((self.0 + 2) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        })
    }
}

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// An n-qubit Pauli operator `phase * P_1 ⊗ ... ⊗ P_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: Phase,
}

fn full_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliString {
            n,
            x: 0,
            z: 0,
            phase: Phase::ONE,
        }
    }

    /// Builds a string from raw masks. Bits at or above `n` are rejected.
    pub fn from_masks(n: usize, x: u64, z: u64, phase: Phase) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(HfError::arg(format!("qubit count {n} out of range")));
        }
        let m = full_mask(n);
        if x & !m != 0 || z & !m != 0 {
            return Err(HfError::arg("mask bits beyond qubit count"));
        }
        Ok(PauliString { n, x, z, phase })
    }

    /// A single non-identity letter on qubit `q` (0-based).
    pub fn single(n: usize, q: usize, letter: Letter) -> Self {
        assert!(q < n);
        let (xb, zb) = letter.bits();
        PauliString {
            n,
            x: (xb as u64) << q,
            z: (zb as u64) << q,
            phase: Phase::ONE,
        }
    }

    /// Z on every qubit set in `mask`.
    pub fn z_string(n: usize, mask: u64) -> Self {
        PauliString {
            n,
            x: 0,
            z: mask & full_mask(n),
            phase: Phase::ONE,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }
    pub fn x_mask(&self) -> u64 {
        self.x
    }
    pub fn z_mask(&self) -> u64 {
        self.z
    }
    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    /// Same letters with phase +1.
    pub fn unsigned(self) -> Self {
        self.with_phase(Phase::ONE)
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn letter(&self, q: usize) -> Letter {
        Letter::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn letters(&self) -> String {
        (0..self.n).map(|q| self.letter(q).as_char()).collect()
    }

    /// Symplectic commutation test.
    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        if self.n != other.n {
            return Err(HfError::SizeMismatch(self.n, other.n));
        }
        Ok(self.commutes_unchecked(other))
    }

    #[inline]
    pub fn commutes_unchecked(&self, other: &PauliString) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones().is_multiple_of(2)
    }

    /// Operator product `self * other`.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.n != other.n {
            return Err(HfError::SizeMismatch(self.n, other.n));
        }
        // sigma(a) sigma(b) = i^g sigma(a xor b), summed over qubits.
        let mut g: i64 = 0;
        let mut bits = self.support() | other.support();
        while bits != 0 {
            let q = bits.trailing_zeros();
            bits &= bits - 1;
            let (x1, z1) = ((self.x >> q & 1) as i64, (self.z >> q & 1) as i64);
            let (x2, z2) = ((other.x >> q & 1) as i64, (other.z >> q & 1) as i64);
            g += match (x1, z1) {
                (0, 0) => 0,
                (1, 1) => z2 - x2,
                (1, 0) => z2 * (2 * x2 - 1),
                _ => x2 * (1 - 2 * z2),
            };
        }
        Ok(PauliString {
            n: self.n,
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase: self.phase * other.phase * Phase::from_power(g),
        })
    }

    /// Action on computational basis states in the dense ordering.
    pub fn basis_action(&self) -> BasisAction {
        let xb = reverse_bits(self.x, self.n);
        let zb = reverse_bits(self.z, self.n);
        let k = self.phase.power() as i64 + (self.x & self.z).count_ones() as i64;
        BasisAction {
            flip: xb,
            zmask: zb,
            coef: Phase::from_power(k).to_complex(),
        }
    }

    /// Dense `2^n x 2^n` matrix.
    pub fn to_dense(&self) -> Result<CMatrix> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(HfError::SizeGuard {
                what: "Pauli string",
                got: self.n,
                limit: MAX_DENSE_QUBITS,
            });
        }
        let dim = 1usize << self.n;
        let act = self.basis_action();
        let mut m = CMatrix::zeros(dim, dim);
        for b in 0..dim {
            let (row, amp) = act.apply(b);
            m[(row, b)] = amp;
        }
        Ok(m)
    }
}

/// `P|b> = coef * (-1)^{|zmask & b|} |b ^ flip>`.
#[derive(Debug, Clone, Copy)]
pub struct BasisAction {
    pub flip: usize,
    pub zmask: usize,
    pub coef: Complex64,
}

impl BasisAction {
    #[inline]
    pub fn apply(&self, b: usize) -> (usize, Complex64) {
        let s = if (self.zmask & b).count_ones() % 2 == 1 {
            -self.coef
        } else {
            self.coef
        };
        (b ^ self.flip, s)
    }
}

/// Maps qubit-ordered mask bits to dense basis-index bits.
pub fn reverse_bits(mask: u64, n: usize) -> usize {
    if n == 0 {
        return 0;
    }
    (mask.reverse_bits() >> (64 - n)) as usize
}

/// Parses a bare letter string such as `XYYX`.
pub fn parse_pauli(text: &str) -> Result<PauliString> {
    parse_letters(text, 1, 1)
}

fn parse_letters(text: &str, line: usize, col0: usize) -> Result<PauliString> {
    let n = text.chars().count();
    if n == 0 {
        return Err(HfError::Parse {
            line,
            column: col0,
            message: "empty Pauli string".into(),
        });
    }
    if n > MAX_QUBITS {
        return Err(HfError::Parse {
            line,
            column: col0,
            message: format!("more than {MAX_QUBITS} qubits"),
        });
    }
    let mut p = PauliString::identity(n);
    for (q, c) in text.chars().enumerate() {
        let l = Letter::from_char(c).ok_or_else(|| HfError::Parse {
            line,
            column: col0 + q,
            message: format!("invalid Pauli letter {c:?}"),
        })?;
        let (xb, zb) = l.bits();
        p.x |= (xb as u64) << q;
        p.z |= (zb as u64) << q;
    }
    Ok(p)
}

impl fmt::Display for PauliString {
    /// Letters, prefixed by `-`, `i` or `-i` when the phase is not +1.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase.power() {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}{}", self.letters())
    }
}

impl FromStr for PauliString {
    type Err = HfError;

    /// Inverse of `Display`: optional `+`, `-`, `i`, `-i`, `+i` prefix.
    fn from_str(s: &str) -> Result<Self> {
        let (phase, rest, skip) = if let Some(r) = s.strip_prefix("-i") {
            (Phase::MINUS_I, r, 2)
        } else if let Some(r) = s.strip_prefix("+i") {
            (Phase::I, r, 2)
        } else if let Some(r) = s.strip_prefix('i') {
            (Phase::I, r, 1)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, r, 1)
        } else if let Some(r) = s.strip_prefix('+') {
            (Phase::ONE, r, 1)
        } else {
            (Phase::ONE, s, 0)
        };
        Ok(parse_letters(rest, 1, 1 + skip)?.with_phase(phase))
    }
}
