//! Weighted Pauli sums and commuting fragments.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dense::{CMatrix, MAX_DENSE_QUBITS};
use crate::error::{HfError, Result};
use crate::pauli::{parse_pauli, PauliString};

/// Coefficients below this magnitude are dropped after merging.
pub const ZERO_COEFF: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub pauli: PauliString,
}

/// `sum_j coeff_j P_j` with real coefficients and unit-phase Paulis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    n: usize,
    terms: Vec<Term>,
}

impl Hamiltonian {
    /// Merges duplicates (first-appearance order) and folds any real Pauli
    /// phase into the coefficient.
    pub fn new(n: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut out: Vec<Term> = Vec::new();
        for (c, p) in terms {
            if p.n_qubits() != n {
                return Err(HfError::SizeMismatch(n, p.n_qubits()));
            }
            if !c.is_finite() {
                return Err(HfError::arg("non-finite coefficient"));
            }
            let s = p
                .phase()
                .sign()
                .ok_or_else(|| HfError::arg("imaginary Pauli phase in a Hermitian sum"))?;
            let key = (p.x_mask(), p.z_mask());
            match index.get(&key) {
                Some(&i) => out[i].coeff += s * c,
                None => {
                    index.insert(key, out.len());
                    out.push(Term {
                        coeff: s * c,
                        pauli: p.unsigned(),
                    });
                }
            }
        }
        out.retain(|t| t.coeff.abs() >= ZERO_COEFF);
        Ok(Hamiltonian { n, terms: out })
    }

    pub fn empty(n: usize) -> Self {
        Hamiltonian { n, terms: vec![] }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms excluding the identity.
    pub fn non_identity(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter().filter(|t| !t.pauli.is_identity())
    }

    pub fn identity_coeff(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.pauli.is_identity())
            .map(|t| t.coeff)
            .sum()
    }

    /// Coefficient of a given Pauli (0 when absent).
    pub fn coeff_of(&self, p: &PauliString) -> f64 {
        self.terms
            .iter()
            .find(|t| t.pauli.x_mask() == p.x_mask() && t.pauli.z_mask() == p.z_mask())
            .map(|t| t.coeff)
            .unwrap_or(0.0)
    }

    /// `sum |coeff|` over non-identity terms.
    pub fn one_norm(&self) -> f64 {
        self.non_identity().map(|t| t.coeff.abs()).sum()
    }

    /// The same operator without its identity component.
    pub fn without_identity(&self) -> Hamiltonian {
        Hamiltonian {
            n: self.n,
            terms: self.non_identity().copied().collect(),
        }
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(HfError::SizeGuard {
                what: "Hamiltonian",
                got: self.n,
                limit: MAX_DENSE_QUBITS,
            });
        }
        let dim = 1usize << self.n;
        let mut m = CMatrix::zeros(dim, dim);
        for t in &self.terms {
            let act = t.pauli.basis_action();
            for b in 0..dim {
                let (row, amp) = act.apply(b);
                m[(row, b)] += amp * t.coeff;
            }
        }
        Ok(m)
    }

    /// Text form accepted by [`parse_hamiltonian`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.terms {
            s.push_str(&format!("{} {}\n", t.coeff, t.pauli.letters()));
        }
        s
    }
}

impl fmt::Display for Hamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Parses `<float> <PAULI>` lines; `#` starts a comment.
pub fn parse_hamiltonian(text: &str) -> Result<Hamiltonian> {
    let mut n: Option<usize> = None;
    let mut terms = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        if body.trim().is_empty() {
            continue;
        }
        let mut parts = body.split_whitespace();
        let coeff_tok = parts.next().unwrap_or("");
        let pauli_tok = parts.next().ok_or_else(|| HfError::Parse {
            line: line_no,
            column: body.len() + 1,
            message: "missing Pauli string".into(),
        })?;
        if let Some(extra) = parts.next() {
            return Err(HfError::Parse {
                line: line_no,
                column: body.find(extra).unwrap_or(0) + 1,
                message: format!("unexpected token {extra:?}"),
            });
        }
        let coeff: f64 = coeff_tok.parse().map_err(|_| HfError::Parse {
            line: line_no,
            column: body.find(coeff_tok).unwrap_or(0) + 1,
            message: format!("malformed coefficient {coeff_tok:?}"),
        })?;
        if !coeff.is_finite() {
            return Err(HfError::Parse {
                line: line_no,
                column: 1,
                message: "non-finite coefficient".into(),
            });
        }
        let col = body.find(pauli_tok).unwrap_or(0) + 1;
        let p = parse_pauli(pauli_tok).map_err(|e| match e {
            HfError::Parse { column, message, .. } => HfError::Parse {
                line: line_no,
                column: col + column - 1,
                message,
            },
            other => other,
        })?;
        match n {
            None => n = Some(p.n_qubits()),
            Some(k) if k != p.n_qubits() => {
                return Err(HfError::Parse {
                    line: line_no,
                    column: col,
                    message: format!("length {} differs from {}", p.n_qubits(), k),
                })
            }
            _ => {}
        }
        terms.push((coeff, p));
    }
    let n = n.ok_or_else(|| HfError::Parse {
        line: 0,
        column: 0,
        message: "no terms".into(),
    })?;
    Hamiltonian::new(n, terms)
}

/// `scale * sum_i unit_i P_i` over pairwise commuting Paulis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub scale: f64,
    pub paulis: Vec<(f64, PauliString)>,
    pub label: String,
}

impl Fragment {
    pub fn new(
        label: impl Into<String>,
        scale: f64,
        paulis: Vec<(f64, PauliString)>,
    ) -> Result<Self> {
        let f = Fragment {
            scale,
            paulis,
            label: label.into(),
        };
        f.check_commuting()?;
        Ok(f)
    }

    /// Single-Pauli fragment with unit coefficient.
    pub fn single(label: impl Into<String>, coeff: f64, p: PauliString) -> Self {
        Fragment {
            scale: coeff,
            paulis: vec![(1.0, p.unsigned())],
            label: label.into(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.paulis.first().map(|(_, p)| p.n_qubits()).unwrap_or(0)
    }

    pub fn check_commuting(&self) -> Result<()> {
        let n = self.n_qubits();
        for (i, (_, a)) in self.paulis.iter().enumerate() {
            if a.n_qubits() != n {
                return Err(HfError::SizeMismatch(n, a.n_qubits()));
            }
            for (_, b) in &self.paulis[i + 1..] {
                if !a.commutes_unchecked(b) {
                    return Err(HfError::NonCommuting(a.to_string(), b.to_string()));
                }
            }
        }
        Ok(())
    }

    /// Effective coefficients `scale * unit_i`.
    pub fn terms(&self) -> impl Iterator<Item = (f64, PauliString)> + '_ {
        self.paulis.iter().map(move |&(u, p)| (self.scale * u, p))
    }

    /// `|scale| * sum |unit_i|`, identity members excluded.
    pub fn one_norm(&self) -> f64 {
        self.scale.abs()
            * self
                .paulis
                .iter()
                .filter(|(_, p)| !p.is_identity())
                .map(|(u, _)| u.abs())
                .sum::<f64>()
    }

    /// Sum of effective coefficient magnitudes (the single-term 1-norm).
    pub fn term_norm(&self) -> f64 {
        self.terms()
            .filter(|(_, p)| !p.is_identity())
            .map(|(c, _)| c.abs())
            .sum()
    }

    /// Folds a negative scale into the unit coefficients.
    pub fn normalized(&self) -> Fragment {
        if self.scale >= 0.0 {
            return self.clone();
        }
        Fragment {
            scale: -self.scale,
            paulis: self.paulis.iter().map(|&(u, p)| (-u, p)).collect(),
            label: self.label.clone(),
        }
    }

    pub fn to_hamiltonian(&self) -> Result<Hamiltonian> {
        Hamiltonian::new(self.n_qubits(), self.terms())
    }

    pub fn len(&self) -> usize {
        self.paulis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paulis.is_empty()
    }
}
