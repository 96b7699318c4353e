//! Clifford conjugation of Pauli strings by symplectic updates.

use crate::circuit::{Circuit, Gate};
use crate::error::{HfError, Result};
use crate::pauli::{Letter, Phase, PauliString};

/// `g P g^†` for one Clifford gate.
pub fn conjugate_gate(g: &Gate, p: &PauliString) -> Result<PauliString> {
    let n = p.n_qubits();
    let (mut x, mut z, mut ph) = (p.x_mask(), p.z_mask(), p.phase());
    match *g {
        Gate::Cnot { control, target } => {
            if control >= n || target >= n {
                return Err(HfError::InvalidGate(format!("CNOT outside {n} qubits")));
            }
            // X^x Z^z maps to X^x' Z^z' without sign; only the Y bookkeeping
            // i^{|x&z|} changes.
            let before = (x & z).count_ones() as i64;
            x ^= (x >> control & 1) << target;
            z ^= (z >> target & 1) << control;
            let after = (x & z).count_ones() as i64;
            ph = ph * Phase::from_power(before - after);
        }
        Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) | Gate::Z(q) => {
            if q >= n {
                return Err(HfError::InvalidGate(format!("gate on qubit {q} of {n}")));
            }
            let l = p.letter(q);
            let (nl, neg) = match (g, l) {
                (_, Letter::I) => (Letter::I, false),
                (Gate::H(_), Letter::X) => (Letter::Z, false),
                (Gate::H(_), Letter::Z) => (Letter::X, false),
                (Gate::H(_), Letter::Y) => (Letter::Y, true),
                (Gate::S(_), Letter::X) => (Letter::Y, false),
                (Gate::S(_), Letter::Y) => (Letter::X, true),
                (Gate::Sdg(_), Letter::X) => (Letter::Y, true),
                (Gate::Sdg(_), Letter::Y) => (Letter::X, false),
                (Gate::S(_) | Gate::Sdg(_), Letter::Z) => (Letter::Z, false),
                (Gate::X(_), Letter::X) => (Letter::X, false),
                (Gate::X(_), other) => (other, true),
                (Gate::Z(_), Letter::Z) => (Letter::Z, false),
                (Gate::Z(_), other) => (other, true),
                _ => unreachable!(),
            };
            let (xb, zb) = nl.bits();
            x = (x & !(1 << q)) | ((xb as u64) << q);
            z = (z & !(1 << q)) | ((zb as u64) << q);
            if neg {
                ph = -ph;
            }
        }
        _ => return Err(HfError::NonClifford(g.to_string())),
    }
    PauliString::from_masks(n, x, z, ph)
}

/// `W P W^†` where `W` is the unitary of the gate list (first gate applied
/// first).
pub fn tableau_conjugate(w: &Circuit, p: &PauliString) -> Result<PauliString> {
    conjugate_gates(w.gates(), p)
}

pub fn conjugate_gates(gates: &[Gate], p: &PauliString) -> Result<PauliString> {
    let mut q = *p;
    for g in gates {
        q = conjugate_gate(g, &q)?;
    }
    Ok(q)
}

/// `W^† P W`.
pub fn tableau_conjugate_adjoint(w: &Circuit, p: &PauliString) -> Result<PauliString> {
    let mut q = *p;
    for g in w.gates().iter().rev() {
        q = conjugate_gate(&g.inverse(), &q)?;
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::parse_pauli;

    #[test]
    fn hadamard_maps_z_to_x() {
        let w = Circuit::from_gates(1, 0, vec![Gate::H(0)]).unwrap();
        let p = tableau_conjugate(&w, &parse_pauli("Z").unwrap()).unwrap();
        assert_eq!(p.to_string(), "X");
    }

    #[test]
    fn ghz_style_diagonalizer() {
        // H on qubit 1, then CNOTs fanning out: ZIII -> XXXX.
        let w = Circuit::from_gates(
            4,
            0,
            vec![
                Gate::H(0),
                Gate::cnot(0, 3),
                Gate::cnot(0, 2),
                Gate::cnot(0, 1),
            ],
        )
        .unwrap();
        let p = tableau_conjugate(&w, &parse_pauli("ZIII").unwrap()).unwrap();
        assert_eq!(p.to_string(), "XXXX");
    }

    #[test]
    fn rotation_rejected() {
        let w = Circuit::from_gates(
            1,
            0,
            vec![Gate::Rz {
                target: 0,
                angle: 0.1,
            }],
        )
        .unwrap();
        assert!(tableau_conjugate(&w, &parse_pauli("X").unwrap()).is_err());
    }
}
