//! Diagonalizing Clifford circuits for commuting Pauli sets.
//!
//! A [`Diagonalization`] stores `W` and signed Z-strings with
//! `P_i = W (sign_i Z^{y_i}) W^†`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{HfError, Result};
use crate::hamiltonian::Fragment;
use crate::pauli::{parse_pauli, Letter, Phase, PauliString};
use crate::tableau::{conjugate_gate, tableau_conjugate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedZString {
    pub z_mask: u64,
    pub sign: i8,
    pub source_index: usize,
    /// Power of `sqrt(-1)` in front of the conjugated Z-string.
    pub phase_prefactor: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagonalization {
    pub w: Circuit,
    /// Effective coefficient of the source term and its Z-string image.
    pub zterms: Vec<(f64, SignedZString)>,
    /// Library group whose circuit was used, if any.
    pub group: Option<LibraryGroup>,
}

impl Diagonalization {
    pub fn n_qubits(&self) -> usize {
        self.w.n_system()
    }
}

/// Hand-built diagonalizers for the double-excitation families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LibraryGroup {
    GBase,
    G1y,
    G1x1,
    G1x2,
    G21,
    G201,
    G202,
    G3y,
    G3x1,
    G3x2,
}

impl LibraryGroup {
    pub const ALL: [LibraryGroup; 10] = [
        LibraryGroup::GBase,
        LibraryGroup::G1y,
        LibraryGroup::G1x1,
        LibraryGroup::G1x2,
        LibraryGroup::G21,
        LibraryGroup::G201,
        LibraryGroup::G202,
        LibraryGroup::G3y,
        LibraryGroup::G3x1,
        LibraryGroup::G3x2,
    ];

    pub fn n_qubits(self) -> usize {
        match self {
            LibraryGroup::GBase => 4,
            LibraryGroup::G1y | LibraryGroup::G1x1 | LibraryGroup::G1x2 => 7,
            LibraryGroup::G21 | LibraryGroup::G201 | LibraryGroup::G202 => 6,
            LibraryGroup::G3y | LibraryGroup::G3x1 | LibraryGroup::G3x2 => 5,
        }
    }

    /// Member Paulis with their labels (`a*` acts on the first block,
    /// `b*` on the shifted block).
    pub fn members(self) -> Vec<(&'static str, PauliString)> {
        let n = self.n_qubits();
        let at = |label: &'static str, s: &str, off: usize| {
            let mut full = "I".repeat(off);
            full.push_str(s);
            full.push_str(&"I".repeat(n - off - s.len()));
            (label, parse_pauli(&full).expect("static Pauli"))
        };
        match self {
            LibraryGroup::GBase => BASE
                .iter()
                .zip(A_LABELS)
                .map(|(s, l)| at(l, s, 0))
                .collect(),
            LibraryGroup::G1y => vec![
                at("a3", "YXXY", 0),
                at("a5", "XYXY", 0),
                at("a6", "XXYY", 0),
                at("a7", "YYYY", 0),
                at("b1", "YYXX", 3),
                at("b2", "YXYX", 3),
                at("b3", "YXXY", 3),
                at("b7", "YYYY", 3),
            ],
            LibraryGroup::G1x1 => vec![
                at("a0", "XXXX", 0),
                at("a1", "YYXX", 0),
                at("a2", "YXYX", 0),
                at("a4", "XYYX", 0),
            ],
            LibraryGroup::G1x2 => vec![
                at("b0", "XXXX", 3),
                at("b4", "XYYX", 3),
                at("b5", "XYXY", 3),
                at("b6", "XXYY", 3),
            ],
            LibraryGroup::G21 => vec![
                at("a2", "YXYX", 0),
                at("a3", "YXXY", 0),
                at("a4", "XYYX", 0),
                at("a5", "XYXY", 0),
                at("b2", "YXYX", 2),
                at("b3", "XYYX", 2),
                at("b4", "YXXY", 2),
                at("b5", "XYXY", 2),
            ],
            LibraryGroup::G201 => vec![
                at("a0", "XXXX", 0),
                at("a1", "YYXX", 0),
                at("a6", "XXYY", 0),
                at("a7", "YYYY", 0),
            ],
            LibraryGroup::G202 => vec![
                at("b0", "XXXX", 2),
                at("b6", "YYXX", 2),
                at("b1", "XXYY", 2),
                at("b7", "YYYY", 2),
            ],
            LibraryGroup::G3y => vec![
                at("a1", "YYXX", 0),
                at("a2", "YXYX", 0),
                at("a3", "YXXY", 0),
                at("a7", "YYYY", 0),
                at("b3", "YXXY", 1),
                at("b5", "XYXY", 1),
                at("b6", "XXYY", 1),
                at("b7", "YYYY", 1),
            ],
            LibraryGroup::G3x1 => vec![
                at("a0", "XXXX", 0),
                at("a4", "XYYX", 0),
                at("a5", "XYXY", 0),
                at("a6", "XXYY", 0),
            ],
            LibraryGroup::G3x2 => vec![
                at("b0", "XXXX", 1),
                at("b1", "YYXX", 1),
                at("b2", "YXYX", 1),
                at("b4", "XYYX", 1),
            ],
        }
    }

    /// The diagonalizing circuit, gate list in application order.
    pub fn circuit(self) -> Circuit {
        let n = self.n_qubits();
        // Products are written leftmost-last; `prod` reverses them.
        let cx = |c: usize, ts: &[usize]| -> Vec<Gate> {
            ts.iter().map(|&t| Gate::cnot(c, t)).collect()
        };
        let ops: Vec<Vec<Gate>> = match self {
            LibraryGroup::GBase => vec![cx(0, &[1]), cx(0, &[2]), cx(0, &[3]), vec![Gate::H(0)]],
            LibraryGroup::G1y => vec![
                cx(3, &[0, 1, 2]),
                vec![Gate::H(3)],
                vec![Gate::Z(3)],
                cx(3, &[0, 1, 2]),
                cx(3, &[4, 5, 6]),
                vec![Gate::H(3)],
                cx(3, &[0, 1, 2]),
            ],
            LibraryGroup::G1x1 => vec![cx(3, &[0]), cx(3, &[1]), cx(3, &[2]), vec![Gate::H(3)]],
            LibraryGroup::G1x2 => vec![cx(3, &[4]), cx(3, &[5]), cx(3, &[6]), vec![Gate::H(3)]],
            LibraryGroup::G21 => W1_CORRECTED.iter().map(|o| o.to_gates()).collect(),
            LibraryGroup::G201 => vec![cx(2, &[0]), cx(2, &[1]), cx(2, &[3]), vec![Gate::H(2)]],
            LibraryGroup::G202 => vec![cx(2, &[3]), cx(2, &[4]), cx(2, &[5]), vec![Gate::H(2)]],
            LibraryGroup::G3y => vec![
                cx(1, &[0, 2, 3]),
                vec![Gate::H(1)],
                vec![Gate::Z(1)],
                cx(1, &[0, 4]),
                vec![Gate::H(1)],
                cx(1, &[0]),
            ],
            LibraryGroup::G3x1 => vec![cx(1, &[0, 2, 3]), vec![Gate::H(1)]],
            LibraryGroup::G3x2 => vec![cx(1, &[2, 3, 4]), vec![Gate::H(1)]],
        };
        let gates: Vec<Gate> = ops.into_iter().rev().flatten().collect();
        Circuit::from_gates(n, 0, gates).expect("library circuit")
    }

    /// Z-strings and `sqrt(-1)` prefactors stated for each member: returns
    /// `(member index, z_mask, prefactor)`.
    pub fn stated_images(self) -> Vec<(usize, u64, Phase)> {
        let members = self.members();
        let mut out = Vec::new();
        for (idx, (label, p)) in members.iter().enumerate() {
            let bit = |q: usize| 1u64 << q;
            // P_0 = X, P_1 = Y: the index is the z bit of the letter.
            let e = |q: usize| p.z_mask() >> q & 1;
            let (mask, power) = match self {
                LibraryGroup::GBase => {
                    let m = bit(0) | e(1) << 1 | e(2) << 2 | e(3) << 3;
                    let y = p.z_mask().count_ones() as i64;
                    // XXXX..YYYY: sign + for 0 or 4 Y letters, - otherwise.
                    (m, if y % 4 == 0 { 0 } else { 2 })
                }
                LibraryGroup::G1y => {
                    if label.starts_with('a') {
                        let (i, j, k) = (e(0), e(1), e(2));
                        (i | j << 1 | k << 2 | bit(3), (i + j + k + 1) as i64)
                    } else {
                        let (a, b, c) = (e(4), e(5), e(6));
                        (bit(3) | a << 4 | b << 5 | c << 6, (a + b + c + 1) as i64)
                    }
                }
                LibraryGroup::G21 => {
                    if label.starts_with('a') {
                        let (k, l, i, j) = (e(0), e(1), e(2), e(3));
                        (k | l << 1 | bit(2) | j << 3, (i + j + k + l) as i64)
                    } else {
                        let (i, j, k, l) = (e(2), e(3), e(4), e(5));
                        (bit(2) | j << 3 | k << 4 | l << 5, (i + j + k + l) as i64)
                    }
                }
                LibraryGroup::G3y => {
                    if label.starts_with('a') {
                        let (i, j, k) = (e(1), e(2), e(3));
                        (bit(0) | bit(1) | j << 2 | k << 3, (i + j + k + 1) as i64)
                    } else {
                        let (i, j, k) = (e(1), e(2), e(3));
                        (bit(1) | j << 2 | k << 3 | bit(4), (i + j + k + 1) as i64)
                    }
                }
                _ => continue,
            };
            out.push((idx, mask, Phase::from_power(power)));
        }
        out
    }
}

impl fmt::Display for LibraryGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LibraryGroup::GBase => "G_base",
            LibraryGroup::G1y => "G1y",
            LibraryGroup::G1x1 => "G1x1",
            LibraryGroup::G1x2 => "G1x2",
            LibraryGroup::G21 => "G21",
            LibraryGroup::G201 => "G201",
            LibraryGroup::G202 => "G202",
            LibraryGroup::G3y => "G3y",
            LibraryGroup::G3x1 => "G3x1",
            LibraryGroup::G3x2 => "G3x2",
        };
        f.write_str(s)
    }
}

const BASE: [&str; 8] = [
    "XXXX", "YYXX", "YXYX", "YXXY", "XYYX", "XYXY", "XXYY", "YYYY",
];
const A_LABELS: [&str; 8] = ["a0", "a1", "a2", "a3", "a4", "a5", "a6", "a7"];

/// One factor of a printed gate product.
#[derive(Debug, Clone, Copy)]
pub enum Factor {
    Cx(usize, &'static [usize]),
    H(usize),
    Z(usize),
}

impl Factor {
    fn to_gates(self) -> Vec<Gate> {
        match self {
            Factor::Cx(c, ts) => ts.iter().map(|&t| Gate::cnot(c, t)).collect(),
            Factor::H(q) => vec![Gate::H(q)],
            Factor::Z(q) => vec![Gate::Z(q)],
        }
    }
}

/// Printed form of the two-overlap diagonalizer (0-based qubits).
pub const W1_PRINTED: [Factor; 8] = [
    Factor::Cx(2, &[0]),
    Factor::Cx(2, &[3]),
    Factor::H(2),
    Factor::Z(2),
    Factor::Cx(2, &[0]),
    Factor::Cx(2, &[4]),
    Factor::H(2),
    Factor::Cx(2, &[0]),
];

/// Working reading: the single-target CNOTs fan out to both neighbours of
/// the pivot on each side.
pub const W1_CORRECTED: [Factor; 8] = [
    Factor::Cx(2, &[0, 1]),
    Factor::Cx(2, &[3]),
    Factor::H(2),
    Factor::Z(2),
    Factor::Cx(2, &[0, 1]),
    Factor::Cx(2, &[4, 5]),
    Factor::H(2),
    Factor::Cx(2, &[0, 1]),
];

/// Builds a circuit from a printed product (rightmost factor first).
pub fn circuit_from_product(n: usize, factors: &[Factor]) -> Circuit {
    let gates: Vec<Gate> = factors.iter().rev().flat_map(|f| f.to_gates()).collect();
    Circuit::from_gates(n, 0, gates).expect("product circuit")
}

/// Library circuit lookup.
pub fn library_diagonalizer(group: LibraryGroup) -> Circuit {
    group.circuit()
}

/// Checks a group's stated conjugation identities. Returns the failures as
/// `(label, expected, got)`.
pub fn check_library_theorem(
    group: LibraryGroup,
    w: &Circuit,
) -> Result<Vec<(String, String, String)>> {
    let members = group.members();
    let n = group.n_qubits();
    let mut bad = Vec::new();
    for (idx, mask, pre) in group.stated_images() {
        let z = PauliString::z_string(n, mask).with_phase(pre);
        let got = tableau_conjugate(w, &z)?;
        let (label, want) = members[idx];
        if got != want {
            bad.push((label.to_string(), want.to_string(), got.to_string()));
        }
    }
    Ok(bad)
}

/// Signed Z-string images of `paulis` under `W^†(.)W`, failing when some
/// member is not mapped to a real-signed Z-string.
fn images(w: &Circuit, paulis: &[(f64, PauliString)], idx: &[usize]) -> Result<Vec<(f64, SignedZString)>> {
    let inv = w.inverse();
    let mut out = Vec::new();
    for &i in idx {
        let (c, p) = paulis[i];
        let d = tableau_conjugate(&inv, &p)?;
        if !d.is_diagonal() {
            return Err(HfError::Synthesis(format!("{p} is not diagonalized")));
        }
        let s = d
            .phase()
            .sign()
            .ok_or_else(|| HfError::Synthesis(format!("{p} maps to an imaginary phase")))?;
        out.push((
            c,
            SignedZString {
                z_mask: d.z_mask(),
                sign: s as i8,
                source_index: i,
                phase_prefactor: d.phase(),
            },
        ));
    }
    Ok(out)
}

/// Library groups whose member set contains every Pauli in `frag`,
/// returned as blocks `(group, member indices)`.
pub fn match_library(frag: &Fragment) -> Option<Vec<(LibraryGroup, Vec<usize>)>> {
    if frag.len() < 2 {
        return None;
    }
    let n = frag.n_qubits();
    let keys: Vec<(u64, u64)> = frag
        .paulis
        .iter()
        .map(|(_, p)| (p.x_mask(), p.z_mask()))
        .collect();
    let joint: [&[LibraryGroup]; 7] = [
        &[LibraryGroup::GBase],
        &[LibraryGroup::G1y],
        &[LibraryGroup::G1x1, LibraryGroup::G1x2],
        &[LibraryGroup::G21],
        &[LibraryGroup::G201, LibraryGroup::G202],
        &[LibraryGroup::G3y],
        &[LibraryGroup::G3x1, LibraryGroup::G3x2],
    ];
    for family in joint {
        if family[0].n_qubits() != n {
            continue;
        }
        let sets: Vec<HashSet<(u64, u64)>> = family
            .iter()
            .map(|g| {
                g.members()
                    .iter()
                    .map(|(_, p)| (p.x_mask(), p.z_mask()))
                    .collect()
            })
            .collect();
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new(); family.len()];
        let mut ok = true;
        for (i, k) in keys.iter().enumerate() {
            match sets.iter().position(|s| s.contains(k)) {
                Some(b) => blocks[b].push(i),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Some(
                family
                    .iter()
                    .zip(blocks)
                    .filter(|(_, b)| !b.is_empty())
                    .map(|(g, b)| (*g, b))
                    .collect(),
            );
        }
    }
    None
}

/// Diagonalizes a commuting fragment as one or more independent blocks.
///
/// Library circuits are used when the fragment lies inside a known group;
/// the split groups come back as two blocks. Anything else goes through
/// [`generic_diagonalize`].
pub fn diagonalize(frag: &Fragment) -> Result<Vec<Diagonalization>> {
    frag.check_commuting()?;
    if let Some(blocks) = match_library(frag) {
        let mut out = Vec::new();
        for (g, idx) in blocks {
            let w = g.circuit();
            out.push(Diagonalization {
                zterms: images(&w, &effective(frag), &idx)?,
                w,
                group: Some(g),
            });
        }
        return Ok(out);
    }
    if let Some(d) = local_diagonalize(frag)? {
        return Ok(vec![d]);
    }
    Ok(vec![generic_diagonalize(frag)?])
}

/// Per-qubit basis change when every qubit carries at most one distinct
/// non-identity letter across the fragment: `H` for X, `H` then `S` for Y.
pub fn local_diagonalize(frag: &Fragment) -> Result<Option<Diagonalization>> {
    let n = frag.n_qubits();
    let mut letter = vec![None; n];
    for (_, p) in &frag.paulis {
        for (q, slot) in letter.iter_mut().enumerate() {
            let l = p.letter(q);
            if l == Letter::I {
                continue;
            }
            match slot {
                None => *slot = Some(l),
                Some(prev) if *prev != l => return Ok(None),
                _ => {}
            }
        }
    }
    let mut gates = Vec::new();
    for (q, l) in letter.iter().enumerate() {
        match l {
            Some(Letter::X) => gates.push(Gate::H(q)),
            Some(Letter::Y) => {
                gates.push(Gate::H(q));
                gates.push(Gate::S(q));
            }
            _ => {}
        }
    }
    let w = Circuit::from_gates(n, 0, gates)?;
    let terms = effective(frag);
    let idx: Vec<usize> = (0..terms.len()).collect();
    Ok(Some(Diagonalization {
        zterms: images(&w, &terms, &idx)?,
        w,
        group: None,
    }))
}

fn effective(frag: &Fragment) -> Vec<(f64, PauliString)> {
    frag.terms().collect()
}

/// Symplectic elimination: each member with an X part picks its lowest
/// X qubit as pivot, CNOTs clear the other X bits, `S` removes a Y on the
/// pivot, controlled-Z (as `H CNOT H`) clears Z bits and a final `H` turns
/// the pivot into Z.
pub fn generic_diagonalize(frag: &Fragment) -> Result<Diagonalization> {
    frag.check_commuting()?;
    let n = frag.n_qubits();
    let terms = effective(frag);
    let mut cur: Vec<PauliString> = terms.iter().map(|(_, p)| *p).collect();
    let mut v: Vec<Gate> = Vec::new();
    let apply = |g: Gate, cur: &mut Vec<PauliString>, v: &mut Vec<Gate>| -> Result<()> {
        for p in cur.iter_mut() {
            *p = conjugate_gate(&g, p)?;
        }
        v.push(g);
        Ok(())
    };
    for i in 0..cur.len() {
        if cur[i].x_mask() == 0 {
            continue;
        }
        let q = cur[i].x_mask().trailing_zeros() as usize;
        let xs = cur[i].x_mask() & !(1u64 << q);
        for j in bits(xs) {
            apply(Gate::cnot(q, j), &mut cur, &mut v)?;
        }
        if cur[i].z_mask() >> q & 1 == 1 {
            apply(Gate::S(q), &mut cur, &mut v)?;
        }
        let zs = cur[i].z_mask() & !(1u64 << q);
        for j in bits(zs) {
            apply(Gate::H(j), &mut cur, &mut v)?;
            apply(Gate::cnot(q, j), &mut cur, &mut v)?;
            apply(Gate::H(j), &mut cur, &mut v)?;
        }
        apply(Gate::H(q), &mut cur, &mut v)?;
        debug_assert!(cur[i].is_diagonal() && cur[i].weight() == 1);
    }
    let vc = Circuit::from_gates(n, 0, v)?;
    let w = vc.inverse();
    let idx: Vec<usize> = (0..terms.len()).collect();
    Ok(Diagonalization {
        zterms: images(&w, &terms, &idx)?,
        w,
        group: None,
    })
}

fn bits(mut m: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let q = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(q)
        }
    })
}

/// Outcome of [`verify_diagonalization`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagReport {
    pub ok: bool,
    pub mismatches: Vec<String>,
}

/// Tableau check that every zterm conjugates back to its fragment term,
/// sign and coefficient included, and that every term is covered once.
pub fn verify_diagonalization(blocks: &[Diagonalization], frag: &Fragment) -> DiagReport {
    let terms = effective(frag);
    let mut seen = vec![0usize; terms.len()];
    let mut mismatches = Vec::new();
    for d in blocks {
        for (c, z) in &d.zterms {
            let Some(&(want_c, want_p)) = terms.get(z.source_index) else {
                mismatches.push(format!("zterm points at missing term {}", z.source_index));
                continue;
            };
            seen[z.source_index] += 1;
            let zs = PauliString::z_string(d.n_qubits(), z.z_mask)
                .with_phase(if z.sign < 0 { Phase::MINUS_ONE } else { Phase::ONE });
            match tableau_conjugate(&d.w, &zs) {
                Ok(p) if p == want_p => {}
                Ok(p) => mismatches.push(format!(
                    "term {}: expected {want_p}, got {p}",
                    z.source_index
                )),
                Err(e) => mismatches.push(format!("term {}: {e}", z.source_index)),
            }
            if (c - want_c).abs() > 1e-12 * want_c.abs().max(1.0) {
                mismatches.push(format!(
                    "term {}: coefficient {c} vs {want_c}",
                    z.source_index
                ));
            }
        }
    }
    for (i, s) in seen.iter().enumerate() {
        if *s != 1 {
            mismatches.push(format!("term {i} covered {s} times"));
        }
    }
    DiagReport {
        ok: mismatches.is_empty(),
        mismatches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_z_needs_no_gates() {
        let f = Fragment::single("z", 1.0, parse_pauli("ZZZ").unwrap());
        let d = generic_diagonalize(&f).unwrap();
        assert!(d.w.is_empty());
        assert_eq!(d.zterms[0].1.z_mask, 0b111);
    }

    #[test]
    fn base_group_images() {
        let g = LibraryGroup::GBase;
        let f = Fragment::new(
            "base",
            1.0,
            g.members().iter().map(|(_, p)| (1.0, *p)).collect(),
        )
        .unwrap();
        let blocks = diagonalize(&f).unwrap();
        assert_eq!(blocks.len(), 1);
        let masks: Vec<u64> = blocks[0].zterms.iter().map(|(_, z)| z.z_mask).collect();
        // ZIII, ZZII, ZIZI, ZIIZ, ZZZI, ZZIZ, ZIZZ, ZZZZ
        assert_eq!(masks, vec![0b0001, 0b0011, 0b0101, 0b1001, 0b0111, 0b1011, 0b1101, 0b1111]);
        let signs: Vec<i8> = blocks[0].zterms.iter().map(|(_, z)| z.sign).collect();
        assert_eq!(signs, vec![1, -1, -1, -1, -1, -1, -1, 1]);
    }
}
