//! Gate-level circuits over system qubits followed by ancillae.
//!
//! `Rz(t) = exp(-i t Z / 2)`. Controlled rotations apply `Rz` on the target
//! when every control is 1. Toffoli gates and tagged multi-controlled X gates
//! carry a pair id so compute/uncompute pairs are counted structurally.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{CMatrix, MAX_DENSE_QUBITS};
use crate::error::{HfError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Compute,
    Uncompute,
}

impl Role {
    fn flip(self) -> Role {
        match self {
            Role::Compute => Role::Uncompute,
            Role::Uncompute => Role::Compute,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairTag {
    pub id: u32,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    H(usize),
    S(usize),
    Sdg(usize),
    X(usize),
    Z(usize),
    Cnot {
        control: usize,
        target: usize,
    },
    Rz {
        target: usize,
        angle: f64,
    },
    CRz {
        control: usize,
        target: usize,
        angle: f64,
    },
    Mcx {
        controls: Vec<usize>,
        target: usize,
        tag: Option<PairTag>,
    },
    Mcrz {
        controls: Vec<usize>,
        target: usize,
        angle: f64,
    },
    Toffoli {
        controls: [usize; 2],
        target: usize,
        tag: PairTag,
    },
}

impl Gate {
    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate::Cnot { control, target }
    }

    /// Every qubit touched, controls first, target last.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::H(q) | Gate::S(q) | Gate::Sdg(q) | Gate::X(q) | Gate::Z(q) => vec![*q],
            Gate::Cnot { control, target } | Gate::CRz { control, target, .. } => {
                vec![*control, *target]
            }
            Gate::Rz { target, .. } => vec![*target],
            Gate::Mcx {
                controls, target, ..
            }
            | Gate::Mcrz {
                controls, target, ..
            } => {
                let mut v = controls.clone();
                v.push(*target);
                v
            }
            Gate::Toffoli {
                controls, target, ..
            } => vec![controls[0], controls[1], *target],
        }
    }

    pub fn is_clifford(&self) -> bool {
        matches!(
            self,
            Gate::H(_) | Gate::S(_) | Gate::Sdg(_) | Gate::X(_) | Gate::Z(_) | Gate::Cnot { .. }
        )
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self, Gate::Rz { .. } | Gate::CRz { .. } | Gate::Mcrz { .. })
    }

    /// Permutation gates acting classically on basis states.
    pub fn is_classical(&self) -> bool {
        matches!(
            self,
            Gate::X(_) | Gate::Cnot { .. } | Gate::Mcx { .. } | Gate::Toffoli { .. }
        )
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::S(q) => Gate::Sdg(*q),
            Gate::Sdg(q) => Gate::S(*q),
            Gate::Rz { target, angle } => Gate::Rz {
                target: *target,
                angle: -angle,
            },
            Gate::CRz {
                control,
                target,
                angle,
            } => Gate::CRz {
                control: *control,
                target: *target,
                angle: -angle,
            },
            Gate::Mcrz {
                controls,
                target,
                angle,
            } => Gate::Mcrz {
                controls: controls.clone(),
                target: *target,
                angle: -angle,
            },
            Gate::Mcx {
                controls,
                target,
                tag,
            } => Gate::Mcx {
                controls: controls.clone(),
                target: *target,
                tag: tag.map(|t| PairTag {
                    id: t.id,
                    role: t.role.flip(),
                }),
            },
            Gate::Toffoli {
                controls,
                target,
                tag,
            } => Gate::Toffoli {
                controls: *controls,
                target: *target,
                tag: PairTag {
                    id: tag.id,
                    role: tag.role.flip(),
                },
            },
            g => g.clone(),
        }
    }

    fn angle(&self) -> Option<f64> {
        match self {
            Gate::Rz { angle, .. } | Gate::CRz { angle, .. } | Gate::Mcrz { angle, .. } => {
                Some(*angle)
            }
            _ => None,
        }
    }

    fn kind(&self) -> String {
        match self {
            Gate::H(_) => "H".into(),
            Gate::S(_) => "S".into(),
            Gate::Sdg(_) => "SDG".into(),
            Gate::X(_) => "X".into(),
            Gate::Z(_) => "Z".into(),
            Gate::Cnot { .. } => "CNOT".into(),
            Gate::Rz { .. } => "RZ".into(),
            Gate::CRz { .. } => "CRZ".into(),
            Gate::Mcrz { .. } => "MCRZ".into(),
            Gate::Mcx { tag: None, .. } => "MCX".into(),
            Gate::Mcx { tag: Some(t), .. } => format!("MCX.{}{}", role_char(t.role), t.id),
            Gate::Toffoli { tag, .. } => format!("TOF.{}{}", role_char(tag.role), tag.id),
        }
    }

    fn validate(&self, n_total: usize) -> Result<()> {
        let qs = self.qubits();
        for &q in &qs {
            if q >= n_total {
                return Err(HfError::InvalidGate(format!(
                    "{} addresses qubit {q} of {n_total}",
                    self.kind()
                )));
            }
        }
        let target = *qs.last().expect("gate without qubits");
        if qs[..qs.len() - 1].contains(&target) {
            return Err(HfError::InvalidGate(format!(
                "{} control overlaps target {target}",
                self.kind()
            )));
        }
        let mut ctl = qs[..qs.len() - 1].to_vec();
        ctl.sort_unstable();
        ctl.dedup();
        if ctl.len() + 1 != qs.len() {
            return Err(HfError::InvalidGate(format!(
                "{} repeats a control",
                self.kind()
            )));
        }
        if let Some(a) = self.angle() {
            if !a.is_finite() {
                return Err(HfError::InvalidGate("non-finite angle".into()));
            }
        }
        Ok(())
    }
}

fn role_char(r: Role) -> char {
    match r {
        Role::Compute => 'c',
        Role::Uncompute => 'u',
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let qs: Vec<String> = self.qubits().iter().map(|q| q.to_string()).collect();
        write!(f, "{} {}", self.kind(), qs.join(","))?;
        if let Some(a) = self.angle() {
            write!(f, " {a:.15e}")?;
        }
        Ok(())
    }
}

/// Non-Clifford resource tally.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub rotations: usize,
    pub toffoli_pairs: usize,
    pub cnots: usize,
    pub other_cliffords: usize,
}

impl CostReport {
    pub fn pair(&self) -> (usize, usize) {
        (self.rotations, self.toffoli_pairs)
    }
}

impl Add for CostReport {
    type Output = CostReport;
    fn add(self, o: CostReport) -> CostReport {
        CostReport {
            rotations: self.rotations + o.rotations,
            toffoli_pairs: self.toffoli_pairs + o.toffoli_pairs,
            cnots: self.cnots + o.cnots,
            other_cliffords: self.other_cliffords + o.other_cliffords,
        }
    }
}

impl AddAssign for CostReport {
    fn add_assign(&mut self, o: CostReport) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_system: usize,
    n_ancilla: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_system: usize, n_ancilla: usize) -> Self {
        Circuit {
            n_system,
            n_ancilla,
            gates: Vec::new(),
        }
    }

    pub fn from_gates(n_system: usize, n_ancilla: usize, gates: Vec<Gate>) -> Result<Self> {
        let mut c = Circuit::new(n_system, n_ancilla);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, g: Gate) -> Result<()> {
        g.validate(self.n_total())?;
        self.gates.push(g);
        Ok(())
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<()> {
        for g in gates {
            self.push(g)?;
        }
        Ok(())
    }

    pub fn n_system(&self) -> usize {
        self.n_system
    }
    pub fn n_ancilla(&self) -> usize {
        self.n_ancilla
    }
    pub fn n_total(&self) -> usize {
        self.n_system + self.n_ancilla
    }
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }
    pub fn len(&self) -> usize {
        self.gates.len()
    }
    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn is_clifford(&self) -> bool {
        self.gates.iter().all(Gate::is_clifford)
    }

    /// Largest pair id in use, if any.
    pub fn max_pair_id(&self) -> Option<u32> {
        self.gates
            .iter()
            .filter_map(|g| match g {
                Gate::Toffoli { tag, .. } => Some(tag.id),
                Gate::Mcx { tag: Some(t), .. } => Some(t.id),
                _ => None,
            })
            .max()
    }

    /// Reversed gate list with each gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_system: self.n_system,
            n_ancilla: self.n_ancilla,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// `a` then `b`. Ancilla registers are shared, so the result has the
    /// larger of the two ancilla counts. Pair ids of `b` are shifted to stay
    /// distinct.
    pub fn concat(&self, b: &Circuit) -> Result<Circuit> {
        if self.n_system != b.n_system {
            return Err(HfError::SizeMismatch(self.n_system, b.n_system));
        }
        let shift = self.max_pair_id().map(|m| m + 1).unwrap_or(0);
        let mut gates = self.gates.clone();
        gates.extend(b.gates.iter().map(|g| shift_pair(g, shift)));
        Ok(Circuit {
            n_system: self.n_system,
            n_ancilla: self.n_ancilla.max(b.n_ancilla),
            gates,
        })
    }

    pub fn cost_report(&self) -> Result<CostReport> {
        let mut r = CostReport::default();
        // pair id -> (compute count, uncompute count, control count)
        let mut pairs: BTreeMap<u32, (usize, usize, usize)> = BTreeMap::new();
        for g in &self.gates {
            match g {
                Gate::H(_) | Gate::S(_) | Gate::Sdg(_) | Gate::X(_) | Gate::Z(_) => {
                    r.other_cliffords += 1
                }
                Gate::Cnot { .. } => r.cnots += 1,
                Gate::Rz { .. } | Gate::CRz { .. } => r.rotations += 1,
                Gate::Mcrz { controls, .. } => {
                    r.rotations += 1;
                    r.toffoli_pairs += controls.len().saturating_sub(1);
                }
                Gate::Mcx {
                    controls,
                    tag: None,
                    ..
                } => match controls.len() {
                    0 => r.other_cliffords += 1,
                    1 => r.cnots += 1,
                    k => r.toffoli_pairs += k - 1,
                },
                Gate::Mcx {
                    controls,
                    tag: Some(t),
                    ..
                } => {
                    let e = pairs.entry(t.id).or_insert((0, 0, controls.len()));
                    if e.2 != controls.len() {
                        return Err(HfError::UnmatchedToffoli(t.id));
                    }
                    match t.role {
                        Role::Compute => e.0 += 1,
                        Role::Uncompute => e.1 += 1,
                    }
                }
                Gate::Toffoli { tag, .. } => {
                    let e = pairs.entry(tag.id).or_insert((0, 0, 2));
                    if e.2 != 2 {
                        return Err(HfError::UnmatchedToffoli(tag.id));
                    }
                    match tag.role {
                        Role::Compute => e.0 += 1,
                        Role::Uncompute => e.1 += 1,
                    }
                }
            }
        }
        for (id, (c, u, k)) in pairs {
            if c != 1 || u != 1 {
                return Err(HfError::UnmatchedToffoli(id));
            }
            match k {
                0 => r.other_cliffords += 2,
                1 => r.cnots += 2,
                k => r.toffoli_pairs += k - 1,
            }
        }
        Ok(r)
    }

    /// One gate per line, `KIND q[,q...] [angle]`.
    pub fn dump(&self) -> String {
        let mut s = format!(
            "# system={} ancilla={}\n",
            self.n_system, self.n_ancilla
        );
        for g in &self.gates {
            s.push_str(&g.to_string());
            s.push('\n');
        }
        s
    }

    /// Applies the circuit to a state vector over all qubits.
    pub fn apply(&self, state: &mut [Complex64]) {
        let n = self.n_total();
        assert_eq!(state.len(), 1usize << n);
        for g in &self.gates {
            apply_gate(g, n, state);
        }
    }

    /// Full unitary over system and ancilla qubits.
    pub fn unitary(&self) -> Result<CMatrix> {
        let n = self.n_total();
        guard(n)?;
        let dim = 1usize << n;
        let mut m = CMatrix::zeros(dim, dim);
        let mut col = vec![Complex64::new(0.0, 0.0); dim];
        for b in 0..dim {
            col.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            col[b] = Complex64::new(1.0, 0.0);
            self.apply(&mut col);
            for (r, z) in col.iter().enumerate() {
                m[(r, b)] = *z;
            }
        }
        Ok(m)
    }

    /// Unitary on the system register with ancillae prepared in |0>.
    ///
    /// Fails when some basis input leaves ancilla amplitude behind (above
    /// `1e-10`).
    pub fn system_unitary(&self) -> Result<CMatrix> {
        let n = self.n_total();
        guard(n)?;
        let ns = self.n_system;
        let na = self.n_ancilla;
        let dim = 1usize << n;
        let sdim = 1usize << ns;
        let mut m = CMatrix::zeros(sdim, sdim);
        let mut col = vec![Complex64::new(0.0, 0.0); dim];
        for b in 0..sdim {
            col.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
            col[b << na] = Complex64::new(1.0, 0.0);
            self.apply(&mut col);
            let mut leak = 0.0;
            for (idx, z) in col.iter().enumerate() {
                if idx & ((1usize << na) - 1) == 0 {
                    m[(idx >> na, b)] = *z;
                } else {
                    leak += z.norm_sqr();
                }
            }
            if leak > 1e-20 {
                return Err(HfError::Verification(format!(
                    "ancilla not restored for basis input {b} (leak {leak:.3e})"
                )));
            }
        }
        Ok(m)
    }

    /// Replaces every multi-controlled gate by explicit Toffoli chains on
    /// freshly appended ancillae. Tagged compute/uncompute pairs keep their
    /// AND chain alive in between, so the pair count is unchanged.
    pub fn expand_multicontrolled(&self) -> Result<Circuit> {
        let base = self.n_total();
        let mut next_id = self.max_pair_id().map(|m| m + 1).unwrap_or(0);
        let mut free: Vec<usize> = Vec::new();
        let mut high = base;
        let mut alloc = |free: &mut Vec<usize>| -> usize {
            if let Some(q) = free.pop() {
                q
            } else {
                high += 1;
                high - 1
            }
        };
        // live tagged chains: id -> (ancillae, toffoli gates)
        let mut live: BTreeMap<u32, (Vec<usize>, Vec<Gate>)> = BTreeMap::new();
        let mut out: Vec<Gate> = Vec::new();
        for g in &self.gates {
            match g {
                Gate::Mcx {
                    controls,
                    target,
                    tag,
                } if controls.len() >= 2 => match tag {
                    None => {
                        let (anc, chain) =
                            and_chain(controls, &mut next_id, &mut || alloc(&mut free));
                        out.extend(chain.iter().cloned());
                        out.push(Gate::cnot(*anc.last().unwrap(), *target));
                        out.extend(chain.iter().rev().map(Gate::inverse));
                        free.extend(anc.into_iter().rev());
                    }
                    Some(t) => match t.role {
                        Role::Compute => {
                            let (anc, chain) =
                                and_chain(controls, &mut next_id, &mut || alloc(&mut free));
                            out.extend(chain.iter().cloned());
                            out.push(Gate::cnot(*anc.last().unwrap(), *target));
                            live.insert(t.id, (anc, chain));
                        }
                        Role::Uncompute => {
                            let (anc, chain) = live
                                .remove(&t.id)
                                .ok_or(HfError::UnmatchedToffoli(t.id))?;
                            out.push(Gate::cnot(*anc.last().unwrap(), *target));
                            out.extend(chain.iter().rev().map(Gate::inverse));
                            free.extend(anc.into_iter().rev());
                        }
                    },
                },
                Gate::Mcx {
                    controls, target, ..
                } if controls.len() == 1 => out.push(Gate::cnot(controls[0], *target)),
                Gate::Mcx { target, .. } if g.qubits().len() == 1 => out.push(Gate::X(*target)),
                Gate::Mcrz {
                    controls,
                    target,
                    angle,
                } => match controls.len() {
                    0 => out.push(Gate::Rz {
                        target: *target,
                        angle: *angle,
                    }),
                    1 => out.push(Gate::CRz {
                        control: controls[0],
                        target: *target,
                        angle: *angle,
                    }),
                    _ => {
                        let (anc, chain) =
                            and_chain(controls, &mut next_id, &mut || alloc(&mut free));
                        out.extend(chain.iter().cloned());
                        out.push(Gate::CRz {
                            control: *anc.last().unwrap(),
                            target: *target,
                            angle: *angle,
                        });
                        out.extend(chain.iter().rev().map(Gate::inverse));
                        free.extend(anc.into_iter().rev());
                    }
                },
                other => out.push(other.clone()),
            }
        }
        if let Some((&id, _)) = live.iter().next() {
            return Err(HfError::UnmatchedToffoli(id));
        }
        Circuit::from_gates(self.n_system, high - self.n_system, out)
    }
}

fn shift_pair(g: &Gate, shift: u32) -> Gate {
    match g {
        Gate::Toffoli {
            controls,
            target,
            tag,
        } => Gate::Toffoli {
            controls: *controls,
            target: *target,
            tag: PairTag {
                id: tag.id + shift,
                role: tag.role,
            },
        },
        Gate::Mcx {
            controls,
            target,
            tag: Some(t),
        } => Gate::Mcx {
            controls: controls.clone(),
            target: *target,
            tag: Some(PairTag {
                id: t.id + shift,
                role: t.role,
            }),
        },
        other => other.clone(),
    }
}

fn and_chain(
    controls: &[usize],
    next_id: &mut u32,
    alloc: &mut dyn FnMut() -> usize,
) -> (Vec<usize>, Vec<Gate>) {
    let mut anc = Vec::new();
    let mut gates = Vec::new();
    let mut prev = controls[0];
    for &c in &controls[1..] {
        let a = alloc();
        gates.push(Gate::Toffoli {
            controls: [prev, c],
            target: a,
            tag: PairTag {
                id: *next_id,
                role: Role::Compute,
            },
        });
        *next_id += 1;
        anc.push(a);
        prev = a;
    }
    (anc, gates)
}

/// Expands one multi-controlled X into an AND chain on ancillae starting at
/// `first_ancilla`, with `budget` ancillae available.
pub fn decompose_mcx(
    controls: &[usize],
    target: usize,
    n_system: usize,
    first_ancilla: usize,
    budget: usize,
) -> Result<Circuit> {
    let k = controls.len();
    if k == 0 {
        return Err(HfError::arg("MCX needs at least one control"));
    }
    let need = k - 1;
    if need > budget {
        return Err(HfError::AncillaBudget { need, have: budget });
    }
    let n_anc = first_ancilla + budget - n_system;
    let mut c = Circuit::new(n_system, n_anc);
    if k == 1 {
        c.push(Gate::cnot(controls[0], target))?;
        return Ok(c);
    }
    let mut next = first_ancilla;
    let mut id = 0;
    let (anc, chain) = and_chain(controls, &mut id, &mut || {
        next += 1;
        next - 1
    });
    c.extend(chain.iter().cloned())?;
    c.push(Gate::cnot(*anc.last().unwrap(), target))?;
    c.extend(chain.iter().rev().map(Gate::inverse))?;
    Ok(c)
}

fn guard(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(HfError::SizeGuard {
            what: "circuit",
            got: n,
            limit: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

#[inline]
fn bit(n: usize, q: usize) -> usize {
    1usize << (n - 1 - q)
}

fn controls_mask(n: usize, cs: &[usize]) -> usize {
    cs.iter().fold(0, |m, &q| m | bit(n, q))
}

fn apply_rz(state: &mut [Complex64], cmask: usize, t: usize, angle: f64) {
    let lo = Complex64::from_polar(1.0, -angle / 2.0);
    let hi = Complex64::from_polar(1.0, angle / 2.0);
    for (i, z) in state.iter_mut().enumerate() {
        if i & cmask == cmask {
            *z *= if i & t != 0 { hi } else { lo };
        }
    }
}

fn apply_x(state: &mut [Complex64], cmask: usize, t: usize) {
    for i in 0..state.len() {
        if i & t == 0 && i & cmask == cmask {
            state.swap(i, i | t);
        }
    }
}

/// Applies one gate to a dense state over `n` qubits.
pub fn apply_gate(g: &Gate, n: usize, state: &mut [Complex64]) {
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    match g {
        Gate::H(q) => {
            let t = bit(n, *q);
            for i in 0..state.len() {
                if i & t == 0 {
                    let (a, b) = (state[i], state[i | t]);
                    state[i] = (a + b) * s2;
                    state[i | t] = (a - b) * s2;
                }
            }
        }
        Gate::S(q) | Gate::Sdg(q) | Gate::Z(q) => {
            let t = bit(n, *q);
            let f = match g {
                Gate::S(_) => Complex64::new(0.0, 1.0),
                Gate::Sdg(_) => Complex64::new(0.0, -1.0),
                _ => Complex64::new(-1.0, 0.0),
            };
            for (i, z) in state.iter_mut().enumerate() {
                if i & t != 0 {
                    *z *= f;
                }
            }
        }
        Gate::X(q) => apply_x(state, 0, bit(n, *q)),
        Gate::Cnot { control, target } => apply_x(state, bit(n, *control), bit(n, *target)),
        Gate::Mcx {
            controls, target, ..
        } => apply_x(state, controls_mask(n, controls), bit(n, *target)),
        Gate::Toffoli {
            controls, target, ..
        } => apply_x(state, controls_mask(n, controls), bit(n, *target)),
        Gate::Rz { target, angle } => apply_rz(state, 0, bit(n, *target), *angle),
        Gate::CRz {
            control,
            target,
            angle,
        } => apply_rz(state, bit(n, *control), bit(n, *target), *angle),
        Gate::Mcrz {
            controls,
            target,
            angle,
        } => apply_rz(state, controls_mask(n, controls), bit(n, *target), *angle),
    }
}

/// Dense matrix of a single gate on `n` qubits.
pub fn gate_matrix(g: &Gate, n: usize) -> Result<CMatrix> {
    let c = Circuit::from_gates(n, 0, vec![g.clone()])?;
    c.unitary()
}
