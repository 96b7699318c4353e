//! Diagonal phase functions and their generic two-ancilla synthesis.
//!
//! A phase table holds `phi(x)` so that the diagonal operator is
//! `sum_x e^{i phi(x)} |x><x|`. Bit `i` of an assignment is the value of
//! qubit `i`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, PairTag, Role};
use crate::error::{HfError, Result};

/// Phase tables above this many variables are refused.
pub const MAX_TABLE_VARS: usize = 20;
/// Absolute snap-to-zero threshold.
pub const PHASE_ZERO: f64 = 1e-12;
/// Relative tolerance for merging magnitudes.
pub const MAGNITUDE_RTOL: f64 = 1e-9;

/// One diagonal term `coeff * sign * (-1)^{mask . x}` with `coeff`
/// already multiplied by time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseTerm {
    pub coeff: f64,
    pub z_mask: u64,
    pub sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTable {
    n: usize,
    values: Vec<f64>,
}

impl PhaseTable {
    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: u64) -> f64 {
        self.values[x as usize]
    }

    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != 1usize << n {
            return Err(HfError::arg("phase table length is not 2^n"));
        }
        Ok(PhaseTable { n, values })
    }
}

/// Exhaustive evaluation of `phi(x) = sum coeff * sign * (-1)^{mask . x}`.
pub fn phase_table(n: usize, terms: &[PhaseTerm]) -> Result<PhaseTable> {
    if n > MAX_TABLE_VARS {
        return Err(HfError::SizeGuard {
            what: "phase table",
            got: n,
            limit: MAX_TABLE_VARS,
        });
    }
    let dim = 1usize << n;
    let mut values = vec![0.0; dim];
    for t in terms {
        if t.z_mask >> n != 0 && n < 64 {
            return Err(HfError::arg("z mask exceeds table width"));
        }
        let c = t.coeff * t.sign as f64;
        for (x, v) in values.iter_mut().enumerate() {
            if (t.z_mask & x as u64).count_ones() % 2 == 1 {
                *v -= c;
            } else {
                *v += c;
            }
        }
    }
    for v in values.iter_mut() {
        if v.abs() < PHASE_ZERO {
            *v = 0.0;
        }
    }
    Ok(PhaseTable { n, values })
}

/// A ternary cube over `n` variables: bits in `care` are fixed to `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub n: usize,
    pub care: u64,
    pub value: u64,
}

impl Cube {
    pub fn minterm(n: usize, x: u64) -> Self {
        Cube {
            n,
            care: full(n),
            value: x,
        }
    }

    pub fn contains(&self, x: u64) -> bool {
        x & self.care == self.value
    }

    pub fn literals(&self) -> u32 {
        self.care.count_ones()
    }

    /// All assignments in the cube.
    pub fn expand(&self) -> Vec<u64> {
        let free: Vec<usize> = (0..self.n).filter(|i| self.care >> i & 1 == 0).collect();
        (0..1u64 << free.len())
            .map(|k| {
                let mut x = self.value;
                for (j, &b) in free.iter().enumerate() {
                    x |= (k >> j & 1) << b;
                }
                x
            })
            .collect()
    }

    pub fn intersects(&self, o: &Cube) -> bool {
        let both = self.care & o.care;
        self.value & both == o.value & both
    }

    /// Disjoint cubes covering `self \ o`.
    pub fn sharp(&self, o: &Cube) -> Vec<Cube> {
        if !self.intersects(o) {
            return vec![*self];
        }
        let mut out = Vec::new();
        let mut cur = *self;
        let extra = o.care & !self.care;
        for b in 0..self.n {
            if extra >> b & 1 == 0 {
                continue;
            }
            let ob = o.value >> b & 1;
            out.push(Cube {
                n: cur.n,
                care: cur.care | 1 << b,
                value: cur.value | (ob ^ 1) << b,
            });
            cur.care |= 1 << b;
            cur.value |= ob << b;
        }
        out
    }

    /// Parses a string such as `0*11` (leftmost = variable 0).
    pub fn parse(s: &str) -> Result<Cube> {
        let n = s.len();
        let mut c = Cube {
            n,
            care: 0,
            value: 0,
        };
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => c.care |= 1 << i,
                '1' => {
                    c.care |= 1 << i;
                    c.value |= 1 << i
                }
                '*' | '-' => {}
                _ => return Err(HfError::arg(format!("bad cube character {ch:?}"))),
            }
        }
        Ok(c)
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            let ch = if self.care >> i & 1 == 0 {
                '*'
            } else if self.value >> i & 1 == 1 {
                '1'
            } else {
                '0'
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}

fn full(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Assignments with phase `+theta` (`pos`) and `-theta` (`neg`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MintermCover {
    pub n: usize,
    pub theta: f64,
    pub pos: Vec<Cube>,
    pub neg: Vec<Cube>,
}

impl MintermCover {
    pub fn expand_pos(&self) -> BTreeSet<u64> {
        self.pos.iter().flat_map(|c| c.expand()).collect()
    }

    pub fn expand_neg(&self) -> BTreeSet<u64> {
        self.neg.iter().flat_map(|c| c.expand()).collect()
    }
}

/// One cover per distinct nonzero `|phi|`, largest first. Magnitudes within
/// a relative `1e-9` are merged.
pub fn distinct_magnitudes(pt: &PhaseTable) -> Vec<MintermCover> {
    let mut mags: Vec<f64> = pt
        .values
        .iter()
        .map(|v| v.abs())
        .filter(|&a| a > PHASE_ZERO)
        .collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut reps: Vec<f64> = Vec::new();
    for a in mags {
        match reps.last() {
            Some(&r) if r - a <= MAGNITUDE_RTOL * r => {}
            _ => reps.push(a),
        }
    }
    let mut covers: Vec<MintermCover> = reps
        .iter()
        .map(|&theta| MintermCover {
            n: pt.n,
            theta,
            pos: vec![],
            neg: vec![],
        })
        .collect();
    for (x, &v) in pt.values.iter().enumerate() {
        let a = v.abs();
        if a <= PHASE_ZERO {
            continue;
        }
        let k = reps
            .iter()
            .position(|&r| (r - a).abs() <= MAGNITUDE_RTOL * r)
            .expect("magnitude bucket");
        let c = Cube::minterm(pt.n, x as u64);
        if v > 0.0 {
            covers[k].pos.push(c);
        } else {
            covers[k].neg.push(c);
        }
    }
    covers
}

/// Prime implicants of a minterm set by iterated merging.
pub fn prime_implicants(n: usize, minterms: &[u64]) -> Vec<Cube> {
    let mut current: BTreeSet<Cube> = minterms.iter().map(|&x| Cube::minterm(n, x)).collect();
    let mut primes: BTreeSet<Cube> = BTreeSet::new();
    while !current.is_empty() {
        let list: Vec<Cube> = current.iter().copied().collect();
        let mut used = vec![false; list.len()];
        let mut next: BTreeSet<Cube> = BTreeSet::new();
        for i in 0..list.len() {
            for j in i + 1..list.len() {
                let (a, b) = (list[i], list[j]);
                if a.care != b.care {
                    continue;
                }
                let d = a.value ^ b.value;
                if d.count_ones() == 1 {
                    next.insert(Cube {
                        n,
                        care: a.care & !d,
                        value: a.value & !d,
                    });
                    used[i] = true;
                    used[j] = true;
                }
            }
        }
        for (i, c) in list.iter().enumerate() {
            if !used[i] {
                primes.insert(*c);
            }
        }
        current = next;
    }
    primes.into_iter().collect()
}

/// Essential primes first, then greedy by coverage (fewest literals on
/// ties, then cube order).
pub fn select_cover(minterms: &[u64], primes: &[Cube]) -> Vec<Cube> {
    let mut uncovered: BTreeSet<u64> = minterms.iter().copied().collect();
    let mut chosen: Vec<Cube> = Vec::new();
    for &m in minterms {
        let covering: Vec<&Cube> = primes.iter().filter(|p| p.contains(m)).collect();
        if covering.len() == 1 && !chosen.contains(covering[0]) {
            chosen.push(*covering[0]);
        }
    }
    for c in &chosen {
        uncovered.retain(|&m| !c.contains(m));
    }
    while !uncovered.is_empty() {
        let best = primes
            .iter()
            .filter(|p| !chosen.contains(p))
            .max_by(|a, b| {
                let ca = uncovered.iter().filter(|&&m| a.contains(m)).count();
                let cb = uncovered.iter().filter(|&&m| b.contains(m)).count();
                ca.cmp(&cb)
                    .then(b.literals().cmp(&a.literals()))
                    .then(b.cmp(a))
            })
            .copied()
            .expect("primes cover all minterms");
        uncovered.retain(|&m| !best.contains(m));
        chosen.push(best);
    }
    chosen.sort();
    chosen
}

fn qm(n: usize, cubes: &[Cube]) -> Vec<Cube> {
    let minterms: Vec<u64> = cubes
        .iter()
        .flat_map(|c| c.expand())
        .collect::<BTreeSet<u64>>()
        .into_iter()
        .collect();
    if minterms.is_empty() {
        return vec![];
    }
    let primes = prime_implicants(n, &minterms);
    select_cover(&minterms, &primes)
}

/// Quine–McCluskey reduction applied to both sign classes.
pub fn compress_minterms(cover: &MintermCover) -> MintermCover {
    MintermCover {
        n: cover.n,
        theta: cover.theta,
        pos: qm(cover.n, &cover.pos),
        neg: qm(cover.n, &cover.neg),
    }
}

/// Rewrites overlapping cubes as a disjoint union.
pub fn disjoint_cubes(cubes: &[Cube]) -> Vec<Cube> {
    let mut out: Vec<Cube> = Vec::new();
    for c in cubes {
        let mut pieces = vec![*c];
        for d in &out {
            pieces = pieces.iter().flat_map(|p| p.sharp(d)).collect();
        }
        out.extend(pieces);
    }
    out
}

/// Generic synthesis: per cover, multi-controlled X gates route `M_theta`
/// onto ancilla `a1` and `M_-theta` onto `a2`, `CNOT(a2 -> a1)` merges
/// them, one `CRz(a1 -> a2)` applies the phase, and the compute part is
/// mirrored. Variables map to qubits through `var_qubits`; the two
/// ancillae follow the `n_system` system qubits.
pub fn synthesize_phase_circuit_on(
    n_system: usize,
    var_qubits: &[usize],
    covers: &[MintermCover],
) -> Result<Circuit> {
    let a1 = n_system;
    let a2 = n_system + 1;
    let mut c = Circuit::new(n_system, 2);
    let mut next_id = 0u32;
    for cover in covers {
        if cover.pos.is_empty() && cover.neg.is_empty() {
            continue;
        }
        if let Some((q, angle)) = single_literal(cover, var_qubits) {
            c.push(Gate::Rz {
                target: q,
                angle,
            })?;
            continue;
        }
        let mut compute: Vec<Gate> = Vec::new();
        for (cubes, anc) in [(&cover.pos, a1), (&cover.neg, a2)] {
            for cube in disjoint_cubes(cubes) {
                let mut controls = Vec::new();
                let mut flips = Vec::new();
                for v in 0..cube.n {
                    if cube.care >> v & 1 == 1 {
                        controls.push(var_qubits[v]);
                        if cube.value >> v & 1 == 0 {
                            flips.push(var_qubits[v]);
                        }
                    }
                }
                compute.extend(flips.iter().map(|&q| Gate::X(q)));
                if controls.is_empty() {
                    compute.push(Gate::X(anc));
                } else {
                    compute.push(Gate::Mcx {
                        controls,
                        target: anc,
                        tag: Some(PairTag {
                            id: next_id,
                            role: Role::Compute,
                        }),
                    });
                    next_id += 1;
                }
                compute.extend(flips.iter().map(|&q| Gate::X(q)));
            }
        }
        compute.push(Gate::cnot(a2, a1));
        c.extend(compute.iter().cloned())?;
        c.push(Gate::CRz {
            control: a1,
            target: a2,
            angle: -2.0 * cover.theta,
        })?;
        c.extend(compute.iter().rev().map(Gate::inverse))?;
    }
    Ok(c)
}

/// Identity variable map.
pub fn synthesize_phase_circuit(n_system: usize, covers: &[MintermCover]) -> Result<Circuit> {
    let map: Vec<usize> = (0..n_system).collect();
    synthesize_phase_circuit_on(n_system, &map, covers)
}

/// A cover split by a single literal becomes a bare `Rz`.
fn single_literal(cover: &MintermCover, var_qubits: &[usize]) -> Option<(usize, f64)> {
    if cover.pos.len() != 1 || cover.neg.len() != 1 {
        return None;
    }
    let (p, m) = (cover.pos[0], cover.neg[0]);
    if p.literals() != 1 || p.care != m.care || p.value == m.value {
        return None;
    }
    let v = p.care.trailing_zeros() as usize;
    let b = p.value >> v & 1;
    let angle = if b == 0 {
        -2.0 * cover.theta
    } else {
        2.0 * cover.theta
    };
    Some((var_qubits[v], angle))
}

/// CNOT change of variables making `phi` depend only on pivot qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct ParityReduction {
    pub pivots: Vec<usize>,
    pub cnots: Vec<(usize, usize)>,
    /// Masks rewritten over pivot positions (bit `r` = pivot `r`).
    pub reduced: Vec<u64>,
}

/// Row-reduces the masks; non-pivot qubits are XORed into the pivots.
pub fn parity_reduction(n: usize, masks: &[u64]) -> ParityReduction {
    // Reduced row echelon basis with pivot = lowest set bit.
    let mut rows: Vec<u64> = Vec::new();
    for &m in masks {
        let mut v = m;
        for &r in &rows {
            if v >> r.trailing_zeros() & 1 == 1 {
                v ^= r;
            }
        }
        if v != 0 {
            let p = v.trailing_zeros();
            for r in rows.iter_mut() {
                if *r >> p & 1 == 1 {
                    *r ^= v;
                }
            }
            rows.push(v);
        }
    }
    rows.sort_by_key(|r| r.trailing_zeros());
    let pivots: Vec<usize> = rows.iter().map(|r| r.trailing_zeros() as usize).collect();
    let mut cnots = Vec::new();
    for r in &rows {
        let p = r.trailing_zeros() as usize;
        for q in 0..n {
            if q != p && r >> q & 1 == 1 {
                cnots.push((q, p));
            }
        }
    }
    // y . x = sum_j c_j (b_j . x), so the reduced mask holds c_j.
    let reduced = masks
        .iter()
        .map(|&m| {
            let mut out = 0u64;
            for (j, &p) in pivots.iter().enumerate() {
                if m >> p & 1 == 1 {
                    out |= 1 << j;
                }
            }
            out
        })
        .collect();
    ParityReduction {
        pivots,
        cnots,
        reduced,
    }
}

/// Generic synthesis of `e^{i phi}` for a Z-term phase function on
/// `n_system` qubits, with parity reduction and minterm compression.
pub fn synthesize_phase(n_system: usize, terms: &[PhaseTerm]) -> Result<Circuit> {
    synthesize_reduced(n_system, terms, |pt| Ok(pt.clone()))
}

/// As [`synthesize_phase`], after subtracting the constant that leaves the
/// fewest distinct magnitudes. Exact up to a global phase.
pub fn synthesize_phase_shifted(n_system: usize, terms: &[PhaseTerm]) -> Result<Circuit> {
    synthesize_reduced(n_system, terms, |pt| {
        let mut best = (distinct_magnitudes(pt).len(), pt.clone());
        for c in crate::structured::offset_candidates(pt.values()) {
            let shifted = PhaseTable::from_values(pt.n, pt.values.iter().map(|v| v - c).collect())?;
            let k = distinct_magnitudes(&shifted).len();
            if k < best.0 {
                best = (k, shifted);
            }
        }
        Ok(best.1)
    })
}

fn synthesize_reduced(
    n_system: usize,
    terms: &[PhaseTerm],
    adjust: impl Fn(&PhaseTable) -> Result<PhaseTable>,
) -> Result<Circuit> {
    let active: Vec<PhaseTerm> = terms.iter().copied().filter(|t| t.z_mask != 0).collect();
    let masks: Vec<u64> = active.iter().map(|t| t.z_mask).collect();
    let red = parity_reduction(n_system, &masks);
    let reduced: Vec<PhaseTerm> = active
        .iter()
        .zip(&red.reduced)
        .map(|(t, &m)| PhaseTerm {
            z_mask: m,
            ..*t
        })
        .collect();
    let pt = adjust(&phase_table(red.pivots.len(), &reduced)?)?;
    let covers: Vec<MintermCover> = distinct_magnitudes(&pt)
        .iter()
        .map(compress_minterms)
        .collect();
    let core = synthesize_phase_circuit_on(n_system, &red.pivots, &covers)?;
    let mut c = Circuit::new(n_system, 2);
    let pre: Vec<Gate> = red.cnots.iter().map(|&(a, b)| Gate::cnot(a, b)).collect();
    c.extend(pre.iter().cloned())?;
    c.extend(core.gates().iter().cloned())?;
    c.extend(pre.iter().rev().cloned())?;
    Ok(c)
}
