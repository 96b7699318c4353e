//! Structured phase synthesis over at most seven variables.
//!
//! [`PhaseBuilder`] records classical reversible gates while tracking the
//! truth table of every qubit, plus rotations whose angles are left open.
//! [`PhaseBuilder::solve`] fits the angles to a target phase by least
//! squares and rejects the skeleton if the fit is not exact.

use nalgebra::{DMatrix, DVector};

use crate::circuit::{Circuit, Gate, PairTag, Role};
use crate::error::{HfError, Result};
use crate::phase::MAGNITUDE_RTOL;

/// Largest variable count a truth table can hold.
pub const MAX_STRUCTURED_VARS: usize = 7;

#[derive(Debug, Clone)]
enum Op {
    Classical(Gate),
    Rot {
        controls: Vec<usize>,
        target: usize,
        active: u128,
        target_tt: u128,
    },
}

/// Gate recorder for diagonal phase circuits. Qubits `0..n` are data
/// variables; ancillae are allocated above them.
#[derive(Debug, Clone)]
pub struct PhaseBuilder {
    n: usize,
    tt: Vec<u128>,
    busy: Vec<bool>,
    ops: Vec<Op>,
    next_pair: u32,
}

fn full(n: usize) -> u128 {
    if n == 7 {
        u128::MAX
    } else {
        (1u128 << (1 << n)) - 1
    }
}

fn var_tt(n: usize, v: usize) -> u128 {
    let mut t = 0u128;
    for x in 0..1usize << n {
        if x >> v & 1 == 1 {
            t |= 1 << x;
        }
    }
    t
}

fn form_tt(n: usize, mask: u64) -> u128 {
    let mut t = 0u128;
    for v in 0..n {
        if mask >> v & 1 == 1 {
            t ^= var_tt(n, v);
        }
    }
    t
}

impl PhaseBuilder {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_STRUCTURED_VARS {
            return Err(HfError::SizeGuard {
                what: "structured synthesis variables",
                got: n,
                limit: MAX_STRUCTURED_VARS,
            });
        }
        Ok(PhaseBuilder {
            n,
            tt: (0..n).map(|v| var_tt(n, v)).collect(),
            busy: vec![true; n],
            ops: Vec::new(),
            next_pair: 0,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n
    }

    pub fn n_ancilla(&self) -> usize {
        self.tt.len() - self.n
    }

    /// Truth table of qubit `q` as a function of the input assignment.
    pub fn truth_table(&self, q: usize) -> u128 {
        self.tt[q]
    }

    /// A clean ancilla, reusing released ones.
    pub fn alloc(&mut self) -> usize {
        for q in self.n..self.tt.len() {
            if !self.busy[q] && self.tt[q] == 0 {
                self.busy[q] = true;
                return q;
            }
        }
        self.tt.push(0);
        self.busy.push(true);
        self.tt.len() - 1
    }

    /// Marks every zeroed ancilla as free.
    pub fn release_clean(&mut self) {
        for q in self.n..self.tt.len() {
            if self.tt[q] == 0 {
                self.busy[q] = false;
            }
        }
    }

    fn classical(&mut self, g: Gate) {
        match &g {
            Gate::X(q) => self.tt[*q] ^= full(self.n),
            Gate::Cnot { control, target } => self.tt[*target] ^= self.tt[*control],
            Gate::Toffoli {
                controls, target, ..
            } => self.tt[*target] ^= self.tt[controls[0]] & self.tt[controls[1]],
            _ => unreachable!("non-classical gate in builder"),
        }
        self.ops.push(Op::Classical(g));
    }

    pub fn x(&mut self, q: usize) {
        self.classical(Gate::X(q));
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        self.classical(Gate::cnot(c, t));
    }

    /// Compute-tagged Toffoli; its mirror closes the pair.
    pub fn toffoli(&mut self, a: usize, b: usize, t: usize) {
        let id = self.next_pair;
        self.next_pair += 1;
        self.classical(Gate::Toffoli {
            controls: [a, b],
            target: t,
            tag: PairTag {
                id,
                role: Role::Compute,
            },
        });
    }

    /// Rotation on `target` controlled by all of `controls`; the angle is
    /// fixed by [`solve`](Self::solve).
    pub fn rot(&mut self, controls: &[usize], target: usize) {
        let mut active = full(self.n);
        for &c in controls {
            active &= self.tt[c];
        }
        self.ops.push(Op::Rot {
            controls: controls.to_vec(),
            target,
            active,
            target_tt: self.tt[target],
        });
    }

    pub fn mark(&self) -> usize {
        self.ops.len()
    }

    /// Replays the inverses of the classical gates since `mark` in reverse
    /// order; rotations are skipped.
    pub fn mirror_from(&mut self, mark: usize) {
        let tail: Vec<Gate> = self.ops[mark..]
            .iter()
            .rev()
            .filter_map(|op| match op {
                Op::Classical(g) => Some(g.inverse()),
                Op::Rot { .. } => None,
            })
            .collect();
        for g in tail {
            self.classical(g);
        }
        self.release_clean();
    }

    /// Linear form held by data qubit `q`, if its content is linear.
    fn data_form(&self, q: usize) -> Option<u64> {
        let t = self.tt[q];
        if t & 1 != 0 {
            return None;
        }
        let mut mask = 0u64;
        for v in 0..self.n {
            if t >> (1usize << v) & 1 == 1 {
                mask |= 1 << v;
            }
        }
        (form_tt(self.n, mask) == t).then_some(mask)
    }

    /// Places each independent linear form on its own data qubit using
    /// CNOTs among data qubits. Returns the holding qubits and the CNOTs
    /// applied (undo with [`restore`](Self::restore)).
    pub fn materialize(&mut self, forms: &[u64]) -> Result<(Vec<usize>, Vec<(usize, usize)>)> {
        let mut held: Vec<usize> = Vec::new();
        let mut applied = Vec::new();
        for &f in forms {
            let cur: Vec<u64> = (0..self.n)
                .map(|q| {
                    self.data_form(q)
                        .ok_or_else(|| HfError::Synthesis("data qubit is not linear".into()))
                })
                .collect::<Result<_>>()?;
            let subset = (1u64..1 << self.n)
                .filter(|s| {
                    let mut acc = 0u64;
                    for q in 0..self.n {
                        if s >> q & 1 == 1 {
                            acc ^= cur[q];
                        }
                    }
                    acc == f
                })
                .min_by_key(|s| s.count_ones())
                .ok_or_else(|| HfError::Synthesis(format!("form {f:#b} not reachable")))?;
            let pivot = (0..self.n)
                .find(|&q| subset >> q & 1 == 1 && !held.contains(&q))
                .ok_or_else(|| HfError::Synthesis("linear forms are dependent".into()))?;
            for q in 0..self.n {
                if q != pivot && subset >> q & 1 == 1 {
                    self.cnot(q, pivot);
                    applied.push((q, pivot));
                }
            }
            held.push(pivot);
        }
        Ok((held, applied))
    }

    pub fn restore(&mut self, cnots: &[(usize, usize)]) {
        for &(c, t) in cnots.iter().rev() {
            self.cnot(c, t);
        }
    }

    /// `(rotations, toffoli pairs)` the emitted circuit will report.
    pub fn cost(&self) -> (usize, usize) {
        let mut rot = 0;
        let mut pairs = 0;
        for op in &self.ops {
            match op {
                Op::Rot { controls, .. } => {
                    rot += 1;
                    pairs += controls.len().saturating_sub(1);
                }
                Op::Classical(Gate::Toffoli { tag, .. }) if tag.role == Role::Compute => pairs += 1,
                _ => {}
            }
        }
        (rot, pairs)
    }

    pub fn rotation_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|o| matches!(o, Op::Rot { .. }))
            .count()
    }

    fn is_restored(&self) -> bool {
        (0..self.n).all(|q| self.tt[q] == var_tt(self.n, q))
            && self.tt[self.n..].iter().all(|&t| t == 0)
    }

    /// Fits rotation angles so the circuit applies `e^{i phi(x)}` up to a
    /// global phase. `var_qubits[v]` is the system qubit of variable `v`;
    /// ancillae are placed after `n_system`.
    pub fn solve(&self, phi: &[f64], n_system: usize, var_qubits: &[usize]) -> Result<Circuit> {
        let dim = 1usize << self.n;
        if phi.len() != dim || var_qubits.len() != self.n {
            return Err(HfError::arg("phase table does not match the builder"));
        }
        if !self.is_restored() {
            return Err(HfError::Synthesis("qubits not restored".into()));
        }
        let rots: Vec<(u128, u128)> = self
            .ops
            .iter()
            .filter_map(|o| match o {
                Op::Rot {
                    active, target_tt, ..
                } => Some((*active, *target_tt)),
                _ => None,
            })
            .collect();
        let m = rots.len();
        let mut a = DMatrix::<f64>::zeros(dim, m + 1);
        for x in 0..dim {
            for (j, &(act, tgt)) in rots.iter().enumerate() {
                if act >> x & 1 == 1 {
                    a[(x, j)] = if tgt >> x & 1 == 1 { 0.5 } else { -0.5 };
                }
            }
            a[(x, m)] = 1.0;
        }
        let b = DVector::from_column_slice(phi);
        let svd = a.clone().svd(true, true);
        let sol = svd
            .solve(&b, 1e-12)
            .map_err(|e| HfError::Synthesis(e.to_string()))?;
        let resid = (&a * &sol - &b).amax();
        let scale = 1.0 + phi.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if resid > 1e-10 * scale {
            return Err(HfError::Synthesis(format!(
                "skeleton cannot realize the phase (residual {resid:.3e})"
            )));
        }
        let map = |q: usize| {
            if q < self.n {
                var_qubits[q]
            } else {
                n_system + q - self.n
            }
        };
        let mut gates: Vec<Gate> = Vec::new();
        let mut k = 0;
        for op in &self.ops {
            match op {
                Op::Classical(g) => {
                    let g = remap(g, &map);
                    let cancels = match (gates.last(), &g) {
                        (Some(last), Gate::X(_) | Gate::Cnot { .. }) => *last == g,
                        _ => false,
                    };
                    if cancels {
                        gates.pop();
                    } else {
                        gates.push(g);
                    }
                }
                Op::Rot {
                    controls, target, ..
                } => {
                    let angle = sol[k];
                    k += 1;
                    let target = map(*target);
                    let cs: Vec<usize> = controls.iter().map(|&c| map(c)).collect();
                    gates.push(match cs.len() {
                        0 => Gate::Rz { target, angle },
                        1 => Gate::CRz {
                            control: cs[0],
                            target,
                            angle,
                        },
                        _ => Gate::Mcrz {
                            controls: cs,
                            target,
                            angle,
                        },
                    });
                }
            }
        }
        Circuit::from_gates(n_system, self.n_ancilla(), gates)
    }
}

fn remap(g: &Gate, map: &impl Fn(usize) -> usize) -> Gate {
    match g {
        Gate::X(q) => Gate::X(map(*q)),
        Gate::Cnot { control, target } => Gate::cnot(map(*control), map(*target)),
        Gate::Toffoli {
            controls,
            target,
            tag,
        } => Gate::Toffoli {
            controls: [map(controls[0]), map(controls[1])],
            target: map(*target),
            tag: *tag,
        },
        other => other.clone(),
    }
}

/// Affine description of a set `S = {x : l_r . x = c_r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSet {
    pub constraints: Vec<(u64, u8)>,
    /// Variables parameterizing `S`.
    pub free: Vec<usize>,
}

fn parity(x: u64) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Returns the affine description when `set` (as assignments over `n`
/// variables) is a coset of a linear subspace.
pub fn affine_hull(n: usize, set: &[u64]) -> Option<AffineSet> {
    let x0 = *set.first()?;
    let mut basis: Vec<u64> = Vec::new();
    for &x in set {
        let mut v = x ^ x0;
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    if set.len() != 1usize << basis.len() {
        return None;
    }
    // Annihilator, low-weight forms first, kept in reduced echelon form.
    let mut cands: Vec<u64> = (1u64..1 << n)
        .filter(|l| basis.iter().all(|&d| parity(l & d) == 0))
        .collect();
    cands.sort_by_key(|l| (l.count_ones(), *l));
    let mut rows: Vec<u64> = Vec::new();
    let mut chosen: Vec<u64> = Vec::new();
    for l in cands {
        let mut v = l;
        for &r in &rows {
            if v >> r.trailing_zeros() & 1 == 1 {
                v ^= r;
            }
        }
        if v != 0 {
            for r in rows.iter_mut() {
                if *r >> v.trailing_zeros() & 1 == 1 {
                    *r ^= v;
                }
            }
            rows.push(v);
            chosen.push(l);
        }
        if rows.len() == n - basis.len() {
            break;
        }
    }
    let pivots: u64 = rows.iter().fold(0, |acc, r| acc | 1 << r.trailing_zeros());
    let free = (0..n).filter(|v| pivots >> v & 1 == 0).collect();
    Some(AffineSet {
        constraints: chosen.iter().map(|&l| (l, parity(l & x0))).collect(),
        free,
    })
}

/// Algebraic normal form (Möbius transform) of a truth table over `k`
/// variables; bit `m` of the result is the coefficient of monomial `m`.
pub fn anf(k: usize, tt: u128) -> u128 {
    let mut a = tt;
    for i in 0..k {
        for x in 0..1usize << k {
            if x >> i & 1 == 1 && a >> (x ^ 1 << i) & 1 == 1 {
                a ^= 1 << x;
            }
        }
    }
    a
}

/// Degree of an ANF.
pub fn anf_degree(k: usize, a: u128) -> u32 {
    (0..1usize << k)
        .filter(|&m| a >> m & 1 == 1)
        .map(|m| m.count_ones())
        .max()
        .unwrap_or(0)
}

/// Splits a quadratic ANF (over `k` variables) as
/// `sum_i L_{2i} L_{2i+1} + L_lin + c`; linear forms are variable masks.
fn dickson(k: usize, mut a: u128) -> (Vec<(u64, u64)>, u64) {
    let mut products = Vec::new();
    loop {
        let quad: Vec<usize> = (0..1usize << k)
            .filter(|&m| a >> m & 1 == 1 && m.count_ones() == 2)
            .collect();
        let Some(&m) = quad.first() else { break };
        let i = m.trailing_zeros() as usize;
        let j = (m & !(1 << i)).trailing_zeros() as usize;
        // Coefficients of x_i x_l and x_j x_l for l outside {i, j}.
        let mut la = 0u64;
        let mut lb = 0u64;
        for l in 0..k {
            if l == i || l == j {
                continue;
            }
            if a >> ((1usize << i) | (1 << l)) & 1 == 1 {
                la |= 1 << l;
            }
            if a >> ((1usize << j) | (1 << l)) & 1 == 1 {
                lb |= 1 << l;
            }
        }
        let l1 = (1u64 << i) | lb;
        let l2 = (1u64 << j) | la;
        products.push((l1, l2));
        let t1 = form_tt(k, l1);
        let t2 = form_tt(k, l2);
        a ^= anf(k, t1 & t2);
    }
    let mut lin = 0u64;
    for v in 0..k {
        if a >> (1usize << v) & 1 == 1 {
            lin |= 1 << v;
        }
    }
    (products, lin)
}

/// Lifts a mask over free-variable indices to a mask over all variables.
fn lift(free: &[usize], m: u64) -> u64 {
    let mut out = 0u64;
    for (i, &v) in free.iter().enumerate() {
        if m >> i & 1 == 1 {
            out |= 1 << v;
        }
    }
    out
}

/// Groups of equal `|phi|` above the zero threshold, largest first.
pub fn magnitude_buckets(phi: &[f64]) -> Vec<(f64, Vec<u64>)> {
    let scale = phi.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let zero = 1e-12 * (1.0 + scale);
    let mut reps: Vec<f64> = Vec::new();
    let mut mags: Vec<f64> = phi.iter().map(|v| v.abs()).filter(|&a| a > zero).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for a in mags {
        match reps.last() {
            Some(&r) if r - a <= MAGNITUDE_RTOL * r => {}
            _ => reps.push(a),
        }
    }
    reps.iter()
        .map(|&r| {
            let xs = (0..phi.len() as u64)
                .filter(|&x| {
                    let a = phi[x as usize].abs();
                    a > zero && (a - r).abs() <= MAGNITUDE_RTOL * r
                })
                .collect();
            (r, xs)
        })
        .collect()
}

/// Emits one bucket: the phase `theta * sign(x)` on the affine set `xs`.
/// Fails when the set is not affine.
pub fn emit_bucket(b: &mut PhaseBuilder, phi: &[f64], xs: &[u64]) -> Result<()> {
    let n = b.n_vars();
    let hull = affine_hull(n, xs)
        .ok_or_else(|| HfError::Synthesis("bucket support is not affine".into()))?;
    let k = hull.free.len();
    // Sign over the free variables.
    let mut sign_tt = 0u128;
    for &x in xs {
        if phi[x as usize] < 0.0 {
            let mut idx = 0usize;
            for (i, &v) in hull.free.iter().enumerate() {
                idx |= ((x >> v & 1) as usize) << i;
            }
            sign_tt |= 1 << idx;
        }
    }
    let a = anf(k, sign_tt);
    let deg = anf_degree(k, a);
    let nonconst = deg > 0;
    if !nonconst && hull.constraints.is_empty() {
        return Ok(());
    }
    let start = b.mark();
    let target = if !nonconst {
        None
    } else if deg == 1 {
        let mut lin = 0u64;
        for i in 0..k {
            if a >> (1usize << i) & 1 == 1 {
                lin |= 1 << i;
            }
        }
        Some(Target::Form(lift(&hull.free, lin)))
    } else {
        let anc = b.alloc();
        if deg == 2 {
            let (prods, lin) = dickson(k, a);
            for (l1, l2) in prods {
                let (q, undo) = b.materialize(&[lift(&hull.free, l1), lift(&hull.free, l2)])?;
                b.toffoli(q[0], q[1], anc);
                b.restore(&undo);
            }
            if lin != 0 {
                let (q, undo) = b.materialize(&[lift(&hull.free, lin)])?;
                b.cnot(q[0], anc);
                b.restore(&undo);
            }
        } else {
            for m in 1..1usize << k {
                if a >> m & 1 == 0 {
                    continue;
                }
                let vars: Vec<usize> = (0..k).filter(|i| m >> i & 1 == 1).map(|i| hull.free[i]).collect();
                and_into(b, &vars, anc);
            }
        }
        Some(Target::Qubit(anc))
    };
    let mut forms: Vec<u64> = hull.constraints.iter().map(|c| c.0).collect();
    if let Some(Target::Form(f)) = target {
        forms.push(f);
    }
    let (held, undo) = b.materialize(&forms)?;
    let controls: Vec<usize> = held[..hull.constraints.len()].to_vec();
    let flips: Vec<usize> = hull
        .constraints
        .iter()
        .zip(&controls)
        .filter(|((_, c), _)| *c == 0)
        .map(|(_, &q)| q)
        .collect();
    for &q in &flips {
        b.x(q);
    }
    match target {
        Some(Target::Form(_)) => b.rot(&controls, held[controls.len()]),
        Some(Target::Qubit(q)) => b.rot(&controls, q),
        None if controls.len() == 1 => b.rot(&[], controls[0]),
        None => {
            let anc = b.alloc();
            b.rot(&controls, anc);
        }
    }
    for &q in &flips {
        b.x(q);
    }
    b.restore(&undo);
    b.mirror_from(start);
    Ok(())
}

enum Target {
    Form(u64),
    Qubit(usize),
}

/// XORs the AND of `vars` into `target` with a Toffoli chain.
fn and_into(b: &mut PhaseBuilder, vars: &[usize], target: usize) {
    match vars.len() {
        0 => b.x(target),
        1 => b.cnot(vars[0], target),
        2 => b.toffoli(vars[0], vars[1], target),
        _ => {
            let mut acc = b.alloc();
            b.toffoli(vars[0], vars[1], acc);
            for &v in &vars[2..vars.len() - 1] {
                let next = b.alloc();
                b.toffoli(acc, v, next);
                acc = next;
            }
            b.toffoli(acc, vars[vars.len() - 1], target);
        }
    }
}

/// Bucket-by-bucket synthesis of one phase table.
pub fn emit_table(b: &mut PhaseBuilder, phi: &[f64]) -> Result<()> {
    for (_, xs) in magnitude_buckets(phi) {
        emit_bucket(b, phi, &xs)?;
    }
    Ok(())
}

/// Offsets worth trying: zero and every pairwise midpoint of the distinct
/// values (each value included), so any two values can be made opposite.
pub fn offset_candidates(phi: &[f64]) -> Vec<f64> {
    let mut vals: Vec<f64> = phi.to_vec();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    let mut out = vec![0.0];
    for i in 0..vals.len() {
        for j in i..vals.len() {
            out.push(0.5 * (vals[i] + vals[j]));
        }
    }
    out
}

/// Offsets searched exhaustively up to this many candidates.
const FULL_OFFSET_SEARCH: usize = 256;
/// Offsets kept after ranking by bucket count on larger tables.
const RANKED_OFFSETS: usize = 32;

/// Best offset for one part, by `(rotations, pairs)`. Large tables only
/// try zero and the offsets leaving the fewest magnitude buckets.
pub fn best_offset(n: usize, phi: &[f64]) -> Option<(f64, (usize, usize))> {
    let mut cands = offset_candidates(phi);
    if cands.len() > FULL_OFFSET_SEARCH {
        let mut ranked: Vec<(usize, f64)> = cands[1..]
            .iter()
            .map(|&c| {
                let shifted: Vec<f64> = phi.iter().map(|v| v - c).collect();
                (magnitude_buckets(&shifted).len(), c)
            })
            .collect();
        ranked.sort_by_key(|r| r.0);
        cands = std::iter::once(0.0)
            .chain(ranked.into_iter().take(RANKED_OFFSETS).map(|r| r.1))
            .collect();
    }
    let mut best: Option<(f64, (usize, usize))> = None;
    for c in cands {
        let shifted: Vec<f64> = phi.iter().map(|v| v - c).collect();
        let mut b = PhaseBuilder::new(n).ok()?;
        if emit_table(&mut b, &shifted).is_err() {
            continue;
        }
        let cost = b.cost();
        if best.is_none_or(|(_, bc)| cost < bc) {
            best = Some((c, cost));
        }
    }
    best
}

/// Structured synthesis of `sum_p parts[p]`, each part with its own
/// best offset. Returns the builder, ready for [`PhaseBuilder::solve`].
pub fn structured_builder(n: usize, parts: &[Vec<f64>]) -> Result<PhaseBuilder> {
    let mut b = PhaseBuilder::new(n)?;
    for phi in parts {
        let (c, _) = best_offset(n, phi)
            .ok_or_else(|| HfError::Synthesis("no affine bucket decomposition".into()))?;
        let shifted: Vec<f64> = phi.iter().map(|v| v - c).collect();
        emit_table(&mut b, &shifted)?;
    }
    Ok(b)
}
