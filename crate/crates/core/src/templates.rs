//! Phase circuits for recognised coefficient patterns.
//!
//! Library families are classified per side into Cases I, II and III;
//! uniform Z-Z couplings on small graphs are matched by shape. Each
//! template builds a [`PhaseBuilder`] skeleton whose angles are fitted and
//! checked exactly, so a template that does not fit is never emitted.

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::diag::LibraryGroup;
use crate::error::{HfError, Result};
use crate::structured::{best_offset, emit_table, structured_builder, PhaseBuilder, MAX_STRUCTURED_VARS};
use crate::synth::PhaseProblem;

/// Relative tolerance of coefficient-pattern predicates.
pub const PATTERN_TOL: f64 = 1e-9;

/// Double-excitation families, by number of overlapping qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    H,
    H1y,
    H1x,
    H21,
    H20,
    H3y,
    H3x,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::H,
        Family::H1y,
        Family::H1x,
        Family::H21,
        Family::H20,
        Family::H3y,
        Family::H3x,
    ];

    pub fn of(g: LibraryGroup) -> Family {
        use LibraryGroup::*;
        match g {
            GBase => Family::H,
            G1y => Family::H1y,
            G1x1 | G1x2 => Family::H1x,
            G21 => Family::H21,
            G201 | G202 => Family::H20,
            G3y => Family::H3y,
            G3x1 | G3x2 => Family::H3x,
        }
    }

    pub fn groups(self) -> &'static [LibraryGroup] {
        use LibraryGroup::*;
        match self {
            Family::H => &[GBase],
            Family::H1y => &[G1y],
            Family::H1x => &[G1x1, G1x2],
            Family::H21 => &[G21],
            Family::H20 => &[G201, G202],
            Family::H3y => &[G3y],
            Family::H3x => &[G3x1, G3x2],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::H => "H",
            Family::H1y => "H1y",
            Family::H1x => "H1x",
            Family::H21 => "H21",
            Family::H20 => "H20",
            Family::H3y => "H3y",
            Family::H3x => "H3x",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
    III,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::I, Case::II, Case::III];

    pub fn name(self) -> &'static str {
        match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
        }
    }

    /// Coefficient of member index `k` as a function of the case
    /// parameters (`theta` for I/II, `(h1, h2, h3)` for III).
    pub fn coefficient(self, k: u8, params: [f64; 3]) -> f64 {
        match self {
            Case::I => {
                if k == 1 || k == 6 {
                    -params[0]
                } else {
                    params[0]
                }
            }
            Case::II => params[0],
            Case::III => {
                let r = case3_row(k);
                r[0] * params[0] + r[1] * params[1] + r[2] * params[2]
            }
        }
    }
}

fn case3_row(k: u8) -> [f64; 3] {
    match k {
        0 | 7 => [-1.0, -1.0, 1.0],
        1 | 6 => [1.0, -1.0, 1.0],
        2 | 5 => [-1.0, -1.0, -1.0],
        _ => [-1.0, 1.0, 1.0],
    }
}

/// Member indices of `side` in a family.
pub fn side_indices(family: Family, side: char) -> Vec<u8> {
    let mut out: Vec<u8> = family
        .groups()
        .iter()
        .flat_map(|g| g.members())
        .filter_map(|(l, _)| {
            let mut cs = l.chars();
            (cs.next()? == side).then(|| cs.as_str().parse().ok())?
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Least-squares case parameters for `(index, coefficient)` pairs.
pub fn solve_case(case: Case, coeffs: &[(u8, f64)]) -> Option<[f64; 3]> {
    if coeffs.is_empty() {
        return None;
    }
    Some(match case {
        Case::I | Case::II => {
            let s: f64 = coeffs
                .iter()
                .map(|&(k, c)| c * case.coefficient(k, [1.0, 0.0, 0.0]))
                .sum();
            [s / coeffs.len() as f64, 0.0, 0.0]
        }
        Case::III => {
            let mut a = nalgebra::DMatrix::<f64>::zeros(coeffs.len(), 3);
            let mut b = nalgebra::DVector::<f64>::zeros(coeffs.len());
            for (i, &(k, c)) in coeffs.iter().enumerate() {
                let r = case3_row(k);
                for j in 0..3 {
                    a[(i, j)] = r[j];
                }
                b[i] = c;
            }
            let x = a.svd(true, true).solve(&b, 1e-12).ok()?;
            [x[0], x[1], x[2]]
        }
    })
}

/// Solves for the case parameters and returns them when the pattern holds.
pub fn fit_case(case: Case, coeffs: &[(u8, f64)]) -> Option<[f64; 3]> {
    let scale = coeffs.iter().fold(0.0f64, |s, (_, c)| s.max(c.abs()));
    let tol = PATTERN_TOL * scale.max(f64::MIN_POSITIVE);
    let params = solve_case(case, coeffs)?;
    coeffs
        .iter()
        .all(|&(k, c)| (case.coefficient(k, params) - c).abs() <= tol)
        .then_some(params)
}

/// Coefficients per side (absent members count as zero).
fn side_coeffs(p: &PhaseProblem, family: Family, side: char) -> Vec<(u8, f64)> {
    side_indices(family, side)
        .into_iter()
        .map(|k| {
            let c = p
                .terms
                .iter()
                .zip(&p.labels)
                .filter(|(_, l)| **l == Some((side, k)))
                .map(|(t, _)| t.coeff)
                .sum();
            (k, c)
        })
        .collect()
}

/// Sides present in this block.
fn sides_present(p: &PhaseProblem) -> Vec<char> {
    let mut s: Vec<char> = p.labels.iter().filter_map(|l| l.map(|l| l.0)).collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// The case shared by every present side, preferring the most specific.
pub fn classify(p: &PhaseProblem) -> Option<(Family, Case)> {
    let family = Family::of(p.group?);
    let sides = sides_present(p);
    if sides.is_empty() {
        return None;
    }
    Case::ALL
        .into_iter()
        .find(|&case| {
            sides
                .iter()
                .all(|&s| fit_case(case, &side_coeffs(p, family, s)).is_some())
        })
        .map(|case| (family, case))
}

/// Uniform Z-Z coupling graphs with a dedicated template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Shape {
    Ring4,
    Line3,
    Triangle,
    K4,
    Ring6,
}

impl Shape {
    pub const ALL: [Shape; 5] = [Shape::Ring4, Shape::Line3, Shape::Triangle, Shape::K4, Shape::Ring6];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Ring4 => "ring4",
            Shape::Line3 => "line3",
            Shape::Triangle => "triangle",
            Shape::K4 => "k4",
            Shape::Ring6 => "ring6",
        }
    }

    pub fn edges(self) -> Vec<(usize, usize)> {
        match self {
            Shape::Ring4 => vec![(0, 1), (1, 2), (2, 3), (3, 0)],
            Shape::Line3 => vec![(0, 1), (1, 2)],
            Shape::Triangle => vec![(0, 1), (1, 2), (2, 0)],
            Shape::K4 => vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)],
            Shape::Ring6 => vec![(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)],
        }
    }

    pub fn n_vertices(self) -> usize {
        match self {
            Shape::Line3 | Shape::Triangle => 3,
            Shape::Ring4 | Shape::K4 => 4,
            Shape::Ring6 => 6,
        }
    }
}

/// Recognises a uniform-weight graph over the problem variables and
/// returns the shape with a vertex order matching [`Shape::edges`].
pub fn match_shape(p: &PhaseProblem) -> Option<(Shape, Vec<usize>)> {
    let w0 = p.terms.first().map(|t| t.coeff * t.sign as f64)?;
    let tol = PATTERN_TOL * w0.abs();
    let mut edges = Vec::new();
    for t in &p.terms {
        if t.z_mask.count_ones() != 2 || (t.coeff * t.sign as f64 - w0).abs() > tol {
            return None;
        }
        let a = t.z_mask.trailing_zeros() as usize;
        let b = 63 - t.z_mask.leading_zeros() as usize;
        edges.push((a, b));
    }
    edges.sort_unstable();
    edges.dedup();
    if edges.len() != p.terms.len() {
        return None;
    }
    let mut verts: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    verts.sort_unstable();
    verts.dedup();
    let deg = |v: usize| edges.iter().filter(|&&(a, b)| a == v || b == v).count();
    let adj = |u: usize, v: usize| edges.contains(&(u.min(v), u.max(v)));
    // Walk from a start vertex along unused edges.
    let walk = |start: usize| {
        let mut order = vec![start];
        while order.len() < verts.len() {
            let last = *order.last().unwrap();
            let next = verts.iter().copied().find(|&v| !order.contains(&v) && adj(last, v))?;
            order.push(next);
        }
        Some(order)
    };
    let shape = match (verts.len(), edges.len()) {
        (3, 2) => Shape::Line3,
        (3, 3) => Shape::Triangle,
        (4, 4) if verts.iter().all(|&v| deg(v) == 2) => Shape::Ring4,
        (4, 6) => Shape::K4,
        (6, 6) if verts.iter().all(|&v| deg(v) == 2) => Shape::Ring6,
        _ => return None,
    };
    let start = match shape {
        Shape::Line3 => verts.iter().copied().find(|&v| deg(v) == 1)?,
        _ => verts[0],
    };
    let order = walk(start)?;
    let ok = shape.edges().iter().all(|&(i, j)| adj(order[i], order[j]));
    ok.then_some((shape, order))
}

/// A matched template, ready to be solved.
pub struct Matched {
    pub name: String,
    pub builder: PhaseBuilder,
}

/// Hand skeleton for the single-group family under Case III. The phase
/// lives on three weight-two patterns of `(x2, x3, x4)` and is odd in
/// `x1`. A majority bit selects them; each pattern then takes one
/// doubly-controlled rotation. Two patterns of equal magnitude share a
/// single rotation.
fn base_case3(phi: &[f64]) -> Result<PhaseBuilder> {
    let scale = phi.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let nz = |x: usize| phi[x].abs() > 1e-12 * (1.0 + scale);
    // (minterm with x1 = 0, its two set variables, the clear variable)
    let patterns = [(0b0110, [1, 2], 3), (0b1100, [2, 3], 1), (0b1010, [1, 3], 2)];
    let live: Vec<_> = patterns.iter().filter(|p| nz(p.0)).collect();
    let mut b = PhaseBuilder::new(4)?;
    if live.len() == 2 && (phi[live[0].0].abs() - phi[live[1].0].abs()).abs() <= PATTERN_TOL * scale {
        let (u, v) = (live[0].1, live[1].1);
        let j = *u.iter().find(|q| v.contains(q)).expect("patterns share a variable");
        let i = *u.iter().find(|&&q| q != j).unwrap();
        let k = *v.iter().find(|&&q| q != j).unwrap();
        let opposite = phi[live[0].0] * phi[live[1].0] < 0.0;
        let start = b.mark();
        let anc = b.alloc();
        b.toffoli(i, j, anc);
        b.toffoli(j, k, anc);
        if opposite {
            b.toffoli(i, j, 0);
        }
        b.rot(&[anc], 0);
        b.mirror_from(start);
        return Ok(b);
    }
    if live.is_empty() {
        return Ok(b);
    }
    let start = b.mark();
    let anc = b.alloc();
    b.cnot(1, 2);
    b.cnot(1, 3);
    b.toffoli(2, 3, anc);
    b.cnot(1, anc);
    b.cnot(1, 3);
    b.cnot(1, 2);
    for p in live {
        b.x(p.2);
        b.rot(&[anc, p.2], 0);
        b.x(p.2);
    }
    b.mirror_from(start);
    Ok(b)
}

/// Six-cycle: a four-cycle on the first four vertices plus the remaining
/// four-cycle with the shared chord cancelled, whose phase is `2w` times
/// the sign of a majority of three edge parities.
fn ring6(p: &PhaseProblem, order: &[usize]) -> Result<PhaseBuilder> {
    let n = p.n_vars();
    let w = p.terms[0].coeff * p.terms[0].sign as f64;
    let v = |i: usize| order[i];
    let mut ring4 = vec![0.0; 1 << n];
    for (x, val) in ring4.iter_mut().enumerate() {
        for (i, j) in [(0, 1), (1, 2), (2, 3), (3, 0)] {
            let par = (x >> v(i) ^ x >> v(j)) & 1;
            *val += if par == 0 { w } else { -w };
        }
    }
    let mut b = PhaseBuilder::new(n)?;
    let (c, _) = best_offset(n, &ring4)
        .ok_or_else(|| HfError::Synthesis("four-cycle has no bucket form".into()))?;
    let shifted: Vec<f64> = ring4.iter().map(|x| x - c).collect();
    emit_table(&mut b, &shifted)?;
    let start = b.mark();
    b.cnot(v(4), v(3));
    b.cnot(v(5), v(4));
    b.cnot(v(0), v(5));
    let anc = b.alloc();
    b.toffoli(v(3), v(4), anc);
    b.cnot(v(4), v(3));
    b.toffoli(v(3), v(5), anc);
    b.rot(&[], anc);
    b.mirror_from(start);
    Ok(b)
}

/// Every template that applies to the block. `raw` keeps one variable per
/// qubit in the support.
pub fn matching_templates(raw: &PhaseProblem) -> Result<Vec<Matched>> {
    let mut out = Vec::new();
    if let Some((family, case)) = classify(raw) {
        let name = format!("{}/{}", family.name(), case.name());
        if raw.n_vars() <= MAX_STRUCTURED_VARS {
            if family == Family::H && case != Case::II && raw.n_vars() == 4 && raw.pivots == [0, 1, 2, 3] {
                out.push(Matched {
                    name: name.clone(),
                    builder: base_case3(&raw.table()?)?,
                });
            } else {
                let mut best: Option<PhaseBuilder> = None;
                for parts in crate::synth::part_splits(raw)? {
                    if let Ok(b) = structured_builder(raw.n_vars(), &parts) {
                        if best.as_ref().is_none_or(|x| b.cost() < x.cost()) {
                            best = Some(b);
                        }
                    }
                }
                if let Some(builder) = best {
                    out.push(Matched { name, builder });
                }
            }
        }
    }
    if let Some((shape, order)) = match_shape(raw) {
        let name = format!("heis/{}", shape.name());
        let built = match shape {
            Shape::Ring6 => ring6(raw, &order),
            _ => structured_builder(raw.n_vars(), &[raw.table()?]),
        };
        if let Ok(builder) = built {
            out.push(Matched { name, builder });
        }
    }
    Ok(out)
}

/// Cheapest matching template that solves exactly.
pub fn best_template(raw: &PhaseProblem) -> Result<Option<(String, Circuit)>> {
    let mut best: Option<(String, Circuit, (usize, usize))> = None;
    for m in matching_templates(raw)? {
        let Ok(c) = raw.realize(&m.builder) else { continue };
        let cost = c.cost_report()?.pair();
        if best.as_ref().is_none_or(|b| cost < b.2) {
            best = Some((m.name, c, cost));
        }
    }
    Ok(best.map(|(n, c, _)| (n, c)))
}
