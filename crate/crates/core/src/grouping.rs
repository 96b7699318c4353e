//! Commuting partitions, greedy 1-norm allocation and truncation.

use std::collections::HashMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::diag::match_library;
use crate::error::{HfError, Result};
use crate::hamiltonian::{Fragment, Hamiltonian, Term};
use crate::pauli::PauliString;
use crate::synth::{synthesize_with, Route};
use crate::templates::{solve_case, Case};

/// Allocated magnitudes below `SNAP * max|alpha|` are folded into the fragment.
const SNAP: f64 = 1e-14;

/// Wraps weighted Paulis as a fragment scaled by the largest magnitude.
pub fn fragment_from_terms(label: impl Into<String>, terms: &[(f64, PauliString)]) -> Result<Fragment> {
    let scale = terms.iter().fold(0.0f64, |m, (c, _)| m.max(c.abs()));
    if scale == 0.0 {
        return Err(HfError::arg("fragment with all-zero coefficients"));
    }
    Fragment::new(
        label,
        scale,
        terms.iter().map(|&(c, p)| (c / scale, p)).collect(),
    )
}

/// First-fit coloring of the non-identity terms, largest `|coeff|` first.
pub fn partition_commuting(h: &Hamiltonian) -> Result<Vec<Fragment>> {
    let mut order: Vec<usize> = (0..h.len())
        .filter(|&i| !h.terms()[i].pauli.is_identity())
        .collect();
    order.sort_by(|&a, &b| {
        h.terms()[b]
            .coeff
            .abs()
            .total_cmp(&h.terms()[a].coeff.abs())
            .then(a.cmp(&b))
    });
    let mut bins: Vec<Vec<(f64, PauliString)>> = Vec::new();
    for i in order {
        let t = h.terms()[i];
        match bins
            .iter_mut()
            .find(|bin| bin.iter().all(|(_, q)| q.commutes_unchecked(&t.pauli)))
        {
            Some(bin) => bin.push((t.coeff, t.pauli)),
            None => bins.push(vec![(t.coeff, t.pauli)]),
        }
    }
    bins.iter()
        .enumerate()
        .map(|(k, bin)| fragment_from_terms(format!("part{k}"), bin))
        .collect()
}

/// One outer iteration of [`greedy_allocate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub iteration: usize,
    pub one_norm_before: f64,
    /// Best 1-norm reduction per unit cost.
    pub gamma_max: f64,
    pub cost: usize,
    pub reduction: f64,
    pub chain_len: usize,
    pub candidate: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub fragments: Vec<Fragment>,
    /// Unallocated coefficients plus any identity term.
    pub residual: Hamiltonian,
    pub trace: Vec<TraceStep>,
}

fn term_json(c: f64, p: &PauliString) -> Value {
    json!({ "coeff": c, "pauli": p.letters() })
}

impl Allocation {
    /// Fragments plus residual.
    pub fn reconstruct(&self) -> Result<Hamiltonian> {
        let n = self.residual.n_qubits();
        let frag_terms = self.fragments.iter().flat_map(|f| f.terms());
        let rest = self.residual.terms().iter().map(|t| (t.coeff, t.pauli));
        Hamiltonian::new(n, frag_terms.chain(rest))
    }

    /// Largest per-term deviation from `h`.
    pub fn reconstruction_error(&self, h: &Hamiltonian) -> Result<f64> {
        let r = self.reconstruct()?;
        Ok(h.terms()
            .iter()
            .chain(r.terms())
            .map(|t| (h.coeff_of(&t.pauli) - r.coeff_of(&t.pauli)).abs())
            .fold(0.0, f64::max))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema_version": 1,
            "fragments": self.fragments.iter().map(|f| json!({
                "label": f.label,
                "scale": f.scale,
                "terms": f.paulis.iter().map(|(u, p)| term_json(*u, p)).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "residual": self.residual.terms().iter().map(|t| term_json(t.coeff, &t.pauli)).collect::<Vec<_>>(),
            "trace": self.trace,
        })
    }
}

/// Synthesis-based fragment cost: rotations plus `ceil(toffoli_weight * pairs)`,
/// at least 1. Results are memoized on the normalized fragment.
#[derive(Debug, Clone, Default)]
pub struct SynthesisCost {
    pub toffoli_weight: f64,
    memo: HashMap<Vec<(u64, u64, u64)>, usize>,
}

impl SynthesisCost {
    pub fn new(toffoli_weight: f64) -> Self {
        SynthesisCost {
            toffoli_weight,
            memo: HashMap::new(),
        }
    }

    pub fn cost(&mut self, f: &Fragment) -> Result<usize> {
        let norm = f.paulis.iter().fold(0.0f64, |m, (u, _)| m.max(u.abs()));
        let mut key: Vec<(u64, u64, u64)> = f
            .paulis
            .iter()
            .map(|(u, p)| (p.x_mask(), p.z_mask(), (u * f.scale.signum() / norm).to_bits()))
            .collect();
        key.sort_unstable();
        if let Some(&c) = self.memo.get(&key) {
            return Ok(c);
        }
        let r = synthesize_with(f, 1.0, Route::Auto)?.cost;
        let c = (r.rotations + (self.toffoli_weight * r.toffoli_pairs as f64).ceil() as usize).max(1);
        self.memo.insert(key, c);
        Ok(c)
    }
}

struct Candidate {
    beta: Vec<(usize, f64)>,
    reduction: f64,
    cost: usize,
    name: String,
}

impl Candidate {
    fn ratio(&self) -> f64 {
        self.reduction / self.cost as f64
    }

    /// Higher ratio, then larger reduction, then lower cost.
    fn beats(&self, other: &Candidate) -> bool {
        let (a, b) = (self.ratio(), other.ratio());
        if a != b {
            return a > b;
        }
        if self.reduction != other.reduction {
            return self.reduction > other.reduction;
        }
        self.cost < other.cost
    }
}

fn one_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Case-pattern allocations for a chain prefix inside a library group.
fn case_betas(paulis: &[PauliString], prefix: &[usize], alpha: &[f64]) -> Vec<(String, Vec<(usize, f64)>)> {
    let frag = match Fragment::new(
        "",
        1.0,
        prefix.iter().map(|&j| (alpha[j], paulis[j])).collect(),
    ) {
        Ok(f) => f,
        Err(_) => return Vec::new(),
    };
    let Some(blocks) = match_library(&frag) else {
        return Vec::new();
    };
    // (side, member index) label of every prefix entry.
    let mut labels: Vec<Option<(char, u8)>> = vec![None; prefix.len()];
    for (group, idx) in &blocks {
        let members = group.members();
        for &i in idx {
            let p = frag.paulis[i].1;
            if let Some((l, _)) = members
                .iter()
                .find(|(_, q)| q.x_mask() == p.x_mask() && q.z_mask() == p.z_mask())
            {
                let mut cs = l.chars();
                let side = cs.next().unwrap_or('a');
                labels[i] = cs.as_str().parse().ok().map(|k| (side, k));
            }
        }
    }
    if labels.iter().any(Option::is_none) {
        return Vec::new();
    }
    let mut out = Vec::new();
    for case in Case::ALL {
        let mut beta = vec![0.0; prefix.len()];
        let mut ok = true;
        for side in ['a', 'b'] {
            let pos: Vec<usize> = (0..prefix.len())
                .filter(|&i| labels[i].map(|l| l.0) == Some(side))
                .collect();
            if pos.is_empty() {
                continue;
            }
            let coeffs: Vec<(u8, f64)> = pos
                .iter()
                .map(|&i| (labels[i].map(|l| l.1).unwrap_or(0), alpha[prefix[i]]))
                .collect();
            match solve_case(case, &coeffs) {
                Some(params) => {
                    for (&i, &(k, _)) in pos.iter().zip(&coeffs) {
                        beta[i] = case.coefficient(k, params);
                    }
                }
                None => ok = false,
            }
        }
        if ok {
            out.push((
                format!("case {}", case.name()),
                prefix.iter().copied().zip(beta).collect(),
            ));
        }
    }
    out
}

/// Greedy 1-norm allocation into commuting fragments.
///
/// Each outer step grows a commuting chain by repeatedly taking the largest
/// remaining compatible coefficient, scores every candidate allocation
/// supported on a chain prefix by (1-norm reduction) / cost, and subtracts
/// the winner. Stops once the remaining 1-norm is at most `eps` times the
/// initial one. `cost_fn` must give 1 for single-term fragments.
pub fn greedy_allocate<F>(h: &Hamiltonian, mut cost_fn: F, eps: f64) -> Result<Allocation>
where
    F: FnMut(&Fragment) -> Result<usize>,
{
    if eps.is_nan() || eps <= 0.0 {
        return Err(HfError::arg("eps must be positive"));
    }
    let n = h.n_qubits();
    let idx: Vec<usize> = (0..h.len())
        .filter(|&i| !h.terms()[i].pauli.is_identity())
        .collect();
    let paulis: Vec<PauliString> = idx.iter().map(|&i| h.terms()[i].pauli).collect();
    let mut alpha: Vec<f64> = idx.iter().map(|&i| h.terms()[i].coeff).collect();
    let m = alpha.len();
    let initial = one_norm(&alpha);
    let snap = SNAP * alpha.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut fragments = Vec::new();
    let mut trace = Vec::new();

    let cost_of = |beta: &[(usize, f64)], cost_fn: &mut F| -> Result<usize> {
        let terms: Vec<(f64, PauliString)> = beta.iter().map(|&(j, b)| (b, paulis[j])).collect();
        let c = cost_fn(&fragment_from_terms("", &terms)?)?;
        if c == 0 {
            return Err(HfError::arg("cost function returned 0"));
        }
        Ok(c)
    };

    while one_norm(&alpha) > eps * initial && one_norm(&alpha) > 0.0 {
        if trace.len() > m {
            return Err(HfError::Synthesis("allocation made no progress".into()));
        }
        let before = one_norm(&alpha);
        let mut live: Vec<usize> = (0..m).filter(|&j| alpha[j] != 0.0).collect();
        let mut chain: Vec<usize> = Vec::new();
        let mut best: Option<Candidate> = None;
        let offer = |c: Candidate, best: &mut Option<Candidate>| {
            if best.as_ref().is_none_or(|b| c.beats(b)) {
                *best = Some(c);
            }
        };

        while !live.is_empty() {
            // Lowest index wins ties.
            let k = live.iter().copied().fold(live[0], |b, j| {
                if alpha[j].abs() > alpha[b].abs() {
                    j
                } else {
                    b
                }
            });
            chain.push(k);
            live.retain(|&j| j != k && paulis[j].commutes_unchecked(&paulis[k]));

            let gamma = chain.iter().map(|&j| alpha[j].abs()).fold(f64::INFINITY, f64::min);
            let beta: Vec<(usize, f64)> = chain.iter().map(|&j| (j, gamma * alpha[j].signum())).collect();
            let cost = if chain.len() == 1 {
                let c = cost_of(&beta, &mut cost_fn)?;
                if c != 1 {
                    return Err(HfError::arg(format!("single-term cost is {c}, expected 1")));
                }
                c
            } else {
                match cost_of(&beta, &mut cost_fn) {
                    Ok(c) => c,
                    Err(HfError::InvalidArgument(msg)) => return Err(HfError::InvalidArgument(msg)),
                    Err(_) => continue,
                }
            };
            let name = if chain.len() == 1 { "largest term".to_string() } else { format!("uniform prefix {}", chain.len()) };
            offer(
                Candidate {
                    reduction: gamma * chain.len() as f64,
                    beta,
                    cost,
                    name,
                },
                &mut best,
            );

            if chain.len() >= 2 {
                for (name, beta) in case_betas(&paulis, &chain, &alpha) {
                    let after: f64 = beta.iter().map(|&(j, b)| (alpha[j] - b).abs()).sum();
                    let reduction = chain.iter().map(|&j| alpha[j].abs()).sum::<f64>() - after;
                    if !(reduction > 0.0) {
                        continue;
                    }
                    let beta: Vec<(usize, f64)> = beta.into_iter().filter(|&(_, b)| b != 0.0).collect();
                    if let Ok(cost) = cost_of(&beta, &mut cost_fn) {
                        offer(Candidate { beta, reduction, cost, name: name.clone() }, &mut best);
                    }
                }
            }
        }

        let win = best.ok_or_else(|| HfError::Synthesis("no allocation candidate".into()))?;
        let mut terms = Vec::with_capacity(win.beta.len());
        for &(j, b) in &win.beta {
            let rest = alpha[j] - b;
            let b = if rest.abs() <= snap { alpha[j] } else { b };
            alpha[j] -= b;
            if alpha[j].abs() <= snap {
                alpha[j] = 0.0;
            }
            terms.push((b, paulis[j]));
        }
        let iteration = trace.len();
        fragments.push(fragment_from_terms(format!("alloc{iteration}"), &terms)?);
        trace.push(TraceStep {
            iteration,
            one_norm_before: before,
            gamma_max: win.ratio(),
            cost: win.cost,
            reduction: win.reduction,
            chain_len: chain.len(),
            candidate: win.name,
        });
    }

    let mut rest: Vec<(f64, PauliString)> = alpha.iter().copied().zip(paulis.iter().copied()).collect();
    if h.identity_coeff() != 0.0 {
        rest.push((h.identity_coeff(), PauliString::identity(n)));
    }
    Ok(Allocation {
        fragments,
        residual: Hamiltonian::new(n, rest)?,
        trace,
    })
}

/// [`greedy_allocate`] with [`SynthesisCost`] and zero Toffoli weight.
pub fn greedy_allocate_default(h: &Hamiltonian, eps: f64) -> Result<Allocation> {
    let mut model = SynthesisCost::new(0.0);
    greedy_allocate(h, |f| model.cost(f), eps)
}

/// Drops terms with `|coeff| < delta_cut`; returns the kept part and the
/// 1-norm of what was dropped.
pub fn truncate(h: &Hamiltonian, delta_cut: f64) -> Result<(Hamiltonian, f64)> {
    if delta_cut.is_nan() || delta_cut < 0.0 {
        return Err(HfError::arg("delta_cut must be non-negative"));
    }
    let (keep, drop): (Vec<&Term>, Vec<&Term>) = h
        .terms()
        .iter()
        .partition(|t| t.pauli.is_identity() || t.coeff.abs() >= delta_cut);
    let delta = drop.iter().map(|t| t.coeff.abs()).sum();
    Ok((
        Hamiltonian::new(h.n_qubits(), keep.iter().map(|t| (t.coeff, t.pauli)))?,
        delta,
    ))
}

/// Fragment-level truncation: drops fragments whose term 1-norm is below
/// `delta_cut`.
pub fn truncate_fragments(frags: &[Fragment], delta_cut: f64) -> Result<(Vec<Fragment>, f64)> {
    if delta_cut.is_nan() || delta_cut < 0.0 {
        return Err(HfError::arg("delta_cut must be non-negative"));
    }
    let (keep, drop): (Vec<Fragment>, Vec<Fragment>) = frags.iter().cloned().partition(|f| f.term_norm() >= delta_cut);
    Ok((keep, drop.iter().map(Fragment::term_norm).sum()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::parse_hamiltonian;

    #[test]
    fn single_term_is_one_fragment() {
        let h = parse_hamiltonian("0.7 XZ").unwrap();
        let a = greedy_allocate(&h, |_| Ok(1), 1e-12).unwrap();
        assert_eq!(a.fragments.len(), 1);
        assert_eq!(a.trace.len(), 1);
        assert_eq!(a.fragments[0].terms().next().unwrap().0, 0.7);
    }

    #[test]
    fn uniform_triple_is_grouped() {
        let h = parse_hamiltonian("1 XX\n1 YY\n1 ZZ").unwrap();
        let a = greedy_allocate(&h, |_| Ok(1), 1e-12).unwrap();
        assert_eq!(a.fragments.len(), 1);
        assert_eq!(a.fragments[0].len(), 3);
        assert_eq!(a.trace[0].gamma_max, 3.0);
    }

    #[test]
    fn bad_arguments() {
        let h = parse_hamiltonian("1 XX").unwrap();
        assert!(greedy_allocate(&h, |_| Ok(1), 0.0).is_err());
        assert!(greedy_allocate(&h, |_| Ok(0), 0.1).is_err());
        assert!(greedy_allocate(&h, |_| Ok(2), 0.1).is_err());
        assert!(truncate(&h, -1.0).is_err());
    }

    #[test]
    fn truncation() {
        let h = parse_hamiltonian("1 XX\n0.01 ZZ\n-0.02 YY").unwrap();
        let (t, d) = truncate(&h, 0.0).unwrap();
        assert_eq!((t, d), (h.clone(), 0.0));
        let (t, d) = truncate(&h, 0.015).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(d, 0.01);
    }
}
