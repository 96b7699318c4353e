//! `e^{-iHt}` for a commuting fragment: diagonalize, synthesize the phase,
//! undo the diagonalization.

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CostReport, Gate};
use crate::diag::{diagonalize, Diagonalization, LibraryGroup};
use crate::error::{HfError, Result};
use crate::hamiltonian::Fragment;
use crate::phase::{parity_reduction, phase_table, synthesize_phase, synthesize_phase_shifted, PhaseTerm};
use crate::structured::{structured_builder, PhaseBuilder, MAX_STRUCTURED_VARS};
use crate::templates;

/// Which phase synthesizer to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// A matching template, else the cheaper of the other two.
    #[default]
    Auto,
    /// Two-ancilla minterm circuit.
    Generic,
    /// Bucket synthesis over affine supports.
    Structured,
}

impl std::str::FromStr for Route {
    type Err = HfError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Route::Auto),
            "generic" => Ok(Route::Generic),
            "structured" => Ok(Route::Structured),
            _ => Err(HfError::arg(format!("unknown route {s:?}"))),
        }
    }
}

/// One synthesized block with the alternatives that were costed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSynthesis {
    pub method: String,
    pub cost: (usize, usize),
    pub alternatives: Vec<(String, (usize, usize))>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synthesis {
    pub circuit: Circuit,
    pub cost: CostReport,
    pub blocks: Vec<BlockSynthesis>,
}

/// Diagonal phase problem of one block after parity reduction.
#[derive(Debug, Clone)]
pub struct PhaseProblem {
    pub n_system: usize,
    pub group: Option<LibraryGroup>,
    /// System qubit of each reduced variable.
    pub pivots: Vec<usize>,
    /// CNOTs that move the parities onto the pivots.
    pub cnots: Vec<(usize, usize)>,
    /// Reduced phase terms (masks over pivot positions).
    pub terms: Vec<PhaseTerm>,
    /// Library member label `(side, index)` of each term, e.g. `('b', 3)`.
    pub labels: Vec<Option<(char, u8)>>,
}

impl PhaseProblem {
    pub fn n_vars(&self) -> usize {
        self.pivots.len()
    }

    /// Full phase table over the reduced variables.
    pub fn table(&self) -> Result<Vec<f64>> {
        Ok(phase_table(self.n_vars(), &self.terms)?.values().to_vec())
    }

    /// Table restricted to terms with the given side.
    pub fn side_table(&self, side: char) -> Result<Vec<f64>> {
        let terms: Vec<PhaseTerm> = self
            .terms
            .iter()
            .zip(&self.labels)
            .filter(|(_, l)| l.map(|l| l.0) == Some(side))
            .map(|(t, _)| *t)
            .collect();
        Ok(phase_table(self.n_vars(), &terms)?.values().to_vec())
    }

    /// Wraps a reduced-variable phase circuit with the parity CNOTs.
    pub fn wrap(&self, core: &Circuit) -> Result<Circuit> {
        let mut c = Circuit::new(self.n_system, core.n_ancilla());
        let pre: Vec<Gate> = self.cnots.iter().map(|&(a, b)| Gate::cnot(a, b)).collect();
        c.extend(pre.iter().cloned())?;
        c.extend(core.gates().iter().cloned())?;
        c.extend(pre.iter().rev().cloned())?;
        Ok(c)
    }

    /// Solves a builder over the reduced variables.
    pub fn realize(&self, b: &PhaseBuilder) -> Result<Circuit> {
        let core = b.solve(&self.table()?, self.n_system, &self.pivots)?;
        self.wrap(&core)
    }
}

/// Builds the phase problem of a diagonalized block at time `t`, with
/// parity reduction.
pub fn phase_problem(frag: &Fragment, d: &Diagonalization, t: f64) -> PhaseProblem {
    phase_problem_with(frag, d, t, true)
}

/// As [`phase_problem`]; `reduce = false` keeps one variable per qubit of
/// the support instead.
pub fn phase_problem_with(frag: &Fragment, d: &Diagonalization, t: f64, reduce: bool) -> PhaseProblem {
    let n = d.n_qubits();
    let kept: Vec<_> = d.zterms.iter().filter(|(_, z)| z.z_mask != 0).collect();
    let raw: Vec<PhaseTerm> = kept
        .iter()
        .map(|(c, z)| PhaseTerm {
            coeff: t * c,
            z_mask: z.z_mask,
            sign: -z.sign,
        })
        .collect();
    let labels: Vec<Option<(char, u8)>> = kept
        .iter()
        .map(|(_, z)| {
            let p = frag.paulis[z.source_index].1;
            d.group.and_then(|g| {
                g.members()
                    .iter()
                    .find(|(_, m)| m.x_mask() == p.x_mask() && m.z_mask() == p.z_mask())
                    .and_then(|(l, _)| {
                        let mut cs = l.chars();
                        Some((cs.next()?, cs.as_str().parse().ok()?))
                    })
            })
        })
        .collect();
    if !reduce {
        let support = raw.iter().fold(0u64, |m, t| m | t.z_mask);
        let pivots: Vec<usize> = (0..n).filter(|q| support >> q & 1 == 1).collect();
        let terms = raw
            .iter()
            .map(|t| {
                let mut m = 0u64;
                for (i, &q) in pivots.iter().enumerate() {
                    m |= (t.z_mask >> q & 1) << i;
                }
                PhaseTerm { z_mask: m, ..*t }
            })
            .collect();
        return PhaseProblem {
            n_system: n,
            group: d.group,
            pivots,
            cnots: vec![],
            terms,
            labels,
        };
    }
    let masks: Vec<u64> = raw.iter().map(|t| t.z_mask).collect();
    let red = parity_reduction(n, &masks);
    let terms = raw
        .iter()
        .zip(&red.reduced)
        .map(|(t, &m)| PhaseTerm { z_mask: m, ..*t })
        .collect();
    PhaseProblem {
        n_system: n,
        group: d.group,
        pivots: red.pivots,
        cnots: red.cnots,
        terms,
        labels,
    }
}

/// Candidate splits of the phase into independently synthesized parts.
pub fn part_splits(p: &PhaseProblem) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut out = vec![vec![p.table()?]];
    let has = |c: char| p.labels.iter().any(|l| l.map(|l| l.0) == Some(c));
    if has('a') && has('b') {
        out.push(vec![p.side_table('a')?, p.side_table('b')?]);
    }
    Ok(out)
}

/// Cheapest structured circuit over the candidate splits.
pub fn structured_phase(p: &PhaseProblem) -> Result<Circuit> {
    if p.n_vars() > MAX_STRUCTURED_VARS {
        return Err(HfError::SizeGuard {
            what: "structured synthesis variables",
            got: p.n_vars(),
            limit: MAX_STRUCTURED_VARS,
        });
    }
    let mut best: Option<(Circuit, (usize, usize))> = None;
    let mut last_err = None;
    for parts in part_splits(p)? {
        match structured_builder(p.n_vars(), &parts).and_then(|b| p.realize(&b)) {
            Ok(c) => {
                let cost = c.cost_report()?.pair();
                if best.as_ref().is_none_or(|(_, bc)| cost < *bc) {
                    best = Some((c, cost));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.map(|(c, _)| c)
        .ok_or_else(|| last_err.unwrap_or_else(|| HfError::Synthesis("no structured split".into())))
}

/// Generic two-ancilla synthesis of the block phase.
pub fn generic_phase(p: &PhaseProblem) -> Result<Circuit> {
    remap_core(p, synthesize_phase(p.n_vars(), &p.terms)?)
}

/// [`generic_phase`] with the global-phase shift that minimises the number
/// of distinct magnitudes.
pub fn generic_phase_shifted(p: &PhaseProblem) -> Result<Circuit> {
    remap_core(p, synthesize_phase_shifted(p.n_vars(), &p.terms)?)
}

fn remap_core(p: &PhaseProblem, core: Circuit) -> Result<Circuit> {
    // The core acts on reduced variables 0..r; move them to the pivots.
    let r = p.n_vars();
    let map = |q: usize| if q < r { p.pivots[q] } else { p.n_system + q - r };
    let gates: Vec<Gate> = core.gates().iter().map(|g| remap_gate(g, &map)).collect();
    let c = Circuit::from_gates(p.n_system, core.n_ancilla(), gates)?;
    p.wrap(&c)
}

fn remap_gate(g: &Gate, map: &impl Fn(usize) -> usize) -> Gate {
    match g.clone() {
        Gate::H(q) => Gate::H(map(q)),
        Gate::S(q) => Gate::S(map(q)),
        Gate::Sdg(q) => Gate::Sdg(map(q)),
        Gate::X(q) => Gate::X(map(q)),
        Gate::Z(q) => Gate::Z(map(q)),
        Gate::Cnot { control, target } => Gate::cnot(map(control), map(target)),
        Gate::Rz { target, angle } => Gate::Rz {
            target: map(target),
            angle,
        },
        Gate::CRz {
            control,
            target,
            angle,
        } => Gate::CRz {
            control: map(control),
            target: map(target),
            angle,
        },
        Gate::Mcx {
            controls,
            target,
            tag,
        } => Gate::Mcx {
            controls: controls.into_iter().map(map).collect(),
            target: map(target),
            tag,
        },
        Gate::Mcrz {
            controls,
            target,
            angle,
        } => Gate::Mcrz {
            controls: controls.into_iter().map(map).collect(),
            target: map(target),
            angle,
        },
        Gate::Toffoli {
            controls,
            target,
            tag,
        } => Gate::Toffoli {
            controls: [map(controls[0]), map(controls[1])],
            target: map(target),
            tag,
        },
    }
}

/// Phase circuit of one block under `route`, plus the costed
/// alternatives.
pub fn synthesize_block_phase(
    p: &PhaseProblem,
    raw: &PhaseProblem,
    route: Route,
) -> Result<(Circuit, BlockSynthesis)> {
    let mut cands: Vec<(String, Circuit)> = Vec::new();
    let mut alternatives = Vec::new();
    let mut push = |name: &str, r: Result<Circuit>, cands: &mut Vec<(String, Circuit)>| -> Result<()> {
        if let Ok(c) = r {
            alternatives.push((name.to_string(), c.cost_report()?.pair()));
            cands.push((name.to_string(), c));
        }
        Ok(())
    };
    match route {
        Route::Generic => push("generic", generic_phase(p), &mut cands)?,
        Route::Structured => push("structured", structured_phase(p), &mut cands)?,
        Route::Auto => {
            if let Some((name, c)) = templates::best_template(raw)? {
                push(&format!("template:{name}"), Ok(c), &mut cands)?;
            }
            push("structured", structured_phase(p), &mut cands)?;
            push("generic", generic_phase(p), &mut cands)?;
            push("generic-shifted", generic_phase_shifted(p), &mut cands)?;
        }
    }
    let pick = if route == Route::Auto && cands.first().is_some_and(|c| c.0.starts_with("template:")) {
        0
    } else {
        let mut best = 0;
        for (i, (_, c)) in cands.iter().enumerate() {
            if c.cost_report()?.pair() < cands[best].1.cost_report()?.pair() {
                best = i;
            }
        }
        best
    };
    if cands.is_empty() {
        return Err(HfError::Synthesis("no synthesizer produced a circuit".into()));
    }
    let (name, c) = cands.swap_remove(pick);
    let cost = c.cost_report()?.pair();
    Ok((
        c,
        BlockSynthesis {
            method: name,
            cost,
            alternatives,
        },
    ))
}

/// `e^{-i H_frag t}` as `W^† . phase . W` per block.
pub fn synthesize_with(frag: &Fragment, t: f64, route: Route) -> Result<Synthesis> {
    let n = frag.n_qubits();
    let mut circuit = Circuit::new(n, 0);
    let mut blocks = Vec::new();
    for d in diagonalize(frag)? {
        let p = phase_problem(frag, &d, t);
        let raw = phase_problem_with(frag, &d, t, false);
        let (phase, info) = synthesize_block_phase(&p, &raw, route)?;
        let block = d.w.inverse().concat(&phase)?.concat(&d.w)?;
        circuit = circuit.concat(&block)?;
        blocks.push(info);
    }
    let cost = circuit.cost_report()?;
    Ok(Synthesis {
        circuit,
        cost,
        blocks,
    })
}

/// Default routing.
pub fn synthesize_exponential(frag: &Fragment, t: f64) -> Result<Circuit> {
    Ok(synthesize_with(frag, t, Route::Auto)?.circuit)
}
