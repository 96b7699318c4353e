//! Loading Hamiltonians and their fragments from the command line.

use std::path::Path;

use hamforge::grouping::greedy_allocate_default;
use hamforge::models::{builtin, parse_grouping, ReferenceGrouping, BUILTIN_NAMES};
use hamforge::synth::Route;
use hamforge::{parse_hamiltonian, Fragment, Hamiltonian, HfError};
use serde_json::{json, Value};

use crate::args::SourceArgs;
use crate::error::{CliError, CliResult};
use crate::output::SCHEMA_VERSION;

/// A fragment to compile, with its route and reference cost if known.
#[derive(Debug, Clone)]
pub struct Planned {
    pub fragment: Fragment,
    pub route: Route,
    pub expected: Option<(usize, usize)>,
}

/// A Hamiltonian split into fragments.
#[derive(Debug)]
pub struct Loaded {
    pub name: String,
    pub hamiltonian: Hamiltonian,
    pub fragments: Vec<Planned>,
    /// Terms left outside every fragment, identity included.
    pub residual: Hamiltonian,
    /// Greedy allocation trace, when the grouping was computed here.
    pub trace: Option<Value>,
}

impl Loaded {
    pub fn fragments(&self) -> Vec<Fragment> {
        self.fragments.iter().map(|p| p.fragment.clone()).collect()
    }

    /// Grouping JSON in the format `--grouping` reads back. `costs`
    /// replaces the expected costs when given.
    pub fn grouping_json(&self, costs: Option<&[(usize, usize)]>) -> Value {
        let groups: Vec<Value> = self
            .fragments
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (rot, pairs) = costs.map(|c| c[i]).or(p.expected).map_or((None, None), |(r, t)| (Some(r), Some(t)));
                json!({
                    "label": p.fragment.label,
                    "scale": p.fragment.scale,
                    "members": p.fragment.paulis.iter().map(|(u, s)| json!([u, s.to_string()])).collect::<Vec<_>>(),
                    "rotations": rot,
                    "toffoli_pairs": pairs,
                    "route": p.route,
                })
            })
            .collect();
        let mut v = json!({
            "schema_version": SCHEMA_VERSION,
            "model": self.name,
            "groups": groups,
            "residual": self.residual.terms().iter().map(|t| json!([t.coeff, t.pauli.to_string()])).collect::<Vec<_>>(),
        });
        if let Some(trace) = &self.trace {
            v["trace"] = trace.clone();
        }
        v
    }
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(CliError::io(path))
}

pub fn read_hamiltonian(path: &Path) -> CliResult<Hamiltonian> {
    let h = parse_hamiltonian(&read_text(path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if h.without_identity().is_empty() {
        return Err(CliError::Input(format!("{}: no non-identity terms", path.display())));
    }
    Ok(h)
}

/// Reads a grouping file. Malformed JSON is an input error; groups that
/// fail their own checks are verification failures.
pub fn read_grouping(path: &Path) -> CliResult<ReferenceGrouping> {
    parse_grouping(&read_text(path)?).map_err(|e| match e {
        HfError::Parse { .. } => CliError::Input(format!("{}: {e}", path.display())),
        _ => CliError::Verification(format!("{}: {e}", path.display())),
    })
}

fn load_model(name: &str, seed: u64) -> CliResult<(Hamiltonian, ReferenceGrouping)> {
    builtin(name, seed).map_err(|_| {
        CliError::Input(format!(
            "unknown model {name:?}; expected one of {}",
            BUILTIN_NAMES.join(", ")
        ))
    })
}

fn from_grouping(name: String, h: Hamiltonian, g: ReferenceGrouping) -> CliResult<Loaded> {
    if let Some(r) = g.groups.iter().find(|r| r.fragment.n_qubits() != h.n_qubits()) {
        return Err(CliError::Verification(format!(
            "fragment {:?} acts on {} qubits, Hamiltonian on {}",
            r.fragment.label,
            r.fragment.n_qubits(),
            h.n_qubits()
        )));
    }
    let identity = h.terms().iter().filter(|t| t.pauli.is_identity()).map(|t| (t.coeff, t.pauli));
    let residual = Hamiltonian::new(h.n_qubits(), identity)?;
    Ok(Loaded {
        name,
        fragments: g
            .groups
            .into_iter()
            .map(|r| Planned {
                fragment: r.fragment,
                route: r.route,
                expected: Some((r.expected_rotations, r.expected_toffoli_pairs)),
            })
            .collect(),
        residual,
        hamiltonian: h,
        trace: None,
    })
}

/// Resolves `--model`, `--hamiltonian` and an optional grouping file.
/// A Hamiltonian file without a grouping goes through the greedy allocation.
pub fn load(src: &SourceArgs, grouping: Option<&Path>, seed: u64, eps: f64) -> CliResult<Loaded> {
    let parsed = grouping.map(read_grouping).transpose()?;
    let (name, h, reference) = match (&src.model, &src.hamiltonian) {
        (Some(m), _) => {
            let (h, g) = load_model(m, seed)?;
            (m.clone(), h, Some(g))
        }
        (None, Some(path)) => (path.display().to_string(), read_hamiltonian(path)?, None),
        (None, None) => match &parsed {
            Some(g) => {
                let (h, _) = load_model(&g.model, seed)?;
                (g.model.clone(), h, None)
            }
            None => return Err(CliError::Input("one of --model or --hamiltonian is required".into())),
        },
    };
    match parsed.or(reference) {
        Some(g) => from_grouping(name, h, g),
        None => {
            let a = greedy_allocate_default(&h, eps)?;
            let trace = serde_json::to_value(&a.trace).map_err(|e| CliError::Input(e.to_string()))?;
            Ok(Loaded {
                name,
                fragments: a
                    .fragments
                    .into_iter()
                    .map(|fragment| Planned {
                        fragment,
                        route: Route::Auto,
                        expected: None,
                    })
                    .collect(),
                residual: a.residual,
                hamiltonian: h,
                trace: Some(trace),
            })
        }
    }
}
