use hamforge::dense::{dist_up_to_phase, expm_i_hermitian};
use hamforge::diag::{diagonalize, verify_diagonalization};
use hamforge::qdrift::substream;
use hamforge::synth::{synthesize_with, Route};
use hamforge::{Fragment, Hamiltonian, HfError, PauliString};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::args::VerifyArgs;
use crate::error::{CliError, CliResult};
use crate::output::{run_with_manifest, SCHEMA_VERSION};
use crate::source::{self, Loaded};

/// Absolute tolerance on reconstructed Pauli coefficients.
const RECONSTRUCTION_TOL: f64 = 1e-10;
/// RNG domain of the trial times.
const TRIAL_DOMAIN: u64 = 3;

#[derive(Debug, Serialize)]
struct TermMismatch {
    pauli: String,
    expected: f64,
    got: f64,
    fragments: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Trial {
    t: f64,
    deviation: f64,
}

#[derive(Debug, Serialize)]
struct FragmentReport {
    label: String,
    ok: bool,
    diagonalization_ok: bool,
    diagonalization_mismatches: Vec<String>,
    cost: Option<(usize, usize)>,
    expected: Option<(usize, usize)>,
    trials: Vec<Trial>,
    max_deviation: f64,
    error: Option<String>,
}

fn reconstruction(loaded: &Loaded) -> CliResult<Vec<TermMismatch>> {
    let h = &loaded.hamiltonian;
    let n = h.n_qubits();
    let frag_terms = loaded.fragments.iter().flat_map(|p| p.fragment.terms());
    let rest = loaded.residual.terms().iter().map(|t| (t.coeff, t.pauli));
    let sum = Hamiltonian::new(n, frag_terms.chain(rest))?;
    let mut seen: Vec<PauliString> = Vec::new();
    let mut out = Vec::new();
    for t in h.terms().iter().chain(sum.terms()) {
        let p = t.pauli.unsigned();
        if seen.contains(&p) {
            continue;
        }
        seen.push(p);
        let (want, got) = (h.coeff_of(&p), sum.coeff_of(&p));
        if (want - got).abs() > RECONSTRUCTION_TOL {
            let fragments = loaded
                .fragments
                .iter()
                .filter(|f| f.fragment.paulis.iter().any(|(_, q)| q.unsigned() == p))
                .map(|f| f.fragment.label.clone())
                .collect();
            out.push(TermMismatch {
                pauli: p.letters(),
                expected: want,
                got,
                fragments,
            });
        }
    }
    Ok(out)
}

fn check_fragment(frag: &Fragment, route: Route, expected: Option<(usize, usize)>, a: &VerifyArgs, index: usize) -> Result<FragmentReport, HfError> {
    let blocks = diagonalize(frag)?;
    let diag = verify_diagonalization(&blocks, frag);
    let cost = synthesize_with(frag, 1.0, route)?.cost.pair();
    let h = frag.to_hamiltonian()?.to_dense()?;
    let mut rng = substream(a.seed, TRIAL_DOMAIN, index as u64, 0);
    let mut trials = Vec::with_capacity(a.trials);
    for _ in 0..a.trials {
        let t = rng.gen_range(0.1..2.0);
        let u = synthesize_with(frag, t, route)?.circuit.system_unitary()?;
        let deviation = dist_up_to_phase(&u, &expm_i_hermitian(&h, -t));
        trials.push(Trial { t, deviation });
    }
    let max_deviation = trials.iter().map(|x| x.deviation).fold(0.0, f64::max);
    let cost_ok = expected.is_none_or(|e| e == cost);
    Ok(FragmentReport {
        label: frag.label.clone(),
        ok: diag.ok && cost_ok && max_deviation <= a.tol,
        diagonalization_ok: diag.ok,
        diagonalization_mismatches: diag.mismatches,
        cost: Some(cost),
        expected,
        trials,
        max_deviation,
        error: None,
    })
}

pub fn run(a: &VerifyArgs) -> CliResult<()> {
    run_with_manifest("verify", &a.out, Some(a.seed), a, |out| {
        let loaded = source::load(&a.source, a.grouping.as_deref(), a.seed, 1e-12)?;
        let terms = reconstruction(&loaded)?;
        let mut reports = Vec::with_capacity(loaded.fragments.len());
        for (i, p) in loaded.fragments.iter().enumerate() {
            let r = match check_fragment(&p.fragment, p.route, p.expected, a, i) {
                Ok(r) => r,
                Err(e @ HfError::SizeGuard { .. }) => return Err(e.into()),
                Err(e) => FragmentReport {
                    label: p.fragment.label.clone(),
                    ok: false,
                    diagonalization_ok: false,
                    diagonalization_mismatches: Vec::new(),
                    cost: None,
                    expected: p.expected,
                    trials: Vec::new(),
                    max_deviation: f64::NAN,
                    error: Some(e.to_string()),
                },
            };
            println!(
                "{:<4} {:<40} max deviation {:.3e}{}",
                if r.ok { "ok" } else { "FAIL" },
                r.label,
                r.max_deviation,
                r.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
            );
            reports.push(r);
        }
        let mut failures: Vec<String> = reports.iter().filter(|r| !r.ok).map(|r| format!("fragment {:?}", r.label)).collect();
        for m in &terms {
            println!("FAIL term {} expected {} got {} in {:?}", m.pauli, m.expected, m.got, m.fragments);
            failures.push(format!("term {} (fragments {:?})", m.pauli, m.fragments));
        }
        let max_deviation = reports.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
        let status = if failures.is_empty() { "pass" } else { "fail" };
        println!("{status}: {} fragments, {} trials each, max deviation {max_deviation:.3e}", reports.len(), a.trials);
        out.write_json(
            "report.json",
            &json!({
                "schema_version": SCHEMA_VERSION,
                "model": loaded.name,
                "status": status,
                "tol": a.tol,
                "trials": a.trials,
                "max_deviation": max_deviation,
                "reconstruction_mismatches": terms,
                "fragments": reports,
            }),
        )?;
        if failures.is_empty() {
            Ok(())
        } else {
            Err(CliError::Verification(failures.join(", ")))
        }
    })
}
