use hamforge::qdrift::{bound_mult, bound_trunc, bound_trunc_total, expected_cost, lambda, lambda_prime};
use hamforge::synth::synthesize_with;
use serde_json::{json, Value};

use crate::args::BoundsArgs;
use crate::error::{CliError, CliResult};
use crate::output::{run_with_manifest, SCHEMA_VERSION};
use crate::source;

/// Evaluates the bounds as JSON. Fields whose inputs are missing are null.
pub fn evaluate(a: &BoundsArgs) -> CliResult<Value> {
    let has_source = a.source.model.is_some() || a.source.hamiltonian.is_some();
    let loaded = has_source.then(|| source::load(&a.source, None, a.seed, 1e-12)).transpose()?;
    let frags = loaded.as_ref().map(|l| l.fragments());
    let lam = a.lambda.or(frags.as_deref().map(lambda));
    let lam_p = a.lambda_prime.or(frags.as_deref().map(lambda_prime));
    if lam.is_none() && lam_p.is_none() {
        return Err(CliError::Input("give --model, --hamiltonian, --lambda or --lambda-prime".into()));
    }
    if let Some(bad) = [lam, lam_p].into_iter().flatten().find(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(CliError::Input(format!("1-norms must be finite and non-negative, got {bad}")));
    }
    let trunc = |f: fn(f64, f64, usize, f64) -> hamforge::Result<f64>, d: f64| lam.map(|l| f(l, a.t, a.n, d)).transpose();
    let cost = match (&loaded, &frags) {
        (Some(l), Some(fs)) => {
            let mut rot = Vec::with_capacity(fs.len());
            for p in &l.fragments {
                let c = match p.expected {
                    Some(c) => c,
                    None => synthesize_with(&p.fragment, a.t, p.route)?.cost.pair(),
                };
                rot.push(c.0 as f64);
            }
            Some(expected_cost(fs, &rot, a.n, a.eps_c)?)
        }
        _ => None,
    };
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "model": loaded.as_ref().map(|l| l.name.clone()),
        "t": a.t,
        "N": a.n,
        "delta": a.delta,
        "eps_c": a.eps_c,
        "lambda": lam,
        "lambda_prime": lam_p,
        "epsilon_q": trunc(bound_trunc, 0.0)?,
        "bound_trunc": trunc(bound_trunc, a.delta)?,
        "bound_trunc_total": trunc(bound_trunc_total, a.delta)?,
        "bound_mult": lam_p.map(|l| bound_mult(l, a.t, a.n)).transpose()?,
        "expected_rotations": cost,
    }))
}

pub fn run(a: &BoundsArgs) -> CliResult<()> {
    run_with_manifest("bounds", &a.out, Some(a.seed), a, |out| {
        let v = evaluate(a)?;
        out.write_json("bounds.json", &v)?;
        println!("{}", serde_json::to_string_pretty(&v).map_err(|e| CliError::Input(e.to_string()))?);
        Ok(())
    })
}
