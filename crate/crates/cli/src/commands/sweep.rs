use std::path::{Path, PathBuf};

use hamforge::qdrift::{lambda, lambda_prime, reduction_factors, single_fragments, sweep, sweep_csv, Mode, QdriftConfig};
use hamforge::synth::synthesize_with;
use serde_json::json;

use crate::args::SweepArgs;
use crate::error::{CliError, CliResult};
use crate::output::{run_with_manifest, SCHEMA_VERSION};
use crate::source;

/// Parses `4,8,16` or an ellipsis list `a,b,...,c`. The ellipsis continues
/// geometrically when `b` is an integer multiple (at least 2) of `a`, and
/// arithmetically otherwise, stopping at `c`.
pub fn parse_ns(s: &str) -> CliResult<Vec<usize>> {
    let bad = |m: &str| CliError::Input(format!("--Ns {s:?}: {m}"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<usize>().map_err(|_| bad(&format!("{p:?} is not a count")));
    let mut ns = Vec::new();
    if let Some(at) = parts.iter().position(|p| *p == "...") {
        if at != 2 || parts.len() != 4 {
            return Err(bad("expected a,b,...,c"));
        }
        let (a, b, c) = (num(parts[0])?, num(parts[1])?, num(parts[3])?);
        if a == 0 || b <= a || c < b {
            return Err(bad("need 0 < a < b <= c"));
        }
        let mut x = a;
        if b % a == 0 {
            let r = b / a;
            while x <= c {
                ns.push(x);
                x = match x.checked_mul(r) {
                    Some(v) => v,
                    None => break,
                };
            }
        } else {
            while x <= c {
                ns.push(x);
                x += b - a;
            }
        }
    } else {
        for p in parts {
            ns.push(num(p)?);
        }
    }
    if ns.is_empty() || ns.contains(&0) {
        return Err(bad("step counts must be positive"));
    }
    Ok(ns)
}

fn split_out(path: &Path) -> (PathBuf, String, String) {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map_or("sweep.csv".into(), |s| s.to_string_lossy().into_owned());
    let stem = path.file_stem().map_or("sweep".into(), |s| s.to_string_lossy().into_owned());
    (dir.to_path_buf(), name, stem)
}

pub fn run(a: &SweepArgs) -> CliResult<()> {
    let (dir, name, stem) = split_out(&a.out);
    run_with_manifest("sweep", &dir, Some(a.seed), a, |out| {
        let ns = parse_ns(&a.ns)?;
        let loaded = source::load(&a.source, None, a.seed, 1e-12)?;
        let grouped = loaded.fragments();
        let mut costs = Vec::with_capacity(loaded.fragments.len());
        for p in &loaded.fragments {
            costs.push(match p.expected {
                Some(c) => c,
                None => synthesize_with(&p.fragment, a.t, p.route)?.cost.pair(),
            });
        }
        let h = &loaded.hamiltonian;
        let singles = single_fragments(h);
        let cfg = QdriftConfig {
            t: a.t,
            n_steps: ns[0],
            m_samples: a.m,
            k_states: a.k,
            seed: a.seed,
            mode: Mode::Grouped,
        };
        cfg.validate()?;
        let (single, grouped_rows) = sweep(h, &singles, &grouped, &costs, &ns, &cfg)?;
        out.write(&name, &sweep_csv(&single, &grouped_rows))?;
        let factors = reduction_factors(&single, &grouped_rows, a.target);
        let note = factors.as_ref().err().map(ToString::to_string);
        let factors = factors.ok();
        let summary = json!({
            "schema_version": SCHEMA_VERSION,
            "model": loaded.name,
            "t": a.t,
            "Ns": ns,
            "M": a.m,
            "K": a.k,
            "seed": a.seed,
            "lambda": lambda(&grouped),
            "lambda_prime": lambda_prime(&singles),
            "factors": factors,
            "note": note,
        });
        out.write_json(format!("{stem}.summary.json"), &summary)?;
        match (factors, note) {
            (Some(f), _) => println!(
                "{}: iteration factor {:.3}, rotation factor {:.3} at error {:.3e}",
                loaded.name, f.iteration_factor, f.rotation_factor, f.target_error
            ),
            (None, n) => println!("{}: no reduction factors ({})", loaded.name, n.unwrap_or_default()),
        }
        Ok(())
    })
}
