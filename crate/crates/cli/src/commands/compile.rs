use hamforge::synth::{synthesize_with, Synthesis};
use hamforge::CostReport;
use serde_json::json;

use crate::args::CompileArgs;
use crate::error::{CliError, CliResult};
use crate::output::{run_with_manifest, Outputs, SCHEMA_VERSION};
use crate::source::{self, Loaded};

/// One line of the printed cost table. Consecutive single-qubit field
/// fragments `Z_(k)` collapse into one `Z_i` row.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub count: usize,
    pub cost: (usize, usize),
}

fn is_field_label(label: &str) -> bool {
    label
        .strip_prefix("Z_(")
        .and_then(|s| s.strip_suffix(')'))
        .is_some_and(|k| !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()))
}

pub fn table_rows(rows: &[(String, (usize, usize))]) -> Vec<TableRow> {
    let mut out: Vec<TableRow> = Vec::new();
    for (label, cost) in rows {
        let field = is_field_label(label);
        match out.last_mut() {
            Some(last) if field && last.label == "Z_i" && last.cost == *cost => last.count += 1,
            _ => out.push(TableRow {
                label: if field { "Z_i".into() } else { label.clone() },
                count: 1,
                cost: *cost,
            }),
        }
    }
    out
}

pub fn slug(label: &str) -> String {
    let mut s = String::new();
    for ch in label.chars() {
        if ch.is_ascii_alphanumeric() {
            s.push(ch.to_ascii_lowercase());
        } else if ch == '-' {
            s.push('m');
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    let s = s.trim_matches('_');
    let s = if s.len() > 40 { &s[..40] } else { s };
    if s.is_empty() { "fragment".into() } else { s.to_string() }
}

fn print_table(name: &str, t: f64, table: &[TableRow], total: &CostReport) {
    let width = table.iter().map(|r| r.label.len() + 6).max().unwrap_or(8).max(8);
    println!("{name}, t = {t}");
    println!("{:<width$}  {:>9}  {:>13}", "fragment", "rotations", "toffoli_pairs");
    for r in table {
        let label = if r.count > 1 { format!("{} (x{})", r.label, r.count) } else { r.label.clone() };
        println!("{label:<width$}  {:>9}  {:>13}", r.cost.0, r.cost.1);
    }
    println!("{:<width$}  {:>9}  {:>13}", "total", total.rotations, total.toffoli_pairs);
}

fn compile_loaded(a: &CompileArgs, loaded: &Loaded, out: &mut Outputs) -> CliResult<()> {
    let mut synths: Vec<Synthesis> = Vec::with_capacity(loaded.fragments.len());
    for p in &loaded.fragments {
        synths.push(synthesize_with(&p.fragment, a.t, a.route.unwrap_or(p.route))?);
    }
    let width = loaded.fragments.len().to_string().len().max(2);
    let mut rows = Vec::new();
    let mut total = CostReport::default();
    let mut mismatches = Vec::new();
    for (i, (p, s)) in loaded.fragments.iter().zip(&synths).enumerate() {
        let file = format!("circuits/{i:0width$}_{}.txt", slug(&p.fragment.label));
        out.write(&file, &s.circuit.dump())?;
        total += s.cost;
        let checked = a.route.is_none() && p.expected.is_some();
        if checked && p.expected != Some(s.cost.pair()) {
            mismatches.push(format!(
                "{:?}: got {:?}, expected {:?}",
                p.fragment.label,
                s.cost.pair(),
                p.expected.unwrap_or_default()
            ));
        }
        rows.push(json!({
            "label": p.fragment.label,
            "scale": p.fragment.scale,
            "terms": p.fragment.len(),
            "route": a.route.unwrap_or(p.route),
            "methods": s.blocks.iter().map(|b| b.method.clone()).collect::<Vec<_>>(),
            "blocks": s.blocks,
            "cost": s.cost,
            "expected": p.expected.map(|(r, t)| json!({ "rotations": r, "toffoli_pairs": t })),
            "circuit": file,
        }));
    }
    let pairs: Vec<(String, (usize, usize))> = loaded
        .fragments
        .iter()
        .zip(&synths)
        .map(|(p, s)| (p.fragment.label.clone(), s.cost.pair()))
        .collect();
    let table = table_rows(&pairs);
    out.write_json(
        "cost_report.json",
        &json!({
            "schema_version": SCHEMA_VERSION,
            "model": loaded.name,
            "t": a.t,
            "table": table.iter().map(|r| json!({
                "label": r.label,
                "count": r.count,
                "rotations": r.cost.0,
                "toffoli_pairs": r.cost.1,
            })).collect::<Vec<_>>(),
            "fragments": rows,
            "totals": total,
            "mismatches": mismatches,
        }),
    )?;
    let costs: Vec<(usize, usize)> = synths.iter().map(|s| s.cost.pair()).collect();
    out.write_json("allocation.json", &loaded.grouping_json(Some(&costs)))?;
    print_table(&loaded.name, a.t, &table, &total);
    if mismatches.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("cost mismatch: {}", mismatches.join("; "))))
    }
}

pub fn run(a: &CompileArgs) -> CliResult<()> {
    run_with_manifest("compile", &a.out, Some(a.seed), a, |out| {
        let loaded = source::load(&a.source, None, a.seed, a.eps)?;
        compile_loaded(a, &loaded, out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_rows_collapse() {
        let rows: Vec<_> = ["ring XX", "Z_(1)", "Z_(2)", "Z_(3)"]
            .iter()
            .map(|l| (l.to_string(), if l.starts_with('Z') { (1, 0) } else { (2, 3) }))
            .collect();
        let t = table_rows(&rows);
        assert_eq!(t.len(), 2);
        assert_eq!(t[1], TableRow { label: "Z_i".into(), count: 3, cost: (1, 0) });
        assert!(!is_field_label("Z_()"));
    }

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(slug("XYYX, YXXY, -YYXX"), "xyyx_yxxy_myyxx");
        assert_eq!(slug("Z_(3)"), "z_3");
        assert_eq!(slug("***"), "fragment");
    }
}
