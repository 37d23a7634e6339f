//! Text-table and JSON rendering of command results.

use std::collections::BTreeSet;
use std::io::Write;

use chaoscum::montecarlo::GENERATOR;
use serde_json::{json, Value};

use crate::commands::{Cell, CrossReport, CumulantReport, DiagramListing, FmtRow};
use crate::{CliError, Format};

/// Writes rows as left-aligned columns separated by two spaces.
fn write_table(rows: &[Vec<String>], out: &mut dyn Write) -> std::io::Result<()> {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if c + 1 < row.len() {
                let pad = widths[c] - cell.chars().count();
                line.extend(std::iter::repeat_n(' ', pad));
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn cell_text(cell: &Cell) -> String {
    match cell {
        Cell::Exact(v) => format!("{v}"),
        Cell::Estimate(e) => format!("{:.6} ± {:.6}", e.estimate, e.stderr),
        Cell::Skipped(_) => "skipped".into(),
    }
}

fn cell_json(cell: &Cell) -> Value {
    match cell {
        Cell::Exact(v) => json!(v),
        Cell::Estimate(e) => serde_json::to_value(e).expect("plain struct"),
        Cell::Skipped(reason) => json!({ "skipped": reason }),
    }
}

fn write_json(v: &Value, out: &mut dyn Write) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, v).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_cumulants(
    rep: &CumulantReport,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let uses_mc = rep
        .rows
        .iter()
        .flat_map(|r| &r.cells)
        .any(|c| matches!(c, Cell::Estimate(_)));
    match format {
        Format::Table => {
            let mut rows = vec![std::iter::once("s".to_string())
                .chain(rep.methods.iter().map(|m| m.name().to_string()))
                .collect::<Vec<_>>()];
            for r in &rep.rows {
                rows.push(
                    std::iter::once(format!("κ{}", r.s))
                        .chain(r.cells.iter().map(cell_text))
                        .collect(),
                );
            }
            write_table(&rows, out)?;
            let reasons: BTreeSet<&str> = rep
                .rows
                .iter()
                .flat_map(|r| &r.cells)
                .filter_map(|c| match c {
                    Cell::Skipped(why) => Some(why.as_str()),
                    _ => None,
                })
                .collect();
            for why in reasons {
                writeln!(out, "skipped: {why}")?;
            }
            if uses_mc {
                writeln!(
                    out,
                    "montecarlo: N = {}, seed = {}, generator = {GENERATOR}",
                    rep.samples, rep.seed
                )?;
            }
        }
        Format::Json => {
            let rows: Vec<Value> = rep
                .rows
                .iter()
                .map(|r| {
                    let mut obj = serde_json::Map::new();
                    obj.insert("s".into(), json!(r.s));
                    for (m, c) in rep.methods.iter().zip(&r.cells) {
                        obj.insert(m.name().into(), cell_json(c));
                    }
                    Value::Object(obj)
                })
                .collect();
            let mut v = json!({
                "command": "cumulants",
                "methods": rep.methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
                "s_max": rep.s_max,
                "rows": rows,
            });
            if uses_mc {
                v["montecarlo"] =
                    json!({ "N": rep.samples, "seed": rep.seed, "generator": GENERATOR });
            }
            write_json(&v, out)?;
        }
    }
    Ok(())
}

const ZERO_TOL_NOTE: &str = "tolerance must be positive: the exact routes sum the same \
quantity in different orders, so they agree only up to floating-point rounding";

pub fn write_crossvalidate(
    rep: &CrossReport,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let verdict = if rep.passed() { "PASS" } else { "FAIL" };
    match format {
        Format::Table => {
            writeln!(out, "comparisons: {}", rep.comparisons)?;
            if rep.skipped > 0 {
                writeln!(out, "diagram route skipped (edge cap): {}", rep.skipped)?;
            }
            if let Some(w) = &rep.worst {
                writeln!(
                    out,
                    "worst: q={} d={} s={} kernel={}  {}={}  {}={}  relative={:e}",
                    w.q,
                    w.d,
                    w.s,
                    w.kernel,
                    w.left.0.name(),
                    w.left.1,
                    w.right.0.name(),
                    w.right.1,
                    w.relative
                )?;
            }
            writeln!(out, "tolerance: {:e}", rep.tol)?;
            if !rep.tolerance_valid() {
                writeln!(out, "note: {ZERO_TOL_NOTE}")?;
            }
            writeln!(out, "result: {verdict}")?;
        }
        Format::Json => {
            let worst = rep.worst.as_ref().map(|w| {
                json!({
                    "q": w.q, "d": w.d, "s": w.s, "kernel": w.kernel,
                    "left": { "method": w.left.0.name(), "value": w.left.1 },
                    "right": { "method": w.right.0.name(), "value": w.right.1 },
                    "relative": w.relative,
                })
            });
            let mut v = json!({
                "command": "crossvalidate",
                "comparisons": rep.comparisons,
                "diagram_skipped": rep.skipped,
                "tolerance": rep.tol,
                "worst": worst,
                "passed": rep.passed(),
            });
            if !rep.tolerance_valid() {
                v["note"] = json!(ZERO_TOL_NOTE);
            }
            write_json(&v, out)?;
        }
    }
    Ok(())
}

pub fn write_fmt_demo(
    rows: &[FmtRow],
    s_max: usize,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    match format {
        Format::Table => {
            let mut header = vec!["n".to_string(), "‖f⊗̃₁f‖".into(), "(4n)^-1/2".into()];
            header.extend((2..=s_max).map(|s| format!("κ{s}")));
            if s_max >= 4 {
                header.push("12/n".into());
            }
            let mut table = vec![header];
            for r in rows {
                let mut line = vec![
                    r.n.to_string(),
                    format!("{:.12e}", r.contraction_norm),
                    format!("{:.12e}", r.expected_norm()),
                ];
                line.extend(r.kappas.iter().map(|k| format!("{k:.12e}")));
                if s_max >= 4 {
                    line.push(format!("{:.12e}", r.expected_kappa4()));
                }
                table.push(line);
            }
            write_table(&table, out)?;
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let kappas: serde_json::Map<String, Value> = r
                        .kappas
                        .iter()
                        .enumerate()
                        .map(|(i, k)| ((i + 2).to_string(), json!(k)))
                        .collect();
                    json!({
                        "n": r.n,
                        "contraction_norm": r.contraction_norm,
                        "expected_norm": r.expected_norm(),
                        "kappa": kappas,
                        "expected_kappa4": r.expected_kappa4(),
                    })
                })
                .collect();
            write_json(
                &json!({ "command": "fmt-demo", "s_max": s_max, "rows": rows }),
                out,
            )?;
        }
    }
    Ok(())
}

pub fn write_diagrams(
    listing: &DiagramListing,
    format: Format,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    match (format, &listing.lines) {
        (Format::Table, None) => writeln!(out, "empty: sq odd")?,
        (Format::Table, Some(lines)) => {
            for l in lines {
                writeln!(out, "{l}")?;
            }
            writeln!(out, "count: {}", lines.len())?;
        }
        (Format::Json, lines) => {
            let graphs: Vec<Value> = lines
                .iter()
                .flatten()
                .map(|l| {
                    let (edges, weight) = l.split_once('\t').expect("dump line has a weight");
                    json!({ "edges": edges, "weight": weight })
                })
                .collect();
            write_json(
                &json!({
                    "command": "diagrams",
                    "s": listing.s,
                    "q": listing.q,
                    "empty": lines.is_none(),
                    "count": graphs.len(),
                    "graphs": graphs,
                }),
                out,
            )?;
        }
    }
    Ok(())
}
