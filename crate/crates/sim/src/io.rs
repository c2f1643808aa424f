//! Text formats: quantization tables, solver traces and trial records.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use smallcell_core::dual::TracePoint;
use smallcell_core::signaling::QuantizationTable;

use crate::experiment::TrialRecord;

pub const RECORD_COLUMNS: [&str; 10] = [
    "trial_id",
    "scenario",
    "num_links",
    "num_tones",
    "algorithm",
    "objective_bps",
    "runtime_us",
    "iterations",
    "collisions",
    "seed",
];

/// Written in place of numbers for oracle runs that were skipped.
pub const SKIPPED: &str = "skipped";

/// Two whitespace-separated columns, `gain_level f_value`, one level per
/// line in increasing order.
pub fn write_table(path: &Path, table: &QuantizationTable) -> Result<()> {
    let mut out = String::from("# gain_level f_value\n");
    for (level, f) in table.levels().iter().zip(table.f_values()) {
        out.push_str(&format!("{level:e} {f}\n"));
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn parse_table(text: &str) -> Result<QuantizationTable> {
    let mut levels = Vec::new();
    let mut f_values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let cols: Vec<&str> = content.split_whitespace().collect();
        if cols.len() != 2 {
            bail!("line {}: expected `gain_level f_value`", idx + 1);
        }
        levels.push(cols[0].parse::<f64>().with_context(|| format!("line {}", idx + 1))?);
        f_values.push(cols[1].parse::<f64>().with_context(|| format!("line {}", idx + 1))?);
    }
    Ok(QuantizationTable::new(levels, f_values)?)
}

pub fn read_table(path: &Path) -> Result<QuantizationTable> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_table(&text)
}

pub fn write_trace<W: Write>(out: W, trace: &[TracePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "dual_value", "best_dual", "subgradient_norm", "step", "bound"])?;
    for p in trace {
        w.write_record([
            p.t.to_string(),
            p.dual_value.to_string(),
            p.best_dual.to_string(),
            p.subgradient_norm.to_string(),
            p.step.to_string(),
            p.bound.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Records in the fixed column order, one row each.
pub fn write_records<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        let (objective, runtime, iterations) = match r.objective_bps {
            Some(obj) => (obj.to_string(), r.runtime_us.to_string(), r.iterations.to_string()),
            None => (SKIPPED.to_owned(), SKIPPED.to_owned(), SKIPPED.to_owned()),
        };
        w.write_record([
            r.trial_id.to_string(),
            r.scenario.to_string(),
            r.num_links.to_string(),
            r.num_tones.to_string(),
            r.algorithm.to_string(),
            objective,
            runtime,
            iterations,
            r.collisions.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_file(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_records(std::io::BufWriter::new(file), records)
}
