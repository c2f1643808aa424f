//! Per (algorithm, link count) aggregates of trial records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use anyhow::Result;

use crate::experiment::{Algorithm, TrialRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub num_links: usize,
    /// Records that produced an objective.
    pub trials: usize,
    pub skipped: usize,
    pub mean_mbps: f64,
    /// Sample standard deviation; zero for a single record.
    pub std_mbps: f64,
    pub mean_runtime_us: f64,
    /// Mean SOA throughput over mean IWFA throughput at the same link count;
    /// set on SOA rows when both ran.
    pub soa_iwfa_ratio: Option<f64>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(usize, Algorithm), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.num_links, r.algorithm)).or_default().push(r);
    }
    let mut rows: Vec<SummaryRow> = groups
        .iter()
        .map(|(&(num_links, algorithm), group)| {
            let done: Vec<&&TrialRecord> = group.iter().filter(|r| r.objective_bps.is_some()).collect();
            let mbps: Vec<f64> = done.iter().map(|r| r.objective_bps.unwrap_or(0.0) / 1e6).collect();
            let (mean_mbps, std_mbps) = if mbps.is_empty() { (f64::NAN, f64::NAN) } else { mean_std(&mbps) };
            let runtimes: Vec<f64> = done.iter().map(|r| r.runtime_us).collect();
            let mean_runtime_us =
                if runtimes.is_empty() { f64::NAN } else { runtimes.iter().sum::<f64>() / runtimes.len() as f64 };
            SummaryRow {
                algorithm,
                num_links,
                trials: done.len(),
                skipped: group.len() - done.len(),
                mean_mbps,
                std_mbps,
                mean_runtime_us,
                soa_iwfa_ratio: None,
            }
        })
        .collect();
    let iwfa: BTreeMap<usize, f64> = rows
        .iter()
        .filter(|r| r.algorithm == Algorithm::Iwfa && r.trials > 0)
        .map(|r| (r.num_links, r.mean_mbps))
        .collect();
    for row in rows.iter_mut().filter(|r| r.algorithm == Algorithm::Soa && r.trials > 0) {
        row.soa_iwfa_ratio = iwfa.get(&row.num_links).map(|i| row.mean_mbps / i);
    }
    rows
}

const HEADER: [&str; 8] =
    ["algorithm", "num_links", "trials", "skipped", "mean_mbps", "std_mbps", "mean_runtime_us", "soa_iwfa_ratio"];

fn cells(r: &SummaryRow) -> [String; 8] {
    [
        r.algorithm.to_string(),
        r.num_links.to_string(),
        r.trials.to_string(),
        r.skipped.to_string(),
        format!("{:.4}", r.mean_mbps),
        format!("{:.4}", r.std_mbps),
        format!("{:.2}", r.mean_runtime_us),
        r.soa_iwfa_ratio.map(|x| format!("{x:.4}")).unwrap_or_default(),
    ]
}

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(cells(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Right-aligned columns for the terminal.
pub fn format_table(rows: &[SummaryRow]) -> String {
    let body: Vec<[String; 8]> = rows.iter().map(cells).collect();
    let mut width = HEADER.map(str::len);
    for line in &body {
        for (w, c) in width.iter_mut().zip(line) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut emit = |line: &[String]| {
        let joined: Vec<String> = line.iter().zip(&width).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "{}", joined.join("  ").trim_end());
    };
    emit(&HEADER.map(String::from));
    for line in &body {
        emit(line);
    }
    out
}
