//! CSV tables with fixed headers and 6-significant-digit numbers.

use std::path::Path;

use bai_core::engine::{RunResult, SelectionStandard};
use bai_core::harness::{ExperimentResults, ResultRow};

use crate::CliError;

pub const RESULTS_HEADER: [&str; 10] = ["config", "algorithm", "standard", "k", "B", "reps", "successes", "pcs", "ci_low", "ci_high"];
pub const TRACE_HEADER: [&str; 5] = ["round", "arm", "new_count", "observation", "new_ucb"];
pub const HISTOGRAM_HEADER: [&str; 7] = ["config", "algorithm", "k", "B", "bin_lo", "bin_hi", "count"];

/// `x` with 6 significant digits, `%g` style.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // The exponent after rounding, so 999999.5 counts as 1e6.
    let sci = format!("{:.5e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let s = format!("{:.*}", (5 - exp) as usize, x);
        trim_zeros(&s)
    } else {
        format!("{}e{}{:02}", trim_zeros(mant), if exp < 0 { "-" } else { "+" }, exp.abs())
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory writer")
}

pub fn results_csv(rows: &[ResultRow]) -> Vec<u8> {
    let mut w = writer();
    w.write_record(RESULTS_HEADER).expect("in-memory");
    for r in rows {
        let e = &r.estimate;
        w.write_record([
            r.config.clone(),
            r.algorithm.clone(),
            r.standard.name().to_string(),
            r.k.to_string(),
            r.budget.to_string(),
            e.reps.to_string(),
            e.successes.to_string(),
            fmt_sig(e.pcs),
            fmt_sig(e.ci_low),
            fmt_sig(e.ci_high),
        ])
        .expect("in-memory");
    }
    finish(w)
}

/// Every round, the `k` initialization rounds included; arms are 0-based.
pub fn trace_csv(run: &RunResult) -> Vec<u8> {
    let t = run.trace.as_ref().expect("traced run");
    let mut w = writer();
    w.write_record(TRACE_HEADER).expect("in-memory");
    for (i, (obs, ucb)) in t.initial_observations.iter().zip(&t.initial_ucbs).enumerate() {
        w.write_record([(i + 1).to_string(), i.to_string(), "1".into(), fmt_sig(*obs), fmt_sig(*ucb)])
            .expect("in-memory");
    }
    for r in &t.records {
        w.write_record([
            r.round.to_string(),
            r.arm.to_string(),
            r.new_count.to_string(),
            fmt_sig(r.observation),
            fmt_sig(r.new_ucb),
        ])
        .expect("in-memory");
    }
    finish(w)
}

pub fn histogram_csv(results: &ExperimentResults) -> Vec<u8> {
    let mut w = writer();
    w.write_record(HISTOGRAM_HEADER).expect("in-memory");
    for c in &results.cells {
        let Some(a) = &c.allocation else { continue };
        for b in &a.histogram {
            w.write_record([
                c.key.config.clone(),
                c.key.algorithm.clone(),
                c.key.k.to_string(),
                c.key.budget.to_string(),
                b.lo.to_string(),
                b.hi.to_string(),
                b.count.to_string(),
            ])
            .expect("in-memory");
        }
    }
    finish(w)
}

/// A parsed results row, as far as plotting needs it.
#[derive(Debug, Clone, PartialEq)]
pub struct PcsPoint {
    pub config: String,
    pub algorithm: String,
    pub standard: String,
    pub k: usize,
    pub pcs: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistRow {
    pub config: String,
    pub algorithm: String,
    pub k: usize,
    pub bin_lo: u64,
    pub bin_hi: u64,
    pub count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub round: u64,
    pub arm: usize,
}

fn read_table(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, CliError> {
    let mismatch = |m: String| CliError::SchemaMismatch {
        file: path.display().to_string(),
        message: m,
    };
    let text = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_slice());
    let got = r.headers().map_err(|e| mismatch(e.to_string()))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(mismatch(format!("expected header {:?}, found {:?}", header.join(","), got.iter().collect::<Vec<_>>().join(","))));
    }
    let rows: Vec<csv::StringRecord> = r.records().collect::<Result<_, _>>().map_err(|e| mismatch(e.to_string()))?;
    if rows.is_empty() {
        return Err(mismatch("no data rows".into()));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T, CliError> {
    rec.get(i).and_then(|s| s.parse().ok()).ok_or_else(|| CliError::SchemaMismatch {
        file: path.display().to_string(),
        message: format!("bad value in column {} of line {}", i + 1, rec.position().map_or(0, |p| p.line())),
    })
}

pub fn read_results(path: &Path) -> Result<Vec<PcsPoint>, CliError> {
    read_table(path, &RESULTS_HEADER)?
        .iter()
        .map(|r| {
            Ok(PcsPoint {
                config: field(path, r, 0)?,
                algorithm: field(path, r, 1)?,
                standard: field(path, r, 2)?,
                k: field(path, r, 3)?,
                pcs: field(path, r, 7)?,
                ci_low: field(path, r, 8)?,
                ci_high: field(path, r, 9)?,
            })
        })
        .collect()
}

pub fn read_histogram(path: &Path) -> Result<Vec<HistRow>, CliError> {
    read_table(path, &HISTOGRAM_HEADER)?
        .iter()
        .map(|r| {
            Ok(HistRow {
                config: field(path, r, 0)?,
                algorithm: field(path, r, 1)?,
                k: field(path, r, 2)?,
                bin_lo: field(path, r, 4)?,
                bin_hi: field(path, r, 5)?,
                count: field(path, r, 6)?,
            })
        })
        .collect()
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, CliError> {
    read_table(path, &TRACE_HEADER)?
        .iter()
        .map(|r| {
            Ok(TraceRow {
                round: field(path, r, 0)?,
                arm: field(path, r, 1)?,
            })
        })
        .collect()
}

/// Parse a standard name as written in the results table.
pub fn standard_by_name(name: &str) -> Option<SelectionStandard> {
    SelectionStandard::ALL.into_iter().find(|s| s.name() == name)
}
