//! The subcommands, each a thin layer over `bai_core::harness` and `analysis`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bai_core::analysis::{BoundQuery, BoundReport};
use bai_core::engine::{Algorithm, SelectionStandard};
use bai_core::harness::{
    run_experiment, run_single, verify_trace_properties, AllocationSummary, CellError, CellKey, HarnessError, TraceReport,
    TraceTally,
};
use serde::Serialize;

use crate::files::{load_json, to_pretty_json, write_atomic, ExperimentConfigFile, TraceConfigFile};
use crate::svg::{self, Chart, Mark, Series};
use crate::{recipes, table, CliError};

/// Harness errors caused by the input itself count as validation failures.
fn harness_error(file: &Path, e: HarnessError) -> CliError {
    match e {
        HarnessError::InvalidPlan(_)
        | HarnessError::MissingMomentOrder(_)
        | HarnessError::TraceTooLarge { .. }
        | HarnessError::Config(_)
        | HarnessError::Engine(_) => CliError::invalid(file, e),
        other => CliError::Runtime(other.to_string()),
    }
}

#[derive(Serialize)]
struct CellSummary<'a> {
    #[serde(flatten)]
    key: &'a CellKey,
    resolved: &'a Algorithm,
    #[serde(skip_serializing_if = "Option::is_none")]
    allocation: Option<&'a AllocationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<&'a TraceTally>,
}

#[derive(Serialize)]
struct RunSummary<'a> {
    /// The input with every default written out.
    input: &'a ExperimentConfigFile,
    cells: Vec<CellSummary<'a>>,
    errors: &'a [CellError],
}

/// Outcome of `bai run`: where the tables went and how many cells failed.
#[derive(Debug)]
pub struct RunReport {
    pub written: Vec<PathBuf>,
    pub rows: usize,
    pub cell_errors: usize,
}

pub fn run(config: &Path, seed: Option<u64>) -> Result<RunReport, CliError> {
    let mut input: ExperimentConfigFile = load_json(config)?;
    if let Some(s) = seed {
        input.plan.base_seed = s;
    }
    let input = input.materialized();
    let results = run_experiment(&input.plan).map_err(|e| harness_error(config, e))?;

    let mut written = Vec::new();
    write_atomic(&input.output.results, &table::results_csv(&results.rows))?;
    written.push(input.output.results.clone());
    if results.cells.iter().any(|c| c.allocation.is_some()) {
        write_atomic(&input.output.histogram, &table::histogram_csv(&results))?;
        written.push(input.output.histogram.clone());
    }
    let summary = RunSummary {
        input: &input,
        cells: results
            .cells
            .iter()
            .map(|c| CellSummary {
                key: &c.key,
                resolved: &c.resolved,
                allocation: c.allocation.as_ref(),
                trace: c.trace.as_ref(),
            })
            .collect(),
        errors: &results.errors,
    };
    write_atomic(&input.output.summary, &to_pretty_json(&summary))?;
    written.push(input.output.summary.clone());
    Ok(RunReport {
        written,
        rows: results.rows.len(),
        cell_errors: results.errors.len(),
    })
}

#[derive(Serialize)]
struct TraceSummary<'a> {
    input: &'a TraceConfigFile,
    resolved: Algorithm,
    best_arm: usize,
    selected_arm: usize,
    is_correct: bool,
    final_counts: &'a [u64],
    /// Verifier output; absent when the algorithm is coupled.
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<TraceReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refused: Option<String>,
}

pub fn trace(config: &Path, seed: Option<u64>) -> Result<Vec<PathBuf>, CliError> {
    let mut input: TraceConfigFile = load_json(config)?;
    if let Some(s) = seed {
        input.seed = s;
    }
    input.config = input.config.materialized();
    let (resolved, run) = run_single(&input.config, &input.algorithm, input.k, input.budget, input.standard, input.seed, true)
        .map_err(|e| harness_error(config, e))?;
    let (report, refused) = match verify_trace_properties(&run, &resolved) {
        Ok(r) => (Some(r), None),
        Err(HarnessError::CoupledAlgorithm) => (None, Some(HarnessError::CoupledAlgorithm.to_string())),
        Err(e) => return Err(CliError::Runtime(e.to_string())),
    };
    write_atomic(&input.output.trace, &table::trace_csv(&run))?;
    let summary = TraceSummary {
        input: &input,
        resolved,
        best_arm: run.best_arm,
        selected_arm: run.selected_arm,
        is_correct: run.is_correct,
        final_counts: &run.final_counts,
        report,
        refused,
    };
    write_atomic(&input.output.report, &to_pretty_json(&summary))?;
    Ok(vec![input.output.trace.clone(), input.output.report.clone()])
}

pub fn bounds(params: &Path) -> Result<BoundReport, CliError> {
    let q: BoundQuery = load_json(params)?;
    q.report().map_err(|e| CliError::invalid(params, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PlotKind {
    /// PCS against log2(k), one line per algorithm (results CSV).
    Pcs,
    /// Inferior-arm allocation histogram (histogram CSV).
    Hist,
    /// Sampled arm against round (one or more trace CSVs).
    Alloc,
}

#[derive(Debug, Clone)]
pub struct PlotArgs {
    pub inputs: Vec<PathBuf>,
    pub kind: PlotKind,
    /// Defaults to the first input with an `.svg` extension.
    pub out: Option<PathBuf>,
    /// Restrict to one config; otherwise one file per config.
    pub config: Option<String>,
    pub standard: Option<SelectionStandard>,
}

/// Insertion-ordered grouping, so output follows the input's row order.
fn group<T, K: PartialEq + Clone>(items: impl IntoIterator<Item = T>, key: impl Fn(&T) -> K) -> Vec<(K, Vec<T>)> {
    let mut out: Vec<(K, Vec<T>)> = Vec::new();
    for it in items {
        let k = key(&it);
        match out.iter_mut().find(|(g, _)| *g == k) {
            Some((_, v)) => v.push(it),
            None => out.push((k, vec![it])),
        }
    }
    out
}

fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    out.trim_matches('-').to_string()
}

/// `out` itself for a single panel, else `out` with the panel name appended to the stem.
fn panel_path(out: &Path, panel: &str, many: bool) -> PathBuf {
    if !many {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}-{}.svg", slug(panel)))
}

pub fn plot(args: &PlotArgs) -> Result<Vec<PathBuf>, CliError> {
    let first = args.inputs.first().ok_or_else(|| CliError::Runtime("plot needs an input file".into()))?;
    let out = args.out.clone().unwrap_or_else(|| first.with_extension("svg"));
    let empty = |file: &Path| CliError::SchemaMismatch {
        file: file.display().to_string(),
        message: "nothing to plot".into(),
    };
    let panels: Vec<(String, Chart)> = match args.kind {
        PlotKind::Pcs => pcs_panels(first, args)?,
        PlotKind::Hist => hist_panels(first, args)?,
        PlotKind::Alloc => vec![(String::new(), alloc_chart(&args.inputs)?)],
    };
    if panels.is_empty() {
        return Err(empty(first));
    }
    let many = panels.len() > 1;
    let mut written = Vec::new();
    for (name, chart) in panels {
        let doc = svg::render(&chart).map_err(|_| empty(first))?;
        let path = panel_path(&out, &name, many);
        write_atomic(&path, doc.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

fn pcs_panels(input: &Path, args: &PlotArgs) -> Result<Vec<(String, Chart)>, CliError> {
    let rows = table::read_results(input)?;
    let standard = match args.standard {
        Some(s) => s.name().to_string(),
        None if rows.iter().any(|r| r.standard == SelectionStandard::MaxCount.name()) => SelectionStandard::MaxCount.name().into(),
        None => rows[0].standard.clone(),
    };
    let rows = rows
        .into_iter()
        .filter(|r| r.standard == standard && args.config.as_ref().is_none_or(|c| *c == r.config));
    Ok(group(rows, |r| r.config.clone())
        .into_iter()
        .map(|(config, rows)| {
            let series = group(rows, |r| r.algorithm.clone())
                .into_iter()
                .map(|(label, rs)| Series {
                    label,
                    points: rs.iter().map(|r| ((r.k as f64).log2(), r.pcs)).collect(),
                })
                .collect();
            let chart = Chart {
                title: format!("PCS of different UCB algorithms: {config}"),
                x_label: "log2(k)".into(),
                y_label: format!("PCS ({})", standard),
                y_range: Some((0.0, 1.0)),
                integer_x: true,
                mark: Mark::Line,
                series,
            };
            (config, chart)
        })
        .collect())
}

fn hist_panels(input: &Path, args: &PlotArgs) -> Result<Vec<(String, Chart)>, CliError> {
    let rows = table::read_histogram(input)?;
    let rows = rows.into_iter().filter(|r| args.config.as_ref().is_none_or(|c| *c == r.config));
    Ok(group(rows, |r| (r.config.clone(), r.k))
        .into_iter()
        .map(|((config, k), rows)| {
            let series = group(rows, |r| r.algorithm.clone())
                .into_iter()
                .map(|(label, rs)| {
                    let total = rs.iter().map(|r| r.count).sum::<u64>().max(1) as f64;
                    Series {
                        label,
                        points: rs.iter().map(|r| ((r.bin_lo as f64).log2(), r.count as f64 / total)).collect(),
                    }
                })
                .collect();
            let chart = Chart {
                title: format!("Allocated sample sizes of inferior alternatives: {config}, k={k}"),
                x_label: "log2(samples allocated)".into(),
                y_label: "share of inferior arms".into(),
                y_range: None,
                integer_x: true,
                mark: Mark::Bars,
                series,
            };
            (format!("{config}-k{k}"), chart)
        })
        .collect())
}

fn alloc_chart(inputs: &[PathBuf]) -> Result<Chart, CliError> {
    let mut series = Vec::new();
    for path in inputs {
        let rows = table::read_trace(path)?;
        series.push(Series {
            label: path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            points: rows.iter().map(|r| (r.round as f64, r.arm as f64)).collect(),
        });
    }
    Ok(Chart {
        title: "Sampled arm by round".into(),
        x_label: "round".into(),
        y_label: "arm".into(),
        y_range: None,
        integer_x: true,
        mark: Mark::Scatter,
        series,
    })
}

#[derive(Serialize)]
struct PresetListing {
    distributions: Vec<bai_core::configs::Preset>,
    bonuses: Vec<bai_core::BonusSpec>,
    recipes: BTreeMap<&'static str, &'static str>,
}

/// Human-readable listing of the reference laws, bonus presets and recipes.
pub fn presets_text() -> String {
    use std::fmt::Write;
    let mut s = String::new();
    writeln!(s, "distributions:").unwrap();
    for p in bai_core::configs::table1_presets() {
        let params = serde_json::to_string(&p.spec).expect("serializable");
        writeln!(s, "  {:<18} {:<20} {params}", p.id, p.label).unwrap();
    }
    writeln!(s, "bonuses:").unwrap();
    for b in bai_core::bonus::presets() {
        writeln!(s, "  {}", serde_json::to_string(&b).expect("serializable")).unwrap();
    }
    writeln!(s, "recipes:").unwrap();
    for r in recipes::recipes() {
        writeln!(s, "  {:<18} {}", r.name, r.about).unwrap();
    }
    s
}

pub fn presets_json() -> Vec<u8> {
    to_pretty_json(&PresetListing {
        distributions: bai_core::configs::table1_presets(),
        bonuses: bai_core::bonus::presets(),
        recipes: recipes::recipes().into_iter().map(|r| (r.name, r.about)).collect(),
    })
}

/// Write every recipe as `<dir>/<name>.json`.
pub fn write_recipes(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    recipes::recipes()
        .into_iter()
        .map(|r| {
            let path = dir.join(format!("{}.json", r.name));
            write_atomic(&path, &to_pretty_json(&(r.build)()))?;
            Ok(path)
        })
        .collect()
}
