//! JSON input documents and atomic output.
//!
//! Relative output paths resolve against the working directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use bai_core::engine::SelectionStandard;
use bai_core::harness::{AlgorithmSpec, ExperimentPlan};
use bai_core::configs::ConfigSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Input of `bai run`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfigFile {
    pub plan: ExperimentPlan,
    #[serde(default)]
    pub output: RunOutput,
}

impl ExperimentConfigFile {
    pub fn materialized(&self) -> ExperimentConfigFile {
        ExperimentConfigFile {
            plan: self.plan.materialized(),
            output: self.output.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOutput {
    /// PCS table; default `results.csv`.
    #[serde(default = "default_results")]
    pub results: PathBuf,
    /// Materialized plan, allocation summaries, trace tallies and cell errors; default `summary.json`.
    #[serde(default = "default_summary")]
    pub summary: PathBuf,
    /// Inferior-arm histograms, written under allocation capture; default `histogram.csv`.
    #[serde(default = "default_histogram")]
    pub histogram: PathBuf,
}

impl Default for RunOutput {
    fn default() -> Self {
        RunOutput {
            results: default_results(),
            summary: default_summary(),
            histogram: default_histogram(),
        }
    }
}

fn default_results() -> PathBuf {
    "results.csv".into()
}

fn default_summary() -> PathBuf {
    "summary.json".into()
}

fn default_histogram() -> PathBuf {
    "histogram.csv".into()
}

/// Input of `bai trace`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfigFile {
    pub config: ConfigSpec,
    pub algorithm: AlgorithmSpec,
    pub k: usize,
    pub budget: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub standard: SelectionStandard,
    #[serde(default)]
    pub output: TraceOutput,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceOutput {
    /// Default `trace.csv`.
    #[serde(default = "default_trace")]
    pub trace: PathBuf,
    /// Run summary and verifier report; default `trace_report.json`.
    #[serde(default = "default_report")]
    pub report: PathBuf,
}

impl Default for TraceOutput {
    fn default() -> Self {
        TraceOutput {
            trace: default_trace(),
            report: default_report(),
        }
    }
}

fn default_trace() -> PathBuf {
    "trace.csv".into()
}

fn default_report() -> PathBuf {
    "trace_report.json".into()
}

/// Parse `text` as `T`, reporting the JSON path of the first error.
pub fn parse_json<T: DeserializeOwned>(file: &Path, text: &str) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Validation {
        file: file.display().to_string(),
        path: e.path().to_string(),
        message: e.into_inner().to_string(),
    })
}

pub fn load_json<T: DeserializeOwned>(file: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
    parse_json(file, &text)
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}
