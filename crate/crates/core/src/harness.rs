//! Replicated experiments over (config, algorithm, k) grids.
//!
//! Every replication seed is a SHA-256 digest of the base seed, the cell's
//! config and algorithm, `k` and the replication index. A cell's numbers
//! therefore do not depend on which other cells share the plan or on how
//! rayon schedules the work. All selection standards are scored on the same
//! runs.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{proposition1_budget, simplified_budget_64, AnalysisError};
use crate::bonus::BonusSpec;
use crate::configs::{noniz_default_beta, ConfigError, ConfigSpec, ProblemConfig};
use crate::engine::{run, Algorithm, EngineError, RunResult, SelectionStandard};
use crate::stats::{cluster_bootstrap_ci, median, wilson, Z95};

/// Largest budget for which full traces are kept in memory.
pub const MAX_TRACE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("the run carries no trace")]
    TraceMissing,
    #[error("trace properties apply to decoupled algorithms only")]
    CoupledAlgorithm,
    #[error("full traces are refused for budget {budget} > {MAX_TRACE_BUDGET}")]
    TraceTooLarge { budget: u64 },
    #[error("{0} needs a moment order q, and the config does not fix one")]
    MissingMomentOrder(&'static str),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

fn default_a() -> f64 {
    1.0
}

/// Algorithm as written in a plan; free parameters are resolved per cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Ucbe {
        #[serde(default = "default_a")]
        a: f64,
    },
    /// `c` defaults to `B / k`.
    Moss {
        #[serde(default)]
        c: Option<f64>,
    },
    Greedy,
    Lil {
        beta: f64,
        eps: f64,
        sigma: f64,
        delta: f64,
    },
    HeavyCs {
        q: f64,
        q_prime: f64,
        m: f64,
        alpha: f64,
    },
    /// `q` defaults to the config's moment order.
    UcbePlus {
        #[serde(default)]
        q: Option<f64>,
    },
    Ucb1,
}

impl AlgorithmSpec {
    pub fn resolve(&self, config: &ConfigSpec, k: usize, budget: u64) -> Result<Algorithm, HarnessError> {
        let bonus = match *self {
            AlgorithmSpec::Ucbe { a } => BonusSpec::Ucbe { a },
            AlgorithmSpec::Moss { c } => BonusSpec::Moss {
                c: c.unwrap_or(budget as f64 / k as f64),
            },
            AlgorithmSpec::Greedy => BonusSpec::Greedy,
            AlgorithmSpec::Lil { beta, eps, sigma, delta } => BonusSpec::Lil { beta, eps, sigma, delta },
            AlgorithmSpec::HeavyCs { q, q_prime, m, alpha } => BonusSpec::HeavyCs { q, q_prime, m, alpha },
            AlgorithmSpec::UcbePlus { q } => BonusSpec::UcbePlus {
                q: q.or_else(|| config.q()).ok_or(HarnessError::MissingMomentOrder("UCBE+"))?,
            },
            AlgorithmSpec::Ucb1 => return Ok(Algorithm::Ucb1),
        };
        bonus.validate().map_err(EngineError::from)?;
        Ok(Algorithm::Decoupled(bonus))
    }

    /// Column label: the algorithm name, plus `a` when UCBE departs from `a = 1`.
    pub fn label(&self) -> String {
        match self {
            AlgorithmSpec::Ucbe { a } if *a != 1.0 => format!("UCBE(a={a})"),
            AlgorithmSpec::Ucbe { .. } => "UCBE".into(),
            AlgorithmSpec::Moss { .. } => "MOSS".into(),
            AlgorithmSpec::Greedy => "Greedy".into(),
            AlgorithmSpec::Lil { .. } => "LiL".into(),
            AlgorithmSpec::HeavyCs { .. } => "HeavyCS".into(),
            AlgorithmSpec::UcbePlus { .. } => "UCBE+".into(),
            AlgorithmSpec::Ucb1 => "UCB1".into(),
        }
    }
}

/// How the budget `B` follows from `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum BudgetRule {
    /// `B = c k`.
    Multiplier { c: f64 },
    /// One budget per entry of `k_values`.
    Explicit { budgets: Vec<u64> },
    /// The HeavyCS polynomial-gap budget; `q` and `beta` come from a `noniz` config.
    Proposition1 { alpha: f64, m: f64, q_prime: f64 },
    /// `10 [1/(1 - beta q/(q-3)) + 1/(1-2beta) + beta/(1-2beta)^2] k`; `q` and `beta` from a `noniz` config.
    Simplified64,
}

fn scaled(mult: f64, k: usize) -> Result<u64, HarnessError> {
    let b = mult * k as f64;
    if !(b.is_finite() && b >= 1.0) {
        return Err(HarnessError::InvalidPlan(format!("budget multiplier {mult} gives no usable budget")));
    }
    // Absorb floating noise such as 650.0000000000003 * k.
    Ok((b - 1e-9 * b).ceil() as u64)
}

impl BudgetRule {
    /// Budget for the `index`-th entry of `k_values`.
    pub fn budget(&self, config: &ConfigSpec, k: usize, index: usize) -> Result<u64, HarnessError> {
        let noniz = || match config {
            ConfigSpec::Noniz { q, beta, .. } => Ok((*q, beta.unwrap_or_else(|| noniz_default_beta(*q)))),
            _ => Err(HarnessError::InvalidPlan("formula budgets need a noniz config".into())),
        };
        match self {
            BudgetRule::Multiplier { c } => scaled(*c, k),
            BudgetRule::Explicit { budgets } => budgets
                .get(index)
                .copied()
                .ok_or_else(|| HarnessError::InvalidPlan("explicit budgets must match k_values".into())),
            BudgetRule::Proposition1 { alpha, m, q_prime } => {
                let (q, beta) = noniz()?;
                scaled(proposition1_budget(q, beta, *alpha, *m, *q_prime)?, k)
            }
            BudgetRule::Simplified64 => {
                let (q, beta) = noniz()?;
                scaled(simplified_budget_64(q, beta)?, k)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capture {
    #[default]
    None,
    /// Keep every replication's final counts.
    Allocation,
    /// Keep full traces long enough to run the trace-property verifier.
    FullTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedConfig {
    pub name: String,
    pub config: ConfigSpec,
    /// Overrides the plan's budget rule for this config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_rule: Option<BudgetRule>,
}

impl NamedConfig {
    pub fn new(name: impl Into<String>, config: ConfigSpec) -> NamedConfig {
        NamedConfig {
            name: name.into(),
            config,
            budget_rule: None,
        }
    }
}

fn default_standards() -> Vec<SelectionStandard> {
    vec![SelectionStandard::MaxCount]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub configs: Vec<NamedConfig>,
    pub algorithms: Vec<AlgorithmSpec>,
    pub k_values: Vec<usize>,
    pub budget_rule: BudgetRule,
    pub reps: u64,
    #[serde(default)]
    pub base_seed: u64,
    /// Standards scored on the same runs; defaults to `[max_count]`.
    #[serde(default = "default_standards")]
    pub selection_standards: Vec<SelectionStandard>,
    #[serde(default)]
    pub capture: Capture,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidPlan(m.into()));
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if self.configs.is_empty() || self.algorithms.is_empty() || self.k_values.is_empty() {
            return bad("configs, algorithms and k_values must be non-empty");
        }
        if self.k_values.windows(2).any(|w| w[0] >= w[1]) {
            return bad("k_values must be strictly ascending");
        }
        if self.k_values[0] < 2 {
            return bad("k must be at least 2");
        }
        if self.selection_standards.is_empty() {
            return bad("selection_standards must be non-empty");
        }
        if self.selection_standards.iter().collect::<BTreeSet<_>>().len() != self.selection_standards.len() {
            return bad("selection_standards must be distinct");
        }
        if self.selection_standards.len() > 8 {
            return bad("at most 8 selection standards");
        }
        let names: BTreeSet<_> = self.configs.iter().map(|c| c.name.as_str()).collect();
        if names.len() != self.configs.len() {
            return bad("config names must be distinct");
        }
        let labels: BTreeSet<_> = self.algorithms.iter().map(|a| a.label()).collect();
        if labels.len() != self.algorithms.len() {
            return bad("algorithm labels must be distinct");
        }
        let rules = std::iter::once(&self.budget_rule).chain(self.configs.iter().filter_map(|c| c.budget_rule.as_ref()));
        for rule in rules {
            if let BudgetRule::Explicit { budgets } = rule {
                if budgets.len() != self.k_values.len() {
                    return bad("explicit budgets must match k_values");
                }
            }
        }
        Ok(())
    }

    /// The plan with every default written out.
    pub fn materialized(&self) -> ExperimentPlan {
        let mut p = self.clone();
        for c in &mut p.configs {
            c.config = c.config.materialized();
        }
        p
    }
}

/// Number of successes out of `reps`, with a 95% Wilson interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcsEstimate {
    pub successes: u64,
    pub reps: u64,
    pub pcs: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl PcsEstimate {
    pub fn from_counts(successes: u64, reps: u64) -> PcsEstimate {
        let w = wilson(successes, reps, Z95);
        PcsEstimate {
            successes,
            reps,
            pcs: w.estimate,
            ci_low: w.lo,
            ci_high: w.hi,
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.pcs * (1.0 - self.pcs) / self.reps as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub config: String,
    pub algorithm: String,
    pub standard: SelectionStandard,
    pub k: usize,
    pub budget: u64,
    #[serde(flatten)]
    pub estimate: PcsEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Inclusive lower edge.
    pub lo: u64,
    /// Exclusive upper edge.
    pub hi: u64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationSummary {
    pub k: usize,
    pub reps: usize,
    pub budget: u64,
    pub best_arm: usize,
    pub mean_counts: Vec<f64>,
    pub median_counts: Vec<f64>,
    pub max_counts: Vec<u64>,
    /// `n_1(B) / B` averaged over replications.
    pub best_share: f64,
    pub inferior_median: f64,
    /// Replication-cluster bootstrap 95% interval for `inferior_median`.
    pub inferior_median_ci: (f64, f64),
    /// Inferior-arm final counts in power-of-two bins `[2^j, 2^{j+1})`.
    pub histogram: Vec<HistogramBin>,
}

/// Bootstrap resamples behind `inferior_median_ci`.
pub const BOOTSTRAP_RESAMPLES: usize = 400;

/// Summarise final counts, one `Vec` per replication.
pub fn allocation_summary(counts: &[Vec<u64>], best_arm: usize, budget: u64) -> AllocationSummary {
    assert!(!counts.is_empty(), "no replications");
    let k = counts[0].len();
    let reps = counts.len();
    let per_arm = |i: usize| counts.iter().map(|c| c[i] as f64).collect::<Vec<_>>();
    let mean_counts: Vec<f64> = (0..k).map(|i| per_arm(i).iter().sum::<f64>() / reps as f64).collect();
    let median_counts = (0..k).map(|i| median(&per_arm(i))).collect();
    let max_counts = (0..k).map(|i| counts.iter().map(|c| c[i]).max().unwrap_or(0)).collect();
    let best_share = counts.iter().map(|c| c[best_arm] as f64 / budget as f64).sum::<f64>() / reps as f64;

    let clusters: Vec<Vec<f64>> = counts
        .iter()
        .map(|c| c.iter().enumerate().filter(|&(i, _)| i != best_arm).map(|(_, &v)| v as f64).collect())
        .collect();
    let pooled = clusters.concat();
    let inferior_median = median(&pooled);
    let inferior_median_ci = cluster_bootstrap_ci(&clusters, median, BOOTSTRAP_RESAMPLES, 0.95, budget ^ k as u64);

    let top = pooled.iter().fold(1.0f64, |m, &v| m.max(v)) as u64;
    let nbins = (64 - top.leading_zeros()) as usize;
    let mut histogram: Vec<HistogramBin> = (0..nbins)
        .map(|j| HistogramBin {
            lo: 1 << j,
            hi: 1 << (j + 1),
            count: 0,
        })
        .collect();
    for &v in &pooled {
        // every arm is sampled at least once, so v >= 1
        let j = 63 - (v as u64).max(1).leading_zeros() as usize;
        histogram[j].count += 1;
    }
    AllocationSummary {
        k,
        reps,
        budget,
        best_arm,
        mean_counts,
        median_counts,
        max_counts,
        best_share,
        inferior_median,
        inferior_median_ci,
        histogram,
    }
}

/// A Property 1 breach: an arm sampled while its UCB was already below the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Property1Violation {
    pub arm: usize,
    pub round: u64,
    pub ucb: f64,
}

/// A Property 2 breach: an arm's final count beyond its crossing time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Property2Violation {
    pub arm: usize,
    pub count: u64,
    pub crossing: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceReport {
    /// Realized boundary: the smallest UCB value the best arm took during the run.
    pub boundary: f64,
    pub arms_checked: usize,
    pub property1: Vec<Property1Violation>,
    pub property2: Vec<Property2Violation>,
}

impl TraceReport {
    pub fn violations(&self) -> usize {
        self.property1.len() + self.property2.len()
    }
}

/// Check both boundary-crossing properties on a traced decoupled run.
///
/// The boundary is the realized minimum `m_1` of the best arm's UCB values,
/// which can only exceed the infimum over the whole process. Both properties
/// survive that substitution: after an inferior arm drops below `m_1`, the
/// best arm's current UCB is never lower than `m_1`, so the inferior arm never
/// wins the argmax again.
pub fn verify_trace_properties(run: &RunResult, algorithm: &Algorithm) -> Result<TraceReport, HarnessError> {
    if !algorithm.is_decoupled() {
        return Err(HarnessError::CoupledAlgorithm);
    }
    let trace = run.trace.as_ref().ok_or(HarnessError::TraceMissing)?;
    let k = trace.initial_ucbs.len();
    let best = run.best_arm;
    let boundary = trace
        .records
        .iter()
        .filter(|r| r.arm == best)
        .map(|r| r.new_ucb)
        .fold(trace.initial_ucbs[best], f64::min);

    let mut current = trace.initial_ucbs.clone();
    let mut crossing: Vec<Option<u64>> = (0..k).map(|i| (current[i] < boundary).then_some(1)).collect();
    let mut property1 = Vec::new();
    for r in &trace.records {
        if r.arm != best && current[r.arm] < boundary {
            property1.push(Property1Violation {
                arm: r.arm,
                round: r.round,
                ucb: current[r.arm],
            });
        }
        current[r.arm] = r.new_ucb;
        if crossing[r.arm].is_none() && r.new_ucb < boundary {
            crossing[r.arm] = Some(r.new_count);
        }
    }
    let property2 = (0..k)
        .filter(|&i| i != best)
        .filter_map(|i| match crossing[i] {
            Some(t) if run.final_counts[i] > t => Some(Property2Violation {
                arm: i,
                count: run.final_counts[i],
                crossing: t,
            }),
            _ => None,
        })
        .collect();
    Ok(TraceReport {
        boundary,
        arms_checked: k - 1,
        property1,
        property2,
    })
}

/// Per-cell tally of trace verification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceTally {
    pub runs_checked: u64,
    pub violations: u64,
    /// Set when the verifier does not apply, e.g. for UCB1.
    pub refused: Option<String>,
    /// The first offending report, if any.
    pub first_violation: Option<TraceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellKey {
    pub config: String,
    pub algorithm: String,
    pub k: usize,
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellOutcome {
    pub key: CellKey,
    pub resolved: Algorithm,
    /// Bit `s` of entry `r` is set when replication `r` is correct under standard `s`.
    pub per_rep: Vec<u8>,
    pub allocation: Option<AllocationSummary>,
    /// Final counts per replication, kept under allocation capture.
    #[serde(skip)]
    pub counts: Option<Vec<Vec<u64>>>,
    pub trace: Option<TraceTally>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellError {
    pub config: String,
    pub algorithm: String,
    pub k: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResults {
    pub standards: Vec<SelectionStandard>,
    pub rows: Vec<ResultRow>,
    pub cells: Vec<CellOutcome>,
    pub errors: Vec<CellError>,
}

impl ExperimentResults {
    pub fn row(&self, config: &str, algorithm: &str, standard: SelectionStandard, k: usize) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.config == config && r.algorithm == algorithm && r.standard == standard && r.k == k)
    }

    pub fn cell(&self, config: &str, algorithm: &str, k: usize) -> Option<&CellOutcome> {
        self.cells
            .iter()
            .find(|c| c.key.config == config && c.key.algorithm == algorithm && c.key.k == k)
    }
}

/// Seed of replication `rep` given a hasher already holding the cell key.
fn rep_seed(cell: &Sha256, rep: u64) -> u64 {
    let mut h = cell.clone();
    h.update(rep.to_le_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("32-byte digest"))
}

/// Hasher over `(base_seed, config, algorithm, k)`.
pub fn cell_hasher(base_seed: u64, config: &ConfigSpec, algorithm: &Algorithm, k: usize) -> Sha256 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update(serde_json::to_vec(&config.materialized()).expect("config serializes"));
    h.update([0u8]);
    h.update(serde_json::to_vec(algorithm).expect("algorithm serializes"));
    h.update((k as u64).to_le_bytes());
    h
}

/// The seed replication `rep` of a cell runs with.
pub fn replication_seed(base_seed: u64, config: &ConfigSpec, algorithm: &Algorithm, k: usize, rep: u64) -> u64 {
    rep_seed(&cell_hasher(base_seed, config, algorithm, k), rep)
}

struct Cell {
    key: CellKey,
    problem: ProblemConfig,
    algorithm: Algorithm,
    hasher: Sha256,
}

struct RepOutcome {
    bits: u8,
    counts: Option<Vec<u64>>,
    trace: Option<Result<TraceReport, HarnessError>>,
}

fn build_cell(plan: &ExperimentPlan, nc: &NamedConfig, spec: &AlgorithmSpec, k: usize, ki: usize) -> Result<Cell, HarnessError> {
    let rule = nc.budget_rule.as_ref().unwrap_or(&plan.budget_rule);
    let budget = rule.budget(&nc.config, k, ki)?;
    let algorithm = spec.resolve(&nc.config, k, budget)?;
    if plan.capture == Capture::FullTrace && budget > MAX_TRACE_BUDGET {
        return Err(HarnessError::TraceTooLarge { budget });
    }
    let problem = nc.config.build(k)?;
    if budget < k as u64 {
        return Err(EngineError::BudgetTooSmall { budget, k }.into());
    }
    Ok(Cell {
        key: CellKey {
            config: nc.name.clone(),
            algorithm: spec.label(),
            k,
            budget,
        },
        hasher: cell_hasher(plan.base_seed, &nc.config, &algorithm, k),
        problem,
        algorithm,
    })
}

fn run_rep(cell: &Cell, plan: &ExperimentPlan, rep: u64) -> Result<RepOutcome, HarnessError> {
    let seed = rep_seed(&cell.hasher, rep);
    let full = plan.capture == Capture::FullTrace;
    let r = run(&cell.problem, &cell.algorithm, cell.key.budget, plan.selection_standards[0], seed, full)?;
    let bits = plan
        .selection_standards
        .iter()
        .enumerate()
        .fold(0u8, |b, (s, &st)| b | ((r.is_correct_under(st) as u8) << s));
    let trace = full.then(|| verify_trace_properties(&r, &cell.algorithm));
    Ok(RepOutcome {
        bits,
        counts: (plan.capture == Capture::Allocation).then_some(r.final_counts),
        trace,
    })
}

/// Run every (config, algorithm, k) cell of `plan` for `plan.reps` replications.
///
/// A failing cell is reported in `errors` and leaves the others untouched.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentResults, HarnessError> {
    plan.validate()?;
    let mut cells = Vec::new();
    let mut errors = Vec::new();
    for nc in &plan.configs {
        for spec in &plan.algorithms {
            for (ki, &k) in plan.k_values.iter().enumerate() {
                match build_cell(plan, nc, spec, k, ki) {
                    Ok(c) => cells.push(c),
                    Err(e) => errors.push(CellError {
                        config: nc.name.clone(),
                        algorithm: spec.label(),
                        k,
                        error: e.to_string(),
                    }),
                }
            }
        }
    }

    let tasks: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| (0..plan.reps).map(move |r| (c, r))).collect();
    let outcomes: Vec<Result<RepOutcome, HarnessError>> =
        tasks.par_iter().map(|&(c, r)| run_rep(&cells[c], plan, r)).collect();

    let mut rows = Vec::new();
    let mut done = Vec::new();
    for (ci, (cell, chunk)) in cells.into_iter().zip(outcomes.chunks(plan.reps as usize)).enumerate() {
        if let Some(Err(e)) = chunk.iter().find(|o| o.is_err()) {
            errors.push(CellError {
                config: cell.key.config.clone(),
                algorithm: cell.key.algorithm.clone(),
                k: cell.key.k,
                error: e.to_string(),
            });
            continue;
        }
        let reps: Vec<&RepOutcome> = chunk.iter().map(|o| o.as_ref().expect("checked above")).collect();
        let per_rep: Vec<u8> = reps.iter().map(|o| o.bits).collect();
        for (s, &st) in plan.selection_standards.iter().enumerate() {
            let successes = per_rep.iter().filter(|&&b| b >> s & 1 == 1).count() as u64;
            rows.push(ResultRow {
                config: cell.key.config.clone(),
                algorithm: cell.key.algorithm.clone(),
                standard: st,
                k: cell.key.k,
                budget: cell.key.budget,
                estimate: PcsEstimate::from_counts(successes, plan.reps),
            });
        }
        let counts: Option<Vec<Vec<u64>>> = reps.iter().map(|o| o.counts.clone()).collect();
        let allocation = counts
            .as_ref()
            .map(|c| allocation_summary(c, cell.problem.best_arm, cell.key.budget));
        let trace = (plan.capture == Capture::FullTrace).then(|| tally(&reps));
        log::info!("cell {ci}: {} {} k={} done", cell.key.config, cell.key.algorithm, cell.key.k);
        done.push(CellOutcome {
            key: cell.key,
            resolved: cell.algorithm,
            per_rep,
            allocation,
            counts,
            trace,
        });
    }
    Ok(ExperimentResults {
        standards: plan.selection_standards.clone(),
        rows,
        cells: done,
        errors,
    })
}

fn tally(reps: &[&RepOutcome]) -> TraceTally {
    let mut t = TraceTally {
        runs_checked: 0,
        violations: 0,
        refused: None,
        first_violation: None,
    };
    for o in reps {
        match o.trace.as_ref().expect("full trace capture") {
            Ok(report) => {
                t.runs_checked += 1;
                t.violations += report.violations() as u64;
                if report.violations() > 0 && t.first_violation.is_none() {
                    t.first_violation = Some(report.clone());
                }
            }
            Err(e) => t.refused = Some(e.to_string()),
        }
    }
    t
}

/// One run of a plan-style algorithm on a plan-style config, optionally traced.
pub fn run_single(
    config: &ConfigSpec,
    algorithm: &AlgorithmSpec,
    k: usize,
    budget: u64,
    standard: SelectionStandard,
    seed: u64,
    capture_trace: bool,
) -> Result<(Algorithm, RunResult), HarnessError> {
    if capture_trace && budget > MAX_TRACE_BUDGET {
        return Err(HarnessError::TraceTooLarge { budget });
    }
    let resolved = algorithm.resolve(config, k, budget)?;
    let problem = config.build(k)?;
    let r = run(&problem, &resolved, budget, standard, seed, capture_trace)?;
    Ok((resolved, r))
}
