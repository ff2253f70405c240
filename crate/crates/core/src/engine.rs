//! One fixed-budget run of a UCB sampling rule.
//!
//! Every arm is sampled once in index order, then each round samples the arm
//! with the largest UCB value (ties to the lowest index) until the budget is
//! spent. Decoupled rules keep the UCB values in a tournament tree, so a
//! round costs `O(log k)`. UCB1 bonuses depend on the global count and change
//! every round; arms are grouped by their own count instead, and within one
//! count group the arm with the largest mean dominates.

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bonus::{Bonus, BonusSpec};
use crate::configs::ProblemConfig;
use crate::distributions::{ArmStream, RunningMean};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("budget {budget} is smaller than the number of arms {k}")]
    BudgetTooSmall { budget: u64, k: usize },
    #[error("the configuration has no unique best arm")]
    NonUniqueBest,
    #[error("invalid bonus: {0}")]
    Bonus(#[from] crate::bonus::BonusError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "bonus", rename_all = "snake_case")]
pub enum Algorithm {
    /// Sample mean plus a bonus depending on the arm's own count only.
    Decoupled(BonusSpec),
    /// Sample mean plus `sqrt(2 log n / n_i)` with `n` the global count.
    Ucb1,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Decoupled(b) => b.name(),
            Algorithm::Ucb1 => "UCB1",
        }
    }

    pub fn is_decoupled(&self) -> bool {
        matches!(self, Algorithm::Decoupled(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionStandard {
    /// Largest final sample count.
    #[default]
    MaxCount,
    /// Largest final sample mean.
    MaxMean,
    /// Largest final UCB value.
    MaxUcb,
}

impl SelectionStandard {
    pub const ALL: [SelectionStandard; 3] = [
        SelectionStandard::MaxCount,
        SelectionStandard::MaxMean,
        SelectionStandard::MaxUcb,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SelectionStandard::MaxCount => "max_count",
            SelectionStandard::MaxMean => "max_mean",
            SelectionStandard::MaxUcb => "max_ucb",
        }
    }
}

/// Per-arm sampling state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ArmState {
    pub sum: RunningMean,
    pub current_ucb: f64,
}

impl ArmState {
    pub fn count(&self) -> u64 {
        self.sum.count()
    }

    pub fn sample_mean(&self) -> f64 {
        self.sum.mean()
    }
}

/// UCB value of a decoupled rule: sample mean plus bonus at the same count.
#[inline]
pub fn ucb_value(sum: &RunningMean, bonus: &Bonus) -> f64 {
    sum.mean() + bonus.eval(sum.count())
}

#[inline]
fn inv_sqrt(count: u64) -> f64 {
    1.0 / (count as f64).sqrt()
}

/// `sqrt(2 log n)`, the count-free factor of the UCB1 bonus.
#[inline]
fn ucb1_scale(n: u64) -> f64 {
    (2.0 * (n as f64).ln()).sqrt()
}

/// UCB1 bonus `sqrt(2 log n / count)`, evaluated as `sqrt(2 log n) / sqrt(count)`.
#[inline]
fn ucb1_bonus(n: u64, count: u64) -> f64 {
    ucb1_scale(n) * inv_sqrt(count)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub round: u64,
    pub arm: usize,
    pub new_count: u64,
    pub observation: f64,
    /// For UCB1 this uses the global count after the update.
    pub new_ucb: f64,
}

/// Full event log: the initialization pass plus one record per later round.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    /// Observation of arm `i` in round `i + 1`.
    pub initial_observations: Vec<f64>,
    pub initial_ucbs: Vec<f64>,
    /// Rounds `k + 1 ..= B`.
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub budget: u64,
    pub best_arm: usize,
    pub standard: SelectionStandard,
    pub selected_arm: usize,
    pub is_correct: bool,
    pub final_counts: Vec<u64>,
    pub final_means: Vec<f64>,
    /// For UCB1, evaluated at the global count `B`.
    pub final_ucbs: Vec<f64>,
    pub trace: Option<Trace>,
}

impl RunResult {
    pub fn budget_used(&self) -> u64 {
        self.final_counts.iter().sum()
    }

    /// Final pick under `standard`, ties to the lowest index.
    pub fn select(&self, standard: SelectionStandard) -> usize {
        match standard {
            SelectionStandard::MaxCount => argmax_by(&self.final_counts, |a, b| a > b),
            SelectionStandard::MaxMean => argmax_ucb(&self.final_means),
            SelectionStandard::MaxUcb => argmax_ucb(&self.final_ucbs),
        }
    }

    pub fn is_correct_under(&self, standard: SelectionStandard) -> bool {
        self.select(standard) == self.best_arm
    }
}

fn argmax_by<T: Copy>(xs: &[T], gt: impl Fn(T, T) -> bool) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if gt(x, xs[best]) {
            best = i;
        }
    }
    best
}

/// Index of the largest value, lowest index among ties.
pub fn argmax_ucb(values: &[f64]) -> usize {
    assert!(!values.is_empty(), "argmax of no arms");
    argmax_by(values, |a, b| a > b)
}

/// Max tournament over leaf values; ties go to the lower index.
#[derive(Debug, Clone)]
struct Tournament {
    width: usize,
    values: Vec<f64>,
    winners: Vec<u32>,
}

impl Tournament {
    fn new(values: &[f64]) -> Tournament {
        let width = values.len().next_power_of_two();
        let mut leaf = vec![f64::NEG_INFINITY; width];
        leaf[..values.len()].copy_from_slice(values);
        let mut winners = vec![0u32; 2 * width];
        for i in 0..width {
            winners[width + i] = i as u32;
        }
        let mut t = Tournament {
            width,
            values: leaf,
            winners,
        };
        for node in (1..width).rev() {
            t.winners[node] = t.play(node);
        }
        t
    }

    #[inline]
    fn play(&self, node: usize) -> u32 {
        let l = self.winners[2 * node];
        let r = self.winners[2 * node + 1];
        // l < r always, so only a strictly larger right value wins.
        if self.values[r as usize] > self.values[l as usize] {
            r
        } else {
            l
        }
    }

    #[inline]
    fn update(&mut self, i: usize, v: f64) {
        self.values[i] = v;
        let mut node = (self.width + i) / 2;
        while node >= 1 {
            self.winners[node] = self.play(node);
            node /= 2;
        }
    }

    #[inline]
    fn top(&self) -> usize {
        if self.width == 1 {
            0
        } else {
            self.winners[1] as usize
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    mean: f64,
    arm: u32,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.mean
            .total_cmp(&other.mean)
            .then_with(|| other.arm.cmp(&self.arm))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Top arm of one count group.
#[derive(Debug, Clone, Copy)]
struct GroupTop {
    mean: f64,
    inv_sqrt_count: f64,
    arm: u32,
}

/// Arms grouped by count, groups sorted by count.
///
/// The group tops live in their own contiguous vector so the per-round scan
/// touches one cache-friendly array and does no square roots.
struct Buckets {
    counts: Vec<u64>,
    tops: Vec<GroupTop>,
    heaps: Vec<BinaryHeap<Entry>>,
}

impl Buckets {
    fn new(heap: BinaryHeap<Entry>) -> Buckets {
        let top = *heap.peek().expect("k >= 2");
        Buckets {
            counts: vec![1],
            tops: vec![GroupTop {
                mean: top.mean,
                inv_sqrt_count: inv_sqrt(1),
                arm: top.arm,
            }],
            heaps: vec![heap],
        }
    }

    /// Position of the group holding the UCB1 argmax, given `sqrt(2 log n)`.
    #[inline]
    fn best(&self, scale: f64) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        let mut best_arm = u32::MAX;
        for (g, t) in self.tops.iter().enumerate() {
            let v = t.mean + scale * t.inv_sqrt_count;
            if v > best_v || (v == best_v && t.arm < best_arm) {
                best = g;
                best_v = v;
                best_arm = t.arm;
            }
        }
        best
    }

    fn refresh(&mut self, g: usize) {
        let top = self.heaps[g].peek().expect("non-empty");
        self.tops[g].mean = top.mean;
        self.tops[g].arm = top.arm;
    }

    /// Move the top arm of group `g` up one count with its new mean.
    fn promote(&mut self, g: usize, mean: f64) {
        let count = self.counts[g];
        let e = self.heaps[g].pop().expect("non-empty");
        let moved = Entry { mean, arm: e.arm };
        let next = g + 1;
        if next < self.counts.len() && self.counts[next] == count + 1 {
            self.heaps[next].push(moved);
            self.refresh(next);
        } else {
            let mut h = BinaryHeap::new();
            h.push(moved);
            self.counts.insert(next, count + 1);
            self.heaps.insert(next, h);
            self.tops.insert(
                next,
                GroupTop {
                    mean,
                    inv_sqrt_count: inv_sqrt(count + 1),
                    arm: e.arm,
                },
            );
        }
        if self.heaps[g].is_empty() {
            self.counts.remove(g);
            self.heaps.remove(g);
            self.tops.remove(g);
        } else {
            self.refresh(g);
        }
    }
}

fn check(config: &ProblemConfig, budget: u64) -> Result<(), EngineError> {
    let k = config.k;
    if budget < k as u64 {
        return Err(EngineError::BudgetTooSmall { budget, k });
    }
    let top = config.means[config.best_arm];
    if config
        .means
        .iter()
        .enumerate()
        .any(|(i, &m)| i != config.best_arm && m >= top)
    {
        return Err(EngineError::NonUniqueBest);
    }
    Ok(())
}

/// One run of `algorithm` on `config` with budget `budget`.
///
/// Arm `i` observes stream `(seed, i)`.
pub fn run(
    config: &ProblemConfig,
    algorithm: &Algorithm,
    budget: u64,
    standard: SelectionStandard,
    seed: u64,
    capture_trace: bool,
) -> Result<RunResult, EngineError> {
    check(config, budget)?;
    match algorithm {
        Algorithm::Decoupled(spec) => run_decoupled(config, &Bonus::new(*spec)?, budget, standard, seed, capture_trace),
        Algorithm::Ucb1 => Ok(run_ucb1(config, budget, standard, seed, capture_trace)),
    }
}

struct Init {
    streams: Vec<ArmStream>,
    sums: Vec<RunningMean>,
    trace: Option<Trace>,
}

fn initialize(config: &ProblemConfig, seed: u64, capture: bool) -> Init {
    let k = config.k;
    let mut streams: Vec<ArmStream> = (0..k).map(|i| ArmStream::new(seed, i)).collect();
    let mut sums = vec![RunningMean::default(); k];
    let mut obs = Vec::with_capacity(if capture { k } else { 0 });
    for i in 0..k {
        let x = config.arms[i].sample(&mut streams[i]);
        sums[i].push(x);
        if capture {
            obs.push(x);
        }
    }
    let trace = capture.then(|| Trace {
        initial_observations: obs,
        initial_ucbs: Vec::new(),
        records: Vec::new(),
    });
    Init { streams, sums, trace }
}

fn finish(
    config: &ProblemConfig,
    budget: u64,
    standard: SelectionStandard,
    seed: u64,
    sums: &[RunningMean],
    final_ucbs: Vec<f64>,
    trace: Option<Trace>,
) -> RunResult {
    let mut r = RunResult {
        seed,
        budget,
        best_arm: config.best_arm,
        standard,
        selected_arm: 0,
        is_correct: false,
        final_counts: sums.iter().map(|s| s.count()).collect(),
        final_means: sums.iter().map(|s| s.mean()).collect(),
        final_ucbs,
        trace,
    };
    r.selected_arm = r.select(standard);
    r.is_correct = r.selected_arm == r.best_arm;
    r
}

fn run_decoupled(
    config: &ProblemConfig,
    bonus: &Bonus,
    budget: u64,
    standard: SelectionStandard,
    seed: u64,
    capture: bool,
) -> Result<RunResult, EngineError> {
    let k = config.k;
    let Init {
        mut streams,
        mut sums,
        mut trace,
    } = initialize(config, seed, capture);
    let ucbs: Vec<f64> = sums.iter().map(|s| ucb_value(s, bonus)).collect();
    if let Some(t) = trace.as_mut() {
        t.initial_ucbs = ucbs.clone();
        t.records.reserve((budget - k as u64) as usize);
    }
    let mut tree = Tournament::new(&ucbs);
    for round in (k as u64 + 1)..=budget {
        let i = tree.top();
        let x = config.arms[i].sample(&mut streams[i]);
        sums[i].push(x);
        let u = ucb_value(&sums[i], bonus);
        tree.update(i, u);
        if let Some(t) = trace.as_mut() {
            t.records.push(TraceRecord {
                round,
                arm: i,
                new_count: sums[i].count(),
                observation: x,
                new_ucb: u,
            });
        }
    }
    let final_ucbs = tree.values[..k].to_vec();
    Ok(finish(config, budget, standard, seed, &sums, final_ucbs, trace))
}

fn run_ucb1(config: &ProblemConfig, budget: u64, standard: SelectionStandard, seed: u64, capture: bool) -> RunResult {
    let k = config.k;
    let Init {
        mut streams,
        mut sums,
        mut trace,
    } = initialize(config, seed, capture);
    if let Some(t) = trace.as_mut() {
        t.initial_ucbs = sums.iter().map(|s| s.mean() + ucb1_bonus(k as u64, 1)).collect();
        t.records.reserve((budget - k as u64) as usize);
    }
    let heap: BinaryHeap<Entry> = sums
        .iter()
        .enumerate()
        .map(|(i, s)| Entry {
            mean: s.mean(),
            arm: i as u32,
        })
        .collect();
    let mut buckets = Buckets::new(heap);
    for round in (k as u64 + 1)..=budget {
        // `round - 1` observations have been taken so far.
        let g = buckets.best(ucb1_scale(round - 1));
        let i = buckets.tops[g].arm as usize;
        let x = config.arms[i].sample(&mut streams[i]);
        sums[i].push(x);
        buckets.promote(g, sums[i].mean());
        if let Some(t) = trace.as_mut() {
            t.records.push(TraceRecord {
                round,
                arm: i,
                new_count: sums[i].count(),
                observation: x,
                new_ucb: sums[i].mean() + ucb1_bonus(round, sums[i].count()),
            });
        }
    }
    let final_ucbs = sums.iter().map(|s| s.mean() + ucb1_bonus(budget, s.count())).collect();
    finish(config, budget, standard, seed, &sums, final_ucbs, trace)
}

/// Reference implementation scanning every arm each round.
///
/// Quadratic in `k`; only for cross-checking [`run`] on small instances.
pub fn run_naive(
    config: &ProblemConfig,
    algorithm: &Algorithm,
    budget: u64,
    standard: SelectionStandard,
    seed: u64,
) -> Result<RunResult, EngineError> {
    check(config, budget)?;
    let k = config.k;
    let bonus = match algorithm {
        Algorithm::Decoupled(spec) => Some(Bonus::new(*spec)?),
        Algorithm::Ucb1 => None,
    };
    let index = |s: &RunningMean, n: u64| match &bonus {
        Some(b) => ucb_value(s, b),
        None => s.mean() + ucb1_bonus(n, s.count()),
    };
    let Init {
        mut streams, mut sums, ..
    } = initialize(config, seed, false);
    for round in (k as u64 + 1)..=budget {
        let values: Vec<f64> = sums.iter().map(|s| index(s, round - 1)).collect();
        let i = argmax_ucb(&values);
        let x = config.arms[i].sample(&mut streams[i]);
        sums[i].push(x);
    }
    let final_ucbs = sums.iter().map(|s| index(s, budget)).collect();
    Ok(finish(config, budget, standard, seed, &sums, final_ucbs, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configs::{make_shifted, preset};
    use crate::distributions::DistributionSpec;
    use proptest::prelude::*;

    fn normal_sc(k: usize, gamma: f64) -> ProblemConfig {
        make_shifted(k, &DistributionSpec::normal(0.0, 1.0).unwrap(), gamma, 0.0, 0.0).unwrap()
    }

    const UCBE1: Algorithm = Algorithm::Decoupled(BonusSpec::Ucbe { a: 1.0 });

    #[test]
    fn argmax_tie_break() {
        assert_eq!(argmax_ucb(&[0.3, 0.9, 0.9]), 1);
        assert_eq!(argmax_ucb(&[0.5, 0.5]), 0);
    }

    #[test]
    fn tournament_matches_scan() {
        let vals = [0.1, 0.7, -2.0, 0.7, 0.3];
        let mut t = Tournament::new(&vals);
        assert_eq!(t.top(), 1);
        t.update(1, 0.0);
        assert_eq!(t.top(), 3);
        t.update(4, 0.7);
        assert_eq!(t.top(), 3);
        t.update(0, 0.7);
        assert_eq!(t.top(), 0);
        let single = Tournament::new(&[1.0]);
        assert_eq!(single.top(), 0);
    }

    #[test]
    fn budget_exhausted_at_initialization() {
        let c = normal_sc(2, 0.1);
        for alg in [UCBE1, Algorithm::Ucb1] {
            let r = run(&c, &alg, 2, SelectionStandard::MaxCount, 7, false).unwrap();
            assert_eq!(r.final_counts, vec![1, 1]);
            assert_eq!(r.selected_arm, 0);
        }
    }

    #[test]
    fn errors() {
        let c = normal_sc(4, 0.1);
        assert_eq!(
            run(&c, &UCBE1, 3, SelectionStandard::MaxCount, 0, false).unwrap_err(),
            EngineError::BudgetTooSmall { budget: 3, k: 4 }
        );
        let mut tied = c.clone();
        tied.means[1] = tied.means[0];
        assert_eq!(
            run(&tied, &UCBE1, 10, SelectionStandard::MaxCount, 0, false).unwrap_err(),
            EngineError::NonUniqueBest
        );
    }

    #[test]
    fn all_equal_observations_with_greedy_pick_first_arm() {
        // No continuous law repeats a value, so start from equal observations directly.
        let g = Bonus::new(BonusSpec::Greedy).unwrap();
        let s = RunningMean::default();
        let mut a = s;
        a.push(1.0);
        let ucbs = [ucb_value(&a, &g); 3];
        assert_eq!(Tournament::new(&ucbs).top(), 0);
    }

    #[test]
    fn two_arm_majority_correct() {
        let base = DistributionSpec::normal(0.1, 1.0).unwrap();
        let c = make_shifted(2, &base, 0.1, 0.0, 0.0).unwrap();
        let alg = Algorithm::Decoupled(BonusSpec::Ucbe { a: 0.2 });
        let wins = (0..500)
            .filter(|&s| run(&c, &alg, 2000, SelectionStandard::MaxCount, s, false).unwrap().is_correct)
            .count();
        assert!(wins > 250, "{wins}");
    }

    #[test]
    fn greedy_equals_ucbe_zero() {
        let c = make_shifted(16, &preset("sc-lognormal").unwrap(), 0.1, 0.0, 0.0).unwrap();
        let a = run(&c, &Algorithm::Decoupled(BonusSpec::Greedy), 800, SelectionStandard::MaxCount, 3, true).unwrap();
        let b = run(&c, &Algorithm::Decoupled(BonusSpec::Ucbe { a: 0.0 }), 800, SelectionStandard::MaxCount, 3, true)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_shape() {
        let c = normal_sc(8, 0.2);
        let r = run(&c, &UCBE1, 100, SelectionStandard::MaxCount, 11, true).unwrap();
        let t = r.trace.as_ref().unwrap();
        assert_eq!(t.initial_observations.len(), 8);
        assert_eq!(t.records.len(), 92);
        for (n, rec) in t.records.iter().enumerate() {
            assert_eq!(rec.round, 9 + n as u64);
        }
        let untraced = run(&c, &UCBE1, 100, SelectionStandard::MaxCount, 11, false).unwrap();
        assert_eq!(RunResult { trace: None, ..r }, untraced);
    }

    fn any_algorithm() -> impl Strategy<Value = Algorithm> {
        prop_oneof![
            Just(UCBE1),
            Just(Algorithm::Decoupled(BonusSpec::Greedy)),
            Just(Algorithm::Decoupled(BonusSpec::Moss { c: 20.0 })),
            Just(Algorithm::Decoupled(BonusSpec::UcbePlus { q: 5.0 })),
            Just(Algorithm::Ucb1),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fast_paths_match_naive_scan(k in 2usize..=8, extra in 0u64..=192, seed in any::<u64>(), alg in any_algorithm(), idx in 0usize..5) {
            let base = crate::configs::table1_presets()[idx].spec.clone();
            let c = make_shifted(k, &base, 0.1, 1.0, 1.0).unwrap();
            let budget = k as u64 + extra;
            let fast = run(&c, &alg, budget, SelectionStandard::MaxUcb, seed, false).unwrap();
            let slow = run_naive(&c, &alg, budget, SelectionStandard::MaxUcb, seed).unwrap();
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn budget_conservation_and_state(k in 2usize..64, mult in 1u64..20, seed in any::<u64>(), alg in any_algorithm()) {
            let c = normal_sc(k, 0.1);
            let budget = k as u64 * mult;
            let r = run(&c, &alg, budget, SelectionStandard::MaxCount, seed, false).unwrap();
            prop_assert_eq!(r.budget_used(), budget);
            prop_assert!(r.final_counts.iter().all(|&n| n >= 1));
            if let Algorithm::Decoupled(spec) = alg {
                let f = spec.compile();
                for i in 0..k {
                    prop_assert_eq!(r.final_ucbs[i], r.final_means[i] + f.eval(r.final_counts[i]));
                }
            }
            for s in SelectionStandard::ALL {
                prop_assert_eq!(r.is_correct_under(s), r.select(s) == 0);
            }
        }
    }
}
