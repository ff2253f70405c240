//! Closed-form bounds and the boundary-crossing oracle.
//!
//! The oracle functions replay the same `(seed, arm)` streams as
//! [`crate::engine::run`] and accumulate sample means with the same
//! compensated sum, so a crossing time computed here and a count observed
//! in a run refer to one and the same sample path.
//!
//! Every bound evaluator that can overflow works with logarithms and only
//! exponentiates at the end.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::bonus::{concentration_constants, Bonus, BonusError, BonusSpec, HeavyCsThreshold};
use crate::configs::ProblemConfig;
use crate::distributions::{ArmStream, DistributionSpec, RunningMean};
use crate::engine::ucb_value;
use crate::stats::{mix_seed, wilson, OnlineMoments, Proportion, Z95};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("q = {q} is too small: this quantity needs q > {need}")]
    QTooSmall { q: f64, need: f64 },
    #[error("beta = {beta} must be below {limit}")]
    BetaTooLarge { beta: f64, limit: f64 },
    #[error("gamma0 = {gamma0} must lie in (0, {gamma})")]
    GammaOutOfRange { gamma0: f64, gamma: f64 },
    #[error("no gamma0 in (0, gamma) meets the budget inequality")]
    Infeasible,
    #[error("invalid argument {name} = {value}")]
    InvalidArgument { name: &'static str, value: f64 },
    #[error(transparent)]
    Bonus(#[from] BonusError),
}

fn positive(name: &'static str, value: f64) -> Result<(), AnalysisError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(AnalysisError::InvalidArgument { name, value })
    }
}

/// First crossing index, or the horizon reached without one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossing {
    At(u64),
    Censored(u64),
}

impl Crossing {
    pub fn value(&self) -> Option<u64> {
        match self {
            Crossing::At(n) => Some(*n),
            Crossing::Censored(_) => None,
        }
    }

    pub fn is_censored(&self) -> bool {
        matches!(self, Crossing::Censored(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingTime {
    pub value: Crossing,
    pub boundary: f64,
    pub arm: usize,
}

/// First `n` in `[start_n, horizon]` with `mean(n) + f(n) < boundary` on stream `(seed, arm)`.
pub fn crossing_time(
    seed: u64,
    arm: usize,
    dist: &DistributionSpec,
    bonus: &BonusSpec,
    boundary: f64,
    start_n: u64,
    horizon: u64,
) -> CrossingTime {
    let f = bonus.compile();
    CrossingTime {
        value: crossing_with(seed, arm, dist, &f, boundary, start_n, horizon),
        boundary,
        arm,
    }
}

fn crossing_with(
    seed: u64,
    arm: usize,
    dist: &DistributionSpec,
    f: &Bonus,
    boundary: f64,
    start_n: u64,
    horizon: u64,
) -> Crossing {
    assert!(horizon >= start_n && start_n >= 1, "need horizon >= start_n >= 1");
    let mut stream = ArmStream::new(seed, arm);
    let mut sum = RunningMean::default();
    for n in 1..=horizon {
        sum.push(dist.sample(&mut stream));
        if n >= start_n && ucb_value(&sum, f) < boundary {
            return Crossing::At(n);
        }
    }
    Crossing::Censored(horizon)
}

/// `min_{1 <= n <= horizon} mean(n) + f(n)` on stream `(seed, 0)`.
pub fn u1_star(seed: u64, dist: &DistributionSpec, bonus: &BonusSpec, horizon: u64) -> f64 {
    assert!(horizon >= 1);
    let f = bonus.compile();
    let mut stream = ArmStream::new(seed, 0);
    let mut sum = RunningMean::default();
    let mut lo = f64::INFINITY;
    for _ in 0..horizon {
        sum.push(dist.sample(&mut stream));
        lo = lo.min(ucb_value(&sum, &f));
    }
    lo
}

/// `u1_star(seed, ..) >= threshold`, stopping at the first value below it.
fn u1_stays_above(seed: u64, dist: &DistributionSpec, f: &Bonus, threshold: f64, horizon: u64) -> bool {
    let mut stream = ArmStream::new(seed, 0);
    let mut sum = RunningMean::default();
    for _ in 0..horizon {
        sum.push(dist.sample(&mut stream));
        if ucb_value(&sum, f) < threshold {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcsBoundEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// `Pr{B >= 2 sum_i T_i(mu_1 - gamma0)}`.
    pub factor1: Proportion,
    /// `Pr{U_1* >= mu_1 - gamma0}` at the finite horizon.
    pub factor2: Proportion,
    /// Replications where some crossing time was censored (counted as failures).
    pub censored_reps: u64,
    pub horizon: u64,
    pub bias_note: &'static str,
}

/// Replication seed `r` of a Monte Carlo estimate keyed by `seed`.
///
/// Arm `i` of replication `r` reads stream `(rep_seed(seed, r), i)`, exactly as
/// an engine run with that seed would.
pub fn rep_seed(seed: u64, rep: u64) -> u64 {
    mix_seed(seed, rep)
}

/// Per-replication events behind [`pcs_lower_bound_mc`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PcsBoundRep {
    /// `sum_{i != best} T_i(mu_1 - gamma0) <= B/2`.
    pub factor1: bool,
    /// The best arm's UCB process stays at or above `mu_1 - gamma0` up to the horizon.
    pub factor2: bool,
    /// Some inferior arm was still above the boundary when its share of `B/2` ran out.
    pub censored: bool,
}

/// Both lower-bound events for replications `0..reps`, in order.
pub fn pcs_bound_indicators(
    config: &ProblemConfig,
    bonus: &BonusSpec,
    budget: u64,
    gamma0: f64,
    horizon: u64,
    reps: u64,
    seed: u64,
) -> Result<Vec<PcsBoundRep>, AnalysisError> {
    let gamma = config.min_gap();
    if !(gamma0 > 0.0 && gamma0 < gamma) {
        return Err(AnalysisError::GammaOutOfRange { gamma0, gamma });
    }
    let f = Bonus::new(*bonus)?;
    let best = config.best_arm;
    let boundary = config.means[best] - gamma0;
    let half = budget / 2;
    Ok((0..reps)
        .into_par_iter()
        .map(|r| {
            let s = rep_seed(seed, r);
            let mut used = 0u64;
            let mut ok = true;
            let mut censored = false;
            for i in (0..config.k).filter(|&i| i != best) {
                let left = half.saturating_sub(used);
                if left == 0 {
                    ok = false;
                    break;
                }
                match crossing_with(s, i, &config.arms[i], &f, boundary, 1, left) {
                    Crossing::At(n) => used += n,
                    Crossing::Censored(_) => {
                        ok = false;
                        censored = true;
                        break;
                    }
                }
            }
            PcsBoundRep {
                factor1: ok,
                factor2: u1_stays_above(s, &config.arms[best], &f, boundary, horizon),
                censored,
            }
        })
        .collect())
}

/// Monte Carlo estimate of the decoupled PCS lower bound
/// `Pr{B >= 2 sum_{i>=2} T_i(mu_1 - gamma0)} * Pr{U_1* >= mu_1 - gamma0}`.
///
/// The two factors are estimated from the same replications; the standard
/// error of the product follows from the delta method.
pub fn pcs_lower_bound_mc(
    config: &ProblemConfig,
    bonus: &BonusSpec,
    budget: u64,
    gamma0: f64,
    horizon: u64,
    reps: u64,
    seed: u64,
) -> Result<PcsBoundEstimate, AnalysisError> {
    let ind = pcs_bound_indicators(config, bonus, budget, gamma0, horizon, reps, seed)?;
    let count = |f: fn(&PcsBoundRep) -> bool| ind.iter().filter(|r| f(r)).count() as u64;
    let p1 = wilson(count(|r| r.factor1), reps, Z95);
    let p2 = wilson(count(|r| r.factor2), reps, Z95);
    let n = reps as f64;
    let v1 = p1.estimate * (1.0 - p1.estimate) / n;
    let v2 = p2.estimate * (1.0 - p2.estimate) / n;
    Ok(PcsBoundEstimate {
        estimate: p1.estimate * p2.estimate,
        std_error: (p2.estimate.powi(2) * v1 + p1.estimate.powi(2) * v2).sqrt(),
        factor1: p1,
        factor2: p2,
        censored_reps: count(|r| r.censored),
        horizon,
        bias_note: "finite horizon over-estimates Pr{U1* >= mu1 - gamma0}, so the bound estimate is biased upward",
    })
}

/// Probability floor `exp(-pi^2 sigma1^2 / (6 gamma0^2))` for `Pr{U_1* >= mu_1 - gamma0}`.
pub fn lemma1_floor(sigma1: f64, gamma0: f64) -> f64 {
    (-PI * PI * sigma1 * sigma1 / (6.0 * gamma0 * gamma0)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constants {
    pub q: f64,
    pub m: f64,
    pub a1: f64,
    pub a2: f64,
    pub c1: f64,
    pub c2: f64,
    /// Present only for `q > 3`.
    pub c3: Option<f64>,
}

impl Constants {
    pub fn c3(&self) -> Result<f64, AnalysisError> {
        self.c3.ok_or(AnalysisError::QTooSmall { q: self.q, need: 3.0 })
    }
}

/// Concentration constants for `E|X|^q <= m`; needs `q > 2`.
pub fn constants(q: f64, m: f64) -> Result<Constants, AnalysisError> {
    if !(q > 2.0) {
        return Err(AnalysisError::QTooSmall { q, need: 2.0 });
    }
    positive("m", m)?;
    let (a1, a2) = concentration_constants(q, m);
    Ok(Constants {
        q,
        m,
        a1,
        a2,
        c1: a1 * (q - 1.0) / (q - 2.0),
        c2: a2,
        c3: (q > 3.0).then(|| 2.0 * a1 * (q - 2.0) / (q - 3.0)),
    })
}

/// Tail bound `a1 n^{1-q} x^{-q} + exp(-a2 n x^2)`, clamped to 1.
pub fn nagaev_bound(q: f64, m: f64, n: u64, x: f64) -> Result<f64, AnalysisError> {
    let c = constants(q, m)?;
    if !(x > 0.0) {
        return Ok(1.0);
    }
    let nf = n.max(1) as f64;
    let log_poly = c.a1.ln() + (1.0 - q) * nf.ln() - q * x.ln();
    let expo = -c.a2 * nf * x * x;
    Ok((log_poly.exp() + expo.exp()).min(1.0))
}

/// The two terms of [`nagaev_bound`] before summing and clamping.
pub fn nagaev_terms(q: f64, m: f64, n: u64, x: f64) -> Result<(f64, f64), AnalysisError> {
    let c = constants(q, m)?;
    let nf = n.max(1) as f64;
    Ok((
        (c.a1.ln() + (1.0 - q) * nf.ln() - q * x.ln()).exp(),
        (-c.a2 * nf * x * x).exp(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingMoments {
    /// Mean bound `C(b; n0)`.
    pub c: f64,
    /// Variance bound `D(b; n0)`.
    pub d: f64,
}

/// `C(b; n0)` and `D(b; n0)` for the crossing time `inf{n >= n0: mean(n) < b}`.
pub fn crossing_moment_bounds(q: f64, m: f64, b: f64, n0: u64) -> Result<CrossingMoments, AnalysisError> {
    let k = constants(q, m)?;
    let c3 = k.c3()?;
    positive("b", b)?;
    let n = n0.max(1) as f64;
    let cb2 = k.c2 * b * b;
    // 1 - exp(-c2 b^2), accurate for tiny c2 b^2.
    let denom = -(-cb2).exp_m1();
    let geo = (-n * cb2).exp();
    let c = (k.c1.ln() - q * b.ln() + (2.0 - q) * n.ln()).exp() + geo / denom + n;
    let d = (c3.ln() - q * b.ln() + (3.0 - q) * n.ln()).exp() + 2.0 * n * geo / (denom * denom);
    Ok(CrossingMoments { c, d })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CfBound {
    pub value: f64,
    pub log_value: f64,
    pub n_f: u64,
}

/// `C^f(x, y, z) = n^f(xy/(2z)) exp(2 z^2 pi^2 / (3 x^2 n^f(xy/(2z))))`.
pub fn cf_bound(gap_x: f64, sigma_lo: f64, sigma_hi: f64, bonus: &BonusSpec) -> Result<CfBound, AnalysisError> {
    positive("gap_x", gap_x)?;
    positive("sigma_lo", sigma_lo)?;
    positive("sigma_hi", sigma_hi)?;
    if sigma_lo > sigma_hi {
        return Err(AnalysisError::InvalidArgument {
            name: "sigma_lo",
            value: sigma_lo,
        });
    }
    let nf = bonus.n_f(gap_x * sigma_lo / (2.0 * sigma_hi))?;
    let n = nf as f64;
    let log_value = n.ln() + 2.0 * sigma_hi * sigma_hi * PI * PI / (3.0 * gap_x * gap_x * n);
    Ok(CfBound {
        value: log_value.exp(),
        log_value,
        n_f: nf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regime {
    /// Location-scale arms with standard deviations in `[sigma_lo, sigma_hi]`.
    LocationScale,
    /// Arms with `E|X|^q <= m`.
    Moment { q: f64, m: f64 },
}

/// `log` of the per-arm expected crossing bound at gap `x = gamma - gamma0`.
fn crossing_budget_log(x: f64, sigma_lo: f64, sigma_hi: f64, bonus: &BonusSpec, regime: &Regime) -> Result<f64, AnalysisError> {
    match regime {
        Regime::LocationScale => Ok(cf_bound(x, sigma_lo, sigma_hi, bonus)?.log_value),
        Regime::Moment { q, m } => {
            let b = x / 2.0;
            let n0 = bonus.n_f(b)?;
            Ok(crossing_moment_bounds(*q, *m, b, n0)?.c.ln())
        }
    }
}

/// Largest `gamma0 in (0, gamma)` with `2 * bound(gamma - gamma0) <= c`, by bisection.
///
/// The bound is `C^f(gamma - gamma0, sigma_lo, sigma_hi)` for location-scale
/// arms and `C((gamma - gamma0)/2; n^f((gamma - gamma0)/2))` under a moment
/// condition.
pub fn solve_gamma0(
    c: f64,
    gamma: f64,
    sigma_lo: f64,
    sigma_hi: f64,
    bonus: &BonusSpec,
    regime: &Regime,
) -> Result<f64, AnalysisError> {
    positive("c", c)?;
    positive("gamma", gamma)?;
    let log_c2 = (c / 2.0).ln();
    let feasible = |g0: f64| -> Result<bool, AnalysisError> {
        Ok(crossing_budget_log(gamma - g0, sigma_lo, sigma_hi, bonus, regime)? <= log_c2)
    };
    if !feasible(0.0)? {
        return Err(AnalysisError::Infeasible);
    }
    let (mut lo, mut hi) = (0.0, gamma);
    while hi - lo > 1e-12 * gamma.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // n^f can fail for tiny levels; treat that as infeasible.
        match feasible(mid) {
            Ok(true) => lo = mid,
            Ok(false) | Err(AnalysisError::Bonus(BonusError::NoThreshold { .. })) => hi = mid,
            Err(e) => return Err(e),
        }
    }
    Ok(lo)
}

/// Value of a truncated crossing-time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SeriesValue {
    Converged {
        value: f64,
        /// Contribution of the last decade of terms, relative to the sum.
        remainder: f64,
        terms_used: u64,
    },
    /// The last decade still contributed more than the tolerance.
    Divergent { partial_sum: f64, terms_used: u64 },
}

impl SeriesValue {
    pub fn value(&self) -> Option<f64> {
        match self {
            SeriesValue::Converged { value, .. } => Some(*value),
            SeriesValue::Divergent { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactTau {
    /// `Pr{tau = inf} = exp(-sum n^-1 Pr{mean(n) < b})`.
    pub p_inf: SeriesValue,
    /// `E[tau] = exp(sum n^-1 Pr{mean(n) >= b})`.
    pub e_tau: SeriesValue,
}

/// Relative size of the last decade below which a series counts as converged.
pub const SERIES_TOL: f64 = 1e-9;

fn decade_series(term: impl Fn(u64) -> f64, terms: u64, sign: f64) -> SeriesValue {
    let mut total = 0.0;
    let mut lo = 1u64;
    loop {
        let hi = lo.saturating_mul(10).min(terms + 1);
        let block: f64 = (lo..hi).map(|n| term(n) / n as f64).sum();
        total += block;
        let rel = if total == 0.0 { 0.0 } else { block / total };
        if rel <= SERIES_TOL && lo > 1 || total == 0.0 && block == 0.0 && lo > 1 {
            return SeriesValue::Converged {
                value: (sign * total).exp(),
                remainder: rel,
                terms_used: hi - 1,
            };
        }
        if hi > terms {
            return SeriesValue::Divergent {
                partial_sum: total,
                terms_used: terms,
            };
        }
        lo = hi;
    }
}

/// Both crossing-time series from `ge(n) = Pr{mean(n) >= b}` and `lt(n) = Pr{mean(n) < b}`.
pub fn exact_tau_split(ge: impl Fn(u64) -> f64, lt: impl Fn(u64) -> f64, terms: u64) -> ExactTau {
    assert!(terms >= 1);
    ExactTau {
        p_inf: decade_series(lt, terms, -1.0),
        e_tau: decade_series(ge, terms, 1.0),
    }
}

/// [`exact_tau_split`] with `lt = 1 - tail`.
pub fn exact_tau(tail: impl Fn(u64) -> f64, terms: u64) -> ExactTau {
    exact_tau_split(&tail, |n| 1.0 - tail(n), terms)
}

/// `Pr{mean(n) >= b}` for i.i.d. Normal(mu, sigma^2) observations.
pub fn gaussian_mean_tail(mu: f64, sigma: f64, b: f64) -> impl Fn(u64) -> f64 {
    move |n| 0.5 * erfc((b - mu) * (n as f64).sqrt() / (sigma * std::f64::consts::SQRT_2))
}

/// `Pr{mean(n) < b}` for i.i.d. Normal(mu, sigma^2) observations.
pub fn gaussian_mean_lower_tail(mu: f64, sigma: f64, b: f64) -> impl Fn(u64) -> f64 {
    move |n| 0.5 * erfc((mu - b) * (n as f64).sqrt() / (sigma * std::f64::consts::SQRT_2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailMomentBounds {
    pub mean_bound: f64,
    pub var_bound: f64,
}

/// Mean and variance bounds for `inf{n >= n0: mean(n) < b}` from a tail function,
/// summed over `terms` terms.
pub fn tail_moment_bounds(tail: impl Fn(u64) -> f64, n0: u64, terms: u64) -> TailMomentBounds {
    let n0 = n0.max(1);
    let mean_bound = (n0..n0 + terms).map(&tail).sum::<f64>() + n0 as f64;
    let var_bound = 2.0 * (1..=terms).map(|m| m as f64 * tail(m + n0 - 1)).sum::<f64>();
    TailMomentBounds { mean_bound, var_bound }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetConstants {
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

/// Constants of the polynomial-gap budget for the HeavyCS bonus.
pub fn budget_constants(q: f64, alpha: f64, m: f64, q_prime: f64) -> Result<BudgetConstants, AnalysisError> {
    if !(q > 3.0) {
        return Err(AnalysisError::QTooSmall { q, need: 3.0 });
    }
    BonusSpec::HeavyCs { q, q_prime, m, alpha }.validate()?;
    let (_, a2) = concentration_constants(q, m);
    let t = HeavyCsThreshold::new(q, q_prime, m, alpha);
    Ok(BudgetConstants {
        d0: 2.0 * alpha,
        d1: t.c1 * 2f64.powf(t.exponent),
        d2: 2.0 * alpha / a2 + 4.0 * t.c2 + 8.0 * t.c3 * (4.0 * t.c3).ln(),
        d3: 16.0 * t.c3,
        d4: alpha * (q - 2.0) / (q - 3.0) + alpha * t.c2.powf(-q_prime) * (1.0 + 2.0 / a2 + 1.0 / (a2 * a2)),
    })
}

/// Per-arm budget multiplier `d0 + d1/(1 - beta q/(q-1-q')) + d2/(1-2beta) + d3 beta/(1-2beta)^2`.
pub fn proposition1_budget(q: f64, beta: f64, alpha: f64, m: f64, q_prime: f64) -> Result<f64, AnalysisError> {
    let d = budget_constants(q, alpha, m, q_prime)?;
    let r = q - 1.0 - q_prime;
    let limit = (r / q).min(0.5);
    if !(beta >= 0.0 && beta < limit) {
        return Err(AnalysisError::BetaTooLarge { beta, limit });
    }
    let one2 = 1.0 - 2.0 * beta;
    Ok(d.d0 + d.d1 / (1.0 - beta * q / r) + d.d2 / one2 + d.d3 * beta / (one2 * one2))
}

/// Per-arm multiplier `10 [1/(1 - beta q/(q-3)) + 1/(1-2beta) + beta/(1-2beta)^2]`.
pub fn simplified_budget_64(q: f64, beta: f64) -> Result<f64, AnalysisError> {
    if !(q > 3.0) {
        return Err(AnalysisError::QTooSmall { q, need: 3.0 });
    }
    let limit = ((q - 3.0) / q).min(0.5);
    if !(beta >= 0.0 && beta < limit) {
        return Err(AnalysisError::BetaTooLarge { beta, limit });
    }
    let one2 = 1.0 - 2.0 * beta;
    Ok(10.0 * (1.0 / (1.0 - beta * q / (q - 3.0)) + 1.0 / one2 + beta / (one2 * one2)))
}

/// Closed-form HeavyCS threshold `n^f(b)`.
pub fn heavy_cs_nf(b: f64, q: f64, q_prime: f64, m: f64, alpha: f64) -> Result<u64, AnalysisError> {
    BonusSpec::HeavyCs { q, q_prime, m, alpha }.validate()?;
    positive("b", b)?;
    Ok(HeavyCsThreshold::new(q, q_prime, m, alpha).n_f(b))
}

/// Outcome of the bonus-shift comparison on one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShiftCheck {
    /// `inf{n >= 1: mean(n) < b - f(n)}`.
    pub left: Crossing,
    /// `inf{n >= n^f(b/2): mean(n) < b/2}`.
    pub right: Crossing,
    pub holds: bool,
}

/// Compare both crossing times of the bonus-shift inequality on stream `(seed, arm)`.
///
/// `holds` is false only if the right-hand time is observed and the left one
/// has not happened by then.
pub fn bonus_shift_check(seed: u64, arm: usize, dist: &DistributionSpec, f: &Bonus, b: f64, horizon: u64) -> Result<ShiftCheck, AnalysisError> {
    positive("b", b)?;
    let half = b / 2.0;
    let start = f.n_f(half)?;
    let mut stream = ArmStream::new(seed, arm);
    let mut sum = RunningMean::default();
    let mut left = None;
    let mut right = None;
    for n in 1..=horizon {
        sum.push(dist.sample(&mut stream));
        let mean = sum.mean();
        if left.is_none() && mean < b - f.eval(n) {
            left = Some(n);
        }
        if n >= start && mean < half {
            right = Some(n);
            break;
        }
    }
    let as_crossing = |x: Option<u64>| x.map_or(Crossing::Censored(horizon), Crossing::At);
    let holds = match (left, right) {
        (_, None) => true,
        (Some(l), Some(r)) => l <= r,
        (None, Some(_)) => false,
    };
    Ok(ShiftCheck {
        left: as_crossing(left),
        right: as_crossing(right),
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossingSample {
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    pub censored: u64,
    pub paths: u64,
}

/// Monte Carlo moments of `inf{n >= n0: mean(n) < b}` (censored paths count at the horizon).
pub fn crossing_time_moments_mc(dist: &DistributionSpec, b: f64, n0: u64, horizon: u64, paths: u64, seed: u64) -> CrossingSample {
    let greedy = Bonus::new(BonusSpec::Greedy).expect("greedy is valid");
    let times: Vec<(u64, bool)> = (0..paths)
        .into_par_iter()
        .map(|p| match crossing_with(rep_seed(seed, p), 0, dist, &greedy, b, n0, horizon) {
            Crossing::At(n) => (n, false),
            Crossing::Censored(h) => (h, true),
        })
        .collect();
    let mut m = OnlineMoments::default();
    times.iter().for_each(|&(t, _)| m.push(t as f64));
    let mean = m.mean();
    let var = m.variance();
    let m4 = times.iter().map(|&(t, _)| (t as f64 - mean).powi(4)).sum::<f64>() / paths as f64;
    CrossingSample {
        mean,
        mean_se: m.std_error(),
        variance: var,
        variance_se: ((m4 - var * var).max(0.0) / paths as f64).sqrt(),
        censored: times.iter().filter(|t| t.1).count() as u64,
        paths,
    }
}

/// Monte Carlo `Pr{mean(n) - mu >= x}` for each `x`, from the same paths.
pub fn mean_tail_mc(dist: &DistributionSpec, n: u64, xs: &[f64], paths: u64, seed: u64) -> Vec<Proportion> {
    let mu = dist.mean().expect("tail check needs a finite mean");
    let hits = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut s = ArmStream::new(rep_seed(seed, p), 0);
            let mut sum = RunningMean::default();
            for _ in 0..n {
                sum.push(dist.sample(&mut s));
            }
            let d = sum.mean() - mu;
            xs.iter().map(|&x| (d >= x) as u64).collect::<Vec<_>>()
        })
        .reduce(
            || vec![0; xs.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        );
    hits.into_iter().map(|h| wilson(h, paths, Z95)).collect()
}

/// Inputs of a [`BoundReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundQuery {
    pub bonus: BonusSpec,
    /// Budget multiplier `B / k`.
    pub c: f64,
    pub gamma: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    /// Standard deviation of the best arm; defaults to `sigma_hi`.
    #[serde(default)]
    pub sigma1: Option<f64>,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub gamma0: f64,
    pub lemma1_floor: f64,
    /// Tail bound at `n = n_f_used`, `x = (gamma - gamma0)/2`; moment regime only.
    pub nagaev: Option<f64>,
    pub constants: Option<Constants>,
    pub crossing_mean_bound: Option<f64>,
    pub crossing_var_bound: Option<f64>,
    pub cf_bound: Option<f64>,
    pub n_f_used: u64,
    /// Per-arm budget multiplier the report was computed for.
    pub budget: f64,
}

impl BoundQuery {
    pub fn report(&self) -> Result<BoundReport, AnalysisError> {
        let gamma0 = solve_gamma0(self.c, self.gamma, self.sigma_lo, self.sigma_hi, &self.bonus, &self.regime)?;
        let x = self.gamma - gamma0;
        let floor = lemma1_floor(self.sigma1.unwrap_or(self.sigma_hi), gamma0.max(f64::MIN_POSITIVE));
        let mut r = BoundReport {
            gamma0,
            lemma1_floor: floor,
            nagaev: None,
            constants: None,
            crossing_mean_bound: None,
            crossing_var_bound: None,
            cf_bound: None,
            n_f_used: 0,
            budget: self.c,
        };
        match self.regime {
            Regime::LocationScale => {
                let cf = cf_bound(x, self.sigma_lo, self.sigma_hi, &self.bonus)?;
                r.cf_bound = Some(cf.value);
                r.n_f_used = cf.n_f;
            }
            Regime::Moment { q, m } => {
                let b = x / 2.0;
                let n0 = self.bonus.n_f(b)?;
                let cm = crossing_moment_bounds(q, m, b, n0)?;
                r.constants = Some(constants(q, m)?);
                r.crossing_mean_bound = Some(cm.c);
                r.crossing_var_bound = Some(cm.d);
                r.nagaev = Some(nagaev_bound(q, m, n0, b)?);
                r.n_f_used = n0;
            }
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configs::make_shifted;

    fn std_normal() -> DistributionSpec {
        DistributionSpec::normal(0.0, 1.0).unwrap()
    }

    #[test]
    fn crossing_time_extremes() {
        let d = std_normal();
        let g = BonusSpec::Ucbe { a: 1.0 };
        assert_eq!(crossing_time(1, 0, &d, &g, 1e9, 1, 100).value, Crossing::At(1));
        assert_eq!(crossing_time(1, 0, &d, &g, -1e9, 1, 10_000).value, Crossing::Censored(10_000));
    }

    #[test]
    fn crossing_time_monotone_in_boundary() {
        let d = std_normal();
        let g = BonusSpec::Moss { c: 50.0 };
        for seed in 0..200 {
            let lo = crossing_time(seed, 3, &d, &g, -0.3, 1, 5000).value;
            let hi = crossing_time(seed, 3, &d, &g, -0.1, 1, 5000).value;
            match (lo, hi) {
                (Crossing::At(a), Crossing::At(b)) => assert!(b <= a),
                (Crossing::Censored(_), _) => {}
                (Crossing::At(_), Crossing::Censored(_)) => panic!("higher boundary crossed later"),
            }
        }
    }

    #[test]
    fn u1_star_properties() {
        let d = std_normal();
        let g = BonusSpec::Greedy;
        let mut s = ArmStream::new(5, 0);
        assert_eq!(u1_star(5, &d, &g, 1), d.sample(&mut s));
        let mut total = 0.0;
        for seed in 0..300 {
            let a = u1_star(seed, &d, &g, 100);
            let b = u1_star(seed, &d, &g, 10_000);
            assert!(b <= a);
            total += b;
        }
        assert!(total < 0.0);
    }

    #[test]
    fn floor_values() {
        assert!((lemma1_floor(1.0, PI / 6f64.sqrt()) - (-1f64).exp()).abs() < 1e-15);
        assert!((lemma1_floor(1e-9, 0.5) - 1.0).abs() < 1e-12);
        assert!((lemma1_floor(1.0, 0.5) - 0.001_388_215_364).abs() < 1e-12);
    }

    #[test]
    fn constant_values() {
        let c = constants(4.0, 1.0).unwrap();
        assert_eq!(c.a1, 81.0);
        assert_eq!(c.c1, 121.5);
        assert!((c.a2 - (-4f64).exp() / 72.0).abs() < 1e-18);
        assert!(matches!(constants(3.0, 1.0).unwrap().c3(), Err(AnalysisError::QTooSmall { .. })));
        assert!(constants(2.0, 1.0).is_err());
    }

    #[test]
    fn nagaev_values() {
        assert_eq!(nagaev_bound(4.0, 1.0, 100, 0.0).unwrap(), 1.0);
        let a2 = (-4f64).exp() / 72.0;
        let expected = 81.0 * 1e-6 * 16.0 + (-a2 * 25.0).exp();
        let got = nagaev_bound(4.0, 1.0, 100, 0.5).unwrap();
        // the raw sum exceeds 1, so the clamp applies
        assert_eq!(got, expected.min(1.0));
        let (t1, t2) = nagaev_terms(4.0, 1.0, 100, 0.5).unwrap();
        assert!((t1 - 81.0 * 1e-6 * 16.0).abs() < 1e-15);
        assert!((t2 - (-a2 * 25.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn crossing_moment_values() {
        let a2 = (-4f64).exp() / 72.0;
        let cm = crossing_moment_bounds(4.0, 1.0, 0.5, 10).unwrap();
        let expected = 121.5 * 16.0 * 1e-2 + (-10.0 * a2 / 4.0).exp() / (1.0 - (-a2 / 4.0).exp()) + 10.0;
        assert!((cm.c / expected - 1.0).abs() < 1e-9, "{} vs {expected}", cm.c);
        let far = crossing_moment_bounds(4.0, 1.0, 1e6, 10).unwrap();
        assert!((far.c - 10.0).abs() < 1e-6);
        assert!(crossing_moment_bounds(3.0, 1.0, 0.5, 10).is_err());
    }

    #[test]
    fn cf_values() {
        let g = cf_bound(0.5, 1.0, 1.0, &BonusSpec::Greedy).unwrap();
        assert_eq!(g.n_f, 1);
        assert!((g.value - (2.0 * PI * PI / (3.0 * 0.25)).exp()).abs() < 1e-6 * g.value);
        let u = cf_bound(0.5, 1.0, 1.0, &BonusSpec::Ucbe { a: 1.0 }).unwrap();
        assert_eq!(u.n_f, 17);
        let expected = 17.0 * (2.0 * PI * PI / (3.0 * 0.25 * 17.0)).exp();
        assert!((u.value - expected).abs() < 1e-9 * expected);
        let wide = cf_bound(1e4, 1.0, 1.0, &BonusSpec::Ucbe { a: 1.0 }).unwrap();
        assert_eq!(wide.n_f, 1);
        assert!((wide.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gamma0_greedy_closed_form() {
        let g = BonusSpec::Greedy;
        let got = solve_gamma0(2000.0, 2.0, 1.0, 1.0, &g, &Regime::LocationScale).unwrap();
        let x = (2.0 * PI * PI / (3.0 * 1000f64.ln())).sqrt();
        assert!((got - (2.0 - x)).abs() < 1e-6, "{got}");
        assert_eq!(
            solve_gamma0(2000.0, 0.5, 1.0, 1.0, &g, &Regime::LocationScale),
            Err(AnalysisError::Infeasible)
        );
        let huge = solve_gamma0(1e300, 0.5, 1.0, 1.0, &BonusSpec::Ucbe { a: 1.0 }, &Regime::LocationScale).unwrap();
        assert!(huge > 0.45);
    }

    #[test]
    fn gamma0_near_feasibility_edge() {
        // c just above 2 C^f(gamma) leaves almost no room.
        let g = BonusSpec::Greedy;
        let edge = 2.0 * cf_bound(1.0, 1.0, 1.0, &g).unwrap().value;
        let got = solve_gamma0(edge * (1.0 + 1e-9), 1.0, 1.0, 1.0, &g, &Regime::LocationScale).unwrap();
        assert!(got < 1e-6, "{got}");
    }

    #[test]
    fn gamma0_moment_regime() {
        let g = BonusSpec::Ucbe { a: 1.0 };
        let r = Regime::Moment { q: 4.0, m: 3.0 };
        let g0 = solve_gamma0(1e9, 1.0, 1.0, 1.0, &g, &r).unwrap();
        assert!(g0 > 0.0 && g0 < 1.0);
        let b = (1.0 - g0) / 2.0;
        let c = crossing_moment_bounds(4.0, 3.0, b, g.n_f(b).unwrap()).unwrap().c;
        assert!(2.0 * c <= 1e9);
    }

    #[test]
    fn harmonic_series_diverges() {
        let t = exact_tau(|_| 0.5, 100_000);
        assert!(matches!(t.e_tau, SeriesValue::Divergent { .. }));
        assert!(matches!(t.p_inf, SeriesValue::Divergent { .. }));
    }

    #[test]
    fn gaussian_series_converge() {
        let t = exact_tau_split(gaussian_mean_tail(0.0, 1.0, 0.5), gaussian_mean_lower_tail(0.0, 1.0, 0.5), 100_000);
        let e = t.e_tau.value().unwrap();
        assert!(e > 1.0 && e < 3.0, "{e}");
        let t = exact_tau_split(gaussian_mean_tail(0.0, 1.0, -0.5), gaussian_mean_lower_tail(0.0, 1.0, -0.5), 100_000);
        let p = t.p_inf.value().unwrap();
        assert!(p > 0.0 && p < 1.0, "{p}");
    }

    #[test]
    fn budgets() {
        let v = simplified_budget_64(6.0, 0.45).unwrap();
        assert!((v - 650.0).abs() < 1e-9, "{v}");
        assert_eq!((v * 2048.0).round() as u64, 650 * 2048);
        assert!((simplified_budget_64(6.0, 0.0).unwrap() - 20.0).abs() < 1e-12);
        assert!(matches!(simplified_budget_64(6.0, 0.5), Err(AnalysisError::BetaTooLarge { .. })));
        let general = proposition1_budget(5.0, 0.2, 0.1, 2.0, 2.0).unwrap();
        assert!(general.is_finite() && general > 0.0);
        assert!(matches!(proposition1_budget(5.0, 0.4, 0.1, 2.0, 2.0), Err(AnalysisError::BetaTooLarge { .. })));
        let near = proposition1_budget(5.0, 0.3999, 0.1, 2.0, 2.0).unwrap();
        assert!(near > general);
    }

    #[test]
    fn heavy_nf_properties() {
        assert_eq!(heavy_cs_nf(1e9, 5.0, 2.0, 2.0, 0.1).unwrap(), 1);
        let a = heavy_cs_nf(0.3, 5.0, 2.0, 2.0, 0.1).unwrap();
        let b = heavy_cs_nf(0.3, 5.0, 2.0, 2.0, 0.2).unwrap();
        assert!(b <= a);
    }

    #[test]
    fn pcs_bound_gamma_range() {
        let c = make_shifted(2, &std_normal(), 0.5, 0.0, 0.0).unwrap();
        let g = BonusSpec::Ucbe { a: 1.0 };
        assert!(matches!(pcs_lower_bound_mc(&c, &g, 100, 0.6, 10, 10, 0), Err(AnalysisError::GammaOutOfRange { .. })));
        assert!(matches!(pcs_lower_bound_mc(&c, &g, 100, 0.0, 10, 10, 0), Err(AnalysisError::GammaOutOfRange { .. })));
    }

    #[test]
    fn pcs_bound_large_budget_limit() {
        // With a huge budget factor 1 is ~1, leaving the U1* factor.
        let c = make_shifted(2, &std_normal(), 0.5, 0.0, 0.0).unwrap();
        let g = BonusSpec::Ucbe { a: 1.0 };
        let est = pcs_lower_bound_mc(&c, &g, 10_000_000, 0.499, 2_000, 400, 1).unwrap();
        assert!(est.factor1.estimate > 0.99);
        assert!((est.estimate - est.factor2.estimate).abs() <= 0.011);
    }

    #[test]
    fn factor2_dominance_is_pathwise() {
        let d = std_normal();
        let u = Bonus::new(BonusSpec::Ucbe { a: 1.0 }).unwrap();
        let z = Bonus::new(BonusSpec::Greedy).unwrap();
        for seed in 0..300 {
            if u1_stays_above(seed, &d, &z, -0.25, 2000) {
                assert!(u1_stays_above(seed, &d, &u, -0.25, 2000));
            }
        }
    }

    #[test]
    fn bound_report() {
        let q = BoundQuery {
            bonus: BonusSpec::Ucbe { a: 1.0 },
            c: 1e4,
            gamma: 1.0,
            sigma_lo: 1.0,
            sigma_hi: 1.0,
            sigma1: None,
            regime: Regime::LocationScale,
        };
        let r = q.report().unwrap();
        assert!(r.gamma0 > 0.0 && r.gamma0 < 1.0);
        assert!(r.lemma1_floor > 0.0 && r.lemma1_floor <= 1.0);
        assert!(2.0 * r.cf_bound.unwrap() <= 1e4 * (1.0 + 1e-12));
        let json = serde_json::to_string(&q).unwrap();
        assert_eq!(serde_json::from_str::<BoundQuery>(&json).unwrap(), q);
    }
}
