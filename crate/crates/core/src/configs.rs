//! Problem instances built from the mean-shifting model.
//!
//! Arm indices are 0-based throughout the API: arm `0` is the best arm and
//! the model's 1-based index `i` corresponds to array slot `i - 1`. The shift
//! of slot `j >= 1` is `-(gamma + lambda * ((j + 1) / k)^beta)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{DistError, DistributionSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("gamma = lambda = 0 leaves no unique best arm")]
    DegenerateConfig,
    #[error("k must be at least 2, got {0}")]
    TooFewArms(usize),
    #[error("invalid config parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("odd base mean {odd} differs from even base mean {even}")]
    MeanMismatch { odd: f64, even: f64 },
    #[error("arm means tie at the maximum")]
    NonUniqueBest,
    #[error(transparent)]
    Distribution(#[from] DistError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigKind {
    /// Slippage: all inferior arms `gamma` below the best.
    Sc,
    /// Monotone means: gaps `gamma + lambda (i/k)^beta`.
    Mm,
    Mixed,
    /// Polynomially shrinking gaps, no indifference zone.
    Noniz,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GapParams {
    pub gamma: f64,
    pub lambda: f64,
    pub beta: f64,
}

impl GapParams {
    /// Total mean offset of 0-based slot `j` below the best arm.
    pub fn offset(&self, j: usize, k: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.gamma + self.lambda * ((j + 1) as f64 / k as f64).powf(self.beta)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemConfig {
    pub kind: ConfigKind,
    pub k: usize,
    pub arms: Vec<DistributionSpec>,
    pub best_arm: usize,
    pub means: Vec<f64>,
    pub gap_params: GapParams,
}

fn non_negative(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::InvalidParameter {
            name,
            value,
            reason: "must be finite and >= 0",
        })
    }
}

fn check_gaps(k: usize, g: &GapParams) -> Result<(), ConfigError> {
    if k < 2 {
        return Err(ConfigError::TooFewArms(k));
    }
    non_negative("gamma", g.gamma)?;
    non_negative("lambda", g.lambda)?;
    non_negative("beta", g.beta)?;
    if g.gamma == 0.0 && g.lambda == 0.0 {
        return Err(ConfigError::DegenerateConfig);
    }
    Ok(())
}

/// `beta = 0` with `lambda > 0` puts every inferior arm `lambda` below the best:
/// it is a slippage instance with `gamma + lambda` as the gap.
fn classify(g: GapParams) -> (ConfigKind, GapParams) {
    if g.lambda == 0.0 {
        (ConfigKind::Sc, g)
    } else if g.beta == 0.0 {
        (
            ConfigKind::Sc,
            GapParams {
                gamma: g.gamma + g.lambda,
                lambda: 0.0,
                beta: 0.0,
            },
        )
    } else {
        (ConfigKind::Mm, g)
    }
}

impl ProblemConfig {
    /// A config from explicit arms; the unique maximal mean must exist.
    pub fn from_arms(arms: Vec<DistributionSpec>) -> Result<ProblemConfig, ConfigError> {
        Self::assemble(ConfigKind::Custom, arms, GapParams::default())
    }

    fn assemble(kind: ConfigKind, arms: Vec<DistributionSpec>, gap_params: GapParams) -> Result<ProblemConfig, ConfigError> {
        if arms.len() < 2 {
            return Err(ConfigError::TooFewArms(arms.len()));
        }
        let means = arms.iter().map(|a| a.mean()).collect::<Result<Vec<_>, _>>()?;
        let top = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut best = means.iter().enumerate().filter(|(_, &m)| m == top).map(|(i, _)| i);
        let best_arm = best.next().expect("non-empty");
        if best.next().is_some() {
            return Err(ConfigError::NonUniqueBest);
        }
        Ok(ProblemConfig {
            kind,
            k: arms.len(),
            arms,
            best_arm,
            means,
            gap_params,
        })
    }

    /// Smallest gap between the best mean and any other mean.
    pub fn min_gap(&self) -> f64 {
        let top = self.means[self.best_arm];
        self.means
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.best_arm)
            .map(|(_, m)| top - m)
            .fold(f64::INFINITY, f64::min)
    }

    /// The same instance with every arm moved by `by`.
    pub fn shifted(&self, by: f64) -> ProblemConfig {
        let arms: Vec<_> = self.arms.iter().map(|a| a.shifted(by)).collect();
        ProblemConfig {
            means: arms.iter().map(|a| a.mean().expect("mean existed before")).collect(),
            arms,
            ..self.clone()
        }
    }
}

/// Slippage or monotone-means instance on a single base law.
pub fn make_shifted(k: usize, base: &DistributionSpec, gamma: f64, lambda: f64, beta: f64) -> Result<ProblemConfig, ConfigError> {
    let g = GapParams { gamma, lambda, beta };
    check_gaps(k, &g)?;
    base.mean()?;
    let (kind, g) = classify(g);
    let arms = (0..k).map(|j| base.shifted(-g.offset(j, k))).collect();
    ProblemConfig::assemble(kind, arms, g)
}

/// Alternating families: odd 1-based indices from `odd`, even ones from `even`.
///
/// The bases must share a mean (to within 1e-9) or the intended ordering
/// breaks; [`make_mixed_centered`] centres them first.
pub fn make_mixed(
    k: usize,
    odd: &DistributionSpec,
    even: &DistributionSpec,
    gamma: f64,
    lambda: f64,
    beta: f64,
) -> Result<ProblemConfig, ConfigError> {
    let g = GapParams { gamma, lambda, beta };
    check_gaps(k, &g)?;
    let (mo, me) = (odd.mean()?, even.mean()?);
    if (mo - me).abs() > 1e-9 {
        return Err(ConfigError::MeanMismatch { odd: mo, even: me });
    }
    // Slot j holds 1-based index j + 1, so even slots are odd arms.
    let arms = (0..k)
        .map(|j| {
            let base = if j % 2 == 0 { odd } else { even };
            base.shifted(-g.offset(j, k))
        })
        .collect();
    let (_, g) = classify(g);
    ProblemConfig::assemble(ConfigKind::Mixed, arms, g)
}

/// [`make_mixed`] after moving both bases to mean zero.
pub fn make_mixed_centered(
    k: usize,
    odd: &DistributionSpec,
    even: &DistributionSpec,
    gamma: f64,
    lambda: f64,
    beta: f64,
) -> Result<ProblemConfig, ConfigError> {
    make_mixed(k, &odd.centered()?, &even.centered()?, gamma, lambda, beta)
}

/// Pareto shape `q + eps` and the scale giving unit variance.
pub fn noniz_pareto_params(q: f64, eps: f64) -> (f64, f64) {
    let a = q + eps;
    (a, ((a - 1.0).powi(2) * (a - 2.0) / a).sqrt())
}

/// Largest `beta` recommended for a polynomial-gap instance with moment order `q`.
pub fn noniz_beta_limit(q: f64) -> f64 {
    ((q - 3.0) / q).min(0.5)
}

/// The default `beta` of the polynomial-gap experiments: the limit minus 0.05.
pub fn noniz_default_beta(q: f64) -> f64 {
    noniz_beta_limit(q) - 0.05
}

/// Unit-variance Pareto arms with gaps `lambda (i/k)^beta` and best mean `mu1`.
pub fn make_noniz(k: usize, q: f64, eps: f64, beta: f64, lambda: f64, mu1: f64) -> Result<ProblemConfig, ConfigError> {
    if !(q.is_finite() && q > 3.0) {
        return Err(ConfigError::InvalidParameter {
            name: "q",
            value: q,
            reason: "must be > 3",
        });
    }
    if !(eps.is_finite() && eps > 0.0) {
        return Err(ConfigError::InvalidParameter {
            name: "eps",
            value: eps,
            reason: "must be > 0",
        });
    }
    if !mu1.is_finite() {
        return Err(ConfigError::InvalidParameter {
            name: "mu1",
            value: mu1,
            reason: "must be finite",
        });
    }
    let g = GapParams {
        gamma: 0.0,
        lambda,
        beta,
    };
    check_gaps(k, &g)?;
    if beta >= noniz_beta_limit(q) {
        log::warn!(
            "beta = {beta} is at or above min((q-3)/q, 1/2) = {} for q = {q}; sample optimality is not guaranteed",
            noniz_beta_limit(q)
        );
    }
    let (shape, scale) = noniz_pareto_params(q, eps);
    let base = DistributionSpec::pareto(shape, scale)?;
    let base = base.shifted(mu1 - base.mean()?);
    let arms = (0..k).map(|j| base.shifted(-g.offset(j, k))).collect();
    ProblemConfig::assemble(ConfigKind::Noniz, arms, g)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preset {
    pub id: &'static str,
    pub label: &'static str,
    pub spec: DistributionSpec,
}

/// The five reference laws with variance close to one.
pub fn table1_presets() -> Vec<Preset> {
    let p = |id, label, spec: Result<DistributionSpec, DistError>| Preset {
        id,
        label,
        spec: spec.expect("preset parameters are valid"),
    };
    vec![
        p("sc-lognormal", "SC-Lognormal base", DistributionSpec::lognormal(-2.0, 1.45)),
        p("sc-student-t", "SC-Student's t base", DistributionSpec::student_t(3.0, 0.6)),
        p("sc-pareto", "SC-Pareto base", DistributionSpec::pareto(3.0, 1.2)),
        p("mixed-student-t", "mixed Student's t", DistributionSpec::student_t(4.0, 0.7)),
        p("mixed-pareto", "mixed Pareto", DistributionSpec::pareto(4.0, 2.1)),
    ]
}

pub fn preset(id: &str) -> Option<DistributionSpec> {
    table1_presets().into_iter().find(|p| p.id == id).map(|p| p.spec)
}

/// Serializable generator parameters; `k` is supplied at build time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConfigSpec {
    Sc {
        base: DistributionSpec,
        gamma: f64,
    },
    Mm {
        base: DistributionSpec,
        gamma: f64,
        lambda: f64,
        beta: f64,
    },
    Mixed {
        odd: DistributionSpec,
        even: DistributionSpec,
        gamma: f64,
        #[serde(default)]
        lambda: f64,
        #[serde(default)]
        beta: f64,
        /// Centre both bases at mean zero before shifting.
        #[serde(default = "default_true")]
        center: bool,
    },
    Noniz {
        q: f64,
        #[serde(default = "default_noniz_eps")]
        eps: f64,
        /// Defaults to `min((q-3)/q, 1/2) - 0.05`.
        #[serde(default)]
        beta: Option<f64>,
        #[serde(default = "default_noniz_lambda")]
        lambda: f64,
        #[serde(default)]
        mu1: f64,
    },
}

fn default_true() -> bool {
    true
}

fn default_noniz_eps() -> f64 {
    0.1
}

fn default_noniz_lambda() -> f64 {
    0.25
}

impl ConfigSpec {
    pub fn build(&self, k: usize) -> Result<ProblemConfig, ConfigError> {
        match self {
            ConfigSpec::Sc { base, gamma } => make_shifted(k, base, *gamma, 0.0, 0.0),
            ConfigSpec::Mm {
                base,
                gamma,
                lambda,
                beta,
            } => make_shifted(k, base, *gamma, *lambda, *beta),
            ConfigSpec::Mixed {
                odd,
                even,
                gamma,
                lambda,
                beta,
                center,
            } => {
                if *center {
                    make_mixed_centered(k, odd, even, *gamma, *lambda, *beta)
                } else {
                    make_mixed(k, odd, even, *gamma, *lambda, *beta)
                }
            }
            ConfigSpec::Noniz {
                q,
                eps,
                beta,
                lambda,
                mu1,
            } => make_noniz(k, *q, *eps, beta.unwrap_or_else(|| noniz_default_beta(*q)), *lambda, *mu1),
        }
    }

    /// Moment order tied to the instance, where the generator fixes one.
    pub fn q(&self) -> Option<f64> {
        match self {
            ConfigSpec::Noniz { q, .. } => Some(*q),
            _ => None,
        }
    }

    /// Every default filled in, for round-tripping.
    pub fn materialized(&self) -> ConfigSpec {
        match self {
            ConfigSpec::Noniz {
                q,
                eps,
                beta,
                lambda,
                mu1,
            } => ConfigSpec::Noniz {
                q: *q,
                eps: *eps,
                beta: Some(beta.unwrap_or_else(|| noniz_default_beta(*q))),
                lambda: *lambda,
                mu1: *mu1,
            },
            other => other.clone(),
        }
    }
}
