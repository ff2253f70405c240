//! Exploration bonus functions `f(n)` and their threshold index `n^f(b)`.
//!
//! A [`BonusSpec`] is the serializable description. Evaluation in hot loops
//! goes through [`Bonus`], which precomputes every constant (zeta values,
//! concentration constants) once.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest index searched before a threshold is declared missing.
pub const NF_SEARCH_LIMIT: u64 = 1_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BonusError {
    #[error("invalid bonus parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("no threshold n <= {limit} with f(m) < {b} for all m >= n")]
    NoThreshold { b: f64, limit: u64 },
    #[error("threshold level b must be finite and > 0, got {0}")]
    InvalidLevel(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case", deny_unknown_fields)]
#[serde(try_from = "BonusRepr")]
pub enum BonusSpec {
    /// `sqrt(a / n)`.
    Ucbe { a: f64 },
    /// `sqrt(max(log(c / n), 0) / n)`.
    Moss { c: f64 },
    /// LiL-UCB with confidence `delta`, see [`Bonus::eval`].
    Lil { beta: f64, eps: f64, sigma: f64, delta: f64 },
    Greedy,
    /// Time-uniform confidence sequence under a `q`-th moment bound `m`.
    HeavyCs { q: f64, q_prime: f64, m: f64, alpha: f64 },
    /// Tail-adapted UCBE used for the polynomial-gap experiments.
    UcbePlus { q: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case", deny_unknown_fields)]
enum BonusRepr {
    Ucbe { a: f64 },
    Moss { c: f64 },
    Lil { beta: f64, eps: f64, sigma: f64, delta: f64 },
    Greedy,
    HeavyCs { q: f64, q_prime: f64, m: f64, alpha: f64 },
    UcbePlus { q: f64 },
}

impl TryFrom<BonusRepr> for BonusSpec {
    type Error = BonusError;

    fn try_from(r: BonusRepr) -> Result<Self, BonusError> {
        let spec = match r {
            BonusRepr::Ucbe { a } => BonusSpec::Ucbe { a },
            BonusRepr::Moss { c } => BonusSpec::Moss { c },
            BonusRepr::Lil { beta, eps, sigma, delta } => BonusSpec::Lil { beta, eps, sigma, delta },
            BonusRepr::Greedy => BonusSpec::Greedy,
            BonusRepr::HeavyCs { q, q_prime, m, alpha } => BonusSpec::HeavyCs { q, q_prime, m, alpha },
            BonusRepr::UcbePlus { q } => BonusSpec::UcbePlus { q },
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn check(ok: bool, name: &'static str, value: f64, reason: &'static str) -> Result<(), BonusError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(BonusError::InvalidParameter { name, value, reason })
    }
}

impl BonusSpec {
    pub fn validate(&self) -> Result<(), BonusError> {
        match *self {
            BonusSpec::Ucbe { a } => check(a >= 0.0, "a", a, "must be >= 0"),
            BonusSpec::Moss { c } => check(c > 0.0, "c", c, "must be > 0"),
            BonusSpec::Lil { beta, eps, sigma, delta } => {
                check(beta >= 0.0, "beta", beta, "must be >= 0")?;
                check(eps > 0.0, "eps", eps, "must be > 0")?;
                check(sigma > 0.0, "sigma", sigma, "must be > 0")?;
                check(delta > 0.0, "delta", delta, "must be > 0")
            }
            BonusSpec::Greedy => Ok(()),
            BonusSpec::HeavyCs { q, q_prime, m, alpha } => {
                check(q > 2.0, "q", q, "must be > 2")?;
                check(q_prime > 1.0 && q_prime < q - 1.0, "q_prime", q_prime, "must lie in (1, q - 1)")?;
                check(m > 0.0, "m", m, "must be > 0")?;
                check(alpha > 0.0 && alpha < 1.0, "alpha", alpha, "must lie in (0, 1)")
            }
            BonusSpec::UcbePlus { q } => check(q > 3.0, "q", q, "must be > 3"),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BonusSpec::Ucbe { .. } => "UCBE",
            BonusSpec::Moss { .. } => "MOSS",
            BonusSpec::Lil { .. } => "LiL",
            BonusSpec::Greedy => "Greedy",
            BonusSpec::HeavyCs { .. } => "HeavyCS",
            BonusSpec::UcbePlus { .. } => "UCBE+",
        }
    }

    /// Precompute constants; panics on an invalid spec, use [`Bonus::new`] to check.
    pub fn compile(&self) -> Bonus {
        Bonus::new(*self).expect("invalid BonusSpec")
    }

    /// `f(n)` for `n >= 1`.
    pub fn eval(&self, n: u64) -> f64 {
        self.compile().eval(n)
    }

    /// Threshold index `n^f(b)`; see [`Bonus::n_f`].
    pub fn n_f(&self, b: f64) -> Result<u64, BonusError> {
        self.compile().n_f(b)
    }
}

/// Riemann zeta for real `x > 1`: a direct sum plus an Euler-Maclaurin tail.
pub fn zeta(x: f64) -> f64 {
    assert!(x > 1.0, "zeta requires x > 1, got {x}");
    const N: u32 = 32;
    let head: f64 = (1..N).map(|n| (n as f64).powf(-x)).sum();
    let n = N as f64;
    // Bernoulli corrections B2/2!, B4/4!, B6/6!, B8/8!.
    let tail = n.powf(1.0 - x) / (x - 1.0) + 0.5 * n.powf(-x) + x / 12.0 * n.powf(-x - 1.0)
        - x * (x + 1.0) * (x + 2.0) / 720.0 * n.powf(-x - 3.0)
        + x * (x + 1.0) * (x + 2.0) * (x + 3.0) * (x + 4.0) / 30240.0 * n.powf(-x - 5.0)
        - x * (x + 1.0) * (x + 2.0) * (x + 3.0) * (x + 4.0) * (x + 5.0) * (x + 6.0) / 1209600.0
            * n.powf(-x - 7.0);
    head + tail
}

/// Concentration constants `(a1, a2)` for a `q`-th moment bound `m` (q > 2).
pub fn concentration_constants(q: f64, m: f64) -> (f64, f64) {
    let a1 = (2.0 + 4.0 / q).powf(q) * m;
    let a2 = (q + 2.0).powi(-2) * (-q).exp() * m.powf(-2.0 / q) / 2.0;
    (a1, a2)
}

/// Constants of the closed-form HeavyCS threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeavyCsThreshold {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `q / (q - 1 - q')`, the polynomial exponent of the first term.
    pub exponent: f64,
}

impl HeavyCsThreshold {
    pub fn new(q: f64, q_prime: f64, m: f64, alpha: f64) -> HeavyCsThreshold {
        let (a1, a2) = concentration_constants(q, m);
        let z1 = zeta(q_prime + 1.0);
        let r = q - 1.0 - q_prime;
        HeavyCsThreshold {
            c1: (2.0 * a1 * z1 / alpha).powf(1.0 / r),
            c2: 2.0 * ((2.0 * z1).ln() + (1.0 / alpha).ln()) / a2,
            c3: 2.0 * (q_prime + 1.0) / a2,
            exponent: q / r,
        }
    }

    /// The three candidate terms before rounding.
    pub fn terms(&self, b: f64) -> [f64; 3] {
        let b2 = b * b;
        let x = self.c3 / b2;
        [
            self.c1 * b.powf(-self.exponent),
            self.c2 / b2,
            2.0 * x * x.ln().max(0.0),
        ]
    }

    pub fn n_f(&self, b: f64) -> u64 {
        let t = self.terms(b);
        let v = t[0].max(t[1]).max(t[2]).ceil();
        if v >= u64::MAX as f64 {
            u64::MAX
        } else {
            (v as u64).max(1)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kernel {
    Zero,
    Ucbe { a: f64 },
    Moss { c: f64 },
    Lil { mult: f64, one_eps: f64, delta: f64 },
    /// `n^p` with `p < 0`.
    Power { p: f64 },
    LogRoot,
    HeavyCs {
        k1: f64,
        r_over_q: f64,
        inv_q: f64,
        base2: f64,
        qp1: f64,
        inv_a2: f64,
        threshold: HeavyCsThreshold,
    },
}

/// A validated bonus with precomputed constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bonus {
    spec: BonusSpec,
    kernel: Kernel,
    /// `f` is non-increasing on `[mono_from, inf)`.
    mono_from: u64,
}

impl Bonus {
    pub fn new(spec: BonusSpec) -> Result<Bonus, BonusError> {
        spec.validate()?;
        let kernel = match spec {
            BonusSpec::Greedy => Kernel::Zero,
            BonusSpec::Ucbe { a } if a == 0.0 => Kernel::Zero,
            BonusSpec::Ucbe { a } => Kernel::Ucbe { a },
            BonusSpec::Moss { c } => Kernel::Moss { c },
            BonusSpec::Lil { beta, eps, sigma, delta } => Kernel::Lil {
                mult: (1.0 + beta) * (1.0 + eps.sqrt()) * (2.0 * sigma * sigma * (1.0 + eps)).sqrt(),
                one_eps: 1.0 + eps,
                delta,
            },
            BonusSpec::UcbePlus { q } if q < 6.0 => Kernel::Power { p: (3.0 - q) / q },
            BonusSpec::UcbePlus { .. } => Kernel::LogRoot,
            BonusSpec::HeavyCs { q, q_prime, m, alpha } => {
                let (a1, a2) = concentration_constants(q, m);
                Kernel::HeavyCs {
                    k1: 2.0 * a1 * zeta(q_prime) / alpha,
                    r_over_q: (q - 1.0 - q_prime) / q,
                    inv_q: 1.0 / q,
                    base2: (2.0 * zeta(q_prime + 1.0)).ln() + (1.0 / alpha).ln(),
                    qp1: q_prime + 1.0,
                    inv_a2: 1.0 / a2,
                    threshold: HeavyCsThreshold::new(q, q_prime, m, alpha),
                }
            }
        };
        let mut bonus = Bonus {
            spec,
            kernel,
            mono_from: 1,
        };
        bonus.mono_from = bonus.monotone_from();
        Ok(bonus)
    }

    pub fn spec(&self) -> &BonusSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kernel, Kernel::Zero)
    }

    /// `f(n)`; `n = 0` is treated as `n = 1`.
    #[inline]
    pub fn eval(&self, n: u64) -> f64 {
        let nf = n.max(1) as f64;
        match self.kernel {
            Kernel::Zero => 0.0,
            Kernel::Ucbe { a } => (a / nf).sqrt(),
            Kernel::Moss { c } => {
                let l = (c / nf).ln();
                if l > 0.0 {
                    (l / nf).sqrt()
                } else {
                    0.0
                }
            }
            Kernel::Lil { mult, one_eps, delta } => mult * (lil_log(one_eps, delta, nf) / nf).sqrt(),
            Kernel::Power { p } => nf.powf(p),
            Kernel::LogRoot => ((nf + 2.0).ln() / nf).sqrt(),
            Kernel::HeavyCs { .. } => {
                let (f1, f2) = self.heavy_branches(n).expect("HeavyCs kernel");
                f1.max(f2)
            }
        }
    }

    /// The two branches `(f1, f2)` of the HeavyCS bonus.
    pub fn heavy_branches(&self, n: u64) -> Option<(f64, f64)> {
        match self.kernel {
            Kernel::HeavyCs {
                k1,
                r_over_q,
                inv_q,
                base2,
                qp1,
                inv_a2,
                ..
            } => {
                let nf = n.max(1) as f64;
                let f1 = k1.powf(inv_q) * nf.powf(-r_over_q);
                let f2 = ((base2 + qp1 * nf.ln()).max(0.0) * inv_a2 / nf).sqrt();
                Some((f1, f2))
            }
            _ => None,
        }
    }

    /// Closed-form threshold constants, HeavyCS only.
    pub fn heavy_threshold(&self) -> Option<HeavyCsThreshold> {
        match self.kernel {
            Kernel::HeavyCs { threshold, .. } => Some(threshold),
            _ => None,
        }
    }

    /// First index from which `f` is certified non-increasing.
    fn monotone_from(&self) -> u64 {
        match self.kernel {
            // d/dn of log(n)/n-type radicands turns negative once n > e^{1 - const}; 3 > e.
            Kernel::HeavyCs { base2, qp1, .. } => {
                let n = (1.0 - base2 / qp1).exp().ceil().max(1.0);
                (n as u64).max(3)
            }
            Kernel::Lil { one_eps, delta, .. } => {
                // L(n)/n decreases once L(n) > 1/log((1+eps)n), L the clamped double log.
                // The left side grows and the right side shrinks, so the first time suffices.
                let ok = |n: u64| {
                    let nf = n as f64;
                    let l = lil_log(one_eps, delta, nf);
                    l > 0.0 && l > 1.0 / (one_eps * nf).ln()
                };
                if ok(1) {
                    return 1;
                }
                let mut hi = 2u64;
                while !ok(hi) {
                    hi = hi.saturating_mul(2);
                    if hi >= NF_SEARCH_LIMIT {
                        return NF_SEARCH_LIMIT;
                    }
                }
                let mut lo = hi / 2;
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if ok(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
            _ => 1,
        }
    }

    /// Smallest `N` with `f(m) < b` for every `m >= N`, found by search.
    ///
    /// Below the certified-monotone point every integer is checked; above it
    /// galloping plus bisection locates the first index under `b`.
    pub fn n_f_search(&self, b: f64) -> Result<u64, BonusError> {
        if !(b.is_finite() && b > 0.0) {
            return Err(BonusError::InvalidLevel(b));
        }
        let n0 = self.mono_from;
        if self.eval(n0) >= b {
            let mut lo = n0;
            let mut step = 1u64;
            let mut hi = n0 + 1;
            while self.eval(hi) >= b {
                lo = hi;
                step = step.saturating_mul(2);
                hi = hi.saturating_add(step);
                if hi > NF_SEARCH_LIMIT {
                    if self.eval(NF_SEARCH_LIMIT) >= b {
                        return Err(BonusError::NoThreshold {
                            b,
                            limit: NF_SEARCH_LIMIT,
                        });
                    }
                    hi = NF_SEARCH_LIMIT;
                    break;
                }
            }
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if self.eval(mid) < b {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi);
        }
        let mut n = n0;
        while n > 1 && self.eval(n - 1) < b {
            n -= 1;
        }
        Ok(n)
    }

    /// Threshold index `n^f(b)`: `f(m) < b` for all `m >= n^f(b)`.
    ///
    /// HeavyCS uses its closed form; every other variant uses
    /// [`Bonus::n_f_search`], which returns the smallest such index.
    pub fn n_f(&self, b: f64) -> Result<u64, BonusError> {
        if !(b.is_finite() && b > 0.0) {
            return Err(BonusError::InvalidLevel(b));
        }
        match self.kernel {
            Kernel::HeavyCs { threshold, .. } => Ok(threshold.n_f(b)),
            _ => self.n_f_search(b),
        }
    }
}

#[inline]
fn lil_log(one_eps: f64, delta: f64, nf: f64) -> f64 {
    let inner = (one_eps * nf).max(1.0).ln();
    let arg = inner / delta;
    if arg > 1.0 {
        arg.ln()
    } else {
        0.0
    }
}

/// Moment-based confidence-sequence bonus for `q = 5`, `q' = 2`, `M = 2`, `alpha = 0.1`.
pub const HEAVY_CS_PRESET: BonusSpec = BonusSpec::HeavyCs {
    q: 5.0,
    q_prime: 2.0,
    m: 2.0,
    alpha: 0.1,
};

/// Bonus instances used by the property scans and listed by the CLI.
pub fn presets() -> Vec<BonusSpec> {
    vec![
        BonusSpec::Ucbe { a: 1.0 },
        BonusSpec::Ucbe { a: 0.2 },
        BonusSpec::Moss { c: 100.0 },
        BonusSpec::Moss { c: 30.0 },
        BonusSpec::Lil {
            beta: 1.0,
            eps: 0.01,
            sigma: 0.5,
            delta: 0.1,
        },
        BonusSpec::Greedy,
        HEAVY_CS_PRESET,
        BonusSpec::UcbePlus { q: 4.0 },
        BonusSpec::UcbePlus { q: 5.0 },
        BonusSpec::UcbePlus { q: 6.0 },
    ]
}
