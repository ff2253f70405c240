//! Fixed-budget pure exploration with UCB-style sampling rules.
//!
//! The crate is organised bottom-up:
//!
//! - [`distributions`]: arm laws (Normal, Lognormal, Student's t, Pareto) and
//!   reproducible per-arm observation streams.
//! - [`bonus`]: exploration-bonus functions and their threshold index.
//! - [`configs`]: slippage, monotone-means, mixed and polynomial-gap problem instances.
//! - [`engine`]: one fixed-budget run of a decoupled UCB rule or of UCB1.
//! - [`analysis`]: closed-form bounds and the boundary-crossing oracle.
//! - [`harness`]: replicated experiments, PCS estimates, allocation statistics
//!   and the trace verifier.

pub mod analysis;
pub mod bonus;
pub mod configs;
pub mod distributions;
pub mod engine;
pub mod harness;
pub mod stats;

pub use bonus::BonusSpec;
pub use configs::ProblemConfig;
pub use distributions::{ArmStream, DistributionSpec, Family};
pub use engine::{Algorithm, RunResult, SelectionStandard};
