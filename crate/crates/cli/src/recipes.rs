//! Figure-reproduction recipes: ready-to-run experiment files with the
//! published settings (UCBE `a = 1`, `γ = 0.1`, desk sizes `k = 2^5..2^11`,
//! 500 replications).

use std::path::PathBuf;

use bai_core::configs::{preset, ConfigSpec};
use bai_core::engine::SelectionStandard;
use bai_core::harness::{AlgorithmSpec, BudgetRule, Capture, ExperimentPlan, NamedConfig};

use crate::files::{ExperimentConfigFile, RunOutput};

pub const GAMMA: f64 = 0.1;
pub const REPS: u64 = 500;
pub const DESK_K: [usize; 7] = [32, 64, 128, 256, 512, 1024, 2048];

pub struct Recipe {
    pub name: &'static str,
    pub about: &'static str,
    pub build: fn() -> ExperimentConfigFile,
}

pub fn recipes() -> Vec<Recipe> {
    vec![
        Recipe {
            name: "fig2-sc-lognormal",
            about: "PCS against k on SC-Lognormal, B = 100k",
            build: fig2,
        },
        Recipe {
            name: "fig3-mixed",
            about: "mixed Student's t / Pareto desks, SC at B = 100k and MM at B = 30k",
            build: fig3,
        },
        Recipe {
            name: "fig4-5-alloc",
            about: "allocated sample sizes on SC-Lognormal, k = 128, B = 150k",
            build: fig4_5,
        },
        Recipe {
            name: "fig6-noniz",
            about: "non-IZ Pareto desks under the simplified budget",
            build: fig6,
        },
        Recipe {
            name: "ecfig-standards",
            about: "selection standards compared, SC at B = 100k and MM at B = 30k",
            build: ecfig_standards,
        },
    ]
}

pub fn recipe(name: &str) -> Option<Recipe> {
    recipes().into_iter().find(|r| r.name == name)
}

fn base(name: &str) -> bai_core::DistributionSpec {
    preset(name).expect("known preset")
}

fn sc_lognormal() -> ConfigSpec {
    ConfigSpec::Sc {
        base: base("sc-lognormal"),
        gamma: GAMMA,
    }
}

fn mm_lognormal() -> ConfigSpec {
    ConfigSpec::Mm {
        base: base("sc-lognormal"),
        gamma: GAMMA,
        lambda: 1.0,
        beta: 1.0,
    }
}

fn with_rule(name: &str, config: ConfigSpec, c: f64) -> NamedConfig {
    NamedConfig {
        budget_rule: Some(BudgetRule::Multiplier { c }),
        ..NamedConfig::new(name, config)
    }
}

fn output(dir: &str) -> RunOutput {
    let d = PathBuf::from(dir);
    RunOutput {
        results: d.join("results.csv"),
        summary: d.join("summary.json"),
        histogram: d.join("histogram.csv"),
    }
}

fn file(dir: &str, plan: ExperimentPlan) -> ExperimentConfigFile {
    ExperimentConfigFile {
        plan: plan.materialized(),
        output: output(dir),
    }
}

fn plan(configs: Vec<NamedConfig>, algorithms: Vec<AlgorithmSpec>, k_values: &[usize], budget_rule: BudgetRule) -> ExperimentPlan {
    ExperimentPlan {
        configs,
        algorithms,
        k_values: k_values.to_vec(),
        budget_rule,
        reps: REPS,
        base_seed: 0,
        selection_standards: vec![SelectionStandard::MaxCount],
        capture: Capture::None,
    }
}

const UCBE: AlgorithmSpec = AlgorithmSpec::Ucbe { a: 1.0 };
const MOSS: AlgorithmSpec = AlgorithmSpec::Moss { c: None };

fn fig2() -> ExperimentConfigFile {
    file(
        "fig2-sc-lognormal",
        plan(
            vec![NamedConfig::new("SC-Lognormal", sc_lognormal())],
            vec![UCBE, MOSS, AlgorithmSpec::Greedy, AlgorithmSpec::Ucb1],
            &DESK_K,
            BudgetRule::Multiplier { c: 100.0 },
        ),
    )
}

fn fig3() -> ExperimentConfigFile {
    let mixed = |odd: &str, even: &str, lambda, beta| ConfigSpec::Mixed {
        odd: base(odd),
        even: base(even),
        gamma: GAMMA,
        lambda,
        beta,
        center: true,
    };
    file(
        "fig3-mixed",
        plan(
            vec![
                with_rule("Odd(t)-Even(P) SC", mixed("mixed-student-t", "mixed-pareto", 0.0, 0.0), 100.0),
                with_rule("Odd(P)-Even(t) SC", mixed("mixed-pareto", "mixed-student-t", 0.0, 0.0), 100.0),
                with_rule("Odd(t)-Even(P) MM", mixed("mixed-student-t", "mixed-pareto", 1.0, 1.0), 30.0),
                with_rule("Odd(P)-Even(t) MM", mixed("mixed-pareto", "mixed-student-t", 1.0, 1.0), 30.0),
            ],
            vec![UCBE, MOSS, AlgorithmSpec::Greedy, AlgorithmSpec::Ucb1],
            &DESK_K,
            BudgetRule::Multiplier { c: 100.0 },
        ),
    )
}

fn fig4_5() -> ExperimentConfigFile {
    let mut p = plan(
        vec![NamedConfig::new("SC-Lognormal", sc_lognormal())],
        vec![UCBE, MOSS, AlgorithmSpec::Ucb1],
        &[128],
        BudgetRule::Multiplier { c: 150.0 },
    );
    p.capture = Capture::Allocation;
    file("fig4-5-alloc", p)
}

fn fig6() -> ExperimentConfigFile {
    let configs = [(6.0, 0.45), (5.0, 0.35), (4.0, 0.20)]
        .into_iter()
        .map(|(q, beta)| {
            NamedConfig::new(
                format!("non-IZ q={q}"),
                ConfigSpec::Noniz {
                    q,
                    eps: 0.1,
                    beta: Some(beta),
                    lambda: 0.25,
                    mu1: 0.0,
                },
            )
        })
        .collect();
    file(
        "fig6-noniz",
        plan(
            configs,
            vec![AlgorithmSpec::UcbePlus { q: None }, AlgorithmSpec::Greedy, UCBE, MOSS],
            &DESK_K,
            BudgetRule::Simplified64,
        ),
    )
}

fn ecfig_standards() -> ExperimentConfigFile {
    let mut p = plan(
        vec![with_rule("SC-Lognormal", sc_lognormal(), 100.0), with_rule("MM-Lognormal", mm_lognormal(), 30.0)],
        vec![UCBE, MOSS],
        &[32, 256, 2048],
        BudgetRule::Multiplier { c: 100.0 },
    );
    p.selection_standards = SelectionStandard::ALL.to_vec();
    file("ecfig-standards", p)
}
