use std::path::Path;
use std::process::{Command, Output};

use bai_cli::files::{parse_json, to_pretty_json, ExperimentConfigFile};
use bai_cli::recipes::recipes;

fn bai(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bai"))
        .args(args)
        .current_dir(dir)
        .env("BAI_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const ONE_CELL: &str = r#"{
  "plan": {
    "configs": [{"name": "sc", "config": {"kind": "sc", "base": {"family": "normal", "params": {"mean": 0.0, "std": 1.0}}, "gamma": 0.5}}],
    "algorithms": [{"name": "ucbe"}],
    "k_values": [4],
    "budget_rule": {"rule": "multiplier", "c": 10},
    "reps": 1
  }
}"#;

const FIG2_LIKE: &str = "config,algorithm,standard,k,B,reps,successes,pcs,ci_low,ci_high
SC,UCBE,max_count,32,3200,500,300,0.6,0.556,0.642
SC,UCBE,max_count,64,6400,500,290,0.58,0.536,0.622
SC,MOSS,max_count,32,3200,500,280,0.56,0.516,0.603
SC,MOSS,max_count,64,6400,500,270,0.54,0.496,0.583
SC,Greedy,max_count,32,3200,500,150,0.3,0.261,0.342
SC,Greedy,max_count,64,6400,500,120,0.24,0.205,0.279
SC,UCB1,max_count,32,3200,500,100,0.2,0.167,0.237
SC,UCB1,max_count,64,6400,500,60,0.12,0.094,0.151
";

#[test]
fn presets_lists_every_recipe() {
    let dir = tempfile::tempdir().unwrap();
    let o = bai(dir.path(), &["presets"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    for name in ["fig2-sc-lognormal", "fig3-mixed", "fig4-5-alloc", "fig6-noniz", "ecfig-standards", "sc-lognormal", "mixed-pareto"] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn one_cell_one_rep_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("plan.json"), ONE_CELL).unwrap();
    let o = bai(dir.path(), &["run", "plan.json", "--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "config,algorithm,standard,k,B,reps,successes,pcs,ci_low,ci_high");
    assert!(lines[1].starts_with("sc,UCBE,max_count,4,40,1,"), "{}", lines[1]);

    // the summary carries the materialized plan, seed override included
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["input"]["plan"]["base_seed"], 9);
    assert_eq!(summary["input"]["plan"]["algorithms"][0]["a"], 1.0);
    assert_eq!(summary["errors"].as_array().unwrap().len(), 0);
}

#[test]
fn same_seed_repeats_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let plan = ONE_CELL.replace("\"reps\": 1", "\"reps\": 40");
    std::fs::write(dir.path().join("plan.json"), plan).unwrap();
    let read = |seed: &str| {
        let o = bai(dir.path(), &["run", "plan.json", "--seed", seed]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(dir.path().join("results.csv")).unwrap()
    };
    assert_eq!(read("1"), read("1"));
}

#[test]
fn malformed_json_exits_1_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = ONE_CELL.replace("\"reps\": 1", "\"reps\": \"one\"");
    std::fs::write(dir.path().join("plan.json"), bad).unwrap();
    let o = bai(dir.path(), &["run", "plan.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("plan.reps"), "{}", stderr(&o));

    let unknown = ONE_CELL.replace("\"reps\": 1", "\"reps\": 1, \"repz\": 2");
    std::fs::write(dir.path().join("plan.json"), unknown).unwrap();
    let o = bai(dir.path(), &["run", "plan.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("repz"), "{}", stderr(&o));
}

#[test]
fn invalid_plan_exits_1_and_missing_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("plan.json"), ONE_CELL.replace("\"reps\": 1", "\"reps\": 0")).unwrap();
    assert_eq!(bai(dir.path(), &["run", "plan.json"]).status.code(), Some(1));
    assert_eq!(bai(dir.path(), &["run", "nope.json"]).status.code(), Some(2));
}

#[test]
fn cell_errors_exit_2_but_keep_good_cells() {
    let dir = tempfile::tempdir().unwrap();
    // UCBE+ needs q, which an SC config does not fix
    let plan = ONE_CELL.replace(r#"[{"name": "ucbe"}]"#, r#"[{"name": "ucbe"}, {"name": "ucbe_plus"}]"#);
    std::fs::write(dir.path().join("plan.json"), plan).unwrap();
    let o = bai(dir.path(), &["run", "plan.json"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let summary = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    assert!(summary.contains("UCBE+"));
}

#[test]
fn plot_is_deterministic_with_one_polyline_per_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("fig2.csv"), FIG2_LIKE).unwrap();
    let render = |out: &str| {
        let o = bai(dir.path(), &["plot", "fig2.csv", "--kind", "pcs", "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(dir.path().join(out)).unwrap()
    };
    let a = render("a.svg");
    assert_eq!(a, render("b.svg"));
    let svg = String::from_utf8(a).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 4);
    for alg in ["UCBE", "MOSS", "Greedy", "UCB1"] {
        assert!(svg.contains(&format!("data-label=\"{alg}\"")));
    }
    assert!(svg.contains("log2(k)"));
}

#[test]
fn plot_splits_panels_per_config() {
    let dir = tempfile::tempdir().unwrap();
    let two = format!("{FIG2_LIKE}{}", FIG2_LIKE.lines().skip(1).map(|l| l.replacen("SC", "MM", 1) + "\n").collect::<String>());
    std::fs::write(dir.path().join("r.csv"), two).unwrap();
    let o = bai(dir.path(), &["plot", "r.csv", "--kind", "pcs"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("r-sc.svg").exists());
    assert!(dir.path().join("r-mm.svg").exists());
}

#[test]
fn empty_or_foreign_csv_is_a_schema_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.csv"), "").unwrap();
    std::fs::write(dir.path().join("header.csv"), "config,algorithm,standard,k,B,reps,successes,pcs,ci_low,ci_high\n").unwrap();
    std::fs::write(dir.path().join("other.csv"), "a,b\n1,2\n").unwrap();
    for f in ["empty.csv", "header.csv", "other.csv"] {
        let o = bai(dir.path(), &["plot", f, "--kind", "pcs"]);
        assert_eq!(o.status.code(), Some(1), "{f}");
        assert!(!dir.path().join(f.replace(".csv", ".svg")).exists());
    }
}

#[test]
fn single_point_plot_has_one_marker() {
    let dir = tempfile::tempdir().unwrap();
    let one: String = FIG2_LIKE.lines().take(2).map(|l| format!("{l}\n")).collect();
    std::fs::write(dir.path().join("one.csv"), one).unwrap();
    let o = bai(dir.path(), &["plot", "one.csv", "--kind", "pcs"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = std::fs::read_to_string(dir.path().join("one.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 1);
    // k = 32 sits at 5, padded to [4, 6]
    assert!(svg.contains(">4<") && svg.contains(">6<"));
}

#[test]
fn trace_then_alloc_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"config": {"kind": "sc", "base": {"family": "normal", "params": {"mean": 0.0, "std": 1.0}}, "gamma": 0.5},
                  "algorithm": {"name": "moss"}, "k": 5, "budget": 200, "seed": 4}"#;
    std::fs::write(dir.path().join("t.json"), cfg).unwrap();
    let o = bai(dir.path(), &["trace", "t.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("round,arm,new_count,observation,new_ucb"));
    assert_eq!(csv.lines().count(), 201);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("trace_report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["property1"].as_array().unwrap().len(), 0);
    assert_eq!(report["report"]["property2"].as_array().unwrap().len(), 0);

    let o = bai(dir.path(), &["plot", "trace.csv", "--kind", "alloc"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = std::fs::read_to_string(dir.path().join("trace.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 200);
}

#[test]
fn ucb1_trace_reports_refusal() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"config": {"kind": "sc", "base": {"family": "normal", "params": {"mean": 0.0, "std": 1.0}}, "gamma": 0.5},
                  "algorithm": {"name": "ucb1"}, "k": 3, "budget": 30}"#;
    std::fs::write(dir.path().join("t.json"), cfg).unwrap();
    let o = bai(dir.path(), &["trace", "t.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = std::fs::read_to_string(dir.path().join("trace_report.json")).unwrap();
    assert!(report.contains("\"refused\""));
}

#[test]
fn allocation_run_writes_histogram_and_plots_bars() {
    let dir = tempfile::tempdir().unwrap();
    let plan = ONE_CELL
        .replace("\"reps\": 1", "\"reps\": 20, \"capture\": \"allocation\"")
        .replace(r#"[{"name": "ucbe"}]"#, r#"[{"name": "ucbe"}, {"name": "ucb1"}]"#);
    std::fs::write(dir.path().join("plan.json"), plan).unwrap();
    let o = bai(dir.path(), &["run", "plan.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = bai(dir.path(), &["plot", "histogram.csv", "--kind", "hist"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = std::fs::read_to_string(dir.path().join("histogram.svg")).unwrap();
    assert!(svg.contains("data-label=\"UCB1\""));
}

#[test]
fn bounds_prints_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let q = r#"{"bonus": {"variant": "ucbe", "params": {"a": 1.0}}, "c": 10000, "gamma": 1.0,
                "sigma_lo": 1.0, "sigma_hi": 1.0, "regime": {"kind": "location_scale"}}"#;
    std::fs::write(dir.path().join("q.json"), q).unwrap();
    let o = bai(dir.path(), &["bounds", "q.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let g0 = v["gamma0"].as_f64().unwrap();
    assert!(g0 > 0.0 && g0 < 1.0);
    assert!(v["lemma1_floor"].as_f64().unwrap() > 0.0);
}

#[test]
fn recipe_files_round_trip() {
    for r in recipes() {
        let f = (r.build)();
        let text = String::from_utf8(to_pretty_json(&f)).unwrap();
        let back: ExperimentConfigFile = parse_json(Path::new(r.name), &text).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.materialized(), f);
    }
}

#[test]
fn sparse_input_materializes_defaults() {
    let f: ExperimentConfigFile = parse_json(Path::new("x"), ONE_CELL).unwrap();
    let m = f.materialized();
    let text = String::from_utf8(to_pretty_json(&m)).unwrap();
    let back: ExperimentConfigFile = parse_json(Path::new("x"), &text).unwrap();
    assert_eq!(back, m);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["output"]["results"], "results.csv");
    assert_eq!(v["plan"]["selection_standards"][0], "max_count");
    assert_eq!(v["plan"]["capture"], "none");
    assert_eq!(v["plan"]["configs"][0]["config"]["base"]["shift"], 0.0);
}
