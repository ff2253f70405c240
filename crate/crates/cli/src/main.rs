use std::path::PathBuf;
use std::process::ExitCode;

use bai_cli::commands::{self, PlotArgs, PlotKind};
use bai_cli::CliError;
use bai_core::engine::SelectionStandard;
use clap::{Parser, Subcommand};

/// Fixed-budget best-arm identification experiments.
#[derive(Parser)]
#[command(name = "bai", version)]
struct Cli {
    /// Worker threads for replications; 0 lets rayon choose.
    #[arg(long, global = true, env = "BAI_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file and write the PCS table and summary.
    Run {
        config: PathBuf,
        /// Overrides the plan's base_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// One traced run plus the trace-property check.
    Trace {
        config: PathBuf,
        /// Overrides the file's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Closed-form PCS bounds for a bound query, as JSON on stdout.
    Bounds { params: PathBuf },
    /// Render CSV output as SVG.
    Plot {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, value_enum)]
        kind: PlotKind,
        #[arg(long, short)]
        out: Option<PathBuf>,
        /// Only this config; otherwise one SVG per config.
        #[arg(long)]
        config: Option<String>,
        /// max_count, max_mean or max_ucb; defaults to max_count when present.
        #[arg(long, value_parser = parse_standard)]
        standard: Option<SelectionStandard>,
    },
    /// List reference distributions, bonus presets and figure recipes.
    Presets {
        #[arg(long)]
        json: bool,
        /// Write each recipe's experiment file into this directory.
        #[arg(long, value_name = "DIR")]
        write: Option<PathBuf>,
    },
}

fn parse_standard(s: &str) -> Result<SelectionStandard, String> {
    bai_cli::table::standard_by_name(s).ok_or_else(|| format!("unknown standard `{s}`"))
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, seed } => {
            let r = commands::run(&config, seed)?;
            print_paths(&r.written);
            if r.cell_errors > 0 {
                return Err(CliError::Runtime(format!("{} cell(s) failed; see the summary's `errors`", r.cell_errors)));
            }
        }
        Command::Trace { config, seed } => print_paths(&commands::trace(&config, seed)?),
        Command::Bounds { params } => {
            let report = commands::bounds(&params)?;
            print!("{}", String::from_utf8(bai_cli::files::to_pretty_json(&report)).expect("utf-8"));
        }
        Command::Plot {
            inputs,
            kind,
            out,
            config,
            standard,
        } => print_paths(&commands::plot(&PlotArgs {
            inputs,
            kind,
            out,
            config,
            standard,
        })?),
        Command::Presets { json, write } => {
            if let Some(dir) = write {
                print_paths(&commands::write_recipes(&dir)?);
            } else if json {
                print!("{}", String::from_utf8(commands::presets_json()).expect("utf-8"));
            } else {
                print!("{}", commands::presets_text());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
