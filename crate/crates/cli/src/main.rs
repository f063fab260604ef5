use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fiskit_cli::{oracle, run_scenario, scenario, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "fiskit", version, about = "Run fiskit scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every task in a scenario and write a JSON report.
    Run {
        file: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        resolution: Option<usize>,
        /// Export assembled operators as Matrix Market files.
        #[arg(long, value_name = "DIR")]
        dump_matrices: Option<PathBuf>,
        /// Record per-task wall-clock seconds.
        #[arg(long)]
        timings: bool,
    },
    /// Parse and validate a scenario without running it.
    Check { file: PathBuf },
    /// Print closed-form reference values; `list` names them.
    Oracle { name: String },
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_input_error() { 2 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { file, out, seed, resolution, dump_matrices, timings } => {
            let sc = match scenario::load(&file) {
                Ok(sc) => sc,
                Err(e) => return fail(&e),
            };
            let opts = RunOptions { seed, resolution, dump_matrices, timings };
            let report = match run_scenario(&sc, &opts) {
                Ok(r) => r,
                Err(e) => return fail(&e.at(file.display().to_string())),
            };
            let text = report.to_json();
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, &text) {
                        return fail(&CliError::Io(format!("{}: {e}", path.display())));
                    }
                }
                None => print!("{text}"),
            }
            for t in report.tasks.iter().filter(|t| t.error.is_some()) {
                eprintln!("task {} ({}): {}", t.index, t.kind, t.error.as_deref().unwrap_or_default());
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Check { file } => {
            let res = scenario::load(&file).and_then(|sc| {
                scenario::validate(&sc, sc.resolution)?;
                Ok(sc)
            });
            match res {
                Ok(sc) => {
                    println!("{}: ok ({} tasks)", file.display(), sc.tasks.len());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e.at(file.display().to_string())),
            }
        }
        Command::Oracle { name } => {
            if name == "list" {
                for n in oracle::NAMES {
                    println!("{n}");
                }
                return ExitCode::SUCCESS;
            }
            match oracle::oracle(&name) {
                Some(v) => {
                    println!("{}", serde_json::to_string_pretty(&v).expect("plain data"));
                    ExitCode::SUCCESS
                }
                None => {
                    eprintln!("error: unknown oracle `{name}`; known: {}", oracle::NAMES.join(", "));
                    ExitCode::from(2)
                }
            }
        }
    }
}
