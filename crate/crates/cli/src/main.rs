use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use barrierkit::certificate::ConditionTag;
use barrierkit_cli::{load_scenario, run, Command, Outcome, RunOptions};
use clap::Parser;

/// Verify safety and reach-avoid properties of stochastic discrete-time systems.
#[derive(Debug, Parser)]
#[command(name = "barrierkit", version)]
struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// simulate | solve | estimate | verify | extract | synthesize | assumption1 | report-all
    #[arg(long, value_parser = parse_command)]
    command: Command,
    /// Certificate file for `verify`.
    #[arg(long)]
    certificate: Option<PathBuf>,
    /// Condition kind, e.g. ra-lower-a1.
    #[arg(long, value_parser = parse_condition)]
    condition: Option<ConditionTag>,
    /// Directory for the report, CSV fields and certificate files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Do not print the text report.
    #[arg(long)]
    quiet: bool,
}

fn parse_command(s: &str) -> Result<Command, String> {
    s.parse()
}

fn parse_condition(s: &str) -> Result<ConditionTag, String> {
    s.parse::<ConditionTag>().map_err(|e| e.to_string())
}

fn write_outputs(dir: &Path, outcome: &Outcome) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for a in &outcome.artifacts {
        fs::write(dir.join(&a.name), &a.contents)?;
    }
    fs::write(dir.join("report.txt"), outcome.report.to_text())?;
    fs::write(dir.join("report.json"), outcome.report.to_json())
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(k) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot configure {k} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let scenario = match load_scenario(&args.scenario) {
        Ok(s) => s,
        Err(errors) => {
            for e in &errors.0 {
                eprintln!("error: {e}");
            }
            return ExitCode::from(2);
        }
    };
    let certificate = match &args.certificate {
        Some(p) => match fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let options = RunOptions {
        certificate,
        condition: args.condition,
    };
    let outcome = match run(args.command, &scenario, &options) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(dir) = &args.out {
        if let Err(e) = write_outputs(dir, &outcome) {
            eprintln!("error: writing {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    }
    if !args.quiet {
        print!("{}", outcome.report.to_text());
    }
    ExitCode::from(outcome.exit_code() as u8)
}
