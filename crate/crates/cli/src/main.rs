use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use morse_cli::config::{parse_batch, Operation, ScenarioConfig};
use morse_cli::runner::{run_batch, run_scenario, RunOptions, RunReport};

#[derive(Parser)]
#[command(name = "morse", version, about = "Morse index, Birman-Schwinger and parabolicity checks on weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the operations listed in the config, in order.
    Run(Common),
    /// Negative eigenvalue count of H.
    Morse(Common),
    /// Birman-Schwinger bound.
    Bs(Common),
    /// Ground-state Doob transform.
    Doob(Common),
    /// Green kernels along the exhaustion.
    Green(Common),
    /// Parabolicity heuristic.
    Parabolicity(Common),
    /// Neumann bracketing.
    Bracket(Common),
    /// Full pipeline: stable exterior, positive solution, Doob transform, BS count.
    Pipeline(Common),
    /// Zero modes of H against the Birman-Schwinger operator.
    Kernel(Common),
    /// Coupling-constant scaling of the negative count.
    Clr(Common),
    /// Several scenarios from one file.
    Batch {
        #[command(flatten)]
        common: Common,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON.
    #[arg(long)]
    config: PathBuf,
    /// Report path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for CSV sidecars.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance override NAME=VALUE; repeatable.
    #[arg(long = "tol", value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Zero the wall times for reproducible output.
    #[arg(long)]
    normalize: bool,
}

fn load(common: &Common) -> Result<Vec<ScenarioConfig>> {
    let text = std::fs::read_to_string(&common.config).with_context(|| format!("reading {}", common.config.display()))?;
    let mut cfgs = parse_batch(&text)?;
    for cfg in &mut cfgs {
        for t in &common.tol {
            cfg.tolerances.set(t)?;
        }
        if common.seed.is_some() {
            cfg.seed = common.seed;
        }
    }
    Ok(cfgs)
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn emit(common: &Common, reports: &[RunReport], as_array: bool) -> Result<()> {
    let text = if as_array {
        serde_json::to_string_pretty(reports)?
    } else {
        reports[0].to_json()
    };
    match &common.out {
        Some(path) => std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => {
            // A closed pipe (e.g. `| head`) is not worth a panic.
            let mut out = std::io::stdout().lock();
            if let Err(e) = writeln!(out, "{text}") {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    if let Some(dir) = &common.csv {
        for r in reports {
            r.write_csv(dir)?;
        }
    }
    Ok(())
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    let (common, op, jobs) = match &cli.command {
        Command::Run(c) => (c, None, None),
        Command::Morse(c) => (c, Some(Operation::Morse), None),
        Command::Bs(c) => (c, Some(Operation::Bs), None),
        Command::Doob(c) => (c, Some(Operation::Doob), None),
        Command::Green(c) => (c, Some(Operation::Green), None),
        Command::Parabolicity(c) => (c, Some(Operation::Parabolicity), None),
        Command::Bracket(c) => (c, Some(Operation::Bracket), None),
        Command::Pipeline(c) => (c, Some(Operation::Pipeline), None),
        Command::Kernel(c) => (c, Some(Operation::Kernel), None),
        Command::Clr(c) => (c, Some(Operation::Clr), None),
        Command::Batch { common, jobs } => (common, None, Some(*jobs)),
    };
    let mut cfgs = load(common)?;
    if let Some(op) = op {
        cfgs.iter_mut().for_each(|c| c.operations = vec![op]);
    }
    let opts = RunOptions { normalize: common.normalize };
    let dir = base_dir(&common.config);
    let results = match jobs {
        Some(j) => run_batch(&cfgs, &dir, &opts, j),
        None => cfgs.iter().map(|c| run_scenario(c, &dir, &opts)).collect(),
    };
    let mut reports = Vec::with_capacity(results.len());
    for r in results {
        reports.push(r?);
    }
    emit(common, &reports, jobs.is_some() || reports.len() > 1)?;
    for r in &reports {
        for op in r.operations.iter().filter(|o| !o.pass) {
            eprintln!("{}: {} failed{}", r.scenario, op.op, op.error.as_ref().map(|e| format!(": {e}")).unwrap_or_default());
        }
    }
    Ok(reports.iter().all(|r| r.all_verdicts))
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
