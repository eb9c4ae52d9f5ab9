mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Verdict;
use config::{parse_config, ExperimentConfig, SolverKind};
use output::Artifacts;

/// Kinetic limits of waves in long-range random media: solvers and
/// experiments.
#[derive(Parser, Debug)]
#[command(name = "lrk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides run.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Affects scheduling only, never results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides output.dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Scaling exponents, phase variance constant and fractional constant.
    Constants,
    /// One realization of the random potential at times 0 and run.t.
    SynthField,
    /// Runs the solver selected by solver.kind.
    Solve,
    /// Monte Carlo estimate of the kinetic solution.
    Mc,
    /// Truncated collision series.
    Series,
    /// Fractional limit equation.
    Fractional,
    /// Distance to the fractional limit over run.etas.
    EtaSweep,
    /// Schrödinger ensemble against the kinetic solution over run.epsilons.
    Schrodinger,
    /// Agreement matrix between the solvers.
    CrossValidate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::SynthField => "synth-field",
            Command::Solve => "solve",
            Command::Mc => "mc",
            Command::Series => "series",
            Command::Fractional => "fractional",
            Command::EtaSweep => "eta-sweep",
            Command::Schrodinger => "schrodinger",
            Command::CrossValidate => "cross-validate",
        }
    }
}

fn dispatch(cmd: Command, cfg: &ExperimentConfig, out: &mut Artifacts) -> commands::CmdResult<Verdict> {
    match cmd {
        Command::Constants => commands::constants(cfg, out),
        Command::SynthField => commands::synth_field(cfg, out),
        Command::Solve => commands::solve(cfg, cfg.solver.kind, out),
        Command::Mc => commands::solve(cfg, SolverKind::Mc, out),
        Command::Series => commands::solve(cfg, SolverKind::Series, out),
        Command::Fractional => commands::solve(cfg, SolverKind::Fractional, out),
        Command::EtaSweep => commands::eta_sweep(cfg, out),
        Command::Schrodinger => commands::schrodinger(cfg, out),
        Command::CrossValidate => commands::cross_validate(cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match parse_config(cli.config.as_deref(), std::env::vars()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.to_string_lossy().into_owned();
    }
    let threads = cli.threads.unwrap_or_else(rayon::current_num_threads).max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };

    let result = pool.install(|| -> commands::CmdResult<Verdict> {
        let mut out = Artifacts::create(PathBuf::from(&cfg.output.dir).as_path())?;
        let verdict = dispatch(cli.command, &cfg, &mut out)?;
        let manifest = out.finish(cli.command.name(), &cfg, threads)?;
        println!("wrote {}", manifest.display());
        Ok(verdict)
    });
    match result {
        Ok(Verdict::Done) => ExitCode::SUCCESS,
        Ok(Verdict::BudgetFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
