use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spinbath_cli::{run_modes, run_scaling_study, run_sweep, run_trace, CliResult, RunConfig};

#[derive(Parser)]
#[command(
    name = "spinbath",
    version,
    about = "Spin-phonon exact diagonalization runs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time trace of <sigma_z> at one detuning.
    Trace(Common),
    /// Statistics over a detuning sweep.
    Sweep(Common),
    /// delta_infty against IPR over a grid of pure initial states.
    Scaling(Common),
    /// Normal modes of the ion chain.
    Modes(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "K")]
    workers: Option<usize>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Memory budget for dense matrices.
    #[arg(long, value_name = "F")]
    budget_gib: Option<f64>,
}

impl Common {
    fn resolve(&self) -> CliResult<(RunConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(b) = self.budget_gib {
            cfg.budget_gib = b;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.validate()?;
        let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
        Ok((cfg, out))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Trace(c) => c
            .resolve()
            .and_then(|(cfg, out)| run_trace(&cfg, &out).map(|_| out)),
        Command::Sweep(c) => c
            .resolve()
            .and_then(|(cfg, out)| run_sweep(&cfg, &out).map(|_| out)),
        Command::Scaling(c) => c
            .resolve()
            .and_then(|(cfg, out)| run_scaling_study(&cfg, &out).map(|_| out)),
        Command::Modes(c) => c
            .resolve()
            .and_then(|(cfg, out)| run_modes(&cfg, &out).map(|_| out)),
    };
    match result {
        Ok(out) => {
            println!("{}", out.join("manifest.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let reason = serde_json::json!({ "error": e.reason(), "message": e.to_string() });
            eprintln!("{reason}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
