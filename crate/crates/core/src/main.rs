use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kdv_limit::harness::{self, RunConfig};
use kdv_limit::Error;

/// Long-wave KdV limit of the Euler-Poisson and Navier-Stokes-Poisson ion
/// fluid systems.
///
/// Exit status: 0 on success, 1 on a solver failure, 2 on a configuration
/// error. Set KDV_LIMIT_THREADS to bound the sweep worker pool and RUST_LOG
/// for diagnostics.
#[derive(Parser)]
#[command(version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the KdV equation and track its invariants.
    Kdv(Common),
    /// Solve the correction hierarchy and report its residuals.
    Corrections(Common),
    /// Full ε and ν convergence sweep.
    Sweep(Common),
    /// Weak-collision band membership of the configured (ε, ν) pairs.
    Regime(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> kdv_limit::Result<(RunConfig, PathBuf)> {
        let cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let out = self.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
        Ok((cfg, out))
    }
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn run(cli: Cli) -> kdv_limit::Result<()> {
    match cli.command {
        Command::Kdv(c) => {
            let (cfg, out) = c.load()?;
            let s = harness::run_kdv(&cfg)?;
            println!("max relative invariant drift {:e}", s.max_drift());
            if let Some(e) = s.final_soliton_error() {
                println!("final relative soliton error {e:e}");
            }
            report(&harness::emit_kdv(&cfg, &s, &out)?);
        }
        Command::Corrections(c) => {
            let (cfg, out) = c.load()?;
            let s = harness::run_corrections(&cfg)?;
            for (label, v) in &s.residuals {
                println!("{:<13} {v:e}", label.name());
            }
            for label in s.failures(&cfg) {
                log::warn!("{} residual exceeds its tolerance", label.name());
            }
            report(&harness::emit_corrections(&cfg, &s, &out)?);
        }
        Command::Sweep(c) => {
            let (cfg, out) = c.load()?;
            let (rep, timings) = harness::run_sweep(&cfg)?;
            for s in &rep.slopes {
                let at = s.epsilon.map(|e| format!(" at eps = {e}")).unwrap_or_default();
                println!("{:<22} vs {}{at}: slope {:.3} ± {:.3}", s.quantity, s.abscissa, s.fit.slope, s.fit.stderr);
            }
            report(&harness::emit_report(&rep, Some(&timings), &out)?);
        }
        Command::Regime(c) => {
            let (cfg, out) = c.load()?;
            let rows = harness::regime_rows(&cfg)?;
            for r in &rows {
                println!(
                    "eps {:<8} nu {:<12.4e} beta {:.3}  finite-time {:<5} global {}",
                    r.epsilon, r.nu, r.finite_time.beta, r.finite_time.inside, r.global.inside
                );
            }
            report(&harness::emit_regime(&cfg, &rows, &out)?);
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidGrid(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
