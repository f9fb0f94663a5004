use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ksgroove::experiment::{self, RunOutcome};
use ksgroove::lab::LabCheck;
use ksgroove::Error;

#[derive(Parser)]
#[command(name = "ksgroove", version, about = "Kuramoto-Sivashinsky gradient system on groove domains")]
struct Cli {
    /// Directory receiving every artifact.
    #[arg(long, global = true, env = "KSGROOVE_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write its series and summary.
    Run {
        config: PathBuf,
        /// Continue from a KSGROOVE1 checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run every (B, epsilon) cell of a sweep configuration.
    Sweep {
        config: PathBuf,
        /// Worker count; overrides the configured parallelism.
        #[arg(long, env = "KSGROOVE_THREADS")]
        threads: Option<usize>,
    },
    /// Lab batches, sharpness probe and convergence studies.
    Verify {
        #[arg(long, default_value = "quick")]
        tier: String,
    },
    /// One inequality-lab batch.
    Lab {
        #[arg(long)]
        lemma: Lemma,
        #[arg(long, default_value_t = 1000)]
        seeds: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Lemma {
    #[value(alias = "2.1")]
    Steklov,
    #[value(alias = "2.3")]
    L4,
    #[value(alias = "3.1")]
    GroovePoincare,
}

impl From<Lemma> for LabCheck {
    fn from(l: Lemma) -> Self {
        match l {
            Lemma::Steklov => LabCheck::Steklov,
            Lemma::L4 => LabCheck::L4,
            Lemma::GroovePoincare => LabCheck::GroovePoincare,
        }
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    let out = &cli.out_dir;
    match cli.command {
        Command::Run { config, resume } => {
            let s = experiment::cmd_run(&config, out, resume.as_deref())?;
            let outcome = match s.outcome {
                RunOutcome::Completed => "completed",
                RunOutcome::Blowup => "blowup",
                RunOutcome::SolverFailure => "solver-failure",
            };
            println!("outcome {outcome} at t = {} after {} steps", s.final_time, s.steps);
            for c in &s.checks {
                println!(
                    "{} {} (worst violation {:e})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.worst_violation
                );
            }
            if let Some(f) = &s.decay_fit {
                println!(
                    "decay fit rate {:.6e} (bound {:.6e}, r^2 {:.6})",
                    f.rate_lambda, s.constants.decay_rate, f.r_squared
                );
            }
            if let Some(e) = &s.error {
                println!("stopped: {e}");
            }
        }
        Command::Sweep { config, threads } => {
            let r = experiment::cmd_sweep(&config, out, threads)?;
            for c in &r.cells {
                println!(
                    "B = {:<6} eps = {:<10.3e} {:<22} fitted {:.4e} bound {:.4e}",
                    c.width,
                    c.epsilon,
                    c.outcome.label(),
                    c.fitted_rate,
                    c.bound_rate
                );
            }
        }
        Command::Verify { tier } => {
            let r = experiment::cmd_verify(&tier, out)?;
            for l in &r.lab {
                println!("lab {:?}: {}/{} passed", l.check, l.passed, l.total);
            }
            println!("sharpness: {}", if r.sharpness.pass { "pass" } else { "fail" });
            for s in &r.convergence {
                println!("convergence {}: orders {:?} {}", s.name, s.orders, if s.pass { "pass" } else { "fail" });
            }
            println!(
                "linear symbol: worst step error {:e} {}",
                r.linear_symbol.worst_step_error,
                if r.linear_symbol.pass { "pass" } else { "fail" }
            );
            println!("verify {}", if r.pass { "PASS" } else { "FAIL" });
        }
        Command::Lab { lemma, seeds } => {
            let r = experiment::cmd_lab(lemma.into(), seeds, out)?;
            let b = &r.batch;
            println!(
                "{:?}: {}/{} passed ({} retried), min ratios {:?}",
                b.check, b.passed, b.total, b.retried, b.min_ratios
            );
            if let Some(c) = b.max_empirical_constant {
                println!("max empirical constant {c:.6}");
            }
            if let Some(s) = &r.sharpness {
                for p in &s.points {
                    println!("envelope {:>5}: ratio {:.6} (exact {:.6})", p.envelope, p.ratios[0], p.exact_ratio1);
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(v)) => {
            eprintln!("config-error");
            for msg in v {
                eprintln!("  {msg}");
            }
            ExitCode::from(2)
        }
        Err(e @ Error::UnknownTier(_)) => {
            eprintln!("usage error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
