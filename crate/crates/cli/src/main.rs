mod args;
mod cmd;
mod config;
mod meta;

use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Result;
use clap::Parser;

use args::{Cli, Command, ExportCmd, SimulateCmd, ValidateCmd};
use config::{FileConfig, Merge, UsageError};

/// How a successful run ended.
pub enum Outcome {
    Done,
    /// Output was written but an iterative fit did not converge.
    NotConverged(String),
}

pub struct Ctx {
    seed: Option<u64>,
}

impl Ctx {
    /// The master seed, generated and announced on stderr when none was given.
    pub fn seed(&mut self) -> u64 {
        *self.seed.get_or_insert_with(|| {
            let nanos = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0);
            let s = cgfit::rng::derive_seed(nanos, std::process::id() as u64);
            eprintln!("seed: {s}");
            s
        })
    }

    pub fn given_seed(&self) -> Option<u64> {
        self.seed
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let file: FileConfig = config::load(cli.config.as_deref())?;
    let threads = cli.threads.or(file.threads);
    if let Some(t) = threads {
        if t == 0 {
            return Err(config::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    let mut ctx = Ctx { seed: cli.seed.or(file.seed) };
    match cli.command {
        Command::Simulate(SimulateCmd::Twoscale(a)) => {
            cmd::simulate::twoscale(&mut ctx, a.merge(file.simulate.twoscale))
        }
        Command::Simulate(SimulateCmd::Pairs(a)) => cmd::simulate::pairs(&mut ctx, a.merge(file.simulate.pairs)),
        Command::Fit(a) => cmd::fit::run(&mut ctx, a.merge(file.fit)),
        Command::Ci(a) => cmd::ci::run(&mut ctx, a.merge(file.ci)),
        Command::Validate(ValidateCmd::Coverage(a)) => {
            cmd::validate::coverage(&mut ctx, a.merge(file.validate.coverage))
        }
        Command::Validate(ValidateCmd::Compare(a)) => {
            cmd::validate::compare(&mut ctx, a.merge(file.validate.compare))
        }
        Command::Export(ExportCmd::Density(a)) => cmd::export::density(&mut ctx, a.merge(file.export.density)),
        Command::Export(ExportCmd::Potential(a)) => {
            cmd::export::potential(&mut ctx, a.merge(file.export.potential))
        }
    }
}

/// 1 for numeric failures of the fitting and resampling code, 2 for everything
/// the user can fix by changing inputs.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<cgfit::Error>() {
            use cgfit::Error::*;
            return match e {
                Conditioning { .. }
                | Integrability { .. }
                | Refit { .. }
                | ResampleBudget { .. }
                | TrialBudget { .. }
                | Tuning { .. } => 1,
                _ => 2,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
