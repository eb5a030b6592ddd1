mod args;
mod commands;
mod config;
mod data;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Outcome;
use config::{ConfigViolations, ExperimentConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_RUNTIME: u8 = 4;
const EXIT_PARTIAL: u8 = 5;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigViolations>() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<swtcast::Error>() {
            use swtcast::Error::*;
            return match e {
                Config(_) | UnsupportedOrder(_) | UnsupportedLevel(_) => EXIT_CONFIG,
                Data(_) | Csv(_) | Io(_) | Shape(_) | Divisibility { .. } | NoHistory(_) | Domain { .. }
                | Integrity(_) | Network(_) => EXIT_DATA,
                State(_) | Divergence { .. } | Json(_) => EXIT_RUNTIME,
            };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_DATA;
        }
    }
    EXIT_RUNTIME
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let mut cfg = ExperimentConfig::load(cli.config.as_deref())?;
    cfg.apply_globals(cli.seed, cli.out.clone(), cli.jobs);
    if let Some(n) = cfg.jobs {
        if n == 0 {
            return Err(config::violation("jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Decompose(a) => commands::decompose(&cfg, a),
        Command::Forecast(a) => {
            cfg.apply_data(&a.data);
            cfg.apply_pipeline(&a.pipeline);
            commands::forecast(&cfg, a)
        }
        Command::Sweep(a) => {
            cfg.apply_data(&a.data);
            cfg.apply_pipeline(&a.pipeline);
            let g = &mut cfg.grid;
            if let Some(v) = &a.orders {
                g.orders = v.clone();
            }
            if let Some(v) = &a.levels {
                g.levels = v.clone();
            }
            if let Some(v) = &a.paddings {
                g.paddings = v.clone();
            }
            if let Some(v) = &a.approaches {
                g.approaches = v.clone();
            }
            if let Some(v) = &a.models {
                g.models = v.clone();
            }
            if a.no_baseline {
                g.baseline = false;
            }
            commands::sweep(&cfg, a)
        }
        Command::Volatility(a) => {
            cfg.apply_data(&a.data);
            let v = &mut cfg.volatility;
            v.floor = a.floor.unwrap_or(v.floor);
            v.first_days = a.first_days.or(v.first_days);
            v.scale = a.scale.unwrap_or(v.scale);
            commands::volatility(&cfg, a)
        }
        Command::Synth(a) => commands::synth(&cfg, a),
        Command::Fetch(a) => commands::fetch(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::PartialFailure) => ExitCode::from(EXIT_PARTIAL),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
