// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdemon::cli::{
    cmd_calibrate, cmd_simulate, cmd_tomography, preset, presets, run_preset, CliError, ExperimentConfig, Overrides,
};

#[derive(Parser)]
#[command(name = "qdemon", version, about = "Maxwell demon simulator: dynamics, work, entropy and tomography")]
struct Args {
    #[command(subcommand)]
    command: Command,
    /// Configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Reduced truncation, sweeps and tomography grid.
    #[arg(long, global = true)]
    fast: bool,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for synthetic detector noise.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fixed integrator step in seconds instead of adaptive stepping.
    #[arg(long = "fixed-step", global = true, value_name = "DT")]
    fixed_step: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run demon scenarios and write series and tables.
    Simulate,
    /// Simulate tomography of the demon and reconstruct it.
    Tomography,
    /// Calibrate the π-pulse, the α_in ↔ photon table and the gain chain.
    Calibrate,
    /// List presets, or run one by name.
    Presets {
        name: Option<String>,
        /// Print the preset configuration instead of running it.
        #[arg(long)]
        print: bool,
    },
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    let Some(path) = path else {
        return Err(CliError::Config("--config is required".into()));
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text).map_err(|e| match e {
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn run(args: &Args) -> Result<(), CliError> {
    let overrides = Overrides { fast: args.fast, seed: args.seed, fixed_step: args.fixed_step };
    if let Some(dt) = args.fixed_step {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::Config(format!("--fixed-step must be positive, got {dt}")));
        }
    }
    let written = match &args.command {
        Command::Simulate => cmd_simulate(&overrides.apply(load(args.config.as_deref())?), &args.out)?,
        Command::Tomography => cmd_tomography(&overrides.apply(load(args.config.as_deref())?), &args.out)?,
        Command::Calibrate => cmd_calibrate(&overrides.apply(load(args.config.as_deref())?), &args.out)?,
        Command::Presets { name: None, .. } => {
            for p in presets(args.fast) {
                println!("{:<6} {}", p.name, p.description);
            }
            return Ok(());
        }
        Command::Presets { name: Some(name), print } => {
            let p = preset(name, args.fast).ok_or_else(|| CliError::Config(format!("unknown preset {name}")))?;
            if *print {
                println!("{}", overrides.apply(p.config).to_json());
                return Ok(());
            }
            run_preset(&p, &overrides, &args.out)?
        }
    };
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let result = match args.jobs {
        Some(0) => Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(&args)),
            Err(e) => Err(CliError::Config(format!("cannot start {n} workers: {e}"))),
        },
        None => run(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
