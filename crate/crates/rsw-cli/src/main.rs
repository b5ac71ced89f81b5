//! rswlab: drive the rotating shallow water laboratory from config files.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use rsw_cli::config::{parse_config_file, ExperimentConfig, Mode};
use rsw_cli::experiment::{eval_kernel, run_experiment, Overrides};
use rsw_cli::output::fmt_f64;
use rsw_cli::CliError;
use rsw_core::GammaLaw;

#[derive(Parser)]
#[command(
    name = "rswlab",
    version,
    about = "Numerical laboratory for gradient blow-up in rotating shallow water"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config document
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized suites (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress status lines
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve the configured data and write diagnostics
    Simulate(#[command(flatten)] RunArgs),
    /// Evaluate the blow-up criteria on the initial data
    Threshold(#[command(flatten)] RunArgs),
    /// Upper-bound the blow-up time with comparison trajectories
    PredictBound(#[command(flatten)] RunArgs),
    /// Run the primitive and wave-form solvers side by side (gamma = 2)
    CompareKg(#[command(flatten)] RunArgs),
    /// Follow one characteristic curve through a run
    Trace(#[command(flatten)] RunArgs),
    /// Build both coordinate maps from a run and audit them
    Coordmaps(#[command(flatten)] RunArgs),
    /// Evaluate a closed-form kernel at the given arguments
    Kernels {
        /// Kernel name; pass an unknown name to list the choices
        name: String,
        /// Numeric arguments
        args: Vec<f64>,
        /// Adiabatic exponent
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
    },
    /// Run the randomized property suites and print verdicts
    Props {
        /// Seed for the random bump family
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for an optional summary.json
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress verdict lines
        #[arg(long)]
        quiet: bool,
    },
    /// Run several configs concurrently, each into its own directory
    Sweep {
        /// Config documents
        configs: Vec<PathBuf>,
        /// Base directory for derived per-config outputs
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress per-config result lines
        #[arg(long)]
        quiet: bool,
    },
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    match Cli::parse().cmd {
        Cmd::Simulate(args) => run_mode(Mode::Simulate, &args),
        Cmd::Threshold(args) => run_mode(Mode::Threshold, &args),
        Cmd::PredictBound(args) => run_mode(Mode::PredictBound, &args),
        Cmd::CompareKg(args) => run_mode(Mode::CompareKg, &args),
        Cmd::Trace(args) => run_mode(Mode::Trace, &args),
        Cmd::Coordmaps(args) => run_mode(Mode::Coordmaps, &args),
        Cmd::Kernels { name, args, gamma } => run_kernels(&name, &args, gamma),
        Cmd::Props { seed, out, quiet } => run_props(seed, out, quiet),
        Cmd::Sweep { configs, out, quiet } => run_sweep(&configs, out, quiet),
    }
}

fn report(e: &CliError) -> i32 {
    eprintln!("rswlab: {e}");
    e.exit_code()
}

fn run_mode(expected: Mode, args: &RunArgs) -> i32 {
    let result = parse_config_file(&args.config).and_then(|config| {
        if config.mode != expected {
            return Err(CliError::Config(format!(
                "config selects mode {}, but the {} subcommand was invoked",
                config.mode.name(),
                expected.name()
            )));
        }
        run_experiment(
            &config,
            &Overrides {
                out: args.out.clone(),
                seed: args.seed,
                quiet: args.quiet,
            },
        )
    });
    result.unwrap_or_else(|e| report(&e))
}

fn run_kernels(name: &str, args: &[f64], gamma: f64) -> i32 {
    let result = GammaLaw::new(gamma)
        .map_err(CliError::from)
        .and_then(|law| eval_kernel(name, args, law));
    match result {
        Ok(value) => {
            println!("{}", fmt_f64(value));
            0
        }
        Err(e) => report(&e),
    }
}

fn run_props(seed: Option<u64>, out: Option<PathBuf>, quiet: bool) -> i32 {
    let config = ExperimentConfig {
        gamma: 2.0,
        mode: Mode::Props,
        output_dir: out,
        seed,
        snapshots: false,
        grid: None,
        data: None,
        solver: Default::default(),
        trace: None,
        coordmaps: None,
        kernels: None,
    };
    run_experiment(
        &config,
        &Overrides {
            out: None,
            seed: None,
            quiet,
        },
    )
    .unwrap_or_else(|e| report(&e))
}

fn run_sweep(configs: &[PathBuf], out: Option<PathBuf>, quiet: bool) -> i32 {
    if configs.is_empty() {
        eprintln!("rswlab: sweep needs at least one config");
        return 2;
    }
    let mut parsed = Vec::with_capacity(configs.len());
    for path in configs {
        match parse_config_file(path) {
            Ok(config) => parsed.push((path.clone(), config)),
            Err(e) => {
                eprintln!("rswlab: {}: {e}", path.display());
                return 2;
            }
        }
    }
    let base = out.unwrap_or_else(|| PathBuf::from("out"));
    let mut dirs: Vec<PathBuf> = Vec::with_capacity(parsed.len());
    for (path, config) in &parsed {
        let dir = config.output_dir.clone().unwrap_or_else(|| {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "config".into());
            base.join(stem)
        });
        dirs.push(dir);
    }
    for i in 0..dirs.len() {
        for j in i + 1..dirs.len() {
            if dirs[i] == dirs[j] {
                eprintln!(
                    "rswlab: sweep outputs collide: {} and {} both write {}",
                    parsed[i].0.display(),
                    parsed[j].0.display(),
                    dirs[i].display()
                );
                return 2;
            }
        }
    }
    // workers run silenced so stdout stays line-coherent; verdicts print
    // in input order after the join
    let results: Vec<Result<i32, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = parsed
            .iter()
            .zip(&dirs)
            .map(|((_, config), dir)| {
                scope.spawn(move || {
                    run_experiment(
                        config,
                        &Overrides {
                            out: Some(dir.clone()),
                            seed: None,
                            quiet: true,
                        },
                    )
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut worst = 0;
    for ((path, _), result) in parsed.iter().zip(&results) {
        match result {
            Ok(code) => {
                if !quiet {
                    println!("sweep: {} -> exit {code}", path.display());
                }
                worst = worst.max(*code);
            }
            Err(e) => {
                eprintln!("rswlab: {}: {e}", path.display());
                worst = worst.max(e.exit_code());
            }
        }
    }
    worst
}
