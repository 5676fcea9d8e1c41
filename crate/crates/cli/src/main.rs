//! Command-line front end for gait synthesis experiments.
//!
//! Exit status: 0 on success, 2 on invalid input, 1 on runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cpg_gait::experiments::{
    self, BenchConfig, ExperimentConfig, OptimizerKind, OscillateConfig,
};
use cpg_gait::optimize::Benchmark;
use cpg_gait::Error;

#[derive(Parser)]
#[command(name = "cpg-gait", version, about = "Oscillator-driven biped gait synthesis and tuning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file (a run manifest `.json` also works for
    /// optimize and compare).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Allow optimizers with different evaluation budgets in `compare`.
    #[arg(long)]
    allow_unequal_budget: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Tune a gait with one optimizer.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Optimizer to use, overriding the configuration.
        #[arg(long)]
        optimizer: Option<OptimizerKind>,
    },
    /// Run harmony search and the GA on the same seeds.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Number of seeds (0..n), overriding the configuration.
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Roll out a saved genome and export its trajectory.
    Trace {
        #[command(flatten)]
        common: Common,
        /// Genome JSON, as written by `optimize`.
        #[arg(long)]
        genome: PathBuf,
    },
    /// Run an optimizer on a benchmark function.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        function: Option<Benchmark>,
        #[arg(long)]
        dim: Option<usize>,
        /// Improvisations after memory initialization.
        #[arg(long)]
        ni: Option<usize>,
    },
    /// Run the bare oscillator and export its state series.
    Oscillate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
}

fn experiment_config(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut config = match &common.config {
        Some(path) => experiments::load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seeds = vec![seed];
        config.sim.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out = out.clone();
    }
    config.allow_unequal_budget |= common.allow_unequal_budget;
    config.validate()?;
    Ok(config)
}

fn out_dir(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Optimize { common, optimizer } => {
            let mut config = experiment_config(&common)?;
            if let Some(kind) = optimizer {
                config.optimizer = kind;
            }
            for run in experiments::run_optimize(&config)? {
                println!(
                    "seed {}: best fitness {:.6} after {} evaluations -> {}",
                    run.seed,
                    run.best_fitness,
                    run.evaluations,
                    run.dir.display()
                );
            }
        }
        Command::Compare { common, seeds } => {
            let mut config = experiment_config(&common)?;
            if let Some(n) = seeds {
                config.seeds = (0..n).collect();
            }
            let report = experiments::run_compare(&config)?;
            println!("seed,hs_best,ga_best");
            for r in &report.rows {
                println!("{},{:.6},{:.6}", r.seed, r.hs_best, r.ga_best);
            }
            println!(
                "median hs {:.6} ga {:.6}; hs wins {}/{} (ties {})",
                report.hs_median,
                report.ga_median,
                report.hs_wins,
                report.rows.len(),
                report.ties
            );
        }
        Command::Trace { common, genome } => {
            let config = experiment_config(&common)?;
            let genome = experiments::read_genome(&genome)?;
            let out = out_dir(&common, "trace");
            let result = experiments::run_trace(&genome, &config.sim, &out)?;
            println!(
                "x {:.6} fitness {:.6} fell {}{}",
                result.x,
                result.fitness,
                result.fell,
                result.fall_time.map(|t| format!(" at {t:.2} s")).unwrap_or_default()
            );
        }
        Command::Bench { common, function, dim, ni } => {
            let mut config: BenchConfig = match &common.config {
                Some(path) => experiments::load_toml(path)?,
                None => BenchConfig::default(),
            };
            if let Some(f) = function {
                config.function = f;
            }
            if let Some(d) = dim {
                config.dim = d;
            }
            if let Some(n) = ni {
                config.hs.ni = n;
            }
            if let Some(seed) = common.seed {
                config.seeds = vec![seed];
            }
            let report = experiments::run_bench(&config)?;
            let out = out_dir(&common, "bench");
            std::fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
            let path = out.join(format!("{}.csv", report.function.name()));
            let file = std::fs::File::create(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            report.write_csv(file)?;
            println!("{} median best fitness {:.6} -> {}", report.function.name(), report.median, path.display());
        }
        Command::Oscillate { common, duration, dt } => {
            let mut config: OscillateConfig = match &common.config {
                Some(path) => experiments::load_toml(path)?,
                None => OscillateConfig::default(),
            };
            if let Some(d) = duration {
                config.duration = d;
            }
            if let Some(dt) = dt {
                config.dt = dt;
            }
            let out = out_dir(&common, "oscillate");
            let report = experiments::run_oscillate(&config, &out)?;
            match report.period {
                Some(p) => println!(
                    "period {p:.4} s, amplitude {:.4}, phase difference {:.3}, sustained {}",
                    report.amplitude, report.phase_difference, report.sustained
                ),
                None => println!("no sustained oscillation detected"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
