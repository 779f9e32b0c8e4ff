use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use covert_core::experiment::{
    audit_run, format_defaults, list_defaults, run_experiment, AuditOptions, ExperimentSpec,
};
use covert_core::numerics::{Quadrature, DEFAULT_QUAD_ORDER};

/// Covert multi-receiver allocation experiments.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Overrides the seed of the spec or of the audited run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Gauss-Laguerre order for the KL and likelihood integrals.
    #[arg(long, global = true, default_value_t = DEFAULT_QUAD_ORDER)]
    quad_order: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML spec.
    Run { spec: PathBuf },
    /// Replay a finished run's allocations through the adversary's detector.
    Audit {
        run_dir: PathBuf,
        /// Overrides the run's Monte-Carlo trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Multiplies every stored power ratio before the audit.
        #[arg(long, default_value_t = 1.0)]
        inflate: f64,
    },
    /// Print the default parameters.
    Defaults,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    if cli.quad_order < 8 {
        eprintln!("error: --quad-order must be at least 8");
        return ExitCode::FAILURE;
    }
    let quad = Quadrature::new(cli.quad_order);
    let outcome = match cli.command {
        Command::Defaults => {
            print!("{}", format_defaults(&list_defaults()));
            Ok(true)
        }
        Command::Run { spec } => ExperimentSpec::load(&spec).and_then(|mut spec| {
            if let Some(seed) = cli.seed {
                spec.seed = seed;
            }
            let summary = run_experiment(&spec, &quad)?;
            for f in &summary.files {
                println!("{}", f.display());
            }
            println!("{} rows, {} failed", summary.rows, summary.failures);
            Ok(summary.failures == 0)
        }),
        Command::Audit { run_dir, trials, inflate } => {
            let options = AuditOptions { trials, inflate, seed: cli.seed };
            audit_run(&run_dir, &options, &quad).map(|summary| {
                let passed = summary.rows.iter().filter(|r| r.pass).count();
                let worst = summary.rows.iter().map(|r| r.recompute_error).fold(0.0, f64::max);
                println!("{}", summary.path.display());
                println!(
                    "{passed}/{} allocations pass, {} skipped, largest objective recompute error {worst:e}",
                    summary.rows.len(),
                    summary.skipped
                );
                summary.all_pass()
            })
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
