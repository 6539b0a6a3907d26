use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use resmarg_cli::benchmark::write_bench_csv;
use resmarg_cli::{benchmark, run, BenchmarkConfig, MechanismKind, Privacy, RunConfig, WorkloadSpec};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mechanism {
    AimGrem,
    BatchPlanner,
    IidFixed,
}

impl From<Mechanism> for MechanismKind {
    fn from(m: Mechanism) -> Self {
        match m {
            Mechanism::AimGrem => MechanismKind::AimGrem,
            Mechanism::BatchPlanner => MechanismKind::BatchPlanner,
            Mechanism::IidFixed => MechanismKind::IidFixed,
        }
    }
}

/// Private marginal release with residual measurements.
#[derive(Debug, Parser)]
#[command(name = "resmarg", version)]
struct Args {
    #[arg(long, value_enum, default_value = "aim-grem")]
    mechanism: Mechanism,
    /// zCDP budget.
    #[arg(long, conflicts_with_all = ["epsilon", "delta"])]
    rho: Option<f64>,
    /// (ε, δ) target, converted to zCDP.
    #[arg(long, requires = "delta")]
    epsilon: Option<f64>,
    #[arg(long, requires = "epsilon")]
    delta: Option<f64>,
    /// `all-<K>way` or a JSON file with a list of attribute-name lists.
    #[arg(long)]
    workload: Option<String>,
    /// Input CSV with a header row.
    #[arg(long)]
    data: Option<PathBuf>,
    /// JSON object mapping attribute name to cardinality; the CSV then holds integer codes.
    #[arg(long)]
    domain: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of runs, with seeds seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Residuals with budget share below this are not measured.
    #[arg(long, default_value_t = resmarg::crp::DEFAULT_ETA)]
    eta: f64,
    /// Output directory (or CSV file with --benchmark).
    #[arg(long)]
    output: PathBuf,
    /// Time in-axis transforms against Kronecker products instead of running a mechanism.
    #[arg(long)]
    benchmark: bool,
    #[arg(long, default_value_t = 1 << 22)]
    bench_max_cells: usize,
    #[arg(long, default_value_t = 3)]
    bench_repeats: usize,
    /// Check lazy updates against a full rebuild after every round.
    #[arg(long)]
    audit_full_rebuild: bool,
    /// Write zero for all wall-clock fields, making outputs reproducible byte for byte.
    #[arg(long)]
    omit_timings: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match real_main(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main(args: Args) -> anyhow::Result<()> {
    if args.benchmark {
        let config = BenchmarkConfig {
            max_cells: args.bench_max_cells,
            repeats: args.bench_repeats,
            seed: args.seed,
        };
        let rows = benchmark(&config)?;
        let path = if args.output.extension().is_some_and(|e| e == "csv") {
            args.output.clone()
        } else {
            std::fs::create_dir_all(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
            args.output.join("benchmark.csv")
        };
        write_bench_csv(&path, &rows)?;
        log::info!("wrote {} timings to {}", rows.len(), path.display());
        return Ok(());
    }

    let Some(data) = args.data else {
        bail!("--data is required")
    };
    let Some(workload) = args.workload else {
        bail!("--workload is required")
    };
    let privacy = Privacy::from_flags(args.rho, args.epsilon, args.delta)?;
    let mut config = RunConfig::new(
        args.mechanism.into(),
        privacy,
        WorkloadSpec::parse(&workload)?,
        data,
        args.output,
    );
    config.domain = args.domain;
    config.seed = args.seed;
    config.trials = args.trials;
    config.eta = args.eta;
    config.audit_full_rebuild = args.audit_full_rebuild;
    config.omit_timings = args.omit_timings;
    let report = run(&config)?;
    log::info!(
        "rho = {}, {} trial(s) written to {}",
        report.rho,
        report.trials.len(),
        config.output.display()
    );
    Ok(())
}
