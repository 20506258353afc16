use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use bco_core::analysis::{diagnostic_suite, DiagnosticConfig};
use bco_core::harness::{emit_csv, mean_runtimes, run_experiment, summarize, ExperimentConfig, ExperimentKind};
use bco_core::learners::AlgorithmKind;
use bco_core::Error;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "bco-lab",
    version,
    about = "Projection-free bandit convex optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write per-round and summary CSVs
    Run(ExperimentArgs),
    /// Run the numerical checks behind the regret bound
    Verify(VerifyArgs),
    /// Run an experiment and print only the runtime table
    Bench(ExperimentArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config file with `key = value` lines; flags take precedence
    config: Option<PathBuf>,
    #[arg(long)]
    experiment: Option<ExperimentKind>,
    /// Comma-separated subset of pfbco, fkm, unregularized, stochocg
    #[arg(long)]
    algos: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Wrap every learner in the doubling trick
    #[arg(long)]
    anytime: bool,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Horizon of the diagnostic run
    #[arg(long, default_value_t = 200)]
    t: usize,
    /// Blend-weight exponent p in σ_t = t^(-p)
    #[arg(long)]
    sigma_exponent: Option<f64>,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::new(self.experiment.unwrap_or(ExperimentKind::Quadratic)),
        };
        if let Some(experiment) = self.experiment {
            if self.config.is_some() && experiment != cfg.experiment && self.n.is_none() {
                cfg.n = experiment.default_n();
            }
            cfg.experiment = experiment;
        }
        if let Some(algos) = &self.algos {
            cfg.algorithms = algos
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(str::parse::<AlgorithmKind>)
                .collect::<Result<_, _>>()?;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(t) = self.t {
            cfg.t = t;
        }
        if let Some(reps) = self.reps {
            cfg.repetitions = reps;
        }
        if let Some(seed) = self.seed {
            cfg.base_seed = seed;
        }
        cfg.anytime |= self.anytime;
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_runtimes(traces: &[bco_core::harness::RunTrace]) {
    let runtimes = mean_runtimes(traces);
    let reference = runtimes.iter().find(|(name, _)| name == "pfbco").map(|(_, ns)| *ns);
    println!("{:<14} {:>14} {:>10}", "algorithm", "mean total s", "relative");
    for (name, ns) in &runtimes {
        let relative = reference.map_or("-".to_string(), |r| format!("{:.2}", ns / r));
        println!("{name:<14} {:>14.4} {relative:>10}", ns * 1e-9);
    }
}

fn run(args: &ExperimentArgs) -> Result<(), Error> {
    let cfg = args.config()?;
    let started = Instant::now();
    let traces = run_experiment(&cfg)?;
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(format!("{}.csv", cfg.experiment.as_str()));
    let summary = emit_csv(&traces, &path)?;
    println!(
        "{} x {} repetitions, T = {}, finished in {:.1} s",
        cfg.experiment.as_str(),
        cfg.repetitions,
        cfg.t,
        started.elapsed().as_secs_f64()
    );
    println!("{:<14} {:>16} {:>16}", "algorithm", "avg loss f(y)", "avg loss f(x)");
    for row in summarize(&traces)?.iter().filter(|r| r.t == cfg.t) {
        println!(
            "{:<14} {:>16.6} {:>16.6}",
            row.algorithm, row.mean_avg_loss_y, row.mean_avg_loss_x
        );
    }
    print_runtimes(&traces);
    println!("wrote {} and {}", path.display(), summary.display());
    Ok(())
}

fn bench(args: &ExperimentArgs) -> Result<(), Error> {
    let cfg = args.config()?;
    let traces = run_experiment(&cfg)?;
    print_runtimes(&traces);
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<bool, Error> {
    if args.t == 0 {
        return Err(Error::Config("t must be at least 1".into()));
    }
    let cfg = DiagnosticConfig {
        seed: args.seed,
        horizon: args.t,
        sigma_exponent: args.sigma_exponent,
        ..DiagnosticConfig::default()
    };
    let report = diagnostic_suite(&cfg)?;
    print!("{report}");
    Ok(report.passed())
}

fn exit_code(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    match err {
        Error::Config(_) => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let outcome = match &cli.command {
        Command::Run(args) => run(args),
        Command::Bench(args) => bench(args),
        Command::Verify(args) => match verify(args) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(2),
            Err(e) => Err(e),
        },
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => exit_code(&e),
    }
}
