use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gsinkhorn::bounds::{run_campaign, write_reports, write_violations, BoundsConfig};
use gsinkhorn::experiments::{run_and_write, run_experiment, write_csv_atomic, write_rows, ExperimentConfig, ExperimentId};
use gsinkhorn::kernel_sinkhorn::kernel_sinkhorn_div;
use gsinkhorn::{Epsilon, Error, KernelSpec, Result, SampleSet};

#[derive(Debug, Parser)]
#[command(name = "gsinkhorn", version, about = "Gaussian and kernel Sinkhorn divergences, bounds and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kernel Sinkhorn divergence between two sample CSV files.
    Compute {
        #[arg(long, default_value = "linear")]
        kernel: KernelSpec,
        /// `0`, a positive decimal, or `inf`.
        #[arg(long)]
        epsilon: Epsilon,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
    /// Runs one experiment and writes its CSV.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Runs the inequality campaign and writes the bound report CSV.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Counterexample sequence on a grid of N. Writes CSV to stdout unless `--output` is given.
    Counterexample {
        #[arg(long)]
        variant: gsinkhorn::experiments::CounterexampleVariant,
        #[arg(long)]
        epsilon: f64,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        n_grid: Vec<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Reads a CSV with header `x1,...,xd` and one sample per line.
fn read_samples(path: &Path) -> Result<SampleSet> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    for (i, name) in header.iter().enumerate() {
        if name.trim() != format!("x{}", i + 1) {
            return Err(Error::Config(format!(
                "{}: header column {} is `{name}`, expected `x{}`",
                path.display(),
                i + 1,
                i + 1
            )));
        }
    }
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Config(format!("{}: row {}: {e}", path.display(), line + 1)))?;
        rows.push(row);
    }
    SampleSet::from_rows(&rows)
}

fn compute(kernel: &KernelSpec, eps: Epsilon, x: &Path, y: &Path) -> Result<()> {
    let report = kernel_sinkhorn_div(kernel, &read_samples(x)?, &read_samples(y)?, eps)?;
    let t = report.term_breakdown;
    let mut out = io::stdout().lock();
    writeln!(out, "kernel = {}", report.kernel)?;
    writeln!(out, "epsilon = {}", report.epsilon)?;
    writeln!(out, "m = {}", report.m)?;
    writeln!(out, "n = {}", report.n)?;
    writeln!(out, "value = {:e}", report.value)?;
    writeln!(out, "mean_sq = {:e}", t.mean_sq)?;
    writeln!(out, "trace_terms = {:e}", t.trace_terms)?;
    writeln!(out, "logdet_terms = {:e}", t.logdet_terms)?;
    Ok(())
}

fn experiment(path: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(path)?;
    let rows = run_and_write(&cfg)?;
    eprintln!("wrote {} rows to {}", rows.len(), cfg.output_path.display());
    Ok(())
}

/// Returns the number of violated checks.
fn bounds(path: &Path) -> Result<usize> {
    let cfg = BoundsConfig::load(path)?;
    let outcome = run_campaign(&cfg)?;
    write_csv_atomic(&cfg.output_path, |f| write_reports(f, &outcome.reports))?;
    let written = write_violations(&cfg.violations_dir(), &outcome.violations)?;
    eprintln!("wrote {} checks to {}", outcome.reports.len(), cfg.output_path.display());
    for p in &written {
        eprintln!("violation: {}", p.display());
    }
    Ok(outcome.violations.len())
}

fn counterexample(
    variant: gsinkhorn::experiments::CounterexampleVariant,
    eps: f64,
    n_grid: Vec<usize>,
    output: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = ExperimentConfig::defaults(ExperimentId::Counterexample, 0, output.clone().unwrap_or_default());
    cfg.variant = Some(variant);
    cfg.epsilons = vec![Epsilon::finite(eps).map_err(|e| Error::Config(e.to_string()))?];
    cfg.sample_sizes = n_grid;
    cfg.validate()?;
    let rows = run_experiment(&cfg)?;
    match output {
        Some(path) => write_csv_atomic(&path, |f| write_rows(f, &rows)),
        None => write_rows(io::stdout().lock(), &rows),
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NumericalFailure(_) | Error::IndefiniteMatrix { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Compute { kernel, epsilon, x, y } => compute(&kernel, epsilon, &x, &y),
        Command::Experiment { config } => experiment(&config),
        Command::Bounds { config } => match bounds(&config) {
            Ok(0) => Ok(()),
            Ok(n) => {
                eprintln!("error: {n} bound violations");
                return ExitCode::from(2);
            }
            Err(e) => Err(e),
        },
        Command::Counterexample { variant, epsilon, n_grid, output } => counterexample(variant, epsilon, n_grid, output),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
