use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info};
use serde::Serialize;

use pqclab_core::circuit::{build_ansatz, CircuitSpec};
use pqclab_core::geometry::{empirical_metric_using, projected_metric, SamplingSpec, DEFAULT_REL_TOL};
use pqclab_core::lie::{circuit_closure, lie_trunc_model, random_trunc_model, LieTruncOptions, RandomTruncOptions};
use pqclab_sweep::checks::verify_suite;
use pqclab_sweep::plot::emit_plots;
use pqclab_sweep::record::read_csv;
use pqclab_sweep::run::attach_spectra;
use pqclab_sweep::{run_sweep, SweepConfig, SweepError};

#[derive(Parser)]
#[command(name = "pqclab", version, about = "Geometric trainability diagnostics for parameterized quantum circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an (n, method) sweep and write records, fits, spectra and plots.
    Sweep(SweepArgs),
    /// Lie closure of a circuit's generators.
    Closure(ClosureArgs),
    /// Empirical Fubini-Study metric of a circuit.
    Metric(MetricArgs),
    /// Truncate a circuit to a LieTrunc or RandomTrunc model.
    Truncate(TruncateArgs),
    /// Run every acceptance and invariant check.
    Verify(VerifyArgs),
    /// Re-render plots from an existing records.csv.
    Plot(PlotArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    master_seed: Option<u64>,
    /// Override the number of metric samples.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct CircuitSource {
    /// Circuit JSON file.
    #[arg(long, conflicts_with = "ansatz")]
    circuit: Option<PathBuf>,
    /// Built-in ansatz family: full_hea, lie_trunc or random_trunc.
    #[arg(long)]
    ansatz: Option<String>,
    #[arg(long, default_value_t = 3)]
    qubits: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
}

impl CircuitSource {
    fn load(&self) -> Result<CircuitSpec, SweepError> {
        match (&self.circuit, &self.ansatz) {
            (Some(path), _) => {
                let text = fs::read_to_string(path).map_err(|e| SweepError::io(path, e))?;
                serde_json::from_str(&text)
                    .map_err(|e| SweepError::Config(format!("{}: {e}", path.display())))
            }
            (None, Some(family)) => {
                build_ansatz(family, self.qubits, self.depth).map_err(|e| SweepError::Config(e.to_string()))
            }
            (None, None) => Err(SweepError::Config("give --circuit <file> or --ansatz <family>".into())),
        }
    }
}

#[derive(Args)]
struct ClosureArgs {
    #[command(flatten)]
    source: CircuitSource,
    #[arg(long, default_value_t = 4096)]
    max_dim: usize,
    /// Also print the basis element labels.
    #[arg(long)]
    elements: bool,
}

#[derive(Args)]
struct MetricArgs {
    #[command(flatten)]
    source: CircuitSource,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Gaussian sampling width; uniform on [0, 2π) when omitted.
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_REL_TOL)]
    rel_tol: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Lie,
    Random,
}

#[derive(Args)]
struct TruncateArgs {
    #[command(flatten)]
    source: CircuitSource,
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long, default_value_t = 2)]
    keep: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 2)]
    depth_cap: usize,
    /// Dimension budget; the circuit's parameter count when omitted.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long, default_value_t = 4096)]
    max_dim: usize,
    /// Write the truncated circuit as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Sweep configuration the sweep-level checks run against.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    records: PathBuf,
    /// Output directory; the records file's directory when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    Failed,
}

fn print_json<T: Serialize>(value: &T) -> Result<(), SweepError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), SweepError> {
    fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| SweepError::io(path, e))
}

fn load_config(path: Option<&Path>) -> Result<SweepConfig, SweepError> {
    match path {
        Some(p) => SweepConfig::load(p),
        None => Ok(SweepConfig::default()),
    }
}

fn sweep(args: SweepArgs) -> Result<Outcome, SweepError> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(out) = args.out {
        config.out_dir = out;
    }
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    if let Some(seed) = args.master_seed {
        config.master_seed = seed;
    }
    if let Some(s) = args.samples {
        config.sampling.n_samples = s;
    }
    let output = run_sweep(&config)?;
    for r in &output.records {
        info!(
            "n={} {:<12} rank={:<3} d_eff={:.3} var={:.3e} product={:.3e} ({:.2} s)",
            r.n, r.method, r.rank, r.d_eff, r.var_grad_mean, r.product_var_deff, r.wall_time
        );
    }
    for s in &output.summaries {
        println!(
            "{:<12} variance max/min {:.3}  product max/min {:.3}",
            s.method, s.variance_ratio, s.product_ratio
        );
    }
    for f in &output.failures {
        error!("cell n={} {} (seed {}) failed: {}", f.n, f.method, f.seed, f.error);
    }
    println!(
        "{} records, {} failed cells, written to {}",
        output.records.len(),
        output.failures.len(),
        config.out_dir.display()
    );
    Ok(if output.failures.is_empty() { Outcome::Ok } else { Outcome::Failed })
}

#[derive(Serialize)]
struct ClosureSummary {
    n_qubits: usize,
    dim: usize,
    converged: bool,
    closure_defect: f64,
    depth_histogram: std::collections::BTreeMap<usize, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    elements: Option<Vec<String>>,
}

fn closure(args: ClosureArgs) -> Result<Outcome, SweepError> {
    let circuit = args.source.load()?;
    let basis = circuit_closure(&circuit, args.max_dim)?;
    print_json(&ClosureSummary {
        n_qubits: basis.n_qubits,
        dim: basis.dim(),
        converged: basis.converged,
        closure_defect: basis.closure_defect,
        depth_histogram: basis.depth_histogram(),
        elements: args.elements.then(|| basis.elements.iter().map(|e| e.to_text()).collect()),
    })?;
    Ok(if basis.converged { Outcome::Ok } else { Outcome::Failed })
}

fn metric(args: MetricArgs) -> Result<Outcome, SweepError> {
    let circuit = args.source.load()?;
    let sampling = match args.sigma {
        Some(s) => SamplingSpec::gaussian(s, args.samples, args.seed),
        None => SamplingSpec::uniform(args.samples, args.seed),
    };
    sampling.validate().map_err(|e| SweepError::Config(e.to_string()))?;
    let report = empirical_metric_using(&circuit, &sampling, args.rel_tol, projected_metric)?;
    print_json(&report)?;
    Ok(Outcome::Ok)
}

fn truncate(args: TruncateArgs) -> Result<Outcome, SweepError> {
    let circuit = args.source.load()?;
    let model = match args.mode {
        Mode::Lie => lie_trunc_model(
            &circuit,
            &LieTruncOptions {
                depth_cap: args.depth_cap,
                dim_budget: args.budget,
                closure_max_dim: args.max_dim,
            },
        )?,
        Mode::Random => random_trunc_model(
            &circuit,
            &RandomTruncOptions {
                keep: args.keep,
                seed: args.seed,
            },
        )?,
    };
    print_json(&model.report)?;
    if let Some(out) = &args.out {
        write_json(out, &model.circuit)?;
        info!("wrote {}", out.display());
    }
    Ok(Outcome::Ok)
}

fn verify(args: VerifyArgs) -> Result<Outcome, SweepError> {
    let config = load_config(args.config.as_deref())?;
    config.validate()?;
    let report = verify_suite(&config);
    for c in &report.checks {
        println!("{}", c.line());
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", report.checks.len());
    if let Some(path) = &args.json {
        write_json(path, &report)?;
    }
    Ok(if report.passed { Outcome::Ok } else { Outcome::Failed })
}

fn plot(args: PlotArgs) -> Result<Outcome, SweepError> {
    let file = fs::File::open(&args.records).map_err(|e| SweepError::io(&args.records, e))?;
    let mut records = read_csv(file)?;
    let dir = args
        .records
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    attach_spectra(&mut records, &dir)?;
    let out = args.out.unwrap_or(dir);
    fs::create_dir_all(&out).map_err(|e| SweepError::io(&out, e))?;
    for p in emit_plots(&records, &out)? {
        println!("{}", p.display());
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Closure(a) => closure(a),
        Command::Metric(a) => metric(a),
        Command::Truncate(a) => truncate(a),
        Command::Verify(a) => verify(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(e @ SweepError::Config(_)) => {
            error!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            error!("{e}");
            ExitCode::from(1)
        }
    }
}
