use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use pqclab_core::circuit::full_hea;
use pqclab_core::geometry::SamplingSpec;
use pqclab_core::lie::{circuit_closure, lie_trunc_model, random_trunc_model, LieTruncOptions, RandomTruncOptions};
use pqclab_core::stats::mix_seed;
use pqclab_core::trainability::{
    fit_scaling, gradient_descent, jacobian_norm_estimate, sample_geometry, FitModel, FitRecord, ScalingFit,
};

use crate::config::{Method, SweepConfig};
use crate::error::{Result, SweepError};
use crate::plot::emit_plots;
use crate::record::{write_csv, SweepRecord};

/// `hash(master_seed, n, method)`.
pub fn cell_seed(master_seed: u64, n: usize, method: Method) -> u64 {
    mix_seed(mix_seed(master_seed, n as u64), method.index())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub n: usize,
    pub method: Method,
    pub seed: u64,
    pub error: String,
}

/// Trend fits and ratios for one method over the swept qubit counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub qubits: Vec<usize>,
    /// `log Var` against `d_eff`; `None` with fewer than three usable records.
    pub exp_in_deff: Option<ScalingFit>,
    pub poly_in_n: Option<ScalingFit>,
    /// max/min of `var_grad_mean` across n.
    pub variance_ratio: f64,
    /// max/min of `product_var_deff` across n.
    pub product_ratio: f64,
    /// The record at the largest n.
    pub snapshot: Option<SweepRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub config: SweepConfig,
    pub records: Vec<SweepRecord>,
    pub failures: Vec<CellFailure>,
    pub summaries: Vec<MethodSummary>,
}

impl SweepOutput {
    pub fn record(&self, n: usize, method: Method) -> Option<&SweepRecord> {
        self.records.iter().find(|r| r.n == n && r.method == method)
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }
}

/// Runs one `(n, method)` cell.
pub fn run_cell(config: &SweepConfig, n: usize, method: Method) -> Result<SweepRecord> {
    let start = Instant::now();
    let seed = cell_seed(config.master_seed, n, method);
    let full = full_hea(n, config.depth)?;

    let (model, closure, truncated_dim, closure_defect) = match method {
        Method::Full => {
            let closure = circuit_closure(&full, config.closure_max_dim)?;
            let (dim, defect) = (closure.dim(), closure.closure_defect);
            (full, closure, dim, defect)
        }
        Method::LieTrunc => {
            let opts = LieTruncOptions {
                depth_cap: config.lie_depth_cap,
                dim_budget: config.lie_dim_budget,
                closure_max_dim: config.closure_max_dim,
            };
            let m = lie_trunc_model(&full, &opts)?;
            let closure = m.closure.expect("lie_trunc computes the closure");
            (m.circuit, closure, m.report.truncated_dim, m.report.closure_defect_after)
        }
        Method::RandomTrunc => {
            let opts = RandomTruncOptions {
                keep: config.random_keep,
                seed,
            };
            let m = random_trunc_model(&full, &opts)?;
            let closure = circuit_closure(&full, config.closure_max_dim)?;
            (m.circuit, closure, m.report.truncated_dim, m.report.closure_defect_after)
        }
    };

    let sampling = SamplingSpec {
        seed: mix_seed(config.sampling.seed, seed),
        ..config.sampling
    };
    let (metric, variance) = sample_geometry(&model, &config.loss, &sampling, config.rel_tol)?;
    let jac = jacobian_norm_estimate(&model, &sampling)?;
    let theta0 = SamplingSpec::uniform(1, mix_seed(seed, 1)).point(0, model.n_params());
    let trace = gradient_descent(&model, &config.loss, &theta0, config.opt_steps, config.opt_rate)?;

    log::info!(
        "cell n={n} method={method}: rank={} d_eff={:.3} var={:.3e}",
        metric.rank,
        metric.d_eff,
        variance.mean_component_variance
    );
    Ok(SweepRecord {
        n,
        method,
        seed,
        d_eff: metric.d_eff,
        rank: metric.rank,
        kappa: metric.kappa,
        var_grad_mean: variance.mean_component_variance,
        var_grad_first: variance.first_component_variance,
        product_var_deff: variance.product_var_deff,
        loss_final: trace.final_loss(),
        closure_dim: closure.dim(),
        truncated_dim,
        closure_defect,
        closure_converged: closure.converged,
        n_params: model.n_params(),
        wall_time: start.elapsed().as_secs_f64(),
        spectrum: metric.eigenvalues,
        loss_trajectory: trace.losses,
        jacobian_mean_sq_opnorm: jac.mean_sq_opnorm,
    })
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = p.downcast_ref::<&str>() {
        s.to_string()
    } else if let Some(s) = p.downcast_ref::<String>() {
        s.clone()
    } else {
        "panic".to_string()
    }
}

fn ratio(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi < lo {
        f64::NAN
    } else {
        hi / lo
    }
}

pub fn summarize(records: &[SweepRecord], methods: &[Method]) -> Vec<MethodSummary> {
    methods
        .iter()
        .map(|&method| {
            let mut rows: Vec<&SweepRecord> = records.iter().filter(|r| r.method == method).collect();
            rows.sort_by_key(|r| r.n);
            let fit_records: Vec<FitRecord> = rows
                .iter()
                .map(|r| FitRecord {
                    n: r.n,
                    d_eff: r.d_eff,
                    variance: r.var_grad_mean,
                })
                .collect();
            MethodSummary {
                method,
                qubits: rows.iter().map(|r| r.n).collect(),
                exp_in_deff: fit_scaling(&fit_records, FitModel::ExpInDeff).ok(),
                poly_in_n: fit_scaling(&fit_records, FitModel::PolyInN).ok(),
                variance_ratio: ratio(rows.iter().map(|r| r.var_grad_mean)),
                product_ratio: ratio(rows.iter().map(|r| r.product_var_deff)),
                snapshot: rows.last().map(|r| (*r).clone()),
            }
        })
        .collect()
}

/// Computes every cell without touching the filesystem. Cells run in a pool
/// of `config.workers` threads; results are collected in cell order.
pub fn compute_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    let cells: Vec<(usize, Method)> = config
        .qubit_range
        .iter()
        .flat_map(|&n| config.methods.iter().map(move |&m| (n, m)))
        .collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| SweepError::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<std::result::Result<SweepRecord, CellFailure>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(n, method)| {
                let fail = |error: String| CellFailure {
                    n,
                    method,
                    seed: cell_seed(config.master_seed, n, method),
                    error,
                };
                match catch_unwind(AssertUnwindSafe(|| run_cell(config, n, method))) {
                    Ok(Ok(r)) => Ok(r),
                    Ok(Err(e)) => Err(fail(e.to_string())),
                    Err(p) => Err(fail(panic_message(p))),
                }
            })
            .collect()
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(f) => {
                log::error!("cell n={} method={} failed: {}", f.n, f.method, f.error);
                failures.push(f);
            }
        }
    }
    let summaries = summarize(&records, &config.methods);
    Ok(SweepOutput {
        config: config.clone(),
        records,
        failures,
        summaries,
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| SweepError::io(path, e))
}

/// `index,eigenvalue` rows of one cell's metric spectrum.
pub fn spectrum_csv(spectrum: &[f64]) -> String {
    let mut s = String::from("index,eigenvalue\n");
    for (i, l) in spectrum.iter().enumerate() {
        s.push_str(&format!("{i},{l:?}\n"));
    }
    s
}

#[derive(Serialize)]
struct RecordsFile<'a> {
    config: &'a SweepConfig,
    records: &'a [SweepRecord],
    failures: &'a [CellFailure],
}

/// Writes `records.csv`, `records.json`, `fits.json`, one spectrum file per
/// cell and the plots. Returns every path written.
pub fn write_outputs(output: &SweepOutput, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| SweepError::io(out_dir, e))?;
    let mut written = Vec::new();

    let csv_path = out_dir.join("records.csv");
    let mut buf = Vec::new();
    write_csv(&output.records, &mut buf)?;
    write_file(&csv_path, &buf)?;
    written.push(csv_path);

    let json_path = out_dir.join("records.json");
    let body = serde_json::to_vec_pretty(&RecordsFile {
        config: &output.config,
        records: &output.records,
        failures: &output.failures,
    })?;
    write_file(&json_path, &body)?;
    written.push(json_path);

    let fits_path = out_dir.join("fits.json");
    write_file(&fits_path, &serde_json::to_vec_pretty(&output.summaries)?)?;
    written.push(fits_path);

    for r in &output.records {
        let p = out_dir.join(format!("spectrum_{}_{}.csv", r.method, r.n));
        write_file(&p, spectrum_csv(&r.spectrum).as_bytes())?;
        written.push(p);
    }

    if !output.records.is_empty() {
        written.extend(emit_plots(&output.records, out_dir)?);
    }
    Ok(written)
}

/// Validates, checks the output directory, computes and writes a sweep.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutput> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir).map_err(|e| SweepError::io(&config.out_dir, e))?;
    let probe = config.out_dir.join(".write_probe");
    fs::write(&probe, b"").map_err(|e| SweepError::io(&config.out_dir, e))?;
    let _ = fs::remove_file(&probe);

    let output = compute_sweep(config)?;
    write_outputs(&output, &config.out_dir)?;
    Ok(output)
}

/// Reads `spectrum_<method>_<n>.csv` files from `dir` into the records that
/// lack a spectrum.
pub fn attach_spectra(records: &mut [SweepRecord], dir: &Path) -> Result<()> {
    for r in records.iter_mut().filter(|r| r.spectrum.is_empty()) {
        let path = dir.join(format!("spectrum_{}_{}.csv", r.method, r.n));
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path).map_err(|e| SweepError::io(&path, e))?;
        let values = text
            .lines()
            .skip(1)
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .nth(1)
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| SweepError::Records(format!("{}: bad line `{l}`", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        r.spectrum = values;
    }
    Ok(())
}
