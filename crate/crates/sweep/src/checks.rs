//! Acceptance and invariant checks shared by `pqclab verify` and the
//! acceptance test target. Tolerances and protocol constants are fixed here.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use pqclab_core::algebra::{gram_schmidt_pauli, symmetric_eigenvalues, PauliString, PauliSum, StateVector, C64};
use pqclab_core::circuit::{full_hea, CircuitSpec, StateModel, TangentFrame};
use pqclab_core::geometry::{
    empirical_metric_using, metric_rank, projected_metric, rank_from_spectrum, MetricFn, SamplingSpec,
};
use pqclab_core::lie::{default_tolerance, lie_closure, lie_trunc_model, random_trunc_model, LieTruncOptions, RandomTruncOptions};
use pqclab_core::robustness::random_trials;
use pqclab_core::stats::{mix_seed, stream_rng};
use pqclab_core::trainability::{
    gradient_descent, ground_energy, loss_and_gradient, loss_value, svd_chain_rule, LossSpec,
};

use crate::config::{Method, SweepConfig};
use crate::record::{csv_string, read_csv};
use crate::run::{cell_seed, compute_sweep, SweepOutput};

pub const SPAN_RANK_CIRCUITS: usize = 100;
pub const SPAN_RANK_SAMPLES: usize = 20;
pub const SPAN_RANK_SEED: u64 = 1;
pub const SPAN_RANK_BUDGET_S: f64 = 60.0;
pub const RANK_REL_TOL: f64 = 1e-8;

pub const COLLAPSE_RANK: usize = 2;
pub const COLLAPSE_DEFF: (f64, f64) = (1.5, 2.0);
pub const COLLAPSE_QUBITS: usize = 6;
pub const COLLAPSE_BUDGET_S: f64 = 120.0;

pub const STABILITY_TOLS: [f64; 3] = [1e-6, 1e-8, 1e-10];

pub const PRODUCT_RATIO_MAX: f64 = 10.0;

pub const GRADIENT_CASES: usize = 50;
pub const FD_STEP: f64 = 1e-5;
pub const GRADIENT_REL_TOL: f64 = 1e-6;
pub const GRADIENT_SEED: u64 = 2;

pub const METRIC_TOL: f64 = 1e-10;
pub const METRIC_CASES: usize = 30;
pub const METRIC_SEED: u64 = 3;

pub const ORACLE_SETS: usize = 30;
pub const ORACLE_SEED: u64 = 4;

pub const BOUND_TRIALS: usize = 1000;
pub const BOUND_SEED: u64 = 5;
pub const BOUND_TOL: f64 = 1e-9;
pub const BOUND_BUDGET_S: f64 = 30.0;

pub const VQE_SEEDS: usize = 10;
pub const VQE_REQUIRED: usize = 9;
pub const VQE_STEPS: usize = 10;
pub const VQE_QUBITS: usize = 3;
pub const VQE_SEED: u64 = 6;
pub const VQE_FLOOR_TOL: f64 = 1e-10;

pub const SWEEP_BUDGET_S: f64 = 600.0;
pub const DETERMINISM_WORKERS: [usize; 2] = [1, 8];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    pub name: String,
    pub passed: bool,
    /// Slack against the pinned threshold; negative when violated.
    pub margin: f64,
    pub detail: String,
    pub seconds: f64,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} {:<4} {:<34} margin={:+.3e}  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.margin,
            self.detail
        )
    }
}

/// Negative slack for a violation count, `+0.0` when there are none.
fn deficit(count: usize) -> f64 {
    0.0 - count as f64
}

fn timed(id: &str, name: &str, f: impl FnOnce() -> (bool, f64, String)) -> CheckResult {
    let start = Instant::now();
    let (passed, margin, detail) = f();
    CheckResult {
        id: id.into(),
        name: name.into(),
        passed,
        margin,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn with_budget(mut r: CheckResult, budget: f64) -> CheckResult {
    if r.seconds >= budget {
        r.passed = false;
        r.detail = format!("{} (took {:.1} s, budget {budget} s)", r.detail, r.seconds);
    }
    r
}

fn random_label(n: usize, rng: &mut impl Rng) -> String {
    loop {
        let l: String = (0..n).map(|_| ['I', 'X', 'Y', 'Z'][rng.random_range(0..4)]).collect();
        if l.chars().any(|c| c != 'I') {
            return l;
        }
    }
}

/// Circuit of `slots` random non-identity Pauli strings drawn with
/// replacement, acting on `|0…0>`.
pub fn random_pauli_circuit(n: usize, slots: usize, rng: &mut impl Rng) -> CircuitSpec {
    let gens: Vec<PauliSum> = (0..slots)
        .map(|_| PauliSum::from_label(&random_label(n, rng), 1.0).expect("valid label"))
        .collect();
    CircuitSpec::from_generators(gens, StateVector::zero_state(n)).expect("valid circuit")
}

fn generator_span_dim(c: &CircuitSpec) -> usize {
    let gens: Vec<PauliSum> = c.generators().map(|g| g.to_pauli_sum()).collect();
    gram_schmidt_pauli(&gens, 1e-10).expect("valid generators").basis.len()
}

/// rank(ĝ) against the dimension of the generator span over random circuits.
pub fn span_rank(metric_fn: MetricFn) -> CheckResult {
    let r = timed("A1", "span-rank bound", || {
        let mut violations = Vec::new();
        let mut worst: i64 = i64::MIN;
        for i in 0..SPAN_RANK_CIRCUITS {
            let mut rng = stream_rng(SPAN_RANK_SEED, i as u64);
            let n = 2 + i % 2;
            let slots = rng.random_range(2..=6);
            let c = random_pauli_circuit(n, slots, &mut rng);
            let span = generator_span_dim(&c);
            let sampling = SamplingSpec::uniform(SPAN_RANK_SAMPLES, mix_seed(SPAN_RANK_SEED, i as u64));
            let m = empirical_metric_using(&c, &sampling, RANK_REL_TOL, metric_fn).expect("metric");
            let excess = m.rank as i64 - span as i64;
            worst = worst.max(excess);
            if excess > 0 {
                violations.push(format!("#{i}(n={n},span={span},rank={})", m.rank));
            }
        }
        let shown: Vec<&String> = violations.iter().take(5).collect();
        (
            violations.is_empty(),
            deficit(worst.max(0) as usize),
            format!(
                "{} of {SPAN_RANK_CIRCUITS} circuits with rank > span; worst excess {worst}; {shown:?}",
                violations.len()
            ),
        )
    });
    with_budget(r, SPAN_RANK_BUDGET_S)
}

/// RandomTrunc at the largest default qubit count collapses to rank 2.
pub fn random_collapse(sweep: &SweepOutput) -> CheckResult {
    let start = Instant::now();
    let mut r = timed("A2", "random-trunc rank collapse", || {
        let Some(rec) = sweep.record(COLLAPSE_QUBITS, Method::RandomTrunc) else {
            return (false, f64::NEG_INFINITY, format!("no random_trunc record at n={COLLAPSE_QUBITS}"));
        };
        let (lo, hi) = COLLAPSE_DEFF;
        let margin = if rec.rank != COLLAPSE_RANK {
            -((rec.rank as f64 - COLLAPSE_RANK as f64).abs())
        } else {
            (rec.d_eff - lo).min(hi - rec.d_eff)
        };
        (
            rec.rank == COLLAPSE_RANK && rec.d_eff >= lo && rec.d_eff <= hi,
            margin,
            format!(
                "n={} seed={} rank={} d_eff={:.4} (cell {:.2} s)",
                rec.n, rec.seed, rec.rank, rec.d_eff, rec.wall_time
            ),
        )
    });
    if let Some(rec) = sweep.record(COLLAPSE_QUBITS, Method::RandomTrunc) {
        r.seconds = rec.wall_time + start.elapsed().as_secs_f64();
    }
    with_budget(r, COLLAPSE_BUDGET_S)
}

/// rank(lie_trunc) = rank(full) at every n, and ranks do not move across
/// the threshold set.
pub fn span_preservation(sweep: &SweepOutput) -> CheckResult {
    timed("A3", "lie-trunc preserves full rank", || {
        let mut ok = true;
        let mut parts = Vec::new();
        let mut margin: f64 = 0.0;
        for &n in &sweep.config.qubit_range {
            let (Some(full), Some(lie)) = (sweep.record(n, Method::Full), sweep.record(n, Method::LieTrunc)) else {
                ok = false;
                parts.push(format!("n={n}: missing"));
                continue;
            };
            let ranks = |spec: &[f64]| -> Vec<usize> {
                STABILITY_TOLS.iter().map(|&t| rank_from_spectrum(spec, t).expect("valid tol")).collect()
            };
            let rf = ranks(&full.spectrum);
            let rl = ranks(&lie.spectrum);
            let stable = rf.iter().all(|&r| r == full.rank) && rl.iter().all(|&r| r == lie.rank);
            let equal = full.rank == lie.rank;
            if !(stable && equal) {
                ok = false;
                margin = margin.min(-((full.rank as f64 - lie.rank as f64).abs().max(1.0)));
            }
            parts.push(format!("n={n}: {}/{} {:?}/{:?}", full.rank, lie.rank, rf, rl));
        }
        (ok, margin, format!("full/lie ranks at rel_tol {STABILITY_TOLS:?}: {}", parts.join("; ")))
    })
}

/// Flat `Var·d_eff` for LieTrunc against Full's raw variance spread.
pub fn scaling_signature(sweep: &SweepOutput) -> CheckResult {
    timed("A4", "variance-d_eff scaling signature", || {
        let (Some(lie), Some(full)) = (sweep.summary(Method::LieTrunc), sweep.summary(Method::Full)) else {
            return (false, f64::NEG_INFINITY, "missing method summaries".into());
        };
        let flat = lie.product_ratio <= PRODUCT_RATIO_MAX;
        let ordered = full.variance_ratio > lie.product_ratio;
        (
            flat && ordered,
            (PRODUCT_RATIO_MAX - lie.product_ratio).min(full.variance_ratio - lie.product_ratio),
            format!(
                "lie_trunc product max/min {:.3} (<= {PRODUCT_RATIO_MAX}), full variance max/min {:.3}",
                lie.product_ratio, full.variance_ratio
            ),
        )
    })
}

fn central_difference(model: &dyn StateModel, t: &[f64], loss: &LossSpec) -> Vec<f64> {
    (0..t.len())
        .map(|k| {
            let mut p = t.to_vec();
            let mut m = t.to_vec();
            p[k] += FD_STEP;
            m[k] -= FD_STEP;
            (loss_value(model, &p, loss).expect("loss") - loss_value(model, &m, loss).expect("loss")) / (2.0 * FD_STEP)
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Seeded mix of random Pauli circuits, the hardware-efficient ansatz and its
/// LieTrunc model, `case % 3` picking the family.
fn case_model(case: usize, seed: u64) -> Box<dyn StateModel> {
    let mut rng = stream_rng(seed, case as u64);
    let n = rng.random_range(2..=4);
    match case % 3 {
        0 => Box::new(random_pauli_circuit(n, rng.random_range(2..=8), &mut rng)),
        1 => Box::new(full_hea(n, 2).expect("ansatz")),
        _ => {
            let full = full_hea(n, 2).expect("ansatz");
            Box::new(lie_trunc_model(&full, &LieTruncOptions::default()).expect("lie_trunc").circuit)
        }
    }
}

fn case_theta(len: usize, case: usize, seed: u64) -> Vec<f64> {
    SamplingSpec::uniform(1, mix_seed(seed, 1000 + case as u64)).point(0, len)
}

/// Analytic gradient against central differences, both losses.
pub fn gradient_exactness() -> CheckResult {
    timed("A5", "gradient vs finite differences", || {
        let mut worst: f64 = 0.0;
        let mut tiny = 0;
        for case in 0..GRADIENT_CASES {
            let loss = if case % 2 == 0 { LossSpec::default() } else { LossSpec::tfim() };
            let model = case_model(case, GRADIENT_SEED);
            let t = case_theta(model.n_params(), case, GRADIENT_SEED);
            let (_, g) = loss_and_gradient(model.as_ref(), &t, &loss).expect("gradient");
            let fd = central_difference(model.as_ref(), &t, &loss);
            let diff: Vec<f64> = g.iter().zip(&fd).map(|(a, b)| a - b).collect();
            let gn = norm(&g);
            if gn < 1e-9 {
                // relative error is undefined at a stationary point
                tiny += 1;
                worst = worst.max(norm(&diff));
                continue;
            }
            worst = worst.max(norm(&diff) / gn);
        }
        (
            worst <= GRADIENT_REL_TOL,
            GRADIENT_REL_TOL - worst,
            format!("{GRADIENT_CASES} cases, max relative error {worst:.3e}, {tiny} near-stationary"),
        )
    })
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// `g = JᵀJ`, Parseval, PSD and global-phase invariance for a metric function.
pub fn metric_consistency(metric_fn: MetricFn) -> CheckResult {
    timed("A6", "metric consistency", || {
        let mut jtj: f64 = 0.0;
        let mut parseval: f64 = 0.0;
        let mut min_eig: f64 = f64::INFINITY;
        let mut phase: f64 = 0.0;
        for case in 0..METRIC_CASES {
            let model = case_model(case, METRIC_SEED);
            let t = case_theta(model.n_params(), case, METRIC_SEED);
            let frame = model.tangent_frame(&t).expect("frame");
            let g = metric_fn(&frame);
            let j = frame.real_jacobian();
            jtj = jtj.max(max_abs(&(&g - j.transpose() * j)));
            min_eig = min_eig.min(*symmetric_eigenvalues(&g).last().expect("nonempty"));

            let loss = if case % 2 == 0 { LossSpec::default() } else { LossSpec::tfim() };
            let (_, grad) = loss_and_gradient(model.as_ref(), &t, &loss).expect("gradient");
            let d = svd_chain_rule(model.as_ref(), &t, &loss).expect("svd");
            parseval = parseval.max((d.parseval_norm_sq() - norm(&grad).powi(2)).abs());
            let recon: Vec<f64> = grad.iter().zip(d.gradient()).map(|(a, b)| a - b).collect();
            parseval = parseval.max(norm(&recon));

            let phi = 0.3 + case as f64;
            let shifted = TangentFrame::new(
                frame.state.scaled(C64::from_polar(1.0, phi)),
                frame.partials.map(|z| z * C64::from_polar(1.0, phi)),
            );
            phase = phase.max(max_abs(&(metric_fn(&shifted) - &g)));
        }
        let psd = -min_eig;
        let worst = jtj.max(parseval).max(phase).max(psd);
        (
            worst <= METRIC_TOL,
            METRIC_TOL - worst,
            format!(
                "{METRIC_CASES} frames: |g-JᵀJ| {jtj:.2e}, Parseval {parseval:.2e}, λ_min {min_eig:.2e}, phase {phase:.2e}"
            ),
        )
    })
}

/// Pointwise `rank g(θ) <= 2^{n+1} - 2`, the real dimension of projective
/// state space, on circuits with more slots than that.
pub fn pointwise_rank_bound(metric_fn: MetricFn) -> CheckResult {
    timed("R1", "pointwise projective rank bound", || {
        let mut worst: i64 = i64::MIN;
        for case in 0..20usize {
            let mut rng = stream_rng(9, case as u64);
            let n = 1 + case % 2;
            let bound = (1usize << (n + 1)) - 2;
            let c = random_pauli_circuit(n, bound + 3, &mut rng);
            let t = case_theta(c.n_params(), case, 9);
            let g = metric_fn(&c.tangent_frame(&t).expect("frame"));
            let rank = metric_rank(&g, RANK_REL_TOL).expect("rank");
            worst = worst.max(rank as i64 - bound as i64);
        }
        (worst <= 0, 0.0 - worst as f64, format!("largest rank excess {worst}"))
    })
}

/// Kronecker-product Pauli matrices, independent of the bit-mask code.
fn pauli_matrix(label: &str) -> DMatrix<C64> {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut m = DMatrix::from_element(1, 1, o);
    for c in label.chars() {
        let p = match c {
            'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            _ => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        };
        m = m.kronecker(&p);
    }
    m
}

fn all_labels(n: usize) -> Vec<String> {
    (0..1usize << (2 * n))
        .map(|mut k| {
            let mut s = String::new();
            for _ in 0..n {
                s.push(['I', 'X', 'Y', 'Z'][k % 4]);
                k /= 4;
            }
            s
        })
        .collect()
}

/// Closure dimension by exhaustive bracketing in the real Pauli-coefficient
/// space of `u(2^n)`: brackets are dense matrix commutators, coordinates are
/// `Tr(P A) / 2^n`, independence is decided by modified Gram–Schmidt.
pub fn oracle_closure_dim(generators: &[PauliSum]) -> usize {
    let n = generators[0].n_qubits();
    let d = 1usize << n;
    let basis: Vec<DMatrix<C64>> = all_labels(n).iter().map(|l| pauli_matrix(l)).collect();
    let coords = |h: &DMatrix<C64>| -> Vec<f64> {
        basis.iter().map(|p| (p * h).trace().re / d as f64).collect()
    };
    let to_matrix = |c: &[f64]| -> DMatrix<C64> {
        let mut m = DMatrix::<C64>::zeros(d, d);
        for (p, &x) in basis.iter().zip(c) {
            if x != 0.0 {
                m += p * C64::new(x, 0.0);
            }
        }
        m
    };
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let mut members: Vec<Vec<f64>> = Vec::new();
    let admit = |v: Vec<f64>, ortho: &mut Vec<Vec<f64>>, members: &mut Vec<Vec<f64>>| -> bool {
        let n0 = norm(&v);
        if n0 < 1e-12 {
            return false;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for q in ortho.iter() {
                let dot: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
                r.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let rn = norm(&r);
        if rn <= 1e-9 * n0 {
            return false;
        }
        ortho.push(r.iter().map(|x| x / rn).collect());
        members.push(v.iter().map(|x| x / n0).collect());
        true
    };
    for g in generators {
        admit(coords(&g.dense().into_matrix()), &mut ortho, &mut members);
    }
    loop {
        let k = members.len();
        let mats: Vec<DMatrix<C64>> = members.iter().map(|c| to_matrix(c)).collect();
        let mut grew = false;
        for a in 0..k {
            for b in (a + 1)..k {
                // [h_a, h_b] / i is Hermitian
                let c = (&mats[a] * &mats[b] - &mats[b] * &mats[a]) * C64::new(0.0, -1.0);
                if admit(coords(&c), &mut ortho, &mut members) {
                    grew = true;
                }
            }
        }
        if !grew {
            return members.len();
        }
    }
}

/// Generator set `set`: 1–3 qubits, 1–4 generators of one or two Pauli terms
/// with random coefficients.
pub fn oracle_generator_set(set: usize) -> Vec<PauliSum> {
    let mut rng = stream_rng(ORACLE_SEED, set as u64);
    let n = rng.random_range(1..=3);
    let k = rng.random_range(1..=4);
    let terms = rng.random_range(1..=2);
    (0..k)
        .map(|_| {
            let mut s = PauliSum::zero(n);
            for _ in 0..terms {
                let p = PauliString::from_label(&random_label(n, &mut rng)).expect("label");
                s.add_term(p.key(), rng.random_range(0.2..1.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 });
            }
            if s.is_empty() {
                s = PauliSum::from_label(&random_label(n, &mut rng), 1.0).expect("label");
            }
            s
        })
        .collect()
}

pub fn closure_oracle() -> CheckResult {
    timed("A7", "closure vs brute-force oracle", || {
        let mut mismatches = Vec::new();
        let mut dims = Vec::new();
        for set in 0..ORACLE_SETS {
            let g = oracle_generator_set(set);
            let b = lie_closure(&g, 4096, default_tolerance(&g)).expect("closure");
            let want = oracle_closure_dim(&g);
            dims.push(b.dim());
            if b.dim() != want || !b.converged {
                mismatches.push(format!("set {set}: {} vs {want}", b.dim()));
            }
        }
        (
            mismatches.is_empty(),
            deficit(mismatches.len()),
            format!("{ORACLE_SETS} sets, {} mismatches, dims {dims:?} {mismatches:?}", mismatches.len()),
        )
    })
}

pub fn perturbation_bound() -> CheckResult {
    let r = timed("A8", "exponential perturbation bound", || {
        let trials = random_trials(&[1, 2, 3], BOUND_TRIALS, BOUND_SEED).expect("trials");
        let worst = trials.iter().map(|t| t.margin).fold(f64::INFINITY, f64::min);
        (
            worst >= -BOUND_TOL,
            worst + BOUND_TOL,
            format!("{BOUND_TRIALS} trials on 1-3 qubits, min(rhs - lhs) = {worst:.3e}"),
        )
    });
    with_budget(r, BOUND_BUDGET_S)
}

/// Variational floor at every sampled θ for all three models, and monotone
/// descent over the first steps from seeded starts.
pub fn vqe_sanity(config: &SweepConfig) -> CheckResult {
    timed("A9", "TFIM variational sanity", || {
        let loss = LossSpec::tfim();
        let mut floor_gap = f64::INFINITY;
        let mut evaluated = 0;
        for n in 2..=6 {
            let e0 = ground_energy(&loss, n).expect("ground energy");
            let full = full_hea(n, config.depth).expect("ansatz");
            let lie = lie_trunc_model(&full, &LieTruncOptions::default()).expect("lie").circuit;
            let rnd = random_trunc_model(
                &full,
                &RandomTruncOptions {
                    keep: config.random_keep,
                    seed: cell_seed(config.master_seed, n, Method::RandomTrunc),
                },
            )
            .expect("random")
            .circuit;
            for (i, model) in [&full, &lie, &rnd].into_iter().enumerate() {
                let s = SamplingSpec {
                    seed: mix_seed(config.sampling.seed, (n * 3 + i) as u64),
                    ..config.sampling
                };
                for theta in s.points(model.n_params()) {
                    floor_gap = floor_gap.min(loss_value(model, &theta, &loss).expect("loss") - e0);
                    evaluated += 1;
                }
            }
        }
        let circuit = full_hea(VQE_QUBITS, config.depth).expect("ansatz");
        let mut monotone = 0;
        let mut drops = Vec::new();
        for s in 0..VQE_SEEDS {
            let t0 = SamplingSpec::uniform(1, mix_seed(VQE_SEED, s as u64)).point(0, circuit.n_params());
            let tr = gradient_descent(&circuit, &loss, &t0, VQE_STEPS, config.opt_rate).expect("descent");
            if tr.losses.windows(2).all(|w| w[1] < w[0]) {
                monotone += 1;
            }
            drops.push(format!("{:.3}", tr.losses[VQE_STEPS] - tr.losses[0]));
        }
        let floor_ok = floor_gap >= -VQE_FLOOR_TOL;
        (
            floor_ok && monotone >= VQE_REQUIRED,
            (floor_gap + VQE_FLOOR_TOL).min((monotone as f64) - VQE_REQUIRED as f64),
            format!(
                "{evaluated} sampled losses, min(L - E0) {floor_gap:.3e}; {monotone}/{VQE_SEEDS} seeds strictly decreasing over {VQE_STEPS} steps; ΔL {drops:?}"
            ),
        )
    })
}

/// Byte-identical CSVs across worker counts, each run inside the budget.
pub fn determinism(config: &SweepConfig, reference: &SweepOutput) -> CheckResult {
    timed("A10", "determinism and budget", || {
        let want = csv_string(&reference.records).expect("csv");
        let mut slowest: f64 = 0.0;
        let mut same = true;
        let mut parts = Vec::new();
        for w in DETERMINISM_WORKERS {
            let cfg = SweepConfig {
                workers: Some(w),
                ..config.clone()
            };
            let start = Instant::now();
            let out = compute_sweep(&cfg).expect("sweep");
            let secs = start.elapsed().as_secs_f64();
            slowest = slowest.max(secs);
            let got = csv_string(&out.records).expect("csv");
            same &= got == want && out.failures.is_empty();
            parts.push(format!("workers={w}: {secs:.1} s, {} records", out.records.len()));
        }
        let cells = config.qubit_range.len() * config.methods.len();
        same &= reference.records.len() == cells;
        (
            same && slowest < SWEEP_BUDGET_S,
            if same { SWEEP_BUDGET_S - slowest } else { -1.0 },
            format!(
                "{cells} cells, CSV {} across runs; {}",
                if same { "identical" } else { "DIFFERS" },
                parts.join(", ")
            ),
        )
    })
}

/// `product_var_deff` recomputes exactly from its stored factors, also after
/// a CSV round trip.
pub fn record_arithmetic(sweep: &SweepOutput) -> CheckResult {
    timed("R2", "record arithmetic", || {
        let csv = csv_string(&sweep.records).expect("csv");
        let back = read_csv(csv.as_bytes()).expect("read back");
        let bad = sweep
            .records
            .iter()
            .chain(&back)
            .filter(|r| !r.product_is_consistent())
            .count();
        (
            bad == 0,
            deficit(bad),
            format!("{} records checked before and after CSV, {bad} inconsistent", sweep.records.len()),
        )
    })
}

/// A cell that fails leaves its neighbours intact.
pub fn cell_isolation(config: &SweepConfig) -> CheckResult {
    timed("R3", "cell isolation", || {
        // keep far beyond the available directions makes every random_trunc cell fail
        let broken = SweepConfig {
            qubit_range: vec![2, 3],
            methods: vec![Method::Full, Method::RandomTrunc],
            random_keep: 1000,
            opt_steps: 5,
            ..config.clone()
        };
        let clean = SweepConfig {
            methods: vec![Method::Full],
            ..broken.clone()
        };
        let a = compute_sweep(&broken).expect("sweep");
        let b = compute_sweep(&clean).expect("sweep");
        let ok = a.failures.len() == 2
            && a.failures.iter().all(|f| f.method == Method::RandomTrunc)
            && csv_string(&a.records).expect("csv") == csv_string(&b.records).expect("csv");
        (
            ok,
            if ok { 0.0 } else { -1.0 },
            format!("{} failures, {} surviving records", a.failures.len(), a.records.len()),
        )
    })
}

/// The checks must catch a metric with the phase projection removed.
pub fn mutation_detected() -> CheckResult {
    fn unprojected(frame: &TangentFrame) -> DMatrix<f64> {
        let p = &frame.partials;
        let g = p.adjoint() * p;
        DMatrix::from_fn(g.nrows(), g.ncols(), |i, j| 0.5 * (g[(i, j)].re + g[(j, i)].re))
    }
    timed("R4", "unprojected-metric mutation caught", || {
        let a6 = metric_consistency(unprojected);
        let r1 = pointwise_rank_bound(unprojected);
        let caught = !a6.passed || !r1.passed;
        (
            caught,
            if caught { 0.0 } else { -1.0 },
            format!("consistency {}, rank bound {}", verdict(a6.passed), verdict(r1.passed)),
        )
    })
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "passed"
    } else {
        "failed"
    }
}

/// Rank integers of every cell do not move across the threshold set.
pub fn threshold_stability(sweep: &SweepOutput) -> CheckResult {
    timed("R5", "rank threshold stability", || {
        let moved: Vec<String> = sweep
            .records
            .iter()
            .filter_map(|r| {
                let ranks: Vec<usize> = STABILITY_TOLS
                    .iter()
                    .map(|&t| rank_from_spectrum(&r.spectrum, t).expect("valid tol"))
                    .collect();
                ranks.iter().any(|&k| k != r.rank).then(|| format!("{}@{}: {ranks:?}", r.method, r.n))
            })
            .collect();
        (
            moved.is_empty(),
            deficit(moved.len()),
            format!("{} cells, rank moved in {}: {moved:?}", sweep.records.len(), moved.len()),
        )
    })
}

/// The projected metric used everywhere else.
pub const PROJECTED: MetricFn = projected_metric;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

/// Every acceptance and invariant check against `config` (normally the
/// default sweep configuration).
pub fn verify_suite(config: &SweepConfig) -> VerifyReport {
    let sweep = compute_sweep(config);
    let mut checks = vec![span_rank(PROJECTED)];
    match &sweep {
        Ok(s) => {
            checks.push(random_collapse(s));
            checks.push(span_preservation(s));
            checks.push(scaling_signature(s));
        }
        Err(e) => checks.push(CheckResult {
            id: "A2-A4".into(),
            name: "default sweep".into(),
            passed: false,
            margin: f64::NEG_INFINITY,
            detail: e.to_string(),
            seconds: 0.0,
        }),
    }
    checks.push(gradient_exactness());
    checks.push(metric_consistency(PROJECTED));
    checks.push(closure_oracle());
    checks.push(perturbation_bound());
    checks.push(vqe_sanity(config));
    if let Ok(s) = &sweep {
        checks.push(determinism(config, s));
        checks.push(record_arithmetic(s));
        checks.push(threshold_stability(s));
    }
    checks.push(pointwise_rank_bound(PROJECTED));
    checks.push(cell_isolation(config));
    checks.push(mutation_detected());
    VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}
