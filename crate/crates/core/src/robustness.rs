//! Perturbation bound for exponentials of skew-Hermitian generators and a
//! coherent generator-noise model.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::algebra::{expm_skew, hs_norm, op_norm, DenseOperator, C64};
use crate::circuit::{partials, CircuitSpec, Generator};
use crate::geometry::SamplingSpec;
use crate::stats::stream_rng;
use crate::trainability::{loss_and_gradient_from_frame, loss_value, sample_geometry, LossSpec};
use crate::{Error, Result};

/// One evaluation of `||e^{(X+δX)t} - e^{Xt}|| <= t e^{t||X||} ||δX||`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationTrial {
    pub x_norm: f64,
    pub dx_norm: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl PerturbationTrial {
    /// `t ||δX||`, the bound that holds for skew-Hermitian generators without
    /// the exponential factor.
    pub fn unitary_rhs(&self) -> f64 {
        self.t * self.dx_norm
    }
}

pub fn perturbation_bound_check(x: &DenseOperator, delta_x: &DenseOperator, t: f64) -> Result<PerturbationTrial> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    x.check_skew_hermitian()?;
    delta_x.check_skew_hermitian()?;
    let perturbed = x.add(delta_x)?;
    let lhs = op_norm(&expm_skew(&perturbed, t)?.sub(&expm_skew(x, t)?)?);
    let x_norm = op_norm(x);
    let dx_norm = op_norm(delta_x);
    let rhs = t * (t * x_norm).exp() * dx_norm;
    Ok(PerturbationTrial {
        x_norm,
        dx_norm,
        t,
        lhs,
        rhs,
        margin: rhs - lhs,
    })
}

/// Hermitian matrix from the Gaussian unitary ensemble, scaled to unit HS norm.
pub fn gue_unit(dim: usize, rng: &mut impl Rng) -> DenseOperator {
    let mut a = DenseOperator::zeros(dim);
    for i in 0..dim {
        for j in 0..dim {
            a[(i, j)] = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }
    let h = a.add(&a.dagger()).expect("same dim").scaled(C64::new(0.5, 0.0));
    let norm = hs_norm(&h);
    h.scaled(C64::new(1.0 / norm, 0.0))
}

/// Skew-Hermitian unit-HS-norm element `i · GUE`.
pub fn random_skew_unit(dim: usize, rng: &mut impl Rng) -> DenseOperator {
    gue_unit(dim, rng).scaled(C64::new(0.0, 1.0))
}

/// Random trials on `n_qubits` drawn from `qubits` in rotation: `X` of HS norm
/// uniform in `(0, 3)`, `δX` of HS norm log-uniform in `(1e-4, 1)`, `t`
/// uniform in `(0, 2]`.
pub fn random_trials(qubits: &[usize], count: usize, seed: u64) -> Result<Vec<PerturbationTrial>> {
    if qubits.is_empty() {
        return Err(Error::InvalidAnsatz { n_qubits: 0, depth: 0 });
    }
    use rayon::prelude::*;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let n = qubits[i % qubits.len()];
            let dim = 1usize << n;
            let mut rng = stream_rng(seed, i as u64);
            let xs = rng.random_range(0.0..3.0);
            let dxs = 10f64.powf(rng.random_range(-4.0..0.0));
            let t = 2.0 - rng.random_range(0.0..2.0);
            let x = random_skew_unit(dim, &mut rng).scaled(C64::new(xs, 0.0));
            let dx = random_skew_unit(dim, &mut rng).scaled(C64::new(dxs, 0.0));
            perturbation_bound_check(&x, &dx, t)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub d_eff: f64,
    pub rank: usize,
    pub var_grad_mean: f64,
    pub loss_final: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradationRecord {
    pub epsilon: f64,
    pub baseline: GeometrySummary,
    pub perturbed: GeometrySummary,
    pub delta_d_eff: f64,
    pub delta_rank: i64,
    pub delta_var_grad_mean: f64,
    pub delta_loss_final: f64,
    /// Largest `|L'(θ_t) - L(θ_t)|` along the unperturbed optimization path.
    pub max_loss_deviation: f64,
    /// `2 ||O|| Σ_k |θ_k| ε ||R_k||`, maximized over the path.
    pub loss_deviation_bound: f64,
    /// Same with the exponential factor `e^{|θ_k| ||H_k||}` per slot.
    pub loss_deviation_bound_exponential: f64,
}

impl DegradationRecord {
    pub fn within_bound(&self) -> bool {
        self.max_loss_deviation <= self.loss_deviation_bound * (1.0 + 1e-9) + 1e-12
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSettings {
    pub opt_steps: usize,
    pub opt_rate: f64,
    pub rel_tol: f64,
    /// Seed for the perturbation directions `R_k` and the start point.
    pub seed: u64,
}

impl Default for PerturbationSettings {
    fn default() -> Self {
        Self {
            opt_steps: 20,
            opt_rate: 0.1,
            rel_tol: crate::geometry::DEFAULT_REL_TOL,
            seed: 11,
        }
    }
}

/// Replaces every generator `H_k` by `H_k + ε R_k` and measures what changes.
pub fn perturbed_sweep(
    circuit: &CircuitSpec,
    epsilon: f64,
    sampling: &SamplingSpec,
    loss: &LossSpec,
    settings: &PerturbationSettings,
) -> Result<DegradationRecord> {
    if !(epsilon >= 0.0) {
        return Err(Error::NegativeNoise(epsilon));
    }
    let dim = circuit.dim();
    let mut r_norms = Vec::with_capacity(circuit.n_params());
    let mut h_norms = Vec::with_capacity(circuit.n_params());
    let perturbed = circuit.map_generators(|k, g| {
        let mut rng = stream_rng(settings.seed, k as u64);
        let r = gue_unit(dim, &mut rng);
        r_norms.push(op_norm(&r));
        let h = g.dense();
        h_norms.push(op_norm(&h));
        if epsilon == 0.0 {
            return Ok(g.clone());
        }
        Generator::from_dense(h.add(&r.scaled(C64::new(epsilon, 0.0)))?)
    })?;

    let theta0 = SamplingSpec::uniform(1, settings.seed).point(0, circuit.n_params());
    let measure = |c: &CircuitSpec| -> Result<(GeometrySummary, Vec<Vec<f64>>)> {
        let (m, v) = sample_geometry(c, loss, sampling, settings.rel_tol)?;
        let o = loss.observable(c.n_qubits())?;
        let mut theta = theta0.clone();
        let mut path = vec![theta.clone()];
        for _ in 0..settings.opt_steps {
            let frame = partials(c, &theta)?;
            let (_, g) = loss_and_gradient_from_frame(&frame, &o);
            theta.iter_mut().zip(&g).for_each(|(t, gk)| *t -= settings.opt_rate * gk);
            path.push(theta.clone());
        }
        Ok((
            GeometrySummary {
                d_eff: m.d_eff,
                rank: m.rank,
                var_grad_mean: v.mean_component_variance,
                loss_final: loss_value(c, &theta, loss)?,
            },
            path,
        ))
    };
    let (baseline, path) = measure(circuit)?;
    let (after, _) = measure(&perturbed)?;

    let o_norm = {
        let o = loss.observable(circuit.n_qubits())?;
        op_norm(&o.dense())
    };
    let mut max_dev: f64 = 0.0;
    let mut bound: f64 = 0.0;
    let mut bound_exp: f64 = 0.0;
    for theta in &path {
        let dev = (loss_value(&perturbed, theta, loss)? - loss_value(circuit, theta, loss)?).abs();
        max_dev = max_dev.max(dev);
        let mut b = 0.0;
        let mut be = 0.0;
        for (k, t) in theta.iter().enumerate() {
            let slot = t.abs() * epsilon * r_norms[k];
            b += slot;
            be += slot * (t.abs() * h_norms[k]).exp();
        }
        bound = bound.max(2.0 * o_norm * b);
        bound_exp = bound_exp.max(2.0 * o_norm * be);
    }

    Ok(DegradationRecord {
        epsilon,
        delta_d_eff: after.d_eff - baseline.d_eff,
        delta_rank: after.rank as i64 - baseline.rank as i64,
        delta_var_grad_mean: after.var_grad_mean - baseline.var_grad_mean,
        delta_loss_final: after.loss_final - baseline.loss_final,
        baseline,
        perturbed: after,
        max_loss_deviation: max_dev,
        loss_deviation_bound: bound,
        loss_deviation_bound_exponential: bound_exp,
    })
}
