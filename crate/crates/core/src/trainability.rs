//! Losses, gradients, gradient-variance statistics and scaling fits.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::algebra::{inner, jacobi_svd, symmetric_eig, symmetric_eigenvalues, Pauli, PauliKey, PauliSum};
use crate::circuit::{StateModel, TangentFrame};
use crate::geometry::{average_metrics, map_samples, MetricReport, SamplingSpec};
use crate::stats::{linear_fit, mean, sample_variance};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossSpec {
    /// `<ψ|O|ψ>`; `O` defaults to `Z` on qubit 0.
    ObservableExpectation {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observable: Option<PauliSum>,
    },
    /// Open-chain transverse-field Ising energy `-J Σ Z_i Z_{i+1} - h Σ X_i`.
    VqeTfim {
        #[serde(default = "one")]
        j: f64,
        #[serde(default = "one")]
        h: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec::ObservableExpectation { observable: None }
    }
}

impl LossSpec {
    pub fn tfim() -> Self {
        LossSpec::VqeTfim { j: 1.0, h: 1.0 }
    }

    /// The Hermitian operator whose expectation is the loss.
    pub fn observable(&self, n_qubits: usize) -> Result<PauliSum> {
        match self {
            LossSpec::ObservableExpectation { observable: Some(o) } => {
                if o.n_qubits() != n_qubits {
                    return Err(Error::QubitMismatch(n_qubits, o.n_qubits()));
                }
                Ok(o.clone())
            }
            LossSpec::ObservableExpectation { observable: None } => Ok(PauliSum::single(n_qubits, 0, Pauli::Z, 1.0)),
            LossSpec::VqeTfim { j, h } => Ok(tfim_hamiltonian(n_qubits, *j, *h)),
        }
    }
}

pub fn tfim_hamiltonian(n: usize, j: f64, h: f64) -> PauliSum {
    let mut out = PauliSum::zero(n);
    for q in 0..n.saturating_sub(1) {
        let mut letters = vec![Pauli::I; n];
        letters[q] = Pauli::Z;
        letters[q + 1] = Pauli::Z;
        out.add_term(PauliKey::from_letters(&letters), -j);
    }
    for q in 0..n {
        out.add_term(PauliKey::single(n, q, Pauli::X), -h);
    }
    out
}

/// Loss and gradient `2 Re <∂_k ψ|O|ψ>` from a tangent frame.
pub fn loss_and_gradient_from_frame(frame: &TangentFrame, observable: &PauliSum) -> (f64, Vec<f64>) {
    let psi = frame.state.amplitudes();
    let o_psi = observable.apply(psi);
    let loss = inner(psi, &o_psi).re;
    let grad = (0..frame.n_params())
        .map(|k| 2.0 * inner(frame.partials.column(k).as_slice(), &o_psi).re)
        .collect();
    (loss, grad)
}

pub fn loss_value(model: &dyn StateModel, theta: &[f64], loss: &LossSpec) -> Result<f64> {
    let o = loss.observable(model.n_qubits())?;
    let psi = model.evolve(theta)?;
    Ok(inner(psi.amplitudes(), &o.apply(psi.amplitudes())).re)
}

pub fn loss_and_gradient(model: &dyn StateModel, theta: &[f64], loss: &LossSpec) -> Result<(f64, Vec<f64>)> {
    let o = loss.observable(model.n_qubits())?;
    let frame = model.tangent_frame(theta)?;
    Ok(loss_and_gradient_from_frame(&frame, &o))
}

/// SVD of the real Jacobian `J` (real parts of `∂_k ψ` stacked over imaginary
/// parts) with the loss cogradient `df`, so that `∇L = J^T df`.
#[derive(Clone, Debug)]
pub struct JacobianDecomposition {
    /// Descending, length `rank`.
    pub singular_values: Vec<f64>,
    /// `2·2^n × rank`, state-space side.
    pub left: DMatrix<f64>,
    /// `L × rank`, parameter side.
    pub right: DMatrix<f64>,
    pub rank: usize,
    pub df: Vec<f64>,
    /// `<df, left_i>`.
    pub projections: Vec<f64>,
}

impl JacobianDecomposition {
    /// `Σ_i σ_i <df, u_i> v_i`.
    pub fn gradient(&self) -> Vec<f64> {
        let mut g = DVector::<f64>::zeros(self.right.nrows());
        for i in 0..self.rank {
            g += self.right.column(i) * (self.singular_values[i] * self.projections[i]);
        }
        g.as_slice().to_vec()
    }

    /// `Σ_i σ_i^2 <df, u_i>^2`, equal to `||∇L||^2`.
    pub fn parseval_norm_sq(&self) -> f64 {
        self.singular_values
            .iter()
            .zip(&self.projections)
            .map(|(s, p)| s * s * p * p)
            .sum()
    }
}

pub fn svd_chain_rule(model: &dyn StateModel, theta: &[f64], loss: &LossSpec) -> Result<JacobianDecomposition> {
    let o = loss.observable(model.n_qubits())?;
    let frame = model.tangent_frame(theta)?;
    let j = frame.raw_real_jacobian();
    let o_psi = o.apply(frame.state.amplitudes());
    let d = o_psi.len();
    let df: Vec<f64> = (0..2 * d)
        .map(|r| if r < d { 2.0 * o_psi[r].re } else { 2.0 * o_psi[r - d].im })
        .collect();
    let (sigma, u, v) = jacobi_svd(&j);
    let smax = sigma.first().copied().unwrap_or(0.0);
    let rank = if smax > 1e-14 {
        sigma.iter().take_while(|&&s| s > 1e-12 * smax).count()
    } else {
        0
    };
    let left = u.columns(0, rank).into_owned();
    let right = v.columns(0, rank).into_owned();
    let dfv = DVector::from_column_slice(&df);
    let projections = (0..rank).map(|i| left.column(i).dot(&dfv)).collect();
    Ok(JacobianDecomposition {
        singular_values: sigma[..rank].to_vec(),
        left,
        right,
        rank,
        df,
        projections,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub per_component_variance: Vec<f64>,
    pub mean_component_variance: f64,
    pub first_component_variance: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// `d_eff` of the metric averaged over the same samples.
    pub d_eff: f64,
    pub kappa: f64,
    pub product_var_deff: f64,
    /// `mean_component_variance · κ · d_eff`; order one when variance scales
    /// like `1 / (κ d_eff)`.
    pub kappa_deff_ratio: f64,
    /// Eigenvalues of `ĝ` on its ranked subspace: the frozen frame.
    pub frame_eigenvalues: Vec<f64>,
    /// `Var(<∇L, w_i> / sqrt(λ_i))` for the frozen eigenvectors `w_i`.
    pub frame_projection_variance: Vec<f64>,
    /// `Σ_i λ_i · frame_projection_variance_i`.
    pub svd_decomposed_variance: f64,
    /// Mean loss over the samples.
    pub mean_loss: f64,
}

/// Metric and gradient statistics from one shared set of samples.
pub fn sample_geometry(
    model: &dyn StateModel,
    loss: &LossSpec,
    sampling: &SamplingSpec,
    rel_tol: f64,
) -> Result<(MetricReport, VarianceReport)> {
    if sampling.n_samples < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: sampling.n_samples,
        });
    }
    let o = loss.observable(model.n_qubits())?;
    let per_sample = map_samples(model, sampling, |theta| {
        let frame = model.tangent_frame(theta)?;
        let (l, g) = loss_and_gradient_from_frame(&frame, &o);
        Ok((frame.metric(), l, g))
    })?;
    let metrics: Vec<DMatrix<f64>> = per_sample.iter().map(|s| s.0.clone()).collect();
    let ghat = average_metrics(&metrics).expect("samples");
    let report = MetricReport::from_metric(ghat, rel_tol, *sampling)?;

    let l = model.n_params();
    let per_component_variance: Vec<f64> = (0..l)
        .map(|k| sample_variance(&per_sample.iter().map(|s| s.2[k]).collect::<Vec<_>>()))
        .collect();
    let mean_component_variance = mean(&per_component_variance);
    let first_component_variance = per_component_variance.first().copied().unwrap_or(0.0);

    let (values, vectors) = symmetric_eig(&report.metric);
    let mut frame_eigenvalues = Vec::with_capacity(report.rank);
    let mut frame_projection_variance = Vec::with_capacity(report.rank);
    for i in 0..report.rank {
        let w = vectors.column(i);
        let scale = values[i].sqrt();
        let proj: Vec<f64> = per_sample
            .iter()
            .map(|s| s.2.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>() / scale)
            .collect();
        frame_eigenvalues.push(values[i]);
        frame_projection_variance.push(sample_variance(&proj));
    }
    let svd_decomposed_variance = frame_eigenvalues
        .iter()
        .zip(&frame_projection_variance)
        .map(|(l, v)| l * v)
        .sum();
    let losses: Vec<f64> = per_sample.iter().map(|s| s.1).collect();
    let variance = VarianceReport {
        mean_component_variance,
        first_component_variance,
        n_samples: sampling.n_samples,
        seed: sampling.seed,
        d_eff: report.d_eff,
        kappa: report.kappa,
        product_var_deff: mean_component_variance * report.d_eff,
        kappa_deff_ratio: mean_component_variance * report.kappa * report.d_eff,
        per_component_variance,
        frame_eigenvalues,
        frame_projection_variance,
        svd_decomposed_variance,
        mean_loss: mean(&losses),
    };
    Ok((report, variance))
}

pub fn gradient_variance(model: &dyn StateModel, loss: &LossSpec, sampling: &SamplingSpec) -> Result<VarianceReport> {
    Ok(sample_geometry(model, loss, sampling, crate::geometry::DEFAULT_REL_TOL)?.1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `log Var = log C - c · d_eff`.
    ExpInDeff,
    /// `log Var = a - k · log n`.
    PolyInN,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub n: usize,
    pub d_eff: f64,
    pub variance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: FitModel,
    /// `c` for `exp_in_deff`, `k` for `poly_in_n`: the negated log-slope.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
    /// Records with non-positive variance left out of the fit.
    pub dropped: usize,
}

pub fn fit_scaling(records: &[FitRecord], model: FitModel) -> Result<ScalingFit> {
    let usable: Vec<&FitRecord> = records.iter().filter(|r| r.variance > 0.0 && r.variance.is_finite()).collect();
    let dropped = records.len() - usable.len();
    if dropped > 0 {
        log::warn!("fit_scaling: dropped {dropped} records with non-positive variance");
    }
    if usable.len() < 3 {
        return Err(Error::TooFewRecords(usable.len()));
    }
    let x: Vec<f64> = usable
        .iter()
        .map(|r| match model {
            FitModel::ExpInDeff => r.d_eff,
            FitModel::PolyInN => (r.n as f64).ln(),
        })
        .collect();
    let y: Vec<f64> = usable.iter().map(|r| r.variance.ln()).collect();
    let (a, b, r2) = linear_fit(&x, &y);
    Ok(ScalingFit {
        model,
        rate: -b,
        intercept: a,
        r_squared: r2,
        n_points: usable.len(),
        dropped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianNormEstimate {
    pub n_qubits: usize,
    pub n_params: usize,
    pub mean_sq_opnorm: f64,
    pub per_sample: Vec<f64>,
}

/// `E_θ ||J||_op^2` for the raw real Jacobian.
pub fn jacobian_norm_estimate(model: &dyn StateModel, sampling: &SamplingSpec) -> Result<JacobianNormEstimate> {
    let per_sample = map_samples(model, sampling, |theta| {
        let frame = model.tangent_frame(theta)?;
        let gram = frame.partials.adjoint() * &frame.partials;
        let l = gram.nrows();
        let re = DMatrix::from_fn(l, l, |i, j| 0.5 * (gram[(i, j)].re + gram[(j, i)].re));
        Ok(symmetric_eigenvalues(&re)[0].max(0.0))
    })?;
    Ok(JacobianNormEstimate {
        n_qubits: model.n_qubits(),
        n_params: model.n_params(),
        mean_sq_opnorm: mean(&per_sample),
        per_sample,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationTrace {
    /// Loss before each step and after the last, length `steps + 1`.
    pub losses: Vec<f64>,
    pub theta: Vec<f64>,
}

impl OptimizationTrace {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least the initial loss")
    }
}

/// Plain gradient descent `θ <- θ - rate ∇L`.
pub fn gradient_descent(
    model: &dyn StateModel,
    loss: &LossSpec,
    theta0: &[f64],
    steps: usize,
    rate: f64,
) -> Result<OptimizationTrace> {
    let o = loss.observable(model.n_qubits())?;
    let mut theta = theta0.to_vec();
    let mut losses = Vec::with_capacity(steps + 1);
    for _ in 0..steps {
        let (l, g) = loss_and_gradient_from_frame(&model.tangent_frame(&theta)?, &o);
        losses.push(l);
        theta.iter_mut().zip(&g).for_each(|(t, gk)| *t -= rate * gk);
    }
    let psi = model.evolve(&theta)?;
    losses.push(inner(psi.amplitudes(), &o.apply(psi.amplitudes())).re);
    Ok(OptimizationTrace { losses, theta })
}

/// Smallest eigenvalue of the loss observable.
pub fn ground_energy(loss: &LossSpec, n_qubits: usize) -> Result<f64> {
    let o = loss.observable(n_qubits)?;
    let (values, _) = crate::algebra::hermitian_eig(&o.dense())?;
    Ok(*values.last().expect("nonempty spectrum"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitSpec;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn single_qubit_cosine() {
        let c = CircuitSpec::from_labels(&["X"]).unwrap();
        let (l, g) = loss_and_gradient(&c, &[FRAC_PI_4], &LossSpec::default()).unwrap();
        assert_abs_diff_eq!(l, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g[0], -2.0, epsilon = 1e-14);
    }

    #[test]
    fn stationary_at_eigenstate() {
        let c = CircuitSpec::from_labels(&["Z"]).unwrap();
        let (_, g) = loss_and_gradient(&c, &[0.0], &LossSpec::default()).unwrap();
        assert_eq!(g, vec![0.0]);
    }

    #[test]
    fn single_slot_svd() {
        let c = CircuitSpec::from_labels(&["X"]).unwrap();
        let d = svd_chain_rule(&c, &[0.3], &LossSpec::default()).unwrap();
        assert_eq!(d.rank, 1);
        assert_abs_diff_eq!(d.singular_values[0], 1.0, epsilon = 1e-12);
        let dup = CircuitSpec::from_labels(&["X", "X"]).unwrap();
        assert_eq!(svd_chain_rule(&dup, &[0.3, 0.1], &LossSpec::default()).unwrap().rank, 1);
    }

    #[test]
    fn analytic_variance_single_slot() {
        // Var(-2 sin 2θ) = 2 for uniform θ
        let c = CircuitSpec::from_labels(&["X"]).unwrap();
        let v = gradient_variance(&c, &LossSpec::default(), &SamplingSpec::uniform(4000, 11)).unwrap();
        assert!((v.mean_component_variance - 2.0).abs() < 0.1);
        assert!(gradient_variance(&c, &LossSpec::default(), &SamplingSpec::uniform(1, 11)).is_err());
    }

    #[test]
    fn constant_loss_has_no_variance() {
        let c = CircuitSpec::from_labels(&["XY", "ZI"]).unwrap();
        let loss = LossSpec::ObservableExpectation {
            observable: Some(PauliSum::identity(2)),
        };
        let v = gradient_variance(&c, &loss, &SamplingSpec::uniform(10, 1)).unwrap();
        assert!(v.per_component_variance.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn exact_fits() {
        let recs: Vec<FitRecord> = (2..7)
            .map(|n| FitRecord {
                n,
                d_eff: n as f64 * 1.5,
                variance: (-(n as f64) * 1.5).exp(),
            })
            .collect();
        let f = fit_scaling(&recs, FitModel::ExpInDeff).unwrap();
        assert_abs_diff_eq!(f.rate, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        let recs: Vec<FitRecord> = (2..7)
            .map(|n| FitRecord {
                n,
                d_eff: 1.0,
                variance: (n as f64).powi(-2),
            })
            .collect();
        assert_abs_diff_eq!(fit_scaling(&recs, FitModel::PolyInN).unwrap().rate, 2.0, epsilon = 1e-9);
        let mut bad = recs.clone();
        bad[0].variance = 0.0;
        bad[1].variance = -1.0;
        bad[2].variance = 0.0;
        assert_eq!(fit_scaling(&bad, FitModel::PolyInN).unwrap_err(), Error::TooFewRecords(2));
    }

    #[test]
    fn jacobian_norms() {
        let c = CircuitSpec::from_labels(&["X"]).unwrap();
        let e = jacobian_norm_estimate(&c, &SamplingSpec::uniform(5, 2)).unwrap();
        assert!(e.per_sample.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let c = CircuitSpec::from_labels(&["X", "X", "X"]).unwrap();
        let e = jacobian_norm_estimate(&c, &SamplingSpec::uniform(5, 2)).unwrap();
        assert!((e.mean_sq_opnorm - 3.0).abs() < 1e-12);
    }

    #[test]
    fn tfim_ground_energy_n2() {
        // -ZZ - XI - IX has ground energy -sqrt(5)
        assert_abs_diff_eq!(ground_energy(&LossSpec::tfim(), 2).unwrap(), -5f64.sqrt(), epsilon = 1e-12);
    }
}
