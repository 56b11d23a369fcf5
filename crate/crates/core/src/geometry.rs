//! Fubini–Study pullback metric and its spectral summaries.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution as _, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::algebra::symmetric_eigenvalues;
use crate::circuit::{StateModel, TangentFrame};
use crate::stats::{pairwise_sum_matrices, stream_rng};
use crate::{Error, Result};

/// Default relative eigenvalue threshold for ranks.
pub const DEFAULT_REL_TOL: f64 = 1e-8;
/// Largest eigenvalue at or below which a metric counts as zero.
pub const ABS_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    /// Each angle uniform on `[0, 2π)`.
    #[default]
    UniformPeriodic,
    /// Each angle normal with mean 0 and standard deviation `sigma`.
    Gaussian { sigma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    #[serde(default)]
    pub distribution: Distribution,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self {
            distribution: Distribution::UniformPeriodic,
            n_samples: 50,
            seed: 7,
        }
    }
}

impl SamplingSpec {
    pub fn uniform(n_samples: usize, seed: u64) -> Self {
        Self {
            distribution: Distribution::UniformPeriodic,
            n_samples,
            seed,
        }
    }

    pub fn gaussian(sigma: f64, n_samples: usize, seed: u64) -> Self {
        Self {
            distribution: Distribution::Gaussian { sigma },
            n_samples,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if let Distribution::Gaussian { sigma } = self.distribution {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::NegativeNoise(sigma));
            }
        }
        Ok(())
    }

    /// Sample `index`, drawn from its own RNG stream so samples can be produced
    /// in any order.
    pub fn point(&self, index: usize, len: usize) -> Vec<f64> {
        let mut rng = stream_rng(self.seed, index as u64);
        match self.distribution {
            Distribution::UniformPeriodic => (0..len).map(|_| rng.random_range(0.0..TAU)).collect(),
            Distribution::Gaussian { sigma } => {
                let normal = Normal::new(0.0, sigma).expect("validated sigma");
                (0..len).map(|_| normal.sample(&mut rng)).collect()
            }
        }
    }

    pub fn points(&self, len: usize) -> Vec<Vec<f64>> {
        (0..self.n_samples).map(|i| self.point(i, len)).collect()
    }
}

/// Metric from a tangent frame.
pub type MetricFn = fn(&TangentFrame) -> DMatrix<f64>;

/// `g_ij = Re <P∂_i ψ | P∂_j ψ>` with `P` the projector off the state.
pub fn projected_metric(frame: &TangentFrame) -> DMatrix<f64> {
    frame.metric()
}

pub fn fs_metric_at(model: &dyn StateModel, theta: &[f64]) -> Result<DMatrix<f64>> {
    Ok(model.tangent_frame(theta)?.metric())
}

/// Participation ratio `(Tr g)^2 / Tr(g^2)`, zero for the zero metric.
pub fn effective_dimension(metric: &DMatrix<f64>) -> f64 {
    let tr = metric.trace();
    let tr2: f64 = metric.iter().map(|x| x * x).sum();
    if tr2 <= 0.0 {
        0.0
    } else {
        tr * tr / tr2
    }
}

fn check_rel_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 0.0 && rel_tol < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidRelTol(rel_tol))
    }
}

/// Eigenvalues above `rel_tol · λ_max`, given a descending spectrum.
pub fn rank_from_spectrum(eigenvalues: &[f64], rel_tol: f64) -> Result<usize> {
    check_rel_tol(rel_tol)?;
    let lmax = eigenvalues.first().copied().unwrap_or(0.0);
    if lmax <= ABS_FLOOR {
        return Ok(0);
    }
    Ok(eigenvalues.iter().filter(|&&l| l > rel_tol * lmax).count())
}

pub fn metric_rank(metric: &DMatrix<f64>, rel_tol: f64) -> Result<usize> {
    rank_from_spectrum(&symmetric_eigenvalues(metric), rel_tol)
}

/// `λ_max / λ_rank` on the ranked subspace of a descending spectrum.
pub fn kappa_from_spectrum(eigenvalues: &[f64], rank: usize) -> Result<f64> {
    if rank == 0 || rank > eigenvalues.len() {
        return Err(Error::RankZero);
    }
    Ok(eigenvalues[0] / eigenvalues[rank - 1])
}

pub fn condition_number(metric: &DMatrix<f64>, rank: usize) -> Result<f64> {
    kappa_from_spectrum(&symmetric_eigenvalues(metric), rank)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub metric: DMatrix<f64>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    pub rank: usize,
    pub d_eff: f64,
    /// `+inf` only for the zero metric.
    pub kappa: f64,
    pub rel_tol: f64,
    pub n_samples: usize,
    pub sampling: SamplingSpec,
}

impl MetricReport {
    pub fn from_metric(metric: DMatrix<f64>, rel_tol: f64, sampling: SamplingSpec) -> Result<Self> {
        let eigenvalues = symmetric_eigenvalues(&metric);
        let rank = rank_from_spectrum(&eigenvalues, rel_tol)?;
        let kappa = if rank == 0 {
            f64::INFINITY
        } else {
            kappa_from_spectrum(&eigenvalues, rank)?
        };
        // a metric below the absolute floor is numerically zero
        let d_eff = if rank == 0 { 0.0 } else { effective_dimension(&metric) };
        Ok(Self {
            d_eff,
            metric,
            eigenvalues,
            rank,
            kappa,
            rel_tol,
            n_samples: sampling.n_samples,
            sampling,
        })
    }

    /// Rank under another threshold.
    pub fn rank_at(&self, rel_tol: f64) -> Result<usize> {
        rank_from_spectrum(&self.eigenvalues, rel_tol)
    }

    pub fn max_asymmetry(&self) -> f64 {
        let m = &self.metric;
        (m - m.transpose()).iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `index,eigenvalue` rows.
    pub fn spectrum_csv(&self) -> String {
        let mut s = String::from("index,eigenvalue\n");
        for (i, l) in self.eigenvalues.iter().enumerate() {
            s.push_str(&format!("{i},{l:e}\n"));
        }
        s
    }
}

#[derive(Serialize, Deserialize)]
struct MetricReportRepr {
    metric: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
    rank: usize,
    d_eff: f64,
    kappa: Kappa,
    rel_tol: f64,
    n_samples: usize,
    sampling: SamplingSpec,
}

/// JSON has no infinity; the sentinel is written as the string `"inf"`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Kappa {
    Finite(f64),
    Text(String),
}

impl Serialize for MetricReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let l = self.metric.nrows();
        MetricReportRepr {
            metric: (0..l).map(|i| (0..l).map(|j| self.metric[(i, j)]).collect()).collect(),
            eigenvalues: self.eigenvalues.clone(),
            rank: self.rank,
            d_eff: self.d_eff,
            kappa: if self.kappa.is_finite() {
                Kappa::Finite(self.kappa)
            } else {
                Kappa::Text("inf".into())
            },
            rel_tol: self.rel_tol,
            n_samples: self.n_samples,
            sampling: self.sampling,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MetricReport {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = MetricReportRepr::deserialize(deserializer)?;
        let l = r.metric.len();
        if r.metric.iter().any(|row| row.len() != l) {
            return Err(D::Error::custom("metric must be square"));
        }
        let kappa = match r.kappa {
            Kappa::Finite(k) => k,
            Kappa::Text(t) if t == "inf" => f64::INFINITY,
            Kappa::Text(t) => return Err(D::Error::custom(format!("bad kappa `{t}`"))),
        };
        Ok(Self {
            metric: DMatrix::from_fn(l, l, |i, j| r.metric[i][j]),
            eigenvalues: r.eigenvalues,
            rank: r.rank,
            d_eff: r.d_eff,
            kappa,
            rel_tol: r.rel_tol,
            n_samples: r.n_samples,
            sampling: r.sampling,
        })
    }
}

/// Evaluates `f` at every sample point in parallel, in sample order.
pub fn map_samples<T: Send>(
    model: &dyn StateModel,
    sampling: &SamplingSpec,
    f: impl Fn(&[f64]) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    sampling.validate()?;
    let l = model.n_params();
    (0..sampling.n_samples)
        .into_par_iter()
        .map(|i| f(&sampling.point(i, l)))
        .collect()
}

/// Mean of metrics, reduced pairwise in sample order.
pub fn average_metrics(metrics: &[DMatrix<f64>]) -> Option<DMatrix<f64>> {
    let sum = pairwise_sum_matrices(metrics)?;
    Some(sum / metrics.len() as f64)
}

/// `ĝ = (1/S) Σ_s g(θ_s)`. Bit-identical for any worker count.
pub fn empirical_metric(model: &dyn StateModel, sampling: &SamplingSpec) -> Result<MetricReport> {
    empirical_metric_using(model, sampling, DEFAULT_REL_TOL, projected_metric)
}

pub fn empirical_metric_using(
    model: &dyn StateModel,
    sampling: &SamplingSpec,
    rel_tol: f64,
    metric_fn: MetricFn,
) -> Result<MetricReport> {
    check_rel_tol(rel_tol)?;
    let metrics = map_samples(model, sampling, |theta| Ok(metric_fn(&model.tangent_frame(theta)?)))?;
    let g = average_metrics(&metrics).expect("at least one sample");
    MetricReport::from_metric(g, rel_tol, *sampling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitSpec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_x_slot_has_unit_metric() {
        let c = CircuitSpec::from_labels(&["X"]).unwrap();
        for t in [0.0, 0.3, 2.0] {
            assert_abs_diff_eq!(fs_metric_at(&c, &[t]).unwrap()[(0, 0)], 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn duplicated_slot_is_rank_one() {
        let c = CircuitSpec::from_labels(&["X", "X"]).unwrap();
        let g = fs_metric_at(&c, &[0.4, -1.0]).unwrap();
        for v in g.iter() {
            assert_abs_diff_eq!(*v, 1.0, epsilon = 1e-14);
        }
        assert_eq!(metric_rank(&g, DEFAULT_REL_TOL).unwrap(), 1);
    }

    #[test]
    fn stabilizer_direction_is_zero() {
        let c = CircuitSpec::from_labels(&["Z"]).unwrap();
        let r = empirical_metric(&c, &SamplingSpec::uniform(5, 1)).unwrap();
        assert_eq!(r.rank, 0);
        assert_eq!(r.d_eff, 0.0);
        assert!(r.kappa.is_infinite());
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"inf\""));
        let back: MetricReport = serde_json::from_str(&json).unwrap();
        assert!(back.kappa.is_infinite());
    }

    #[test]
    fn spectral_helpers() {
        let eye = DMatrix::<f64>::identity(5, 5);
        assert_eq!(effective_dimension(&eye), 5.0);
        let mut d = DMatrix::<f64>::zeros(4, 4);
        d[(0, 0)] = 1.0;
        assert_eq!(effective_dimension(&d), 1.0);
        d[(1, 1)] = 1.0;
        assert_eq!(effective_dimension(&d), 2.0);
        assert_eq!(condition_number(&eye, 5).unwrap(), 1.0);
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
        assert_eq!(condition_number(&g, 2).unwrap(), 4.0);
        assert_eq!(metric_rank(&DMatrix::zeros(3, 3), DEFAULT_REL_TOL).unwrap(), 0);
        assert!(metric_rank(&eye, 1.0).is_err());
        assert_eq!(condition_number(&eye, 0).unwrap_err(), Error::RankZero);
    }

    #[test]
    fn single_sample_matches_pointwise() {
        let c = CircuitSpec::from_labels(&["XY", "ZI", "YY"]).unwrap();
        let s = SamplingSpec::uniform(1, 3);
        let r = empirical_metric(&c, &s).unwrap();
        let g = fs_metric_at(&c, &s.point(0, 3)).unwrap();
        assert_eq!(r.metric, g);
    }
}
