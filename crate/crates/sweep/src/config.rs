use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use pqclab_core::geometry::{SamplingSpec, DEFAULT_REL_TOL};
use pqclab_core::trainability::LossSpec;

use crate::error::SweepError;

/// Largest qubit count a sweep accepts.
pub const MAX_SWEEP_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Full,
    RandomTrunc,
    LieTrunc,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Full, Method::RandomTrunc, Method::LieTrunc];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Full => "full",
            Method::RandomTrunc => "random_trunc",
            Method::LieTrunc => "lie_trunc",
        }
    }

    /// Stable index mixed into the per-cell seed.
    pub fn index(self) -> u64 {
        match self {
            Method::Full => 0,
            Method::RandomTrunc => 1,
            Method::LieTrunc => 2,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Method::Full),
            "random_trunc" => Ok(Method::RandomTrunc),
            "lie_trunc" => Ok(Method::LieTrunc),
            other => Err(SweepError::Config(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub qubit_range: Vec<usize>,
    pub depth: usize,
    pub methods: Vec<Method>,
    pub sampling: SamplingSpec,
    pub loss: LossSpec,
    pub random_keep: usize,
    pub lie_depth_cap: usize,
    /// `None` keeps as many elements as the full circuit has parameters.
    pub lie_dim_budget: Option<usize>,
    pub closure_max_dim: usize,
    pub opt_steps: usize,
    pub opt_rate: f64,
    pub master_seed: u64,
    pub rel_tol: f64,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    pub out_dir: PathBuf,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            qubit_range: vec![2, 3, 4, 5, 6],
            depth: 2,
            methods: Method::ALL.to_vec(),
            sampling: SamplingSpec::default(),
            loss: LossSpec::default(),
            random_keep: 2,
            lie_depth_cap: 2,
            lie_dim_budget: None,
            closure_max_dim: 4096,
            opt_steps: 100,
            opt_rate: 0.1,
            master_seed: 7,
            rel_tol: DEFAULT_REL_TOL,
            workers: None,
            out_dir: PathBuf::from("sweep_out"),
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self, SweepError> {
        let config: SweepConfig = serde_json::from_str(text).map_err(|e| SweepError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SweepError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SweepError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |msg: String| Err(SweepError::Config(msg));
        if self.qubit_range.is_empty() {
            return bad("qubit_range is empty".into());
        }
        if let Some(n) = self.qubit_range.iter().find(|&&n| !(1..=MAX_SWEEP_QUBITS).contains(&n)) {
            return bad(format!("qubit count {n} outside [1, {MAX_SWEEP_QUBITS}]"));
        }
        if self.depth == 0 {
            return bad("depth must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("methods is empty".into());
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return bad("methods contains duplicates".into());
        }
        let mut qs = self.qubit_range.clone();
        qs.sort();
        qs.dedup();
        if qs.len() != self.qubit_range.len() {
            return bad("qubit_range contains duplicates".into());
        }
        if self.sampling.n_samples < 2 {
            return bad("sampling.n_samples must be at least 2".into());
        }
        self.sampling.validate().map_err(|e| SweepError::Config(e.to_string()))?;
        if self.random_keep == 0 {
            return bad("random_keep must be at least 1".into());
        }
        if self.lie_dim_budget == Some(0) {
            return bad("lie_dim_budget must be positive".into());
        }
        if !(self.opt_rate.is_finite() && self.opt_rate >= 0.0) {
            return bad(format!("opt_rate {} must be finite and non-negative", self.opt_rate));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return bad(format!("rel_tol {} outside (0, 1)", self.rel_tol));
        }
        if self.workers == Some(0) {
            return bad("workers must be positive".into());
        }
        Ok(())
    }
}
