use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::algebra::{PauliKey, PauliSum};
use crate::{Error, Result};

/// Hilbert–Schmidt-orthonormal skew-Hermitian basis. Element `j` is `i·h_j`
/// with `h_j = elements[j]`, so `hs_norm(h_j) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LieBasis {
    pub n_qubits: usize,
    pub dim_hilbert: usize,
    pub elements: Vec<PauliSum>,
    pub depth_tags: Vec<usize>,
    /// Largest HS norm of a bracket residual left outside the span.
    pub closure_defect: f64,
    /// Largest `||[b_i, b_j]||_HS` over pairs.
    pub adjoint_proxy: f64,
    /// False when expansion stopped at `max_dim`.
    pub converged: bool,
    pub tol: f64,
}

impl LieBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Histogram of bracket depths.
    pub fn depth_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for d in &self.depth_tags {
            *h.entry(*d).or_insert(0) += 1;
        }
        h
    }

    /// Element rescaled to unit Pauli-coefficient norm, `Σ c_P^2 = 1`.
    pub fn unit_coefficient_element(&self, j: usize) -> PauliSum {
        let e = &self.elements[j];
        e.scaled(1.0 / e.coeff_norm())
    }

    /// HS norm of the component of `h` orthogonal to the span.
    pub fn residual_norm(&self, h: &PauliSum) -> f64 {
        let mut span = Span::new(self.n_qubits);
        for e in &self.elements {
            span.push_unchecked(e.scaled(1.0 / e.coeff_norm()));
        }
        span.residual(h).hs_norm()
    }
}

/// Incremental orthonormal span in Pauli-coefficient space.
///
/// Basis vectors are stored with unit coefficient norm. An inverted index from
/// Pauli key to basis vectors limits each projection to the vectors that share
/// support with the input.
#[derive(Clone, Debug)]
pub(crate) struct Span {
    n_qubits: usize,
    basis: Vec<PauliSum>,
    index: BTreeMap<PauliKey, Vec<usize>>,
}

impl Span {
    pub(crate) fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            basis: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.basis.len()
    }

    pub(crate) fn vectors(&self) -> &[PauliSum] {
        &self.basis
    }

    /// Two passes of classical Gram–Schmidt against the current basis.
    pub(crate) fn residual(&self, v: &PauliSum) -> PauliSum {
        let mut r = v.clone();
        for _ in 0..2 {
            let touched: BTreeSet<usize> = r
                .terms()
                .filter_map(|(k, _)| self.index.get(k))
                .flat_map(|ids| ids.iter().copied())
                .collect();
            if touched.is_empty() {
                break;
            }
            let coeffs: Vec<(usize, f64)> = touched.iter().map(|&i| (i, self.basis[i].coeff_dot(&r))).collect();
            for (i, c) in coeffs {
                r.axpy(-c, &self.basis[i]);
            }
        }
        r
    }

    /// Appends a vector assumed orthogonal to the span, normalizing it.
    pub(crate) fn push_unchecked(&mut self, v: PauliSum) -> usize {
        let norm = v.coeff_norm();
        let v = v.scaled(1.0 / norm);
        let id = self.basis.len();
        for (k, _) in v.terms() {
            self.index.entry(*k).or_default().push(id);
        }
        self.basis.push(v);
        id
    }

    /// Admits the residual of `v` when its HS norm exceeds `tol`;
    /// returns the residual HS norm and whether it was admitted.
    pub(crate) fn try_push(&mut self, v: &PauliSum, tol: f64) -> (f64, bool) {
        let r = self.residual(v).pruned(1e-300);
        let norm = r.hs_norm();
        if norm > tol {
            self.push_unchecked(r);
            (norm, true)
        } else {
            (norm, false)
        }
    }

    /// HS-normalized elements.
    pub(crate) fn hs_elements(&self) -> Vec<PauliSum> {
        let s = 1.0 / ((1usize << self.n_qubits) as f64).sqrt();
        self.basis.iter().map(|b| b.scaled(s)).collect()
    }
}

/// HS norm of `[i a, i b]` for HS-normalized `a`, `b` given by their
/// unit-coefficient-norm representatives `ua`, `ub`.
pub(crate) fn bracket_hs(ua: &PauliSum, ub: &PauliSum) -> (PauliSum, f64) {
    let c = ua.lie_bracket(ub);
    let d = ua.dim() as f64;
    // bracket of HS-normalized elements is c / d, with HS norm sqrt(d)·|c| / d
    let norm = c.coeff_norm() / d.sqrt();
    (c, norm)
}

fn check_generators(generators: &[PauliSum], tol: f64) -> Result<usize> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidTolerance(tol));
    }
    let n = generators.first().ok_or(Error::EmptyGenerators)?.n_qubits();
    if let Some(g) = generators.iter().find(|g| g.n_qubits() != n) {
        return Err(Error::QubitMismatch(n, g.n_qubits()));
    }
    Ok(n)
}

/// Default admission tolerance: `1e-10` times the largest generator HS norm.
pub fn default_tolerance(generators: &[PauliSum]) -> f64 {
    let m = generators.iter().map(|g| g.hs_norm()).fold(0.0, f64::max);
    if m > 0.0 {
        1e-10 * m
    } else {
        1e-10
    }
}

/// Breadth-first Lie closure of `{i·h_k}`.
///
/// Depth 0 is the orthonormalized generator span. Each later layer brackets
/// every element with the newest layer and admits residuals whose HS norm
/// exceeds `tol`. Stops at closure or when `max_dim` elements exist; in the
/// latter case `closure_defect` is the residual of the first bracket that
/// could not be admitted.
pub fn lie_closure(generators: &[PauliSum], max_dim: usize, tol: f64) -> Result<LieBasis> {
    let n = check_generators(generators, tol)?;
    let full = 1usize << (2 * n);
    let max_dim = max_dim.min(full);
    let mut span = Span::new(n);
    let mut depth = Vec::new();
    let mut defect: f64 = 0.0;
    let mut proxy: f64 = 0.0;
    let mut converged = true;

    for g in generators {
        if span.len() >= max_dim {
            let r = span.residual(g).hs_norm();
            if r > tol {
                converged = false;
                defect = defect.max(r);
            }
            continue;
        }
        if span.try_push(g, tol).1 {
            depth.push(0);
        }
    }

    let mut layer_start = 0;
    'layers: while layer_start < span.len() && converged {
        let layer_end = span.len();
        for b in layer_start..layer_end {
            for a in 0..b {
                let (c, norm) = bracket_hs(&span.vectors()[a], &span.vectors()[b]);
                proxy = proxy.max(norm);
                if norm <= tol {
                    continue;
                }
                let r = span.residual(&c).pruned(1e-300);
                // residual in units of the HS-normalized bracket
                let rn = r.coeff_norm() / (span_dim_hilbert(n) as f64).sqrt();
                if rn <= tol {
                    defect = defect.max(rn);
                    continue;
                }
                if span.len() >= max_dim {
                    converged = false;
                    defect = defect.max(rn);
                    break 'layers;
                }
                span.push_unchecked(r);
                depth.push(1 + depth[a].max(depth[b]));
            }
        }
        layer_start = layer_end;
    }

    Ok(LieBasis {
        n_qubits: n,
        dim_hilbert: 1 << n,
        elements: span.hs_elements(),
        depth_tags: depth,
        closure_defect: defect,
        adjoint_proxy: proxy,
        converged,
        tol,
    })
}

fn span_dim_hilbert(n: usize) -> usize {
    1 << n
}

/// Closure defect and adjoint proxy of an orthonormal selection: every pair
/// is bracketed and projected against the selection's span.
pub(crate) fn span_diagnostics(unit_vectors: &[PauliSum]) -> (f64, f64) {
    let Some(first) = unit_vectors.first() else {
        return (0.0, 0.0);
    };
    let n = first.n_qubits();
    let mut span = Span::new(n);
    for v in unit_vectors {
        span.push_unchecked(v.clone());
    }
    let sd = (span_dim_hilbert(n) as f64).sqrt();
    let mut defect: f64 = 0.0;
    let mut proxy: f64 = 0.0;
    for b in 0..span.len() {
        for a in 0..b {
            let (c, norm) = bracket_hs(&span.vectors()[a], &span.vectors()[b]);
            proxy = proxy.max(norm);
            if norm > 0.0 {
                defect = defect.max(span.residual(&c).coeff_norm() / sd);
            }
        }
    }
    (defect, proxy)
}
