use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::closure::{bracket_hs, span_diagnostics, LieBasis, Span};
use crate::algebra::PauliSum;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub original_dim: usize,
    pub truncated_dim: usize,
    pub kept_depths: BTreeMap<usize, usize>,
    pub closure_defect_before: f64,
    pub closure_defect_after: f64,
    pub span_preserved: bool,
}

fn unit_span(generators: &[PauliSum], tol: f64) -> Result<Span> {
    let n = generators.first().ok_or(Error::EmptyGenerators)?.n_qubits();
    let mut span = Span::new(n);
    for g in generators {
        if g.n_qubits() != n {
            return Err(Error::QubitMismatch(n, g.n_qubits()));
        }
        span.try_push(g, tol);
    }
    Ok(span)
}

fn basis_from_span(span: &Span, depths: Vec<usize>, tol: f64) -> LieBasis {
    let (defect, proxy) = span_diagnostics(span.vectors());
    let n = span.vectors().first().map_or(0, |v| v.n_qubits());
    LieBasis {
        n_qubits: n,
        dim_hilbert: 1 << n,
        elements: span.hs_elements(),
        depth_tags: depths,
        closure_defect: defect,
        adjoint_proxy: proxy,
        converged: true,
        tol,
    }
}

/// Span-preserving truncation of a closure.
///
/// Keeps the whole generator span at depth 0, then greedily admits closure
/// elements with `1 <= depth <= depth_cap`: at every step the candidate with
/// the smallest max bracket norm against the elements already selected wins,
/// ties broken by depth and then by closure order. Stops at `dim_budget`.
pub fn lie_trunc(
    closure: &LieBasis,
    generators: &[PauliSum],
    depth_cap: usize,
    dim_budget: usize,
) -> Result<(LieBasis, TruncationReport)> {
    let tol = closure.tol;
    let mut span = unit_span(generators, tol)?;
    let span_dim = span.len();
    if dim_budget < span_dim {
        return Err(Error::BudgetBelowSpan {
            budget: dim_budget,
            span: span_dim,
        });
    }
    for (k, g) in generators.iter().enumerate() {
        if closure.residual_norm(g) > tol.max(1e-8 * g.hs_norm()) {
            return Err(Error::GeneratorOutsideClosure(k));
        }
    }
    let mut depths = vec![0; span_dim];

    let mut candidates: Vec<(usize, PauliSum, f64)> = closure
        .elements
        .iter()
        .zip(&closure.depth_tags)
        .enumerate()
        .filter(|(_, (_, d))| **d >= 1 && **d <= depth_cap)
        .map(|(i, (e, _))| (i, e.scaled(1.0 / e.coeff_norm()), 0.0))
        .collect();
    for c in candidates.iter_mut() {
        for s in span.vectors() {
            c.2 = f64::max(c.2, bracket_hs(&c.1, s).1);
        }
    }

    while span.len() < dim_budget && !candidates.is_empty() {
        let best = candidates
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                a.2.total_cmp(&b.2)
                    .then(closure.depth_tags[a.0].cmp(&closure.depth_tags[b.0]))
                    .then(a.0.cmp(&b.0))
            })
            .map(|(pos, _)| pos)
            .expect("nonempty");
        let (idx, v, _) = candidates.swap_remove(best);
        // closure elements are orthogonal to the span already; re-project for safety
        let (norm, admitted) = span.try_push(&v.scaled(((1usize << v.n_qubits()) as f64).sqrt()), tol);
        if !admitted {
            log::debug!("closure element {idx} rejected with residual {norm:e}");
            continue;
        }
        depths.push(closure.depth_tags[idx]);
        let added = span.vectors().last().expect("just pushed").clone();
        for c in candidates.iter_mut() {
            c.2 = f64::max(c.2, bracket_hs(&c.1, &added).1);
        }
    }

    let basis = basis_from_span(&span, depths, tol);
    let span_preserved = generators.iter().all(|g| basis.residual_norm(g) <= tol.max(1e-8 * g.hs_norm()));
    let report = TruncationReport {
        original_dim: closure.dim(),
        truncated_dim: basis.dim(),
        kept_depths: basis.depth_histogram(),
        closure_defect_before: closure.closure_defect,
        closure_defect_after: basis.closure_defect,
        span_preserved,
    };
    Ok((basis, report))
}

/// Distinct generator directions up to sign and scale, in first-seen order.
pub fn distinct_directions(generators: &[PauliSum]) -> Vec<PauliSum> {
    let mut out: Vec<PauliSum> = Vec::new();
    for g in generators {
        let norm = g.coeff_norm();
        if norm == 0.0 {
            continue;
        }
        let u = g.scaled(1.0 / norm);
        if !out.iter().any(|v| (v.coeff_dot(&u).abs() - 1.0).abs() < 1e-12) {
            out.push(u);
        }
    }
    out
}

/// Unstructured truncation: `keep` distinct generator directions drawn
/// uniformly without replacement. Returns the span of the kept directions and
/// the directions themselves, unit coefficient norm, in ascending draw index.
pub fn random_trunc(
    generators: &[PauliSum],
    keep: usize,
    seed: u64,
) -> Result<(LieBasis, TruncationReport, Vec<PauliSum>)> {
    let tol = super::default_tolerance(generators);
    let full_span = unit_span(generators, tol)?;
    let dirs = distinct_directions(generators);
    if keep == 0 || keep > dirs.len() {
        return Err(Error::KeepOutOfRange {
            keep,
            available: dirs.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, dirs.len(), keep).into_vec();
    picked.sort_unstable();
    let kept: Vec<PauliSum> = picked.iter().map(|&i| dirs[i].clone()).collect();
    let span = unit_span(&kept, tol)?;
    let basis = basis_from_span(&span, vec![0; span.len()], tol);
    let (full_defect, _) = span_diagnostics(full_span.vectors());
    let report = TruncationReport {
        original_dim: full_span.len(),
        truncated_dim: basis.dim(),
        kept_depths: basis.depth_histogram(),
        closure_defect_before: full_defect,
        closure_defect_after: basis.closure_defect,
        span_preserved: basis.dim() >= full_span.len(),
    };
    Ok((basis, report, kept))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::lie_closure;

    fn sums(labels: &[&str]) -> Vec<PauliSum> {
        labels.iter().map(|l| l.parse().unwrap()).collect()
    }

    #[test]
    fn commuting_generators_truncate_to_identity() {
        let g = sums(&["ZI", "IZ", "ZZ"]);
        let c = lie_closure(&g, 16, 1e-10).unwrap();
        let (b, r) = lie_trunc(&c, &g, 2, 3).unwrap();
        assert_eq!(b.dim(), 3);
        assert_eq!(r.original_dim, 3);
        assert!(r.span_preserved);
        assert_eq!(r.closure_defect_after, 0.0);
    }

    #[test]
    fn su2_retained() {
        let g = sums(&["X", "Z"]);
        let c = lie_closure(&g, 16, 1e-10).unwrap();
        let (b, r) = lie_trunc(&c, &g, 1, 3).unwrap();
        assert_eq!(b.dim(), 3);
        assert_eq!(r.kept_depths.get(&1), Some(&1));
        assert!(r.closure_defect_after < 1e-12);
    }

    #[test]
    fn budget_below_span_is_an_error() {
        let g = sums(&["X", "Z"]);
        let c = lie_closure(&g, 16, 1e-10).unwrap();
        assert_eq!(
            lie_trunc(&c, &g, 1, 1).unwrap_err(),
            Error::BudgetBelowSpan { budget: 1, span: 2 }
        );
    }

    #[test]
    fn random_keep_range() {
        let g = sums(&["XI", "IX", "-1*XI", "ZZ"]);
        assert_eq!(distinct_directions(&g).len(), 3);
        assert!(random_trunc(&g, 0, 1).is_err());
        assert!(random_trunc(&g, 4, 1).is_err());
        let (b, r, kept) = random_trunc(&g, 2, 1).unwrap();
        assert_eq!(b.dim(), 2);
        assert_eq!(kept.len(), 2);
        assert!(!r.span_preserved);
        let (b, r, _) = random_trunc(&g, 3, 1).unwrap();
        assert_eq!(b.dim(), 3);
        assert!(r.span_preserved);
    }
}
