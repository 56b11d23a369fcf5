//! Hilbert–Schmidt Gram–Schmidt with one re-orthogonalization pass.

use super::dense::{hs_inner, hs_norm, DenseOperator};
use super::pauli::PauliSum;
use super::C64;
use crate::{Error, Result};

/// Orthonormal basis plus, per input, the residual norm left after projecting
/// onto the basis built from the inputs before it.
#[derive(Clone, Debug)]
pub struct GramSchmidt<T> {
    pub basis: Vec<T>,
    pub residuals: Vec<f64>,
    /// Input index that produced each basis element.
    pub sources: Vec<usize>,
}

/// Dense version; inputs must be skew-Hermitian of equal dimension.
pub fn gram_schmidt_hs(vectors: &[DenseOperator], tolerance: f64) -> Result<GramSchmidt<DenseOperator>> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidTolerance(tolerance));
    }
    let mut out = GramSchmidt {
        basis: Vec::new(),
        residuals: Vec::with_capacity(vectors.len()),
        sources: Vec::new(),
    };
    let Some(first) = vectors.first() else {
        return Ok(out);
    };
    let dim = first.dim();
    for (idx, v) in vectors.iter().enumerate() {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch(dim, v.dim()));
        }
        v.check_skew_hermitian()?;
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &out.basis {
                let c = hs_inner(b, &r)?;
                r = r.sub(&b.scaled(C64::new(c, 0.0)))?;
            }
        }
        let norm = hs_norm(&r);
        out.residuals.push(norm);
        if norm > tolerance {
            out.basis.push(r.scaled(C64::new(1.0 / norm, 0.0)));
            out.sources.push(idx);
        }
    }
    Ok(out)
}

/// Pauli-coefficient version: element `h` stands for `i·h`.
pub fn gram_schmidt_pauli(vectors: &[PauliSum], tolerance: f64) -> Result<GramSchmidt<PauliSum>> {
    if tolerance.is_nan() || tolerance <= 0.0 {
        return Err(Error::InvalidTolerance(tolerance));
    }
    let mut out = GramSchmidt {
        basis: Vec::new(),
        residuals: Vec::with_capacity(vectors.len()),
        sources: Vec::new(),
    };
    let Some(first) = vectors.first() else {
        return Ok(out);
    };
    let n = first.n_qubits();
    for (idx, v) in vectors.iter().enumerate() {
        if v.n_qubits() != n {
            return Err(Error::QubitMismatch(n, v.n_qubits()));
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for b in &out.basis {
                let c = b.hs_inner(&r);
                r.axpy(-c, b);
            }
        }
        let norm = r.hs_norm();
        out.residuals.push(norm);
        if norm > tolerance {
            out.basis.push(r.scaled(1.0 / norm));
            out.sources.push(idx);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::PauliString;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn skew(label: &str, c: f64) -> DenseOperator {
        PauliString::from_label(label).unwrap().dense().scaled(C64::new(0.0, c))
    }

    #[test]
    fn collinear_inputs_give_one_element() {
        let gs = gram_schmidt_hs(&[skew("X", 1.0), skew("X", 2.0)], 1e-10).unwrap();
        assert_eq!(gs.basis.len(), 1);
        assert!(gs.residuals[1] < 1e-12);
    }

    #[test]
    fn orthogonal_inputs_are_normalized() {
        let gs = gram_schmidt_hs(&[skew("X", 1.0), skew("Y", 1.0)], 1e-10).unwrap();
        assert_eq!(gs.basis.len(), 2);
        for b in &gs.basis {
            assert_abs_diff_eq!(hs_norm(b), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn hand_projection_residual() {
        let mixed = skew("X", FRAC_1_SQRT_2).add(&skew("Y", FRAC_1_SQRT_2)).unwrap();
        let gs = gram_schmidt_hs(&[skew("X", 1.0), mixed], 1e-10).unwrap();
        assert_eq!(gs.basis.len(), 2);
        let want = hs_norm(&skew("Y", 1.0)) * FRAC_1_SQRT_2;
        assert_abs_diff_eq!(gs.residuals[1], want, epsilon = 1e-14);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert_eq!(
            gram_schmidt_hs(&[skew("X", 1.0)], 0.0).unwrap_err(),
            Error::InvalidTolerance(0.0)
        );
        assert!(gram_schmidt_pauli(&[], -1.0).is_err());
        assert!(gram_schmidt_hs(&[skew("X", 1.0).scaled(C64::new(0.0, 1.0))], 1e-10).is_err());
    }

    #[test]
    fn pauli_and_dense_agree() {
        let sums: Vec<PauliSum> = ["XI + 0.5*ZZ", "XI + -0.5*ZZ + YY", "2*XI + YY"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let dense: Vec<DenseOperator> = sums.iter().map(|s| s.dense().scaled(C64::new(0.0, 1.0))).collect();
        let a = gram_schmidt_pauli(&sums, 1e-10).unwrap();
        let b = gram_schmidt_hs(&dense, 1e-10).unwrap();
        assert_eq!(a.basis.len(), 2);
        assert_eq!(b.basis.len(), 2);
        for (x, y) in a.residuals.iter().zip(&b.residuals) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }
}
