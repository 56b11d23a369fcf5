//! Pauli algebra and dense linear algebra.

mod dense;
mod gram_schmidt;
mod pauli;

pub use dense::{
    commutator, expm_skew, hermitian_eig, hs_inner, hs_norm, inner, jacobi_svd, op_norm, symmetric_eig, symmetric_eigenvalues,
    DenseOperator, StateVector,
};
pub use gram_schmidt::{gram_schmidt_hs, gram_schmidt_pauli, GramSchmidt};
pub use pauli::{Pauli, PauliKey, PauliString, PauliSum};

pub type C64 = num_complex::Complex64;

use crate::Result;

/// Product of two Pauli strings with the phase tracked exactly.
pub fn pauli_product(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    a.product(b)
}

/// `exp(-i t h)` for Hermitian `h`. A single Pauli term uses
/// `cos(tc) I - i sin(tc) P`; anything else goes through [`expm_skew`].
pub fn expm_hermitian(h: &PauliSum, t: f64) -> DenseOperator {
    let dim = h.dim();
    if let Some((key, c)) = h.as_single() {
        let (s, co) = (t * c).sin_cos();
        let mut m = DenseOperator::zeros(dim);
        let x = key.x as usize;
        for j in 0..dim {
            m[(j ^ x, j)] += key.column_phase(j) * C64::new(0.0, -s);
            m[(j, j)] += C64::new(co, 0.0);
        }
        return m;
    }
    if h.is_empty() {
        return DenseOperator::identity(dim);
    }
    let x = h.dense().scaled(C64::new(0.0, -1.0));
    expm_skew(&x, t).expect("i times a Pauli sum is skew-Hermitian")
}
