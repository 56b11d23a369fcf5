use nalgebra::DMatrix;

use super::{CircuitSpec, Slot};
use crate::algebra::{inner, StateVector, C64};
use crate::Result;

/// State and exact parameter derivatives at one parameter point.
#[derive(Clone, Debug)]
pub struct TangentFrame {
    pub state: StateVector,
    /// Column `k` is `∂_k |ψ(θ)>`.
    pub partials: DMatrix<C64>,
    /// Partials with the `<ψ|∂_kψ> |ψ>` component removed.
    pub projected: DMatrix<C64>,
}

impl TangentFrame {
    pub fn new(state: StateVector, partials: DMatrix<C64>) -> Self {
        let psi = state.amplitudes();
        let mut projected = partials.clone();
        for k in 0..partials.ncols() {
            let mut col = projected.column_mut(k);
            let overlap = inner(psi, col.as_slice());
            for (c, p) in col.iter_mut().zip(psi) {
                *c -= overlap * p;
            }
        }
        Self {
            state,
            partials,
            projected,
        }
    }

    pub fn n_params(&self) -> usize {
        self.partials.ncols()
    }

    /// Fubini–Study metric `Re <P_i|P_j>` of the projected partials.
    pub fn metric(&self) -> DMatrix<f64> {
        let gram = self.projected.adjoint() * &self.projected;
        let l = gram.nrows();
        DMatrix::from_fn(l, l, |i, j| 0.5 * (gram[(i, j)].re + gram[(j, i)].re))
    }

    /// Real Jacobian of the projected partials, real parts stacked over imaginary parts.
    pub fn real_jacobian(&self) -> DMatrix<f64> {
        stack_re_im(&self.projected)
    }

    /// Real Jacobian of the raw partials.
    pub fn raw_real_jacobian(&self) -> DMatrix<f64> {
        stack_re_im(&self.partials)
    }
}

fn stack_re_im(m: &DMatrix<C64>) -> DMatrix<f64> {
    let d = m.nrows();
    DMatrix::from_fn(2 * d, m.ncols(), |r, c| if r < d { m[(r, c)].re } else { m[(r - d, c)].im })
}

/// `U(θ)|ψ0>` with slot 0 applied first.
pub fn evolve(circuit: &CircuitSpec, theta: &[f64]) -> Result<StateVector> {
    circuit.check_theta(theta)?;
    let mut psi = circuit.initial_state().amplitudes().to_vec();
    let mut k = 0;
    for slot in circuit.slots() {
        match slot {
            Slot::Param(g) => {
                g.rotate(&mut psi, theta[k]);
                k += 1;
            }
            Slot::Fixed(f) => f.apply(&mut psi),
        }
    }
    Ok(StateVector::from_vec_unchecked(psi))
}

/// Exact product-rule derivatives `∂_k ψ = U_{>k} (-i H_k) ψ_k`, where `ψ_k` is
/// the state right after slot `k`.
///
/// One forward pass caches the `ψ_k`; one backward pass accumulates the
/// suffix operator `U_{>k}` by right-multiplication, one gate at a time.
pub fn partials(circuit: &CircuitSpec, theta: &[f64]) -> Result<TangentFrame> {
    circuit.check_theta(theta)?;
    let dim = circuit.dim();
    let l = circuit.n_params();
    let mut psi = circuit.initial_state().amplitudes().to_vec();
    let mut cached = Vec::with_capacity(l);
    let mut k = 0;
    for slot in circuit.slots() {
        match slot {
            Slot::Param(g) => {
                g.rotate(&mut psi, theta[k]);
                cached.push(psi.clone());
                k += 1;
            }
            Slot::Fixed(f) => f.apply(&mut psi),
        }
    }

    let mut out = DMatrix::<C64>::zeros(dim, l);
    let mut suffix = DMatrix::<C64>::identity(dim, dim);
    let mut suffix_is_identity = true;
    let minus_i = C64::new(0.0, -1.0);
    for slot in circuit.slots().iter().rev() {
        match slot {
            Slot::Param(g) => {
                k -= 1;
                let mut h_psi = vec![C64::new(0.0, 0.0); dim];
                g.apply_add(&cached[k], &mut h_psi, minus_i);
                let mut col = out.column_mut(k);
                if suffix_is_identity {
                    col.as_mut_slice().copy_from_slice(&h_psi);
                } else {
                    for (j, a) in h_psi.iter().enumerate() {
                        if *a == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for (c, s) in col.iter_mut().zip(suffix.column(j).iter()) {
                            *c += s * a;
                        }
                    }
                }
                if k == 0 {
                    break;
                }
                g.right_rotate(&mut suffix, theta[k]);
                suffix_is_identity = false;
            }
            Slot::Fixed(f) => {
                f.right_apply(&mut suffix);
                suffix_is_identity = false;
            }
        }
    }
    Ok(TangentFrame::new(StateVector::from_vec_unchecked(psi), out))
}

/// First slot whose generator moves `|ψ0>` off its own ray: the index `k` with
/// `||(I - |ψ0><ψ0|) H_k |ψ0>|| > 1e-10`, if any.
pub fn check_nondegeneracy(circuit: &CircuitSpec) -> Option<usize> {
    let psi = circuit.initial_state().amplitudes();
    for (k, g) in circuit.generators().enumerate() {
        let mut h_psi = vec![C64::new(0.0, 0.0); psi.len()];
        g.apply_add(psi, &mut h_psi, C64::new(1.0, 0.0));
        let overlap = inner(psi, &h_psi);
        let resid: f64 = h_psi
            .iter()
            .zip(psi)
            .map(|(h, p)| (h - overlap * p).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if resid > 1e-10 {
            return Some(k);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{expm_hermitian, PauliSum};
    use crate::circuit::Generator;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn single_rotation() {
        let c = CircuitSpec::from_labels(&["X"]).unwrap();
        let psi = evolve(&c, &[0.0]).unwrap();
        assert_eq!(psi, StateVector::zero_state(1));
        let psi = evolve(&c, &[FRAC_PI_2]).unwrap();
        assert_abs_diff_eq!(psi.amplitudes()[0].norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(psi.amplitudes()[1].im, -1.0, epsilon = 1e-15);
        let f = partials(&c, &[0.0]).unwrap();
        assert_eq!(f.partials[(1, 0)], C64::new(0.0, -1.0));
        assert!(evolve(&c, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn two_qubit_matches_dense_products() {
        let c = CircuitSpec::from_labels(&["ZI", "XX"]).unwrap();
        let theta = [0.3, 0.7];
        let h1: PauliSum = "ZI".parse().unwrap();
        let h2: PauliSum = "XX".parse().unwrap();
        let u1 = expm_hermitian(&h1, theta[0]);
        let u2 = expm_hermitian(&h2, theta[1]);
        let psi0 = StateVector::zero_state(2);
        let want = u2.mul(&u1).unwrap().apply(&psi0).unwrap();
        let got = evolve(&c, &theta).unwrap();
        assert!(got.distance(&want) < 1e-14);

        let mi = C64::new(0.0, -1.0);
        let d1 = u2.mul(&h1.dense().scaled(mi)).unwrap().mul(&u1).unwrap().apply(&psi0).unwrap();
        let d2 = h2.dense().scaled(mi).mul(&u2).unwrap().mul(&u1).unwrap().apply(&psi0).unwrap();
        let f = partials(&c, &theta).unwrap();
        for r in 0..4 {
            assert!((f.partials[(r, 0)] - d1.amplitudes()[r]).norm() < 1e-14);
            assert!((f.partials[(r, 1)] - d2.amplitudes()[r]).norm() < 1e-14);
        }
    }

    #[test]
    fn nondegeneracy_examples() {
        assert_eq!(check_nondegeneracy(&CircuitSpec::from_labels(&["Z"]).unwrap()), None);
        assert_eq!(check_nondegeneracy(&CircuitSpec::from_labels(&["X"]).unwrap()), Some(0));
        assert_eq!(check_nondegeneracy(&CircuitSpec::from_labels(&["ZI", "IX"]).unwrap()), Some(1));
    }

    #[test]
    fn projected_partials_are_orthogonal() {
        let c = CircuitSpec::from_labels(&["XY", "ZZ", "YI", "IX"]).unwrap();
        let f = partials(&c, &[0.1, 0.9, -1.3, 2.0]).unwrap();
        for k in 0..4 {
            let o = inner(f.state.amplitudes(), f.projected.column(k).as_slice());
            assert!(o.norm() < 1e-14);
        }
    }

    #[test]
    fn spectral_generator_matches_pauli_path() {
        let h: PauliSum = "0.6*XY + -0.8*ZI".parse().unwrap();
        let dense = Generator::from_dense(h.dense()).unwrap();
        let sparse = Generator::from_pauli_sum(h).unwrap();
        let mut a = StateVector::zero_state(2).into_amplitudes();
        let mut b = a.clone();
        dense.rotate(&mut a, 0.77);
        sparse.rotate(&mut b, 0.77);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-13);
        }
    }
}
