use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use pqclab_core::algebra::{
    commutator, expm_hermitian, expm_skew, gram_schmidt_hs, gram_schmidt_pauli, hs_inner, DenseOperator, Pauli,
    PauliKey, PauliString, PauliSum, C64,
};

/// Kronecker product of single-qubit matrices, qubit 0 leftmost.
fn kron_oracle(label: &str) -> DMatrix<C64> {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let mut m = DMatrix::from_element(1, 1, o);
    for c in label.chars() {
        let p = match c {
            'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
            'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            'Z' => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
            _ => unreachable!(),
        };
        m = m.kronecker(&p);
    }
    m
}

fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

fn label(n: usize) -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just('I'), Just('X'), Just('Y'), Just('Z')], n)
        .prop_map(|v| v.into_iter().collect())
}

fn labels(n: usize, k: usize) -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(label(n), k)
}

fn pauli_sum(n: usize) -> impl Strategy<Value = PauliSum> {
    proptest::collection::vec((label(n), -2.0f64..2.0), 1..5).prop_map(move |terms| {
        let mut s = PauliSum::zero(n);
        for (l, c) in terms {
            s.axpy(1.0, &PauliSum::from_label(&l, c).unwrap());
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dense_string_matches_kronecker(l in (1usize..=4).prop_flat_map(label)) {
        let p = PauliString::from_label(&l).unwrap();
        prop_assert!(max_diff(p.dense().matrix(), &kron_oracle(&l)) < 1e-15);
    }

    #[test]
    fn product_is_faithful_to_matrices(pair in (1usize..=4).prop_flat_map(|n| labels(n, 2))) {
        let a = PauliString::from_label(&pair[0]).unwrap();
        let b = PauliString::from_label(&pair[1]).unwrap();
        let ab = a.product(&b).unwrap();
        let want = kron_oracle(&pair[0]) * kron_oracle(&pair[1]);
        prop_assert!(max_diff(ab.dense().matrix(), &want) < 1e-14);
        let ba = kron_oracle(&pair[1]) * kron_oracle(&pair[0]);
        prop_assert_eq!(a.commutes_with(&b), max_diff(&want, &ba) < 1e-14);
    }

    #[test]
    fn product_is_associative(t in (1usize..=4).prop_flat_map(|n| labels(n, 3))) {
        let [a, b, c] = [0, 1, 2].map(|i| PauliString::from_label(&t[i]).unwrap());
        let left = a.product(&b).unwrap().product(&c).unwrap();
        let right = a.product(&b.product(&c).unwrap()).unwrap();
        prop_assert_eq!(left.key(), right.key());
        prop_assert!((left.coeff() - right.coeff()).norm() < 1e-15);
    }

    #[test]
    fn commutator_matches_dense(pair in (1usize..=3).prop_flat_map(|n| (pauli_sum(n), pauli_sum(n)))) {
        let (a, b) = pair;
        let c = a.commutator_over_i(&b).dense().scaled(C64::new(0.0, 1.0));
        let want = commutator(&a.dense(), &b.dense()).unwrap();
        prop_assert!(max_diff(c.matrix(), want.matrix()) < 1e-12);
    }

    #[test]
    fn jacobi_identity(t in (1usize..=3).prop_flat_map(|n| (pauli_sum(n), pauli_sum(n), pauli_sum(n)))) {
        let (a, b, c) = t;
        let mut s = a.lie_bracket(&b.lie_bracket(&c));
        s.axpy(1.0, &b.lie_bracket(&c.lie_bracket(&a)));
        s.axpy(1.0, &c.lie_bracket(&a.lie_bracket(&b)));
        prop_assert!(s.max_abs_coeff() < 1e-11);
    }

    #[test]
    fn dense_round_trip(h in (1usize..=3).prop_flat_map(pauli_sum)) {
        let back = PauliSum::from_dense(&h.dense(), 1e-12).unwrap();
        let mut d = back.clone();
        d.axpy(-1.0, &h);
        prop_assert!(d.max_abs_coeff() < 1e-12);
    }

    #[test]
    fn hs_inner_matches_trace(pair in (1usize..=3).prop_flat_map(|n| (pauli_sum(n), pauli_sum(n)))) {
        let (a, b) = pair;
        let dense = hs_inner(&a.dense(), &b.dense()).unwrap();
        prop_assert!((a.hs_inner(&b) - dense).abs() < 1e-10 * (1.0 + dense.abs()));
    }

    #[test]
    fn expm_is_unitary_with_inverse(h in (1usize..=3).prop_flat_map(pauli_sum), t in -3.0f64..3.0) {
        let u = expm_hermitian(&h, t);
        let v = expm_hermitian(&h, -t);
        let id = DenseOperator::identity(h.dim());
        prop_assert!(max_diff(u.mul(&v).unwrap().matrix(), id.matrix()) < 1e-10);
        prop_assert!(u.unitarity_defect() < 1e-10);
    }

    #[test]
    fn single_term_fast_path_matches_eigen(l in (1usize..=3).prop_flat_map(label), c in -2.0f64..2.0, t in -3.0f64..3.0) {
        prop_assume!(c.abs() > 1e-3);
        let h = PauliSum::from_label(&l, c).unwrap();
        let fast = expm_hermitian(&h, t);
        let slow = expm_skew(&h.dense().scaled(C64::new(0.0, -1.0)), t).unwrap();
        prop_assert!(max_diff(fast.matrix(), slow.matrix()) < 1e-12);
    }

    #[test]
    fn gram_schmidt_is_orthonormal(gens in (1usize..=3).prop_flat_map(|n| proptest::collection::vec(pauli_sum(n), 1..7))) {
        let gs = gram_schmidt_pauli(&gens, 1e-10).unwrap();
        for (i, a) in gs.basis.iter().enumerate() {
            for (j, b) in gs.basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((a.hs_inner(b) - want).abs() < 1e-10);
            }
        }
        // every input lies in the span
        for g in &gens {
            let mut r = g.clone();
            for b in &gs.basis {
                r.axpy(-g.hs_inner(b), b);
            }
            prop_assert!(r.hs_norm() < 1e-8 * (1.0 + g.hs_norm()));
        }
        let skew: Vec<DenseOperator> = gens.iter().map(|g| g.dense().scaled(C64::new(0.0, 1.0))).collect();
        prop_assert_eq!(gram_schmidt_hs(&skew, 1e-10).unwrap().basis.len(), gs.basis.len());
    }
}

#[test]
fn letter_bit_convention() {
    let k = PauliKey::single(3, 0, Pauli::X);
    assert_eq!(k.label(3), "XII");
    assert_eq!(k.x, 0b100);
    let s = PauliString::from_label("XII").unwrap();
    assert_abs_diff_eq!(s.dense()[(4, 0)].re, 1.0);
}

#[test]
fn all_pairs_two_qubits() {
    let letters = ['I', 'X', 'Y', 'Z'];
    let all: Vec<String> = letters
        .iter()
        .flat_map(|a| letters.iter().map(move |b| format!("{a}{b}")))
        .collect();
    for a in &all {
        for b in &all {
            let ab = PauliString::from_label(a).unwrap().product(&PauliString::from_label(b).unwrap()).unwrap();
            assert!(max_diff(ab.dense().matrix(), &(kron_oracle(a) * kron_oracle(b))) < 1e-15, "{a}*{b}");
        }
    }
}
