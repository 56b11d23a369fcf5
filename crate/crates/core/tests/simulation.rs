use proptest::prelude::*;

use pqclab_core::algebra::{expm_skew, PauliSum, StateVector, C64};
use pqclab_core::circuit::{
    canonical_product_form, evolve, full_hea, partials, CircuitSpec, Generator, Slot, StateModel,
};
use pqclab_core::stats::stream_rng;
use rand::Rng;

fn random_label(n: usize, rng: &mut impl Rng) -> String {
    loop {
        let l: String = (0..n).map(|_| ['I', 'X', 'Y', 'Z'][rng.random_range(0..4)]).collect();
        if l.chars().any(|c| c != 'I') {
            return l;
        }
    }
}

/// Dense reference: multiply the slot unitaries one by one.
fn dense_evolve(c: &CircuitSpec, theta: &[f64]) -> Vec<C64> {
    let mut psi = c.initial_state().clone();
    let mut k = 0;
    for slot in c.slots() {
        let u = match slot {
            Slot::Param(g) => {
                let t = theta[k];
                k += 1;
                expm_skew(&g.dense().scaled(C64::new(0.0, -1.0)), t).unwrap()
            }
            Slot::Fixed(f) => f.op().clone(),
        };
        psi = u.apply(&psi).unwrap();
    }
    psi.into_amplitudes()
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn random_circuit(n: usize, slots: usize, seed: u64) -> CircuitSpec {
    let mut rng = stream_rng(seed, 0);
    let labels: Vec<String> = (0..slots).map(|_| random_label(n, &mut rng)).collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    CircuitSpec::from_labels(&refs).unwrap()
}

fn random_theta(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 1);
    (0..len).map(|_| rng.random_range(-3.0..3.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn evolution_matches_dense_product(n in 1usize..=3, slots in 1usize..7, seed in any::<u64>()) {
        let c = random_circuit(n, slots, seed);
        let theta = random_theta(slots, seed);
        let psi = evolve(&c, &theta).unwrap();
        prop_assert!(dist(psi.amplitudes(), &dense_evolve(&c, &theta)) < 1e-12);
        prop_assert!((psi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partials_match_central_differences(n in 1usize..=3, slots in 1usize..7, seed in any::<u64>()) {
        let c = random_circuit(n, slots, seed);
        let theta = random_theta(slots, seed);
        let frame = partials(&c, &theta).unwrap();
        let h = 1e-5;
        for k in 0..slots {
            let mut tp = theta.clone();
            let mut tm = theta.clone();
            tp[k] += h;
            tm[k] -= h;
            let fp = evolve(&c, &tp).unwrap();
            let fm = evolve(&c, &tm).unwrap();
            let fd: Vec<C64> = fp.amplitudes().iter().zip(fm.amplitudes()).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            let col: Vec<C64> = frame.partials.column(k).iter().copied().collect();
            prop_assert!(dist(&fd, &col) < 1e-8);
        }
    }

    #[test]
    fn canonical_form_gives_same_states(n in 2usize..=4, depth in 1usize..=2, seed in any::<u64>()) {
        let c = full_hea(n, depth).unwrap();
        let canon = canonical_product_form(&c).unwrap();
        let theta = random_theta(c.n_params(), seed);
        let a = evolve(&c, &theta).unwrap();
        let b = evolve(&canon, &theta).unwrap();
        prop_assert!(a.distance(&b) < 1e-12);
    }
}

#[test]
fn hea_with_fixed_gates_matches_dense() {
    let c = full_hea(3, 2).unwrap();
    let theta = random_theta(c.n_params(), 4);
    assert!(dist(evolve(&c, &theta).unwrap().amplitudes(), &dense_evolve(&c, &theta)) < 1e-12);
    let frame = partials(&c, &theta).unwrap();
    let h = 1e-5;
    for k in 0..c.n_params() {
        let mut tp = theta.clone();
        let mut tm = theta.clone();
        tp[k] += h;
        tm[k] -= h;
        let fp = dense_evolve(&c, &tp);
        let fm = dense_evolve(&c, &tm);
        let fd: Vec<C64> = fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let col: Vec<C64> = frame.partials.column(k).iter().copied().collect();
        assert!(dist(&fd, &col) < 1e-8, "slot {k}");
    }
}

#[test]
fn slot_order_matters_for_noncommuting_generators() {
    let xz = CircuitSpec::from_labels(&["X", "Z"]).unwrap();
    let zx = CircuitSpec::from_labels(&["Z", "X"]).unwrap();
    let theta = [0.7, 0.4];
    let a = evolve(&xz, &theta).unwrap();
    let b = evolve(&zx, &[0.4, 0.7]).unwrap();
    assert!(a.distance(&b) > 1e-3);
}

#[test]
fn dense_generator_agrees_with_pauli_generator() {
    let h: PauliSum = "0.5*XY + -1.5*ZI".parse().unwrap();
    let pauli = Generator::from_pauli_sum(h.clone()).unwrap();
    let dense = Generator::from_dense(h.dense()).unwrap();
    let psi0 = StateVector::zero_state(2);
    let a = CircuitSpec::new(2, vec![Slot::Param(pauli)], psi0.clone()).unwrap();
    let b = CircuitSpec::new(2, vec![Slot::Param(dense)], psi0).unwrap();
    for t in [0.0, 0.3, -2.1] {
        assert!(a.evolve(&[t]).unwrap().distance(&b.evolve(&[t]).unwrap()) < 1e-12);
        let fa = a.tangent_frame(&[t]).unwrap();
        let fb = b.tangent_frame(&[t]).unwrap();
        assert!((fa.partials - fb.partials).norm() < 1e-12);
    }
}
