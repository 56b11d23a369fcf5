use pqclab_core::circuit::full_hea;
use pqclab_core::geometry::SamplingSpec;
use pqclab_core::robustness::{perturbed_sweep, random_trials, PerturbationSettings};
use pqclab_core::trainability::LossSpec;

#[test]
fn bound_holds_over_random_trials() {
    let trials = random_trials(&[1, 2, 3], 1000, 17).unwrap();
    assert_eq!(trials.len(), 1000);
    let worst = trials.iter().map(|t| t.margin).fold(f64::INFINITY, f64::min);
    assert!(worst >= -1e-9, "worst margin {worst:e}");
    // the sharper unitary bound also holds
    for t in &trials {
        assert!(t.lhs <= t.unitary_rhs() * (1.0 + 1e-9) + 1e-12);
        assert!(t.t > 0.0 && t.t <= 2.0);
    }
}

#[test]
fn trials_are_reproducible() {
    let a = random_trials(&[2], 20, 3).unwrap();
    let b = random_trials(&[2], 20, 3).unwrap();
    assert_eq!(a, b);
}

#[test]
fn degradation_is_continuous_in_epsilon() {
    let c = full_hea(2, 1).unwrap();
    let settings = PerturbationSettings { opt_steps: 5, ..Default::default() };
    let s = SamplingSpec::uniform(10, 2);
    let mut last = 0.0;
    for eps in [1e-4, 1e-3, 1e-2] {
        let r = perturbed_sweep(&c, eps, &s, &LossSpec::default(), &settings).unwrap();
        assert!(r.within_bound(), "eps {eps}: {} > {}", r.max_loss_deviation, r.loss_deviation_bound);
        assert!(r.max_loss_deviation <= r.loss_deviation_bound_exponential);
        assert!(r.max_loss_deviation >= last);
        assert!(r.delta_d_eff.abs() < 100.0 * eps);
        last = r.max_loss_deviation;
    }
}
