use std::fs;
use std::time::Instant;

use pqclab_sweep::checks::{self, PROJECTED};
use pqclab_sweep::record::{read_csv, CSV_HEADER};
use pqclab_sweep::run::attach_spectra;
use pqclab_sweep::{compute_sweep, run_sweep, Method, SweepConfig};

fn small(out: &std::path::Path) -> SweepConfig {
    SweepConfig {
        qubit_range: vec![2, 3],
        opt_steps: 3,
        out_dir: out.to_path_buf(),
        ..SweepConfig::default()
    }
}

#[test]
fn smoke_run_is_fast() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = SweepConfig {
        qubit_range: vec![2],
        methods: vec![Method::Full],
        opt_steps: 0,
        out_dir: dir.path().to_path_buf(),
        ..SweepConfig::default()
    };
    config.sampling.n_samples = 10;
    let start = Instant::now();
    let out = run_sweep(&config).unwrap();
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert_eq!(out.records.len(), 1);
    let r = &out.records[0];
    assert_eq!((r.n, r.method), (2, Method::Full));
    assert_eq!(r.loss_trajectory.len(), 1);
    assert!(r.product_is_consistent());
}

#[test]
fn writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_sweep(&small(dir.path())).unwrap();
    assert_eq!(out.records.len(), 6);
    for name in ["records.csv", "records.json", "fits.json", "variance_vs_n.svg", "deff_vs_n.svg", "product_vs_n.svg"] {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }
    for m in Method::ALL {
        for n in [2, 3] {
            assert!(dir.path().join(format!("spectrum_{m}_{n}.csv")).is_file());
        }
    }
    let csv = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER.join(","));

    let mut back = read_csv(csv.as_bytes()).unwrap();
    attach_spectra(&mut back, dir.path()).unwrap();
    for (a, b) in out.records.iter().zip(&back) {
        assert_eq!(a.csv_fields(), b.csv_fields());
        assert_eq!(a.spectrum, b.spectrum);
    }

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("records.json")).unwrap()).unwrap();
    assert_eq!(json["records"].as_array().unwrap().len(), 6);
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let base = small(dir.path());
    let a = compute_sweep(&SweepConfig { workers: Some(1), ..base.clone() }).unwrap();
    let b = compute_sweep(&SweepConfig { workers: Some(4), ..base }).unwrap();
    assert_eq!(a.records.len(), b.records.len());
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_eq!(x.csv_fields(), y.csv_fields());
        assert_eq!(x.spectrum, y.spectrum);
        assert_eq!(x.loss_trajectory, y.loss_trajectory);
    }
}

#[test]
fn master_seed_changes_random_cells_only_through_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let a = compute_sweep(&small(dir.path())).unwrap();
    let b = compute_sweep(&SweepConfig { master_seed: 8, ..small(dir.path()) }).unwrap();
    for (x, y) in a.records.iter().zip(&b.records) {
        assert_ne!(x.seed, y.seed);
        assert_eq!(x.n_params, y.n_params);
    }
}

#[test]
fn unwritable_output_is_reported_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("not_a_dir");
    fs::write(&file, "x").unwrap();
    let config = SweepConfig {
        out_dir: file.join("sub"),
        ..small(dir.path())
    };
    assert!(run_sweep(&config).is_err());
}

#[test]
fn invariant_checks_hold() {
    for c in [
        checks::pointwise_rank_bound(PROJECTED),
        checks::cell_isolation(&SweepConfig::default()),
        checks::mutation_detected(),
    ] {
        assert!(c.passed, "{}", c.line());
    }
    let dir = tempfile::tempdir().unwrap();
    let out = compute_sweep(&small(dir.path())).unwrap();
    assert!(checks::record_arithmetic(&out).passed);
    assert!(checks::threshold_stability(&out).passed);
}

#[test]
fn oracle_agrees_on_known_algebras() {
    use pqclab_core::algebra::PauliSum;
    let sums = |ls: &[&str]| ls.iter().map(|l| PauliSum::from_label(l, 1.0).unwrap()).collect::<Vec<_>>();
    assert_eq!(checks::oracle_closure_dim(&sums(&["X", "Z"])), 3);
    assert_eq!(checks::oracle_closure_dim(&sums(&["ZI", "IZ", "ZZ"])), 3);
    assert_eq!(checks::oracle_closure_dim(&sums(&["XI", "ZI", "IX", "IZ", "ZZ"])), 15);
}
