use std::f64::consts::PI;

use batchelor::experiment::{ito_cross_check, run_ensemble, ExperimentConfig};
use batchelor::measures::{bad_intervals, log_density};

const DIFFUSION: &str = include_str!("../../../configs/diffusion.toml");

#[test]
fn pure_diffusion_single_atom() {
    let config = ExperimentConfig::from_toml(DIFFUSION).unwrap();
    let (result, _) = run_ensemble(&config).unwrap();
    let expected = 1.0 / (8.0 * PI * PI * config.physics.nu);
    let m = result.estimate.measure();
    assert_eq!(m.support(), vec![1.0]);
    assert!((m.total() - expected).abs() < 1e-4 * expected);
    assert_eq!(result.dissipation_scale, Some(1.0));
    // nothing beyond the atom: every annulus in the window is bad
    let bad = bad_intervals(&m, 2.0, 1e-3, 2.0, 64.0).unwrap();
    assert_eq!(log_density(&bad, 2.0, 64.0).unwrap(), 1.0);
}

#[test]
fn worker_count_does_not_change_results() {
    let text = DIFFUSION.replace(
        "kind = \"zero\"",
        "kind = \"pierrehumbert\"\namplitude = 1.0\nperiod = 1.0",
    );
    let base = ExperimentConfig::from_toml_with_overrides(
        &text,
        &[
            "grid.max_mode=16".into(),
            "physics.nu=1e-2".into(),
            "physics.horizon=3.0".into(),
            "integrator.scheme=\"exact_shear_map\"".into(),
            "integrator.dt=0.0625".into(),
            "ensemble.M=6".into(),
            "sampling.tail_threshold=1e-3".into(),
        ],
    )
    .unwrap();
    let mut a = base.clone();
    a.ensemble.workers = Some(1);
    let mut b = base.clone();
    b.ensemble.workers = Some(3);
    let (ra, _) = run_ensemble(&a).unwrap();
    let (mut rb, _) = run_ensemble(&b).unwrap();
    // the stored config records the worker count; everything else must match
    rb.config.ensemble.workers = Some(1);
    assert_eq!(ra.to_json().unwrap(), rb.to_json().unwrap());
}

#[test]
fn forced_and_unforced_agree_on_small_grid() {
    let text = DIFFUSION.replace(
        "kind = \"zero\"",
        "kind = \"pierrehumbert\"\namplitude = 1.0\nperiod = 1.0\nrandom_offset = true",
    );
    let config = ExperimentConfig::from_toml_with_overrides(
        &text,
        &[
            "grid.max_mode=12".into(),
            "physics.nu=2e-2".into(),
            "physics.horizon=4.0".into(),
            "integrator.scheme=\"exact_shear_map\"".into(),
            "integrator.dt=0.0625".into(),
            "ensemble.M=300".into(),
            "sampling.tail_threshold=1e-3".into(),
        ],
    )
    .unwrap();
    let report = ito_cross_check(&config, 300).unwrap();
    assert!(report.occupied > 10);
    assert!(report.fraction_within_3 >= 0.9, "{report:?}");
}
