use std::sync::Arc;

use batchelor::evolution::{step, IntegratorSpec};
use batchelor::flux::{audit_step, AuditStatus};
use batchelor::measures::{log_density, IntervalSet};
use batchelor::spectral::{to_physical, SpectralField, WaveGrid};
use batchelor::velocity::{RandomBandFlow, VelocityModel, Weight, ZeroVelocity};
use proptest::prelude::*;

/// Sorted cut points in `(1, 1000)` turned into alternating disjoint intervals.
fn disjoint_intervals() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(0.0f64..3.0, 2..20).prop_map(|mut xs| {
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs.chunks_exact(2)
            .map(|c| (10f64.powf(c[0]), 10f64.powf(c[1])))
            .filter(|(a, b)| b > a)
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn log_density_is_additive(parts in disjoint_intervals(), a in 1.0f64..20.0, span in 1.5f64..100.0) {
        let b = a * span;
        let whole = log_density(&IntervalSet::new(parts.clone()), a, b).unwrap();
        let sum: f64 = parts
            .iter()
            .map(|&(lo, hi)| log_density(&IntervalSet::single(lo, hi), a, b).unwrap())
            .sum();
        prop_assert!((whole - sum).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&whole));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_holds(n in 2usize..12, band in 1usize..12, seed in any::<u64>()) {
        let band = band.min(n);
        let grid = Arc::new(WaveGrid::new(n));
        let phi = SpectralField::random_band(grid, band, seed).unwrap();
        let x = to_physical(&phi, 2 * n + 2).unwrap();
        prop_assert!((x.mean_square() - phi.l2_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn diffusion_never_amplifies(seed in any::<u64>(), nu in 1e-4f64..0.1, dt in 0.01f64..1.0) {
        let grid = Arc::new(WaveGrid::new(6));
        let phi = SpectralField::random_band(grid, 6, seed).unwrap();
        let next = step(&phi, &ZeroVelocity, nu, 0.0, &IntegratorSpec::split_step(dt)).unwrap();
        for (a, b) in next.amplitudes().iter().zip(phi.amplitudes()) {
            prop_assert!(a.norm() <= b.norm());
        }
    }

    #[test]
    fn flux_inequality_holds_pointwise(seed in any::<u64>(), t in 0.0f64..10.0, nu in 1e-4f64..1e-2) {
        let grid = Arc::new(WaveGrid::new(10));
        let phi = SpectralField::random_band(grid, 10, seed).unwrap();
        let flow = RandomBandFlow::new(2, 1.0, 1.0, 0.5, seed ^ 0x5eed).unwrap();
        let radii: Vec<f64> = (1..40).map(|i| i as f64 * 0.25).collect();
        let weights = [Weight::Indicator { band: 2.0 }, Weight::Polynomial { q: 2.0 }];
        let report = audit_step(&phi, &flow.coefficients(t), nu, t, 2, &radii, &weights).unwrap();
        for row in &report.rows {
            prop_assert!(row.status != AuditStatus::Fail, "{row:?}");
        }
    }
}
