use std::sync::Arc;

use batchelor::evolution::{advection_direct, galerkin_rhs};
use batchelor::flux::bilinear_sums;
use batchelor::oracle::{brute_force_bilinear, brute_force_rhs, run_oracle};
use batchelor::spectral::{SpectralField, WaveGrid};
use batchelor::velocity::{Pierrehumbert, VelocityModel};
use num_complex::Complex64;

#[test]
fn random_inputs_match_direct_sums_at_n8() {
    let report = run_oracle(8, 100, 2024).unwrap();
    assert!(report.rhs_error < 1e-12, "{report:?}");
    assert!(report.bilinear_error < 1e-12, "{report:?}");
}

#[test]
fn pierrehumbert_coefficients_match_direct_sums() {
    let grid = Arc::new(WaveGrid::new(8));
    let flow = Pierrehumbert::new(1.3, 1.0, 5).unwrap();
    for (seed, t) in [(1u64, 0.2), (2, 0.7), (3, 1.4)] {
        let phi = SpectralField::random_band(grid.clone(), 8, seed).unwrap();
        let coeffs = flow.coefficients(t);
        let direct = brute_force_rhs(&phi, &coeffs, 3e-3);
        let fast = galerkin_rhs(&phi, &coeffs, 3e-3, None).unwrap();
        for (a, b) in fast.amplitudes().iter().zip(&direct) {
            assert!((a - b).norm() < 1e-12);
        }

        // the band convolution carries the advection only
        let mut adv = vec![Complex64::new(0.0, 0.0); grid.len()];
        advection_direct(&phi, &coeffs, &mut adv);
        let pure = brute_force_rhs(&phi, &coeffs, 0.0);
        for (a, b) in adv.iter().zip(&pure) {
            assert!((-a - b).norm() < 1e-12);
        }

        let radii = [0.5, 1.0, 2.5, 4.0, 7.9, 8.0];
        let direct = brute_force_bilinear(&phi, &coeffs, &radii);
        let fast = bilinear_sums(&phi, &coeffs, &radii);
        for (a, b) in fast.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12 * b.max(1.0));
        }
    }
}
