//! O(N^4) reference evaluations used to cross-check the fast paths.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::galerkin_rhs;
use crate::flux::bilinear_sums;
use crate::spectral::{SpectralField, WaveGrid};
use crate::velocity::{RandomBandFlow, VelocityCoeffs, VelocityModel};

/// `-4 pi^2 nu |k|^2 phi(k) - 2 pi i sum_j (j . u_hat(k - j)) phi(j)` by
/// direct double sum over the grid.
pub fn brute_force_rhs(phi: &SpectralField, coeffs: &VelocityCoeffs, nu: f64) -> Vec<Complex64> {
    let grid = phi.grid();
    let amps = phi.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (k, k1, k2) in grid.modes() {
        let mut adv = Complex64::new(0.0, 0.0);
        for (j, j1, j2) in grid.modes() {
            if let Some(u) = coeffs.get(k1 - j1, k2 - j2) {
                adv += u.dot(j1, j2) * amps[j];
            }
        }
        let decay = 4.0 * PI * PI * nu * grid.modulus_sq(k) as f64;
        out[k] = -decay * amps[k] - Complex64::new(0.0, 2.0 * PI) * adv;
    }
    out
}

/// `sum_{|k| >= r} sum_{|j| < r} |phi(k)| |u_hat(k - j)| |phi(j)|` for each `r`.
pub fn brute_force_bilinear(
    phi: &SpectralField,
    coeffs: &VelocityCoeffs,
    radii: &[f64],
) -> Vec<f64> {
    let grid = phi.grid();
    let amps = phi.amplitudes();
    radii
        .iter()
        .map(|&r| {
            let mut sum = 0.0;
            for (k, k1, k2) in grid.modes() {
                if grid.modulus(k) < r {
                    continue;
                }
                for (j, j1, j2) in grid.modes() {
                    if grid.modulus(j) >= r {
                        continue;
                    }
                    if let Some(u) = coeffs.get(k1 - j1, k2 - j2) {
                        sum += amps[k].norm() * u.magnitude() * amps[j].norm();
                    }
                }
            }
            sum
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub max_mode: usize,
    pub trials: usize,
    /// Largest `|fast - direct|`, relative to `max(1, max |direct|)` per trial.
    pub rhs_error: f64,
    pub bilinear_error: f64,
}

/// Compare [`galerkin_rhs`] and [`bilinear_sums`] against the direct sums on
/// `trials` random Hermitian fields and random band-limited velocities.
pub fn run_oracle(max_mode: usize, trials: usize, seed: u64) -> Result<OracleReport> {
    if max_mode < 2 {
        return Err(Error::invalid("oracle needs N >= 2"));
    }
    let grid = Arc::new(WaveGrid::new(max_mode));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = OracleReport {
        max_mode,
        trials,
        rhs_error: 0.0,
        bilinear_error: 0.0,
    };
    for _ in 0..trials {
        let band = rng.random_range(1..=max_mode);
        let phi = SpectralField::random_band(grid.clone(), band, rng.random())?;
        let l = rng.random_range(1..=3.min(max_mode));
        let flow = RandomBandFlow::new(l, 1.0, rng.random_range(0.1..2.0), 1.0, rng.random())?;
        let coeffs = flow.coefficients(rng.random_range(0.0..5.0));
        let nu = rng.random_range(0.0..0.05);

        let fast = galerkin_rhs(&phi, &coeffs, nu, None)?;
        let direct = brute_force_rhs(&phi, &coeffs, nu);
        let scale = direct.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let err = fast
            .amplitudes()
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        report.rhs_error = report.rhs_error.max(err / scale);

        let mut radii: Vec<f64> = (0..8)
            .map(|_| rng.random_range(0.5..max_mode as f64 * 1.5))
            .collect();
        radii.sort_by(f64::total_cmp);
        let fast = bilinear_sums(&phi, &coeffs, &radii);
        let direct = brute_force_bilinear(&phi, &coeffs, &radii);
        let scale = direct.iter().copied().fold(1.0, f64::max);
        let err = fast
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.bilinear_error = report.bilinear_error.max(err / scale);
    }
    Ok(report)
}
