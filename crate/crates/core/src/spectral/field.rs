use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::WaveGrid;
use crate::error::{Error, Result};

const FOUR_PI_SQ: f64 = 4.0 * PI * PI;

/// Real scalar on the torus stored as Fourier amplitudes,
/// `f(x) = sum_k f_hat(k) exp(2 pi i k.x)`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<WaveGrid>,
    amps: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Arc<WaveGrid>) -> Self {
        let amps = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, amps }
    }

    /// Wraps raw amplitudes. The caller is responsible for Hermitian symmetry.
    pub fn from_amplitudes(grid: Arc<WaveGrid>, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != grid.len() {
            return Err(Error::invalid(format!(
                "expected {} amplitudes, got {}",
                grid.len(),
                amps.len()
            )));
        }
        Ok(Self { grid, amps })
    }

    /// `sqrt(2) cos(2 pi k.x)`, which has unit L2 norm for any `k != 0`.
    pub fn cosine_mode(grid: Arc<WaveGrid>, k1: i64, k2: i64) -> Result<Self> {
        if k1 == 0 && k2 == 0 {
            return Err(Error::invalid("cosine mode needs a nonzero wavevector"));
        }
        let idx = grid
            .index(k1, k2)
            .ok_or_else(|| Error::invalid(format!("mode ({k1}, {k2}) outside grid")))?;
        let mut field = Self::zeros(grid);
        let a = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let neg = field.grid.negated(idx);
        field.amps[idx] = a;
        field.amps[neg] = a;
        Ok(field)
    }

    /// Random mean-zero real field supported on `0 < |k|_inf <= band`, with
    /// independent complex Gaussian-like amplitudes, normalized to unit L2 norm.
    pub fn random_band(grid: Arc<WaveGrid>, band: usize, seed: u64) -> Result<Self> {
        if band == 0 || band > grid.max_mode() {
            return Err(Error::invalid(format!(
                "band {band} must lie in 1..={}",
                grid.max_mode()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut field = Self::zeros(grid.clone());
        let b = band as i64;
        for (i, k1, k2) in grid.modes() {
            if k1.abs() > b || k2.abs() > b || (k1, k2) == (0, 0) {
                continue;
            }
            // one representative per +-k pair
            if k1 > 0 || (k1 == 0 && k2 > 0) {
                let re: f64 = rng.random_range(-1.0..1.0);
                let im: f64 = rng.random_range(-1.0..1.0);
                let z = Complex64::new(re, im);
                field.amps[i] = z;
                field.amps[grid.negated(i)] = z.conj();
            }
        }
        let norm = field.l2_norm_sq().sqrt();
        field.scale(1.0 / norm);
        Ok(field)
    }

    pub fn grid(&self) -> &Arc<WaveGrid> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn amplitude(&self, k1: i64, k2: i64) -> Complex64 {
        self.grid
            .index(k1, k2)
            .map_or(Complex64::new(0.0, 0.0), |i| self.amps[i])
    }

    pub fn mean(&self) -> Complex64 {
        self.amps[self.grid.zero_index()]
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, factor: f64, other: &SpectralField) {
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += b * factor;
        }
    }

    /// Largest violation of `f(-k) = conj f(k)`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.amps.len();
        (0..n)
            .map(|i| (self.amps[i] - self.amps[n - 1 - i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Re-symmetrize in place by averaging each `+-k` pair.
    pub fn enforce_hermitian(&mut self) {
        let n = self.amps.len();
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let avg = (self.amps[i] + self.amps[j].conj()) * 0.5;
            self.amps[i] = avg;
            self.amps[j] = avg.conj();
        }
        let z = n / 2;
        self.amps[z] = Complex64::new(self.amps[z].re, 0.0);
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn grad_norm_sq(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| FOUR_PI_SQ * self.grid.modulus_sq(i) as f64 * a.norm_sqr())
            .sum()
    }

    /// Homogeneous `H^{-1}` norm squared; only defined for mean-zero fields.
    pub fn hminus1_norm_sq(&self) -> Result<f64> {
        if self.mean().norm() != 0.0 {
            return Err(Error::invalid("H^-1 norm requires a mean-zero field"));
        }
        Ok(self.hminus1_unchecked())
    }

    pub(crate) fn hminus1_unchecked(&self) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.modulus_sq(*i) != 0)
            .map(|(i, a)| a.norm_sqr() / (FOUR_PI_SQ * self.grid.modulus_sq(i) as f64))
            .sum()
    }

    /// `sum_k conj(f(k)) g(k)`.
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `Pi_{>= r} f`: keeps modes with `|k| >= r`.
    pub fn project_high(&self, r: f64) -> SpectralField {
        self.masked(|rho| rho >= r)
    }

    /// `Pi_{< r} f`: keeps modes with `|k| < r`.
    pub fn project_low(&self, r: f64) -> SpectralField {
        self.masked(|rho| rho < r)
    }

    /// `||Pi_{>= r} f||^2` without materializing the projection.
    pub fn high_mass(&self, r: f64) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.modulus(*i) >= r)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    fn masked(&self, keep: impl Fn(f64) -> bool) -> SpectralField {
        let zero = Complex64::new(0.0, 0.0);
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, &a)| if keep(self.grid.modulus(i)) { a } else { zero })
            .collect();
        SpectralField {
            grid: self.grid.clone(),
            amps,
        }
    }
}
