use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{SpectralField, WaveGrid};
use crate::error::{Error, Result};

/// Samples of a real field on the uniform `P x P` grid `x = (a/P, b/P)`,
/// stored row-major with `a` (the `x1` index) slow.
#[derive(Debug, Clone)]
pub struct PhysicalField {
    points: usize,
    values: Vec<f64>,
}

impl PhysicalField {
    pub fn new(points: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != points * points {
            return Err(Error::invalid(format!(
                "expected {} samples, got {}",
                points * points,
                values.len()
            )));
        }
        Ok(Self { points, values })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `int |f|^2 dx` by the rectangle rule, exact for trigonometric
    /// polynomials resolved by the sample grid.
    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64
    }
}

/// Planned square 2-D FFT of side `P` used for zero-padded transforms.
pub struct Fft2 {
    points: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    column: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(points: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(points);
        let inverse = planner.plan_fft_inverse(points);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            points,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            column: vec![Complex64::new(0.0, 0.0); points],
        }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Scatter lattice amplitudes into a zero-padded `P x P` buffer and
    /// evaluate `sum_k c(k) exp(2 pi i k.x)` at the sample points.
    pub fn synthesize(&mut self, grid: &WaveGrid, coeffs: &[Complex64], out: &mut Vec<Complex64>) {
        let p = self.points;
        out.clear();
        out.resize(p * p, Complex64::new(0.0, 0.0));
        for (i, k1, k2) in grid.modes() {
            let c = coeffs[i];
            if c.re != 0.0 || c.im != 0.0 {
                out[wrap(k1, p) * p + wrap(k2, p)] = c;
            }
        }
        self.transform(out, false);
    }

    /// Scatter a sparse list of `(k1, k2, c)` terms and synthesize.
    pub fn synthesize_sparse(&mut self, terms: &[(i64, i64, Complex64)], out: &mut Vec<Complex64>) {
        let p = self.points;
        out.clear();
        out.resize(p * p, Complex64::new(0.0, 0.0));
        for &(k1, k2, c) in terms {
            out[wrap(k1, p) * p + wrap(k2, p)] += c;
        }
        self.transform(out, false);
    }

    /// Inverse of [`Fft2::synthesize`]: normalized forward transform, then
    /// gather the lattice modes.
    pub fn analyze(&mut self, grid: &WaveGrid, buf: &mut [Complex64], coeffs: &mut [Complex64]) {
        let p = self.points;
        self.transform(buf, true);
        let norm = 1.0 / (p * p) as f64;
        for (i, k1, k2) in grid.modes() {
            coeffs[i] = buf[wrap(k1, p) * p + wrap(k2, p)] * norm;
        }
    }

    fn transform(&mut self, buf: &mut [Complex64], forward: bool) {
        let p = self.points;
        let plan = if forward {
            &self.forward
        } else {
            &self.inverse
        };
        for row in buf.chunks_exact_mut(p) {
            plan.process_with_scratch(row, &mut self.scratch);
        }
        for b in 0..p {
            for a in 0..p {
                self.column[a] = buf[a * p + b];
            }
            plan.process_with_scratch(&mut self.column, &mut self.scratch);
            for a in 0..p {
                buf[a * p + b] = self.column[a];
            }
        }
    }
}

fn wrap(k: i64, p: usize) -> usize {
    k.rem_euclid(p as i64) as usize
}

/// Evaluate `f` on a `points x points` grid. `points >= 2N + 1` is required
/// so the transform is invertible.
pub fn to_physical(field: &SpectralField, points: usize) -> Result<PhysicalField> {
    let grid = field.grid();
    if points < grid.side() {
        return Err(Error::invalid(format!(
            "physical grid of {points} points cannot represent modes up to {}",
            grid.max_mode()
        )));
    }
    let mut fft = Fft2::new(points);
    let mut buf = Vec::new();
    fft.synthesize(grid, field.amplitudes(), &mut buf);
    Ok(PhysicalField {
        points,
        values: buf.into_iter().map(|z| z.re).collect(),
    })
}

/// Project samples onto the lattice modes of `grid`.
pub fn to_spectral(grid: Arc<WaveGrid>, samples: &PhysicalField) -> Result<SpectralField> {
    let p = samples.points;
    if p < grid.side() {
        return Err(Error::invalid(format!(
            "physical grid of {p} points cannot represent modes up to {}",
            grid.max_mode()
        )));
    }
    let mut fft = Fft2::new(p);
    let mut buf: Vec<Complex64> = samples
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    let mut amps = vec![Complex64::new(0.0, 0.0); grid.len()];
    fft.analyze(&grid, &mut buf, &mut amps);
    SpectralField::from_amplitudes(grid, amps)
}
