use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Fft2, SpectralField, WaveGrid};
use crate::velocity::VelocityCoeffs;

const TWO_PI: f64 = 2.0 * PI;

/// Smallest `P >= min` whose only prime factors are 2, 3 and 5.
pub fn fast_fft_size(min: usize) -> usize {
    (min.max(1)..)
        .find(|&p| {
            let mut q = p;
            for f in [2, 3, 5] {
                while q % f == 0 {
                    q /= f;
                }
            }
            q == 1
        })
        .expect("unbounded search")
}

/// Default zero padding per axis: `max(L, N/2)`.
pub fn default_padding(max_mode: usize, band_limit: usize) -> usize {
    band_limit.max(max_mode / 2)
}

/// Exact truncated convolution `out(k) = 2 pi i sum_m (k . u_hat(m)) phi(k - m)`,
/// i.e. the Fourier coefficients of `u . grad phi` restricted to the grid.
pub fn advection_direct(phi: &SpectralField, coeffs: &VelocityCoeffs, out: &mut [Complex64]) {
    let grid = phi.grid();
    let amps = phi.amplitudes();
    let n = grid.max_mode() as i64;
    let side = grid.side();
    out.fill(Complex64::new(0.0, 0.0));
    for m in coeffs.modes() {
        if m.magnitude() == 0.0 {
            continue;
        }
        let u1 = m.coeff[0] * Complex64::new(0.0, TWO_PI);
        let u2 = m.coeff[1] * Complex64::new(0.0, TWO_PI);
        let k1_lo = (-n).max(m.k1 - n);
        let k1_hi = n.min(m.k1 + n);
        let k2_lo = (-n).max(m.k2 - n);
        let k2_hi = n.min(m.k2 + n);
        if k1_lo > k1_hi || k2_lo > k2_hi {
            continue;
        }
        let width = (k2_hi - k2_lo + 1) as usize;
        for k1 in k1_lo..=k1_hi {
            let out_row = ((k1 + n) as usize) * side + (k2_lo + n) as usize;
            let in_row = ((k1 - m.k1 + n) as usize) * side + (k2_lo - m.k2 + n) as usize;
            let base = u1 * k1 as f64;
            let dst = &mut out[out_row..out_row + width];
            let src = &amps[in_row..in_row + width];
            for (c, (o, a)) in dst.iter_mut().zip(src).enumerate() {
                let k2 = (k2_lo + c as i64) as f64;
                *o += (base + u2 * k2) * a;
            }
        }
    }
}

/// Pseudo-spectral evaluation of the Galerkin right-hand side:
/// `d phi/dt (k) = -4 pi^2 nu |k|^2 phi(k) - (u . grad phi)^(k)`, with the
/// product formed on a zero-padded physical grid.
pub struct GalerkinRhs {
    grid: Arc<WaveGrid>,
    nu: f64,
    padding: usize,
    fft: Fft2,
    bufs: [Vec<Complex64>; 4],
    scratch: Vec<Complex64>,
}

impl GalerkinRhs {
    pub fn new(grid: Arc<WaveGrid>, nu: f64, padding: usize) -> Self {
        let points = fast_fft_size(grid.side() + padding);
        Self {
            nu,
            padding,
            fft: Fft2::new(points),
            bufs: Default::default(),
            scratch: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    pub fn padding(&self) -> usize {
        self.padding
    }

    pub fn points(&self) -> usize {
        self.fft.points()
    }

    /// Coefficients of `u . grad phi` on the grid. Rejects velocities whose
    /// band exceeds the padding (the product would alias).
    pub fn advection(
        &mut self,
        phi: &SpectralField,
        coeffs: &VelocityCoeffs,
        out: &mut [Complex64],
    ) -> Result<()> {
        let band = coeffs.support_radius();
        let reach = coeffs
            .modes()
            .iter()
            .map(|m| m.k1.abs().max(m.k2.abs()))
            .max()
            .unwrap_or(0) as usize;
        if reach > self.padding {
            return Err(Error::invalid(format!(
                "padding {} cannot dealias a velocity of band {band}",
                self.padding
            )));
        }
        if coeffs.is_zero() {
            out.fill(Complex64::new(0.0, 0.0));
            return Ok(());
        }
        let grid = &*self.grid;
        let amps = phi.amplitudes();
        let [dx1, dx2, ux1, ux2] = &mut self.bufs;

        for (i, k1, _) in grid.modes() {
            self.scratch[i] = amps[i] * Complex64::new(0.0, TWO_PI * k1 as f64);
        }
        self.fft.synthesize(grid, &self.scratch, dx1);
        for (i, _, k2) in grid.modes() {
            self.scratch[i] = amps[i] * Complex64::new(0.0, TWO_PI * k2 as f64);
        }
        self.fft.synthesize(grid, &self.scratch, dx2);

        let first: Vec<_> = coeffs
            .modes()
            .iter()
            .map(|m| (m.k1, m.k2, m.coeff[0]))
            .collect();
        let second: Vec<_> = coeffs
            .modes()
            .iter()
            .map(|m| (m.k1, m.k2, m.coeff[1]))
            .collect();
        self.fft.synthesize_sparse(&first, ux1);
        self.fft.synthesize_sparse(&second, ux2);

        for (((d1, d2), v1), v2) in dx1
            .iter_mut()
            .zip(dx2.iter())
            .zip(ux1.iter())
            .zip(ux2.iter())
        {
            // both factors are real up to rounding
            *d1 = Complex64::new(v1.re * d1.re + v2.re * d2.re, 0.0);
        }
        self.fft.analyze(grid, dx1, out);
        Ok(())
    }

    /// Full right-hand side including diffusion.
    pub fn evaluate(
        &mut self,
        phi: &SpectralField,
        coeffs: &VelocityCoeffs,
    ) -> Result<SpectralField> {
        let mut adv = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        self.advection(phi, coeffs, &mut adv)?;
        let amps = phi.amplitudes();
        for (i, a) in adv.iter_mut().enumerate() {
            let lambda = 4.0 * PI * PI * self.nu * self.grid.modulus_sq(i) as f64;
            *a = -lambda * amps[i] - *a;
        }
        SpectralField::from_amplitudes(self.grid.clone(), adv)
    }
}

/// One-shot pseudo-spectral Galerkin right-hand side with padding `padding`
/// per axis (`None` selects `max(L, N/2)`).
pub fn galerkin_rhs(
    phi: &SpectralField,
    coeffs: &VelocityCoeffs,
    nu: f64,
    padding: Option<usize>,
) -> Result<SpectralField> {
    let grid = phi.grid().clone();
    let band = coeffs.support_radius().ceil() as usize;
    let pad = padding.unwrap_or_else(|| default_padding(grid.max_mode(), band));
    GalerkinRhs::new(grid, nu, pad).evaluate(phi, coeffs)
}
