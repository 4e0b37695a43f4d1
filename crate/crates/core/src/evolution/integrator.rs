use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bessel::bessel_j_sequence;
use super::galerkin::{advection_direct, default_padding, GalerkinRhs};
use crate::error::{Error, Result};
use crate::spectral::{SpectralField, WaveGrid};
use crate::velocity::{Shear, ShearAxis, VelocityCoeffs, VelocityModel};

/// Largest admissible advective CFL number `A dt N` for the RK4 scheme.
pub const MAX_CFL: f64 = 0.5;

/// Above this many active velocity modes the RK4 stages use the padded FFT
/// product instead of the direct band convolution.
const DIRECT_PRODUCT_MAX_MODES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Strang splitting: exact half-step diffusion, RK4 advection, exact
    /// half-step diffusion.
    SplitStepGalerkin,
    /// Strang splitting with the exact Fourier action of a shear map as the
    /// advection substep. Only valid for pure shear velocities.
    ExactShearMap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    pub dt: f64,
    /// Zero padding per axis for pseudo-spectral products; defaults to `max(L, N/2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dealias_pad: Option<usize>,
}

impl IntegratorSpec {
    pub fn split_step(dt: f64) -> Self {
        Self {
            scheme: Scheme::SplitStepGalerkin,
            dt,
            dealias_pad: None,
        }
    }

    pub fn exact_shear(dt: f64) -> Self {
        Self {
            scheme: Scheme::ExactShearMap,
            dt,
            dealias_pad: None,
        }
    }

    pub fn cfl(&self, max_mode: usize, amplitude: f64) -> f64 {
        amplitude * self.dt * max_mode as f64
    }

    pub fn validate(&self, max_mode: usize, model: &dyn VelocityModel) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if let Some(pad) = self.dealias_pad {
            if pad < model.band_limit() {
                return Err(Error::invalid(format!(
                    "dealias padding {pad} below velocity band {}",
                    model.band_limit()
                )));
            }
        }
        if self.scheme == Scheme::SplitStepGalerkin {
            let cfl = self.cfl(max_mode, model.amplitude());
            if cfl > MAX_CFL {
                return Err(Error::invalid(format!(
                    "advective CFL number A dt N = {cfl:.3} exceeds {MAX_CFL}"
                )));
            }
        }
        Ok(())
    }
}

/// Reusable single-step propagator for one grid, diffusivity and scheme.
///
/// Each step is `D(dt/2) A(dt) D(dt/2)`, where `D` is the exact diffusion
/// multiplier `exp(-4 pi^2 nu |k|^2 s)` and `A` the advection substep.
pub struct Stepper {
    grid: Arc<WaveGrid>,
    nu: f64,
    spec: IntegratorSpec,
    half_decay: Vec<f64>,
    half_mass: Vec<f64>,
    pseudo: Option<GalerkinRhs>,
    stage: [Vec<Complex64>; 4],
    line: Vec<Complex64>,
    line_out: Vec<Complex64>,
    kernel: Vec<Complex64>,
}

impl Stepper {
    pub fn new(
        grid: Arc<WaveGrid>,
        nu: f64,
        spec: IntegratorSpec,
        model: &dyn VelocityModel,
    ) -> Result<Self> {
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::invalid(format!(
                "diffusivity must be nonnegative, got {nu}"
            )));
        }
        spec.validate(grid.max_mode(), model)?;
        let half = spec.dt / 2.0;
        let mut half_decay = Vec::with_capacity(grid.len());
        let mut half_mass = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let lambda = 4.0 * PI * PI * nu * grid.modulus_sq(i) as f64;
            half_decay.push((-lambda * half).exp());
            // int_0^{dt/2} exp(-2 lambda s) ds
            half_mass.push(if lambda > 0.0 {
                -(-2.0 * lambda * half).exp_m1() / (2.0 * lambda)
            } else {
                half
            });
        }
        let band_modes = (2 * model.band_limit() + 1).pow(2);
        let pseudo = (spec.scheme == Scheme::SplitStepGalerkin
            && band_modes > DIRECT_PRODUCT_MAX_MODES)
            .then(|| {
                let pad = spec
                    .dealias_pad
                    .unwrap_or_else(|| default_padding(grid.max_mode(), model.band_limit()));
                GalerkinRhs::new(grid.clone(), nu, pad)
            });
        let n = grid.len();
        let side = grid.side();
        Ok(Self {
            nu,
            spec,
            half_decay,
            half_mass,
            pseudo,
            stage: std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]),
            line: vec![Complex64::new(0.0, 0.0); side],
            line_out: vec![Complex64::new(0.0, 0.0); side],
            kernel: Vec::new(),
            grid,
        })
    }

    pub fn grid(&self) -> &Arc<WaveGrid> {
        &self.grid
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn spec(&self) -> &IntegratorSpec {
        &self.spec
    }

    /// Advance `phi` from `t` to `t + dt`.
    pub fn step(
        &mut self,
        phi: &mut SpectralField,
        model: &dyn VelocityModel,
        t: f64,
    ) -> Result<()> {
        self.step_accumulating(phi, model, t, None)
    }

    /// Advance one step and add `int |phi_hat(k)|^2 dt` over the step to
    /// `mass_integral[k]`. The integral is exact for the split dynamics: the
    /// advection substep takes no time, and each diffusion half step decays
    /// every mode exponentially.
    pub fn step_accumulating(
        &mut self,
        phi: &mut SpectralField,
        model: &dyn VelocityModel,
        t: f64,
        mut mass_integral: Option<&mut [f64]>,
    ) -> Result<()> {
        self.diffuse_half(phi, mass_integral.as_deref_mut());
        self.advect(phi, model, t)?;
        self.diffuse_half(phi, mass_integral);
        Ok(())
    }

    fn diffuse_half(&self, phi: &mut SpectralField, mass_integral: Option<&mut [f64]>) {
        let amps = phi.amplitudes_mut();
        match mass_integral {
            Some(acc) => {
                for (((a, d), w), s) in amps
                    .iter_mut()
                    .zip(&self.half_decay)
                    .zip(&self.half_mass)
                    .zip(acc)
                {
                    *s += a.norm_sqr() * w;
                    *a *= *d;
                }
            }
            None => {
                for (a, d) in amps.iter_mut().zip(&self.half_decay) {
                    *a *= *d;
                }
            }
        }
    }

    fn advect(&mut self, phi: &mut SpectralField, model: &dyn VelocityModel, t: f64) -> Result<()> {
        match self.spec.scheme {
            Scheme::SplitStepGalerkin => self.advect_rk4(phi, model, t),
            Scheme::ExactShearMap => self.advect_shear(phi, model, t),
        }
    }

    fn advection_into(
        &mut self,
        phi: &SpectralField,
        coeffs: &VelocityCoeffs,
        slot: usize,
    ) -> Result<()> {
        let mut out = std::mem::take(&mut self.stage[slot]);
        let res = match &mut self.pseudo {
            Some(rhs) => rhs.advection(phi, coeffs, &mut out),
            None => {
                advection_direct(phi, coeffs, &mut out);
                Ok(())
            }
        };
        self.stage[slot] = out;
        res
    }

    fn advect_rk4(
        &mut self,
        phi: &mut SpectralField,
        model: &dyn VelocityModel,
        t: f64,
    ) -> Result<()> {
        let dt = self.spec.dt;
        let c0 = model.coefficients(t);
        let cm = model.coefficients(t + 0.5 * dt);
        let c1 = model.coefficients_before(t + dt);
        if c0.is_zero() && cm.is_zero() && c1.is_zero() {
            return Ok(());
        }
        let base: Vec<Complex64> = phi.amplitudes().to_vec();
        let grid = self.grid.clone();
        let mut trial = SpectralField::from_amplitudes(grid, base.clone())?;

        // stage derivatives are -advection
        self.advection_into(&trial, &c0, 0)?;
        set_axpy(trial.amplitudes_mut(), &base, -0.5 * dt, &self.stage[0]);
        self.advection_into(&trial, &cm, 1)?;
        set_axpy(trial.amplitudes_mut(), &base, -0.5 * dt, &self.stage[1]);
        self.advection_into(&trial, &cm, 2)?;
        set_axpy(trial.amplitudes_mut(), &base, -dt, &self.stage[2]);
        self.advection_into(&trial, &c1, 3)?;

        let w = dt / 6.0;
        let [s0, s1, s2, s3] = &self.stage;
        for (i, a) in phi.amplitudes_mut().iter_mut().enumerate() {
            *a -= (s0[i] + (s1[i] + s2[i]) * 2.0 + s3[i]) * w;
        }
        Ok(())
    }

    fn advect_shear(
        &mut self,
        phi: &mut SpectralField,
        model: &dyn VelocityModel,
        t: f64,
    ) -> Result<()> {
        let t_end = t + self.spec.dt;
        let tol = 1e-9 * self.spec.dt;
        let mut now = t;
        while now < t_end - tol {
            let seg = model
                .shear_segment(now)
                .ok_or_else(|| Error::invalid("exact_shear_map requires a pure shear velocity"))?;
            let stop = if seg.end >= t_end - tol {
                t_end
            } else {
                seg.end
            };
            self.apply_shear(phi, &seg.shear, stop - now);
            now = stop;
        }
        Ok(())
    }

    /// Exact transport by a shear over `duration`: for the horizontal shear,
    /// `phi(x1 - s A sin(2 pi x2 + theta), x2)`, whose column `k1` is
    /// convolved in `k2` with `J_n(-2 pi k1 s A) e^{i n theta}`.
    fn apply_shear(&mut self, phi: &mut SpectralField, shear: &Shear, duration: f64) {
        let n = self.grid.max_mode();
        let side = self.grid.side();
        let amps = phi.amplitudes_mut();
        let len = amps.len();
        for k in 1..=n {
            let z = -2.0 * PI * k as f64 * duration * shear.amplitude;
            build_kernel(&mut self.kernel, z, shear.phase);
            let pos = n + k;
            match shear.axis {
                ShearAxis::Horizontal => {
                    self.line
                        .copy_from_slice(&amps[pos * side..(pos + 1) * side]);
                }
                ShearAxis::Vertical => {
                    for (q, v) in self.line.iter_mut().enumerate() {
                        *v = amps[q * side + pos];
                    }
                }
            }
            convolve_line(&self.kernel, &self.line, &mut self.line_out);
            for (q, v) in self.line_out.iter().enumerate() {
                let idx = match shear.axis {
                    ShearAxis::Horizontal => pos * side + q,
                    ShearAxis::Vertical => q * side + pos,
                };
                amps[idx] = *v;
                amps[len - 1 - idx] = v.conj();
            }
        }
    }
}

fn set_axpy(dst: &mut [Complex64], base: &[Complex64], factor: f64, dir: &[Complex64]) {
    for ((d, b), v) in dst.iter_mut().zip(base).zip(dir) {
        *d = b + v * factor;
    }
}

/// Kernel `c_n = J_n(z) e^{i n theta}` for `n = -M..=M`, stored at `n + M`.
fn build_kernel(kernel: &mut Vec<Complex64>, z: f64, theta: f64) {
    let bessel = bessel_j_sequence(z.abs());
    let m = bessel.len() - 1;
    let sign = if z < 0.0 { -1.0 } else { 1.0 };
    kernel.clear();
    kernel.resize(2 * m + 1, Complex64::new(0.0, 0.0));
    let mut rot = Complex64::new(1.0, 0.0);
    let step = Complex64::from_polar(1.0, theta);
    let mut parity = 1.0;
    for (order, &j) in bessel.iter().enumerate() {
        // J_n(z) = sign^n J_n(|z|), J_{-n}(z) = (-1)^n J_n(z)
        let jn = j * parity;
        kernel[m + order] = rot * jn;
        if order > 0 {
            let alt = if order % 2 == 0 { 1.0 } else { -1.0 };
            kernel[m - order] = rot.conj() * (jn * alt);
        }
        rot *= step;
        parity *= sign;
    }
}

/// `out[q] = sum_n kernel[n] input[q - n]` truncated to the line.
fn convolve_line(kernel: &[Complex64], input: &[Complex64], out: &mut [Complex64]) {
    let m = (kernel.len() / 2) as i64;
    let len = input.len() as i64;
    out.fill(Complex64::new(0.0, 0.0));
    let first = input.iter().position(|v| v.re != 0.0 || v.im != 0.0);
    let Some(first) = first else { return };
    let last = input
        .iter()
        .rposition(|v| v.re != 0.0 || v.im != 0.0)
        .unwrap_or(first) as i64;
    let first = first as i64;
    for (ni, c) in kernel.iter().enumerate() {
        let shift = ni as i64 - m;
        // q - shift must lie in [first, last] and q in [0, len)
        let q_lo = (first + shift).max(0);
        let q_hi = (last + shift).min(len - 1);
        if q_lo > q_hi {
            continue;
        }
        let src = &input[(q_lo - shift) as usize..=(q_hi - shift) as usize];
        let dst = &mut out[q_lo as usize..=q_hi as usize];
        for (o, a) in dst.iter_mut().zip(src) {
            *o += c * a;
        }
    }
}

/// Convenience single step returning a new field.
pub fn step(
    phi: &SpectralField,
    model: &dyn VelocityModel,
    nu: f64,
    t: f64,
    spec: &IntegratorSpec,
) -> Result<SpectralField> {
    let mut stepper = Stepper::new(phi.grid().clone(), nu, *spec, model)?;
    let mut out = phi.clone();
    stepper.step(&mut out, model, t)?;
    Ok(out)
}
