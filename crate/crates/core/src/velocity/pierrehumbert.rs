use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Shear, ShearAxis, ShearSegment, VelocityCoeffs, VelocityMode, VelocityModel};
use crate::error::{Error, Result};

// boundary snapping for t sitting on a half-period switch up to rounding
const SWITCH_EPS: f64 = 1e-9;
const OFFSET_STREAM: u64 = u64::MAX;

/// Alternating sinusoidal shears with phases redrawn every period.
///
/// On `[n tau, n tau + tau/2)` the velocity is `(A sin(2 pi x2 + a_n), 0)`,
/// on `[n tau + tau/2, (n+1) tau)` it is `(0, A sin(2 pi x1 + b_n))`, with
/// `a_n, b_n` i.i.d. uniform on `[0, 2 pi)`. The law is invariant under
/// shifts by whole periods.
///
/// An optional random clock offset, uniform on `{0, tau/q, ..., (q-1) tau/q}`
/// and drawn from the same seed, makes the law invariant under shifts by any
/// multiple of `tau/q`.
#[derive(Debug, Clone)]
pub struct Pierrehumbert {
    amplitude: f64,
    period: f64,
    seed: u64,
    offset: f64,
}

impl Pierrehumbert {
    pub fn new(amplitude: f64, period: f64, seed: u64) -> Result<Self> {
        if !(amplitude > 0.0) || !(period > 0.0) {
            return Err(Error::invalid(format!(
                "pierrehumbert needs A > 0 and tau > 0, got A = {amplitude}, tau = {period}"
            )));
        }
        Ok(Self {
            amplitude,
            period,
            seed,
            offset: 0.0,
        })
    }

    /// Shift the clock by a random multiple of `tau / quanta`.
    pub fn with_random_offset(mut self, quanta: u32) -> Result<Self> {
        if quanta == 0 {
            return Err(Error::invalid("offset quanta must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(OFFSET_STREAM);
        let j = rng.random_range(0..quanta);
        self.offset = self.period * j as f64 / quanta as f64;
        Ok(self)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Phases `(a_n, b_n)` of period `n`; a pure function of `(seed, n)`.
    pub fn phases(&self, n: i64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(n as u64);
        let a = rng.random_range(0.0..2.0 * PI);
        let b = rng.random_range(0.0..2.0 * PI);
        (a, b)
    }

    /// Half-period index containing `t`; `left` selects the left limit.
    fn half_index(&self, t: f64, left: bool) -> i64 {
        let s = 2.0 * (t + self.offset) / self.period;
        if left {
            (s - SWITCH_EPS).ceil() as i64 - 1
        } else {
            (s + SWITCH_EPS).floor() as i64
        }
    }

    fn shear_of(&self, half: i64) -> Shear {
        let (a, b) = self.phases(half.div_euclid(2));
        if half.rem_euclid(2) == 0 {
            Shear {
                axis: ShearAxis::Horizontal,
                amplitude: self.amplitude,
                phase: a,
            }
        } else {
            Shear {
                axis: ShearAxis::Vertical,
                amplitude: self.amplitude,
                phase: b,
            }
        }
    }

    fn segment(&self, half: i64) -> ShearSegment {
        let h = self.period / 2.0;
        ShearSegment {
            shear: self.shear_of(half),
            start: half as f64 * h - self.offset,
            end: (half + 1) as f64 * h - self.offset,
        }
    }
}

/// Fourier coefficients of a pure shear: `A sin(2 pi s + theta)` has
/// amplitude `-i A/2 e^{i theta}` at `+1` and its conjugate at `-1`.
pub(crate) fn shear_coefficients(shear: &Shear) -> VelocityCoeffs {
    let c = Complex64::new(0.0, -0.5 * shear.amplitude) * Complex64::from_polar(1.0, shear.phase);
    let zero = Complex64::new(0.0, 0.0);
    let (plus, minus) = match shear.axis {
        ShearAxis::Horizontal => (
            VelocityMode {
                k1: 0,
                k2: 1,
                coeff: [c, zero],
            },
            VelocityMode {
                k1: 0,
                k2: -1,
                coeff: [c.conj(), zero],
            },
        ),
        ShearAxis::Vertical => (
            VelocityMode {
                k1: 1,
                k2: 0,
                coeff: [zero, c],
            },
            VelocityMode {
                k1: -1,
                k2: 0,
                coeff: [zero, c.conj()],
            },
        ),
    };
    VelocityCoeffs::new(vec![plus, minus])
}

impl VelocityModel for Pierrehumbert {
    fn band_limit(&self) -> usize {
        1
    }

    fn amplitude(&self) -> f64 {
        self.amplitude
    }

    fn coefficients(&self, t: f64) -> VelocityCoeffs {
        shear_coefficients(&self.shear_of(self.half_index(t, false)))
    }

    fn coefficients_before(&self, t: f64) -> VelocityCoeffs {
        shear_coefficients(&self.shear_of(self.half_index(t, true)))
    }

    fn shear_segment(&self, t: f64) -> Option<ShearSegment> {
        Some(self.segment(self.half_index(t, false)))
    }

    fn period(&self) -> Option<f64> {
        Some(self.period)
    }
}
