//! Time-dependent, divergence-free, band-limited velocity fields and the
//! weighted `l1` norms of their Fourier coefficients.

mod coeffs;
mod pierrehumbert;
mod random_band;
mod weight;

pub use coeffs::{VelocityCoeffs, VelocityMode};
pub use pierrehumbert::Pierrehumbert;
pub use random_band::RandomBandFlow;
pub use weight::{Weight, WeightValue};

/// Direction of a pure sinusoidal shear.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShearAxis {
    /// `u = (A sin(2 pi x2 + theta), 0)`
    Horizontal,
    /// `u = (0, A sin(2 pi x1 + theta))`
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shear {
    pub axis: ShearAxis,
    pub amplitude: f64,
    pub phase: f64,
}

/// A time interval `[start, end)` on which the velocity is a fixed shear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShearSegment {
    pub shear: Shear,
    pub start: f64,
    pub end: f64,
}

/// Source of Fourier coefficients `u_hat_t(k)`.
///
/// Evaluation is a pure function of the model's seed and `t`, so one model
/// can be queried from any number of integrator stages.
pub trait VelocityModel: Send + Sync {
    /// `L` such that `u_hat_t(k) = 0` whenever `|k| > L`.
    fn band_limit(&self) -> usize;

    /// Scale of `sup |u|`, used for the advective CFL number.
    fn amplitude(&self) -> f64;

    /// Right-continuous coefficients at `t`.
    fn coefficients(&self, t: f64) -> VelocityCoeffs;

    /// Left limit at `t`; differs from [`VelocityModel::coefficients`] only at
    /// switching times of piecewise-constant models.
    fn coefficients_before(&self, t: f64) -> VelocityCoeffs {
        self.coefficients(t)
    }

    /// The shear segment containing `t`, if the velocity is a pure shear there.
    fn shear_segment(&self, _t: f64) -> Option<ShearSegment> {
        None
    }

    /// Period of the law of the velocity, when it has one.
    fn period(&self) -> Option<f64> {
        None
    }
}

/// `u = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroVelocity;

impl VelocityModel for ZeroVelocity {
    fn band_limit(&self) -> usize {
        0
    }

    fn amplitude(&self) -> f64 {
        0.0
    }

    fn coefficients(&self, _t: f64) -> VelocityCoeffs {
        VelocityCoeffs::zero()
    }
}

/// `sum_k w(|k|) |u_hat_t(k)|`, or `None` when a mode with infinite weight
/// is active.
pub fn weighted_l1(model: &dyn VelocityModel, t: f64, weight: &Weight) -> Option<f64> {
    model.coefficients(t).weighted_l1(weight)
}
