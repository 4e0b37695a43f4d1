use serde::{Deserialize, Serialize};

use super::estimate::least_squares;
use crate::error::{Error, Result};
use crate::evolution::TrajectoryRecord;

/// Samples enter the fit while the ensemble mean exceeds this many standard
/// errors. The per-sample ratio saturates near `sqrt(M) / CV` with CV about 1,
/// so large values only admit the deterministic start of the run.
pub const SIGNAL_TO_NOISE: f64 = 3.0;

/// Certified exponential envelope `K e^{-gamma t}` of the ensemble-mean
/// `H^{-1}` norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingFit {
    pub k_hat: f64,
    pub gamma_hat: f64,
    /// RMS residual of the log-linear regression.
    pub residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

impl MixingFit {
    pub fn envelope(&self, t: f64) -> f64 {
        self.k_hat * (-self.gamma_hat * t).exp()
    }

    /// `K e^{-gamma T} / gamma`, the `H^{-1}`-based bound on the neglected
    /// tail `int_T^inf` used alongside the finite-horizon estimates.
    pub fn tail_bound(&self, horizon: f64) -> f64 {
        self.envelope(horizon) / self.gamma_hat
    }
}

/// Ensemble mean and standard error of `||phi_t||^2_{H^{-1}}` per sample time.
pub fn hminus1_curve(records: &[TrajectoryRecord]) -> Result<Vec<(f64, f64, f64)>> {
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("ensemble is empty"))?;
    if records.iter().any(|r| r.times != first.times) {
        return Err(Error::Invariant(
            "ensemble members were sampled at different times".into(),
        ));
    }
    let n = records.len() as f64;
    Ok(first
        .times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mean = records.iter().map(|r| r.hminus1[i]).sum::<f64>() / n;
            let se = if records.len() > 1 {
                let var = records
                    .iter()
                    .map(|r| (r.hminus1[i] - mean).powi(2))
                    .sum::<f64>()
                    / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            (t, mean, se)
        })
        .collect())
}

/// Log-linear least squares on the ensemble-mean `H^{-1}` curve over the
/// initial stretch of samples whose mean exceeds [`SIGNAL_TO_NOISE`] standard
/// errors, shifted up into an envelope that dominates every sample.
pub fn fit_mixing(records: &[TrajectoryRecord]) -> Result<MixingFit> {
    fit_mixing_snr(records, SIGNAL_TO_NOISE)
}

/// [`fit_mixing`] with a custom signal-to-noise requirement.
pub fn fit_mixing_snr(records: &[TrajectoryRecord], snr: f64) -> Result<MixingFit> {
    let curve = hminus1_curve(records)?;
    let window: Vec<(f64, f64)> = curve
        .iter()
        .take_while(|&&(_, mean, se)| mean > 0.0 && mean > snr * se)
        .map(|&(t, mean, _)| (t, mean.ln()))
        .collect();
    if window.len() < 2 {
        return Err(Error::Invariant(
            "mixing fit window is empty: no resolved decay".into(),
        ));
    }
    let (slope, intercept) = least_squares(&window);
    let gamma = -slope;
    if !(gamma > 0.0) {
        return Err(Error::Invariant(format!(
            "no mixing observed: fitted decay rate {gamma:.3e}"
        )));
    }
    let residual = (window
        .iter()
        .map(|&(t, y)| (y - intercept - slope * t).powi(2))
        .sum::<f64>()
        / window.len() as f64)
        .sqrt();
    // smallest K that dominates every sample, not just the fitted window
    let k_hat = curve
        .iter()
        .map(|&(t, mean, _)| mean * (gamma * t).exp())
        .fold(1.0, f64::max);
    Ok(MixingFit {
        k_hat,
        gamma_hat: gamma,
        residual,
        window: (window[0].0, window[window.len() - 1].0),
        points: window.len(),
    })
}
