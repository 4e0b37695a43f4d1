//! Pointwise audit of the Fourier flux inequality
//!
//! `d/dt ||Pi_{>=r} phi||^2 + 2 nu ||Pi_{>=r} grad phi||^2
//!     <= 4 pi r sum_{|k|>=r, |j|<r} |phi(k)| |u(k-j)| |phi(j)|
//!     <= 4 pi r ||w(|k|) u||_1 (w^{-1} * m_t)(r)`
//!
//! along trajectories of the truncated system.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{
    advection_direct, run_phi_observed, GalerkinRhs, IntegratorSpec, RunOptions, TrajectoryRecord,
};
use crate::measures::instantaneous_mass;
use crate::spectral::SpectralField;
use crate::velocity::{VelocityCoeffs, VelocityModel, Weight};

/// Relative tolerance of every layer: `1e-10 (1 + ||phi||^2 ||u||_1)`.
pub const FLUX_TOLERANCE: f64 = 1e-10;

/// Velocities with at most this many modes use the direct convolution.
const DIRECT_MODES: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditStatus {
    Pass,
    Fail,
    /// Radius beyond `N - L`, where truncation could fake a violation.
    Skipped,
    /// Both audited layers hold but the weight is infinite on an active mode,
    /// so the Young layer is vacuous (`rhs_young = +inf`).
    YoungInapplicable,
}

/// One audited `(t, r, weight)` tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxRow {
    pub t: f64,
    pub r: f64,
    pub weight: String,
    pub lhs_derivative: f64,
    pub lhs_dissipation: f64,
    /// `lhs_derivative + lhs_dissipation`, summed per mode.
    pub lhs: f64,
    pub rhs_bilinear: f64,
    /// `+inf` when the weight is infinite on an active velocity mode.
    pub rhs_young: f64,
    pub slack_bilinear: f64,
    pub slack_young: f64,
    pub tolerance: f64,
    pub status: AuditStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackLocation {
    pub slack: f64,
    pub t: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxSummary {
    pub audited: usize,
    pub skipped: usize,
    pub failed: usize,
    pub min_slack_bilinear: Option<SlackLocation>,
    pub min_slack_young: Option<SlackLocation>,
    /// Smallest slack of either layer in units of its tolerance.
    pub min_scaled_slack: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FluxReport {
    pub rows: Vec<FluxRow>,
}

impl FluxReport {
    pub fn extend(&mut self, other: FluxReport) {
        self.rows.extend(other.rows);
    }

    pub fn summary(&self) -> FluxSummary {
        let mut s = FluxSummary {
            audited: 0,
            skipped: 0,
            failed: 0,
            min_slack_bilinear: None,
            min_slack_young: None,
            min_scaled_slack: None,
            passed: true,
        };
        let lower = |slot: &mut Option<SlackLocation>, slack: f64, row: &FluxRow| {
            if slot.is_none_or(|loc| slack < loc.slack) {
                *slot = Some(SlackLocation {
                    slack,
                    t: row.t,
                    r: row.r,
                });
            }
        };
        let scaled = |slot: &mut Option<f64>, v: f64| *slot = Some(slot.map_or(v, |m| m.min(v)));
        for row in &self.rows {
            if row.status == AuditStatus::Skipped {
                s.skipped += 1;
                continue;
            }
            s.audited += 1;
            if row.status == AuditStatus::Fail {
                s.failed += 1;
                s.passed = false;
            }
            lower(&mut s.min_slack_bilinear, row.slack_bilinear, row);
            scaled(&mut s.min_scaled_slack, row.slack_bilinear / row.tolerance);
            if row.rhs_young.is_finite() {
                lower(&mut s.min_slack_young, row.slack_young, row);
                scaled(&mut s.min_scaled_slack, row.slack_young / row.tolerance);
            }
        }
        s
    }

    /// CSV with columns `t, r, weight_kind, lhs, rhs_bilinear, rhs_young,
    /// slack_bilinear, slack_young, status` plus the two lhs parts.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "t",
            "r",
            "weight_kind",
            "lhs",
            "rhs_bilinear",
            "rhs_young",
            "slack_bilinear",
            "slack_young",
            "status",
            "lhs_derivative",
            "lhs_dissipation",
            "tolerance",
        ])?;
        for row in &self.rows {
            let status = match row.status {
                AuditStatus::Pass => "pass",
                AuditStatus::Fail => "fail",
                AuditStatus::Skipped => "skipped",
                AuditStatus::YoungInapplicable => "young_inapplicable",
            };
            w.write_record([
                format!("{:.17e}", row.t),
                format!("{:.17e}", row.r),
                row.weight.clone(),
                format!("{:.17e}", row.lhs),
                format!("{:.17e}", row.rhs_bilinear),
                format!("{:.17e}", row.rhs_young),
                format!("{:.17e}", row.slack_bilinear),
                format!("{:.17e}", row.slack_young),
                status.to_string(),
                format!("{:.17e}", row.lhs_derivative),
                format!("{:.17e}", row.lhs_dissipation),
                format!("{:.17e}", row.tolerance),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reusable evaluator; holds the pseudo-spectral workspace for velocities
/// with many modes.
pub struct FluxAuditor {
    nu: f64,
    band_limit: usize,
    radii: Vec<f64>,
    weights: Vec<Weight>,
    pseudo: Option<GalerkinRhs>,
    adv: Vec<Complex64>,
}

impl FluxAuditor {
    pub fn new(nu: f64, band_limit: usize, radii: &[f64], weights: &[Weight]) -> Result<Self> {
        if radii.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return Err(Error::invalid("audit radii must be finite and nonnegative"));
        }
        for w in weights {
            w.validate()?;
        }
        let mut radii = radii.to_vec();
        radii.sort_by(f64::total_cmp);
        Ok(Self {
            nu,
            band_limit,
            radii,
            weights: weights.to_vec(),
            pseudo: None,
            adv: Vec::new(),
        })
    }

    fn advection(&mut self, phi: &SpectralField, coeffs: &VelocityCoeffs) -> Result<()> {
        let grid = phi.grid();
        self.adv.resize(grid.len(), Complex64::new(0.0, 0.0));
        if coeffs.modes().len() <= DIRECT_MODES {
            advection_direct(phi, coeffs, &mut self.adv);
            return Ok(());
        }
        let pad = crate::evolution::default_padding(grid.max_mode(), self.band_limit);
        let pseudo = self
            .pseudo
            .get_or_insert_with(|| GalerkinRhs::new(grid.clone(), 0.0, pad));
        pseudo.advection(phi, coeffs, &mut self.adv)
    }

    /// Audit `phi` at time `t` against the velocity coefficients `coeffs`.
    pub fn audit(
        &mut self,
        phi: &SpectralField,
        coeffs: &VelocityCoeffs,
        t: f64,
    ) -> Result<FluxReport> {
        self.advection(phi, coeffs)?;
        let grid = phi.grid().clone();
        let amps = phi.amplitudes();
        let nr = self.radii.len();
        let four_pi_sq_nu = 4.0 * PI * PI * self.nu;

        // a mode at |k| counts for every radius <= |k|: bucket it by the
        // number of such radii, then take suffix sums
        let slot = |rho: f64| self.radii.partition_point(|&r| r <= rho);
        let mut lhs = vec![0.0; nr + 1];
        let mut deriv = vec![0.0; nr + 1];
        let mut diss = vec![0.0; nr + 1];
        for (i, &a) in amps.iter().enumerate() {
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let s = slot(grid.modulus(i));
            let flux = -2.0 * (a.conj() * self.adv[i]).re;
            let d = 2.0 * four_pi_sq_nu * grid.modulus_sq(i) as f64 * a.norm_sqr();
            lhs[s] += flux;
            deriv[s] += flux - d;
            diss[s] += d;
        }
        for v in [&mut lhs, &mut deriv, &mut diss] {
            for s in (0..nr).rev() {
                v[s] += v[s + 1];
            }
        }
        let lhs = &lhs[1..];
        let deriv = &deriv[1..];
        let diss = &diss[1..];

        let bilinear = bilinear_sums(phi, coeffs, &self.radii);
        let l1 = coeffs.l1_norm();
        let tolerance = FLUX_TOLERANCE * (1.0 + phi.l2_norm_sq() * l1);
        let max_radius = grid.max_mode() as f64 - self.band_limit as f64;
        let mass = instantaneous_mass(phi);

        let mut rows = Vec::with_capacity(nr * self.weights.len());
        for weight in &self.weights {
            let norm = coeffs.weighted_l1(weight);
            for (ri, &r) in self.radii.iter().enumerate() {
                let rhs_bilinear = 4.0 * PI * r * bilinear[ri];
                let rhs_young = match norm {
                    Some(n) => 4.0 * PI * r * n * mass.weight_convolve(weight, r),
                    None => f64::INFINITY,
                };
                let slack_bilinear = rhs_bilinear - lhs[ri];
                let slack_young = rhs_young - rhs_bilinear;
                let status = if r > max_radius {
                    AuditStatus::Skipped
                } else if slack_bilinear < -tolerance || slack_young < -tolerance {
                    AuditStatus::Fail
                } else if norm.is_none() {
                    AuditStatus::YoungInapplicable
                } else {
                    AuditStatus::Pass
                };
                rows.push(FluxRow {
                    t,
                    r,
                    weight: weight.label(),
                    lhs_derivative: deriv[ri],
                    lhs_dissipation: diss[ri],
                    lhs: lhs[ri],
                    rhs_bilinear,
                    rhs_young,
                    slack_bilinear,
                    slack_young,
                    tolerance,
                    status,
                });
            }
        }
        Ok(FluxReport { rows })
    }
}

/// `sum_{|k| >= r > |j|} |phi(k)| |u(k - j)| |phi(j)|` for each `r` in the
/// sorted list. Every pair with `|j| < |k|` contributes to the radii in
/// `(|j|, |k|]`, which is accumulated with a difference array.
pub fn bilinear_sums(phi: &SpectralField, coeffs: &VelocityCoeffs, radii: &[f64]) -> Vec<f64> {
    let grid = phi.grid();
    let amps = phi.amplitudes();
    let n = grid.max_mode() as i64;
    let nr = radii.len();
    let mut diff = vec![0.0; nr + 1];
    for m in coeffs.modes() {
        let um = m.magnitude();
        if um == 0.0 {
            continue;
        }
        for (j, j1, j2) in grid.modes() {
            let aj = amps[j].norm();
            if aj == 0.0 {
                continue;
            }
            let (k1, k2) = (j1 + m.k1, j2 + m.k2);
            if k1.abs() > n || k2.abs() > n {
                continue;
            }
            let k = grid.index(k1, k2).expect("inside grid");
            let (rj, rk) = (grid.modulus(j), grid.modulus(k));
            if rj >= rk {
                continue;
            }
            let c = amps[k].norm() * um * aj;
            if c == 0.0 {
                continue;
            }
            // radii r with rj < r <= rk
            let lo = radii.partition_point(|&r| r <= rj);
            let hi = radii.partition_point(|&r| r <= rk);
            diff[lo] += c;
            diff[hi] -= c;
        }
    }
    let mut out = Vec::with_capacity(nr);
    let mut acc = 0.0;
    for d in diff.iter().take(nr) {
        acc += d;
        out.push(acc.max(0.0));
    }
    out
}

/// Audit a single state with the velocity at time `t`.
pub fn audit_step(
    phi: &SpectralField,
    coeffs: &VelocityCoeffs,
    nu: f64,
    t: f64,
    band_limit: usize,
    radii: &[f64],
    weights: &[Weight],
) -> Result<FluxReport> {
    FluxAuditor::new(nu, band_limit, radii, weights)?.audit(phi, coeffs, t)
}

/// Run the unforced equation from `g` and audit every `cadence`-th step
/// (step 0 included).
#[allow(clippy::too_many_arguments)]
pub fn audit_trajectory(
    g: &SpectralField,
    model: &dyn VelocityModel,
    nu: f64,
    horizon: f64,
    spec: &IntegratorSpec,
    options: &RunOptions,
    cadence: usize,
    radii: &[f64],
    weights: &[Weight],
) -> Result<(TrajectoryRecord, FluxReport)> {
    let mut auditor = FluxAuditor::new(nu, model.band_limit(), radii, weights)?;
    let mut report = FluxReport::default();
    let cadence = cadence.max(1);
    let record = run_phi_observed(g, model, nu, horizon, spec, options, &mut |n, t, phi| {
        if n % cadence == 0 {
            report.extend(auditor.audit(phi, &model.coefficients(t), t)?);
        }
        Ok(())
    })?;
    Ok((record, report))
}
