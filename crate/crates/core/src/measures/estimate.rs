use serde::{Deserialize, Serialize};

use super::ShellMeasure;
use crate::error::{Error, Result};
use crate::evolution::TrajectoryRecord;
use crate::spectral::{SpectralField, WaveGrid};

/// Ensemble estimate of the time-integrated mass measure
/// `E int_0^T m_t dt` and of the dissipation measure, per grid shell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEstimate {
    pub max_mode: usize,
    pub nu: f64,
    pub horizon: f64,
    pub members: usize,
    /// Squared shell radii, aligned with the per-shell vectors below.
    pub radius_sq: Vec<u32>,
    pub mass: Vec<f64>,
    /// Standard error of `mass`; zero for a single member.
    pub stderr: Vec<f64>,
    pub dissipation: Vec<f64>,
}

impl EnsembleEstimate {
    pub fn measure(&self) -> ShellMeasure {
        ShellMeasure::from_atoms(
            self.radius_sq
                .iter()
                .zip(&self.mass)
                .map(|(&r, &m)| super::Atom {
                    radius_sq: r as u64,
                    mass: m.max(0.0),
                })
                .collect(),
        )
    }

    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.radius_sq.iter().map(|&r| (r as f64).sqrt())
    }

    /// Cumulative dissipation `eps(r) = sum_{rho >= r} D(rho)`, one value per
    /// shell (so `eps[i]` is the dissipation at or beyond shell `i`).
    pub fn cumulative_dissipation(&self) -> Vec<f64> {
        let mut eps = vec![0.0; self.dissipation.len()];
        let mut acc = 0.0;
        for i in (0..self.dissipation.len()).rev() {
            acc += self.dissipation[i];
            eps[i] = acc;
        }
        eps
    }

    /// Upper bound on the standard error of `m_hat([lo, hi])`: shells are
    /// correlated, so the per-shell errors are summed rather than pooled.
    pub fn stderr_between(&self, lo: f64, hi: f64) -> f64 {
        self.radii()
            .zip(&self.stderr)
            .filter(|(r, _)| *r >= lo && *r <= hi)
            .map(|(_, s)| s)
            .sum()
    }
}

fn check_compatible(records: &[TrajectoryRecord]) -> Result<&TrajectoryRecord> {
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("ensemble is empty"))?;
    for (i, r) in records.iter().enumerate() {
        if r.max_mode != first.max_mode
            || r.nu != first.nu
            || r.horizon != first.horizon
            || r.mass_integral.len() != first.mass_integral.len()
            || r.times != first.times
        {
            return Err(Error::Invariant(format!(
                "ensemble member {i} has a different grid, diffusivity, horizon or sampling"
            )));
        }
    }
    Ok(first)
}

/// Mean and standard error with a fixed summation order.
fn mean_stderr(values: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// `m_hat(shell) = mean_i int_0^T m_t^{(i)}(shell) dt`.
pub fn estimate_mass_measure(records: &[TrajectoryRecord]) -> Result<EnsembleEstimate> {
    let first = check_compatible(records)?;
    let grid = WaveGrid::new(first.max_mode);
    let n = records.len();
    let shells = first.mass_integral.len();
    let mut mass = Vec::with_capacity(shells);
    let mut stderr = Vec::with_capacity(shells);
    let mut dissipation = Vec::with_capacity(shells);
    for s in 0..shells {
        let (m, se) = mean_stderr(records.iter().map(|r| r.mass_integral[s]), n);
        mass.push(m);
        stderr.push(se);
        dissipation.push(
            records
                .iter()
                .map(|r| r.dissipation_integral[s])
                .sum::<f64>()
                / n as f64,
        );
    }
    Ok(EnsembleEstimate {
        max_mode: first.max_mode,
        nu: first.nu,
        horizon: first.horizon,
        members: n,
        radius_sq: grid.shell_radius_sq().to_vec(),
        mass,
        stderr,
        dissipation,
    })
}

/// Slack added to `1/2` when checking that the run dissipated enough energy.
pub const DISSIPATION_TOLERANCE: f64 = 0.01;

/// `D_nu`: the largest grid radius `r` with `eps(r) >= 1/2`.
pub fn dissipation_scale(estimate: &EnsembleEstimate) -> Result<f64> {
    let eps = estimate.cumulative_dissipation();
    let total = eps.first().copied().unwrap_or(0.0);
    if total < 0.5 + DISSIPATION_TOLERANCE {
        return Err(Error::Resolution(format!(
            "only {total:.4} of the energy was dissipated by T = {}; extend the horizon",
            estimate.horizon
        )));
    }
    // eps is nonincreasing, so the last index still above 1/2 is the answer
    let last = eps.iter().rposition(|&e| e >= 0.5).expect("eps[0] >= 1/2");
    Ok((estimate.radius_sq[last] as f64).sqrt())
}

/// `N_0`: smallest grid radius `r >= 1` with `||Pi_{>= r} g||^2 <= 1/4`.
pub fn n_zero(g: &SpectralField) -> f64 {
    let grid = g.grid();
    let start = grid.first_shell_at_least(1.0);
    for s in start..grid.shell_count() {
        let r = grid.shell_radii()[s];
        if g.high_mass(r) <= 0.25 {
            return r;
        }
    }
    // every shell still carries more than a quarter: nothing on the grid works
    (grid.max_mode() as f64) * std::f64::consts::SQRT_2 + 1.0
}

/// One row of the cumulative table `m_hat([1, R])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativeRow {
    pub radius: f64,
    pub mass: f64,
    pub stderr: f64,
}

/// `m_hat([1, R])` for each occupied grid radius `R >= 1`.
pub fn cumulative_table(estimate: &EnsembleEstimate) -> Vec<CumulativeRow> {
    let mut out = Vec::new();
    let (mut acc, mut var) = (0.0, 0.0);
    for ((r, m), se) in estimate.radii().zip(&estimate.mass).zip(&estimate.stderr) {
        if r < 1.0 {
            continue;
        }
        acc += m;
        var += se * se;
        out.push(CumulativeRow {
            radius: r,
            mass: acc,
            stderr: var.sqrt(),
        });
    }
    out
}

/// Least-squares fit of `m_hat([1, R]) = c + s log R` over `R in [a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual divided by the fitted rise `s log(b/a)`.
    pub relative_residual: f64,
    pub window: (f64, f64),
    pub points: usize,
}

pub fn fit_log_slope(table: &[CumulativeRow], a: f64, b: f64) -> Result<LogSlopeFit> {
    let pts: Vec<(f64, f64)> = table
        .iter()
        .filter(|row| row.radius >= a && row.radius <= b)
        .map(|row| (row.radius.ln(), row.mass))
        .collect();
    if pts.len() < 3 || !(b > a) {
        return Err(Error::invalid(format!(
            "log-slope window [{a}, {b}] holds only {} radii",
            pts.len()
        )));
    }
    let (slope, intercept) = least_squares(&pts);
    let rms = (pts
        .iter()
        .map(|&(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / pts.len() as f64)
        .sqrt();
    let rise = slope * (b / a).ln();
    if !(rise > 0.0) {
        return Err(Error::Invariant(format!(
            "cumulative mass does not grow over [{a}, {b}]"
        )));
    }
    Ok(LogSlopeFit {
        slope,
        intercept,
        relative_residual: rms / rise,
        window: (a, b),
        points: pts.len(),
    })
}

/// `m_hat([1, 2R]) / m_hat([1, R])` for `R = a, 2a, 4a, ...` with `2R <= b`,
/// skipping `R` with `m_hat([1, R]) = 0`.
pub fn doubling_ratios(measure: &ShellMeasure, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let mut r = a;
    while 2.0 * r <= b * (1.0 + 1e-12) {
        let low = measure.mass_between(1.0, r);
        let high = measure.mass_between(1.0, 2.0 * r);
        if low > 0.0 {
            out.push((r, high / low));
        }
        r *= 2.0;
    }
    out
}

pub(crate) fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Per-shell z-scores between the two halves (even and odd members) of an
/// ensemble, over shells where either half has positive mass.
pub fn half_ensemble_z(records: &[TrajectoryRecord]) -> Result<Vec<(f64, f64)>> {
    if records.len() < 4 {
        return Err(Error::invalid(
            "half-ensemble comparison needs at least 4 members",
        ));
    }
    let even: Vec<TrajectoryRecord> = records.iter().step_by(2).cloned().collect();
    let odd: Vec<TrajectoryRecord> = records.iter().skip(1).step_by(2).cloned().collect();
    let (a, b) = (estimate_mass_measure(&even)?, estimate_mass_measure(&odd)?);
    Ok(a.radii()
        .enumerate()
        .filter(|&(s, _)| a.mass[s] > 0.0 || b.mass[s] > 0.0)
        .map(|(s, r)| {
            let pooled = (a.stderr[s].powi(2) + b.stderr[s].powi(2)).sqrt();
            let diff = a.mass[s] - b.mass[s];
            (
                r,
                if pooled > 0.0 {
                    diff / pooled
                } else if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                },
            )
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn record(mass: Vec<f64>, diss: Vec<f64>) -> TrajectoryRecord {
        TrajectoryRecord {
            max_mode: 2,
            nu: 1e-3,
            horizon: 1.0,
            times: vec![0.0, 1.0],
            l2: vec![1.0, 0.5],
            grad: vec![0.0, 0.0],
            hminus1: vec![0.1, 0.05],
            tail_fraction: vec![0.0, 0.0],
            mass_integral: mass,
            dissipation_integral: diss,
            snapshots: vec![],
        }
    }

    #[test]
    fn mean_and_stderr() {
        let shells = WaveGrid::new(2).shell_count();
        let mut m1 = vec![0.0; shells];
        let mut m2 = vec![0.0; shells];
        m1[1] = 1.0;
        m2[1] = 3.0;
        let est =
            estimate_mass_measure(&[record(m1, vec![0.0; shells]), record(m2, vec![0.0; shells])])
                .unwrap();
        assert_eq!(est.mass[1], 2.0);
        assert!((est.stderr[1] - 1.0).abs() < 1e-15);
        assert_eq!(est.measure().total(), 2.0);
    }

    #[test]
    fn rejects_mixed_ensembles() {
        let shells = WaveGrid::new(2).shell_count();
        let a = record(vec![0.0; shells], vec![0.0; shells]);
        let mut b = a.clone();
        b.nu = 2e-3;
        assert!(estimate_mass_measure(&[a, b]).is_err());
        assert!(estimate_mass_measure(&[]).is_err());
    }

    #[test]
    fn dissipation_scale_single_mode() {
        let shells = WaveGrid::new(2).shell_count();
        let mut d = vec![0.0; shells];
        d[1] = 0.9;
        let est = estimate_mass_measure(&[record(vec![0.0; shells], d.clone())]).unwrap();
        assert_eq!(dissipation_scale(&est).unwrap(), 1.0);
        d[1] = 0.4;
        let est = estimate_mass_measure(&[record(vec![0.0; shells], d)]).unwrap();
        assert!(matches!(dissipation_scale(&est), Err(Error::Resolution(_))));
    }

    #[test]
    fn n_zero_of_cosine() {
        let grid = Arc::new(WaveGrid::new(4));
        let g = SpectralField::cosine_mode(grid, 1, 0).unwrap();
        assert_eq!(n_zero(&g), 2f64.sqrt());
    }

    #[test]
    fn log_slope_of_exact_log() {
        let table: Vec<CumulativeRow> = (1..100)
            .map(|r| CumulativeRow {
                radius: r as f64,
                mass: 3.0 + 2.0 * (r as f64).ln(),
                stderr: 0.0,
            })
            .collect();
        let fit = fit_log_slope(&table, 8.0, 64.0).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.relative_residual < 1e-12);
    }
}
