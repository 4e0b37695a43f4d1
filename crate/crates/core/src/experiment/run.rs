use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::seed::{derive_seed, VELOCITY};
use crate::error::{Error, Result};
use crate::evolution::{run_phi, TrajectoryRecord};
use crate::flux::{audit_trajectory, FluxReport, FluxSummary};
use crate::measures::{
    alpha_star, bad_intervals_padded, cumulative_table, dissipation_scale, doubling_ratios,
    estimate_mass_measure, fit_log_slope, hminus1_curve, log_density, n_zero,
    overcharged_intervals, CumulativeRow, EnsembleEstimate, LogSlopeFit, MixingFit,
};

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "BATCHELOR_WORKERS";

/// `mu_{a,b}` of the bad and overcharged sets for one `(h, alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub h: f64,
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
    pub mu_bad: f64,
    pub mu_overcharged: f64,
    /// Largest `alpha` at which the bad set is null in `[a, b]`.
    pub alpha_star: f64,
    /// Mass added to every annulus before testing membership.
    pub padding: f64,
}

/// Everything persisted from one ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub estimate: EnsembleEstimate,
    pub mixing: Option<MixingFit>,
    pub mixing_error: Option<String>,
    /// `K e^{-gamma T} / gamma`, reported beside the finite-horizon estimates.
    pub tail_bound: Option<f64>,
    pub n_zero: f64,
    pub dissipation_scale: Option<f64>,
    pub dissipation_error: Option<String>,
    /// `[a, b]` used for densities and the cumulative fit; `None` if empty.
    pub window: Option<(f64, f64)>,
    pub max_energy_defect: f64,
    pub max_tail_fraction: f64,
    /// `(t, mean, stderr)` of `||phi_t||^2_{H^-1}`.
    pub hminus1: Vec<(f64, f64, f64)>,
    pub flux: Option<FluxSummary>,
    pub densities: Vec<DensityRow>,
    pub cumulative: Vec<CumulativeRow>,
    pub log_slope: Option<LogSlopeFit>,
    pub doubling: Vec<(f64, f64)>,
}

impl RunResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: RunResult = serde_json::from_str(text)?;
        if r.config.hash() != r.config_hash {
            return Err(Error::Invariant(
                "summary config hash does not match its config".into(),
            ));
        }
        Ok(r)
    }

    /// Load `summary.json` from a run directory.
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("summary.json");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// Ensemble records plus the flux audit of member 0, if requested.
pub struct EnsembleRun {
    pub records: Vec<TrajectoryRecord>,
    pub flux: Option<FluxReport>,
}

pub(crate) fn worker_count(config: &ExperimentConfig) -> usize {
    config
        .ensemble
        .workers
        .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
        .unwrap_or(1)
        .max(1)
}

/// Run the `M` trajectories. Member `i` uses velocity seed
/// `derive_seed(master, i, "velocity")`; results come back in index order.
pub fn simulate_members(config: &ExperimentConfig) -> Result<EnsembleRun> {
    config.validate()?;
    let g = config.initial_field()?;
    let options = config.run_options();
    let nu = config.physics.nu;
    let horizon = config.physics.horizon;
    let spec = config.integrator;
    let master = config.ensemble.master_seed;

    log::info!(
        "running {} members (N = {}, nu = {nu:e}, T = {horizon}) on {} workers",
        config.ensemble.members,
        config.grid.max_mode,
        worker_count(config)
    );
    let member = |i: usize| -> Result<(TrajectoryRecord, Option<FluxReport>)> {
        log::debug!("member {i} started");
        let model = config.velocity_model(derive_seed(master, i as u64, VELOCITY))?;
        if i == 0 && config.analysis.audit {
            let (rec, report) = audit_trajectory(
                &g,
                &*model,
                nu,
                horizon,
                &spec,
                &options,
                config.analysis.audit_cadence,
                &config.audit_radii(),
                &config.analysis.weights,
            )?;
            Ok((rec, Some(report)))
        } else {
            Ok((run_phi(&g, &*model, nu, horizon, &spec, &options)?, None))
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(config))
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<_>> = pool.install(|| {
        (0..config.ensemble.members)
            .into_par_iter()
            .map(member)
            .collect()
    });

    let mut records = Vec::with_capacity(results.len());
    let mut flux = None;
    for r in results {
        let (rec, report) = r?;
        records.push(rec);
        if report.is_some() {
            flux = report;
        }
    }
    Ok(EnsembleRun { records, flux })
}

/// Re-run member `index` of the ensemble with the flux audit attached.
pub fn audit_member(config: &ExperimentConfig, index: usize) -> Result<FluxReport> {
    config.validate()?;
    let g = config.initial_field()?;
    let model = config.velocity_model(derive_seed(
        config.ensemble.master_seed,
        index as u64,
        VELOCITY,
    ))?;
    let (_, report) = audit_trajectory(
        &g,
        &*model,
        config.physics.nu,
        config.physics.horizon,
        &config.integrator,
        &config.run_options(),
        config.analysis.audit_cadence,
        &config.audit_radii(),
        &config.analysis.weights,
    )?;
    Ok(report)
}

/// Reduce an ensemble into a [`RunResult`].
pub fn analyze(config: &ExperimentConfig, run: &EnsembleRun) -> Result<RunResult> {
    let estimate = estimate_mass_measure(&run.records)?;
    let g = config.initial_field()?;
    let nz = n_zero(&g);
    let (mixing, mixing_error) = match fit_mixing_with(config, &run.records) {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let tail_bound = mixing.map(|f| f.tail_bound(config.physics.horizon));
    let (dscale, dissipation_error) = match dissipation_scale(&estimate) {
        Ok(d) => (Some(d), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let window = reporting_window(config, nz, dscale);

    let padding = if config.analysis.tail_in_bad_set {
        tail_bound.unwrap_or(0.0)
    } else {
        0.0
    };
    let mut densities = Vec::new();
    if let Some((a, b)) = window {
        for &[h, alpha] in &config.analysis.h_alpha {
            densities.push(density_row(&estimate, h, alpha, a, b, padding)?);
        }
    }
    let cumulative = cumulative_table(&estimate);
    let (log_slope, doubling) = match window {
        Some((a, b)) => (
            fit_log_slope(&cumulative, a, b).ok(),
            doubling_ratios(&estimate.measure(), a, b),
        ),
        None => (None, Vec::new()),
    };

    Ok(RunResult {
        config_hash: config.hash(),
        config: config.clone(),
        max_energy_defect: run
            .records
            .iter()
            .map(|r| (r.energy_budget() - 1.0).abs())
            .fold(0.0, f64::max),
        max_tail_fraction: run
            .records
            .iter()
            .map(|r| r.max_tail_fraction())
            .fold(0.0, f64::max),
        hminus1: hminus1_curve(&run.records)?,
        flux: run.flux.as_ref().map(FluxReport::summary),
        estimate,
        mixing,
        mixing_error,
        tail_bound,
        n_zero: nz,
        dissipation_scale: dscale,
        dissipation_error,
        window,
        densities,
        cumulative,
        log_slope,
        doubling,
    })
}

fn fit_mixing_with(config: &ExperimentConfig, records: &[TrajectoryRecord]) -> Result<MixingFit> {
    crate::measures::fit_mixing_snr(records, config.analysis.mixing_snr)
}

/// `[max(N0, floor), D/2]` unless overridden; `None` when empty.
pub fn reporting_window(
    config: &ExperimentConfig,
    n_zero: f64,
    dscale: Option<f64>,
) -> Option<(f64, f64)> {
    let (a, b) = match config.analysis.window {
        Some([a, b]) => (a, b),
        None => (n_zero.max(config.analysis.window_floor), dscale? / 2.0),
    };
    (b > a).then_some((a, b))
}

pub fn density_row(
    estimate: &EnsembleEstimate,
    h: f64,
    alpha: f64,
    a: f64,
    b: f64,
    padding: f64,
) -> Result<DensityRow> {
    let m = estimate.measure();
    let bad = bad_intervals_padded(&m, h, alpha, a, b, padding)?;
    let over = overcharged_intervals(&m, h, alpha, a, b)?;
    Ok(DensityRow {
        h,
        alpha,
        a,
        b,
        mu_bad: log_density(&bad, a, b)?,
        mu_overcharged: log_density(&over, a, b)?,
        alpha_star: alpha_star(&m, h, a, b)?,
        padding,
    })
}

/// Run and reduce, without touching the file system.
pub fn run_ensemble(config: &ExperimentConfig) -> Result<(RunResult, Option<FluxReport>)> {
    let run = simulate_members(config)?;
    let result = analyze(config, &run)?;
    Ok((result, run.flux))
}

/// Write the run directory: `config.toml`, `summary.json` and the CSV tables.
pub fn persist(dir: &Path, result: &RunResult, flux: Option<&FluxReport>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.toml"), result.config.to_toml()?)?;
    std::fs::write(dir.join("summary.json"), result.to_json()?)?;
    write_spectrum(&dir.join("spectrum.csv"), result, None)?;
    write_cumulative(&dir.join("cumulative.csv"), result)?;
    write_densities(&dir.join("density_report.csv"), &result.densities)?;
    write_hminus1(&dir.join("hminus1.csv"), result)?;
    if let Some(report) = flux {
        report.write_csv(&dir.join("flux_audit.csv"))?;
    }
    Ok(())
}

/// Shell table. With `h` set, adds the compensated column `r m([r, r+h]) / h`,
/// which is flat under a `h / r` annulus law.
pub fn write_spectrum(path: &Path, result: &RunResult, h: Option<f64>) -> Result<()> {
    write_spectrum_to(std::fs::File::create(path)?, result, h)
}

pub fn write_spectrum_to(
    out: impl std::io::Write,
    result: &RunResult,
    h: Option<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let est = &result.estimate;
    let m = est.measure();
    let mut header = vec!["radius", "radius_sq", "mass", "stderr", "dissipation"];
    if h.is_some() {
        header.push("compensated");
    }
    w.write_record(&header)?;
    for (s, r) in est.radii().enumerate() {
        if est.mass[s] <= 0.0 && est.dissipation[s] <= 0.0 {
            continue;
        }
        let mut row = vec![
            format!("{r:.17e}"),
            est.radius_sq[s].to_string(),
            format!("{:.17e}", est.mass[s]),
            format!("{:.17e}", est.stderr[s]),
            format!("{:.17e}", est.dissipation[s]),
        ];
        if let Some(h) = h {
            row.push(format!("{:.17e}", r * m.annulus_mass(r, h) / h));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_cumulative(path: &Path, result: &RunResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["radius", "log_radius", "cumulative_mass", "stderr"])?;
    for row in &result.cumulative {
        w.write_record([
            format!("{:.17e}", row.radius),
            format!("{:.17e}", row.radius.ln()),
            format!("{:.17e}", row.mass),
            format!("{:.17e}", row.stderr),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_densities(path: &Path, rows: &[DensityRow]) -> Result<()> {
    write_densities_to(std::fs::File::create(path)?, rows)
}

pub fn write_densities_to(out: impl std::io::Write, rows: &[DensityRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "h",
        "alpha",
        "a",
        "b",
        "mu_bad",
        "mu_overcharged",
        "alpha_star",
        "padding",
    ])?;
    for d in rows {
        w.write_record(
            [
                d.h,
                d.alpha,
                d.a,
                d.b,
                d.mu_bad,
                d.mu_overcharged,
                d.alpha_star,
                d.padding,
            ]
            .map(|v| format!("{v:.17e}")),
        )?;
    }
    w.flush()?;
    Ok(())
}

fn write_hminus1(path: &Path, result: &RunResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "mean", "stderr", "envelope"])?;
    for &(t, mean, se) in &result.hminus1 {
        let env = result.mixing.map(|f| f.envelope(t)).unwrap_or(f64::NAN);
        w.write_record([t, mean, se, env].map(|v| format!("{v:.17e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn diffusion() -> ExperimentConfig {
        ExperimentConfig::from_toml(
            r#"
[grid]
max_mode = 32
[physics]
nu = 1e-3
horizon = 200.0
[velocity]
kind = "zero"
[initial]
kind = "single_mode"
k = [1, 0]
[integrator]
scheme = "split_step_galerkin"
dt = 0.5
[ensemble]
M = 1
master_seed = 7
[analysis]
audit = true
"#,
        )
        .unwrap()
    }

    #[test]
    fn pure_diffusion_reproduces_analytic_values() {
        let config = diffusion();
        let (result, flux) = run_ensemble(&config).unwrap();
        let lambda = 8.0 * PI * PI * 1e-3;
        let expected = (1.0 - (-lambda * 200.0f64).exp()) / lambda;
        let m = result.estimate.measure();
        assert_eq!(m.support(), vec![1.0]);
        assert!((m.total() - expected).abs() < 1e-12 * expected);
        assert_eq!(result.dissipation_scale, Some(1.0));
        assert_eq!(result.n_zero, 2f64.sqrt());
        let fit = result.mixing.unwrap();
        assert!((fit.gamma_hat - lambda).abs() < 1e-10 * lambda);
        // [8, 1/2] is empty: nothing to report
        assert!(result.window.is_none());
        assert!(result.max_energy_defect < 1e-12);
        let summary = flux.unwrap().summary();
        assert!(summary.passed && summary.failed == 0);
    }

    #[test]
    fn json_round_trip_and_determinism() {
        let config = diffusion();
        let (a, _) = run_ensemble(&config).unwrap();
        let (b, _) = run_ensemble(&config).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let back = RunResult::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back.to_json().unwrap(), a.to_json().unwrap());
    }

    #[test]
    fn persisted_directory_layout() {
        let dir = tempfile::tempdir().unwrap();
        let config = diffusion();
        let (result, flux) = run_ensemble(&config).unwrap();
        persist(dir.path(), &result, flux.as_ref()).unwrap();
        for f in [
            "config.toml",
            "summary.json",
            "spectrum.csv",
            "cumulative.csv",
            "density_report.csv",
            "hminus1.csv",
            "flux_audit.csv",
        ] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        let spectrum = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
        assert_eq!(spectrum.lines().count(), 2);
        assert_eq!(RunResult::load(dir.path()).unwrap(), result);
    }
}
