use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evolution::{IntegratorSpec, RunOptions, DEFAULT_TAIL_THRESHOLD};
use crate::spectral::{SpectralField, WaveGrid};
use crate::velocity::{Pierrehumbert, RandomBandFlow, VelocityModel, Weight, ZeroVelocity};

/// Full, reproducible description of an ensemble run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: GridConfig,
    pub physics: PhysicsConfig,
    pub velocity: VelocityConfig,
    pub initial: InitialConfig,
    pub integrator: IntegratorSpec,
    #[serde(default)]
    pub sampling: SamplingConfig,
    pub ensemble: EnsembleConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub max_mode: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsConfig {
    pub nu: f64,
    /// Time horizon `T`.
    pub horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum VelocityConfig {
    Zero,
    Pierrehumbert {
        amplitude: f64,
        period: f64,
        /// Randomize the clock phase in steps of `dt`, which makes the law
        /// stationary under shifts by any multiple of `dt`.
        #[serde(default)]
        random_offset: bool,
    },
    RandomBand {
        band: usize,
        spectrum_decay: f64,
        amplitude: f64,
        correlation_time: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// `sqrt(2) cos(2 pi k.x)`.
    SingleMode {
        k: [i64; 2],
    },
    RandomBand {
        band: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    /// Scalar diagnostics every this many steps.
    pub sample_every: usize,
    pub tail_threshold: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            sample_every: 8,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    #[serde(rename = "M")]
    pub members: usize,
    pub master_seed: u64,
    /// Worker threads; does not affect results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadiiConfig {
    pub count: usize,
    pub min: f64,
    /// Defaults to `N - L`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

impl Default for RadiiConfig {
    fn default() -> Self {
        Self {
            count: 64,
            min: 1.0,
            max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// `(h, alpha)` pairs for the bad-set densities.
    pub h_alpha: Vec<[f64; 2]>,
    pub weights: Vec<Weight>,
    pub radii: RadiiConfig,
    /// Audit the flux inequality along member 0.
    pub audit: bool,
    pub audit_cadence: usize,
    /// Reporting window `[a, b]`; defaults to `[max(N0, window_floor), D/2]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    pub window_floor: f64,
    /// Signal-to-noise ratio required of samples entering the mixing fit.
    pub mixing_snr: f64,
    /// Add the fitted tail bound to every annulus before testing membership
    /// in the bad set (otherwise it is only reported).
    pub tail_in_bad_set: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            h_alpha: vec![[2.0, 0.05]],
            weights: vec![
                Weight::Indicator { band: 1.0 },
                Weight::Polynomial { q: 2.0 },
            ],
            radii: RadiiConfig::default(),
            audit: false,
            audit_cadence: 10,
            window: None,
            window_floor: 8.0,
            mixing_snr: crate::measures::SIGNAL_TO_NOISE,
            tail_in_bad_set: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

/// Smallest grid accepted for diffusivity `nu`: the dissipative wavenumber
/// of the `e^{2 pi i k.x}` convention is `nu^{-1/2} / (2 pi)`, and the grid
/// must reach four times it.
pub fn min_resolution(nu: f64) -> usize {
    (2.0 / PI / nu.sqrt()).ceil() as usize
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    /// Parse, apply `section.key=value` overrides and validate. Values are
    /// parsed as TOML, falling back to a bare string.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::config(format!("{e}")))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        let config: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("{e}")))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.max_mode;
        let nu = self.physics.nu;
        let horizon = self.physics.horizon;
        if n == 0 {
            return Err(Error::config("grid.max_mode must be positive"));
        }
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::config(format!(
                "physics.nu must be positive, got {nu}"
            )));
        }
        if n < min_resolution(nu) {
            return Err(Error::Resolution(format!(
                "N = {n} cannot resolve nu = {nu}: need N >= {}",
                min_resolution(nu)
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::config(format!(
                "physics.horizon must be positive, got {horizon}"
            )));
        }
        crate::evolution::steps_for_horizon(horizon, self.integrator.dt)
            .map_err(|e| Error::config(e.to_string()))?;
        match self.velocity {
            VelocityConfig::Pierrehumbert {
                amplitude,
                period,
                random_offset,
            } => {
                if !(amplitude > 0.0) || !(period > 0.0) {
                    return Err(Error::config(
                        "pierrehumbert needs amplitude > 0 and period > 0",
                    ));
                }
                if !is_multiple(horizon, period) {
                    return Err(Error::config(format!(
                        "horizon {horizon} must be a whole number of velocity periods ({period})"
                    )));
                }
                if random_offset && !is_multiple(period, self.integrator.dt) {
                    return Err(Error::config(
                        "random_offset needs the period to be a multiple of dt",
                    ));
                }
            }
            VelocityConfig::RandomBand {
                band,
                amplitude,
                correlation_time,
                ..
            } => {
                if band == 0 || !(amplitude > 0.0) || !(correlation_time > 0.0) {
                    return Err(Error::config(
                        "random_band needs band >= 1, amplitude > 0, correlation_time > 0",
                    ));
                }
            }
            VelocityConfig::Zero => {}
        }
        match self.initial {
            InitialConfig::SingleMode { k } => {
                if k == [0, 0]
                    || k[0].unsigned_abs() as usize > n
                    || k[1].unsigned_abs() as usize > n
                {
                    return Err(Error::config(format!(
                        "initial mode {k:?} must be nonzero and on the grid"
                    )));
                }
            }
            InitialConfig::RandomBand { band, .. } => {
                if band == 0 || band > n {
                    return Err(Error::config(format!("initial band must lie in 1..={n}")));
                }
            }
        }
        if self.sampling.sample_every == 0 || !(self.sampling.tail_threshold > 0.0) {
            return Err(Error::config(
                "sampling.sample_every and sampling.tail_threshold must be positive",
            ));
        }
        if self.ensemble.members == 0 {
            return Err(Error::config("ensemble.M must be at least 1"));
        }
        if self.ensemble.workers == Some(0) {
            return Err(Error::config("ensemble.workers must be at least 1"));
        }
        let a = &self.analysis;
        for w in &a.weights {
            w.validate()?;
        }
        for &[h, alpha] in &a.h_alpha {
            if !(h > 0.0) || !(alpha > 0.0) {
                return Err(Error::config(format!(
                    "(h, alpha) = ({h}, {alpha}) must be positive"
                )));
            }
        }
        if a.radii.count < 2
            || !(a.radii.min > 0.0)
            || a.radii.max.is_some_and(|m| !(m > a.radii.min))
        {
            return Err(Error::config(
                "analysis.radii needs count >= 2 and 0 < min < max",
            ));
        }
        if a.audit_cadence == 0 || !(a.mixing_snr > 0.0) || !(a.window_floor > 0.0) {
            return Err(Error::config(
                "audit_cadence, mixing_snr and window_floor must be positive",
            ));
        }
        if let Some([lo, hi]) = a.window {
            if !(lo > 0.0 && hi > lo) {
                return Err(Error::config("analysis.window must satisfy 0 < a < b"));
            }
        }
        self.integrator
            .validate(n, &*self.velocity_model(0)?)
            .map_err(|e| Error::config(e.to_string()))
    }

    pub fn grid(&self) -> Arc<WaveGrid> {
        Arc::new(WaveGrid::new(self.grid.max_mode))
    }

    pub fn band_limit(&self) -> usize {
        match self.velocity {
            VelocityConfig::Zero => 0,
            VelocityConfig::Pierrehumbert { .. } => 1,
            VelocityConfig::RandomBand { band, .. } => band,
        }
    }

    /// Velocity realization driven by `seed`.
    pub fn velocity_model(&self, seed: u64) -> Result<Box<dyn VelocityModel>> {
        Ok(match self.velocity {
            VelocityConfig::Zero => Box::new(ZeroVelocity),
            VelocityConfig::Pierrehumbert {
                amplitude,
                period,
                random_offset,
            } => {
                let model = Pierrehumbert::new(amplitude, period, seed)?;
                if random_offset {
                    let quanta = (period / self.integrator.dt).round() as u32;
                    Box::new(model.with_random_offset(quanta)?)
                } else {
                    Box::new(model)
                }
            }
            VelocityConfig::RandomBand {
                band,
                spectrum_decay,
                amplitude,
                correlation_time,
            } => Box::new(RandomBandFlow::new(
                band,
                spectrum_decay,
                amplitude,
                correlation_time,
                seed,
            )?),
        })
    }

    /// The normalized initial datum `g`.
    pub fn initial_field(&self) -> Result<SpectralField> {
        let grid = self.grid();
        match self.initial {
            InitialConfig::SingleMode { k } => SpectralField::cosine_mode(grid, k[0], k[1]),
            InitialConfig::RandomBand { band, seed } => {
                SpectralField::random_band(grid, band, seed)
            }
        }
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            sample_every: self.sampling.sample_every,
            snapshot_every: None,
            tail_threshold: self.sampling.tail_threshold,
        }
    }

    /// Audit radii: `count` log-spaced points on `[min, max]`.
    pub fn audit_radii(&self) -> Vec<f64> {
        let r = &self.analysis.radii;
        let max = r
            .max
            .unwrap_or((self.grid.max_mode as f64 - self.band_limit() as f64).max(r.min * 2.0));
        crate::measures::log_grid(r.min, max, r.count)
    }

    /// SHA-256 of the settings that determine the results (everything but
    /// the output directory and the worker count), as lowercase hex.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        canonical.ensemble.workers = None;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

fn is_multiple(x: f64, unit: f64) -> bool {
    let q = (x / unit).round();
    q >= 1.0 && (q * unit - x).abs() <= 1e-9 * x.max(1.0)
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (path, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override `{item}` is not of the form key=value")))?;
    let path = path.trim();
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::config(format!("malformed override key `{path}`")));
    }
    let value = match format!("v = {}", raw.trim()).parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let mut node = table;
    for key in &keys[..keys.len() - 1] {
        node = node
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("override `{path}`: `{key}` is not a section")))?;
    }
    node.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}
