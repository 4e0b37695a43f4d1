use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{IntegratorSpec, Stepper};
use crate::error::{Error, Result};
use crate::spectral::SpectralField;
use crate::velocity::VelocityModel;

/// Tail mass `||Pi_{>= N/2} phi||^2`, relative to the current `||phi||^2`,
/// above which a run is aborted.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-8;

/// Tolerance on `||g||_{L^2} = 1`.
const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Record scalar diagnostics every this many steps (and at the end).
    pub sample_every: usize,
    /// Also record per-shell instantaneous masses every this many steps.
    pub snapshot_every: Option<usize>,
    pub tail_threshold: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            sample_every: 1,
            snapshot_every: None,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
        }
    }
}

/// Per-time shell masses `m_t` on the grid's shell list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellSnapshot {
    pub time: f64,
    pub mass: Vec<f64>,
}

/// Diagnostics of one unforced trajectory `phi_t`, `0 <= t <= T`.
///
/// Per-shell quantities are indexed like `WaveGrid::shell_radii()`. Instead
/// of the shell measure at every step the record keeps its exact time
/// integral over `[0, T]`, which is what every downstream estimator uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub max_mode: usize,
    pub nu: f64,
    pub horizon: f64,
    pub times: Vec<f64>,
    pub l2: Vec<f64>,
    pub grad: Vec<f64>,
    pub hminus1: Vec<f64>,
    pub tail_fraction: Vec<f64>,
    /// `int_0^T m_t(shell) dt`.
    pub mass_integral: Vec<f64>,
    /// `2 nu int_0^T ||Pi_shell grad phi_t||^2 dt`.
    pub dissipation_integral: Vec<f64>,
    pub snapshots: Vec<ShellSnapshot>,
}

impl TrajectoryRecord {
    pub fn final_l2(&self) -> f64 {
        *self
            .l2
            .last()
            .expect("records hold at least the initial sample")
    }

    /// `||phi_T||^2 + 2 nu int_0^T ||grad phi_t||^2 dt`, which equals
    /// `||g||^2 = 1` for exact dynamics.
    pub fn energy_budget(&self) -> f64 {
        self.final_l2() + self.dissipation_integral.iter().sum::<f64>()
    }

    pub fn max_tail_fraction(&self) -> f64 {
        self.tail_fraction.iter().copied().fold(0.0, f64::max)
    }
}

/// Called after every step with `(step index, time, state)`; `step == 0` is
/// the initial condition.
pub type StepObserver<'a> = dyn FnMut(usize, f64, &SpectralField) -> Result<()> + 'a;

pub fn steps_for_horizon(horizon: f64, dt: f64) -> Result<usize> {
    let steps = (horizon / dt).round();
    if !(horizon > 0.0) || (steps * dt - horizon).abs() > 1e-9 * horizon.max(1.0) || steps < 1.0 {
        return Err(Error::invalid(format!(
            "horizon {horizon} is not a positive multiple of dt = {dt}"
        )));
    }
    Ok(steps as usize)
}

fn check_initial(g: &SpectralField) -> Result<()> {
    let norm = g.l2_norm_sq();
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::invalid(format!(
            "initial datum must have unit L2 norm, got {norm}"
        )));
    }
    if g.mean().norm() != 0.0 {
        return Err(Error::invalid("initial datum must be mean free"));
    }
    Ok(())
}

/// Solve the unforced equation from `g` on `[0, T]`.
pub fn run_phi(
    g: &SpectralField,
    model: &dyn VelocityModel,
    nu: f64,
    horizon: f64,
    spec: &IntegratorSpec,
    options: &RunOptions,
) -> Result<TrajectoryRecord> {
    run_phi_observed(g, model, nu, horizon, spec, options, &mut |_, _, _| Ok(()))
}

pub fn run_phi_observed(
    g: &SpectralField,
    model: &dyn VelocityModel,
    nu: f64,
    horizon: f64,
    spec: &IntegratorSpec,
    options: &RunOptions,
    observer: &mut StepObserver<'_>,
) -> Result<TrajectoryRecord> {
    check_initial(g)?;
    let grid = g.grid().clone();
    let steps = steps_for_horizon(horizon, spec.dt)?;
    let mut stepper = Stepper::new(grid.clone(), nu, *spec, model)?;
    let sample_every = options.sample_every.max(1);
    let tail_radius = grid.max_mode() as f64 / 2.0;
    let tail_modes: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.modulus(i) >= tail_radius)
        .collect();

    let mut record = TrajectoryRecord {
        max_mode: grid.max_mode(),
        nu,
        horizon,
        times: Vec::new(),
        l2: Vec::new(),
        grad: Vec::new(),
        hminus1: Vec::new(),
        tail_fraction: Vec::new(),
        mass_integral: vec![0.0; grid.shell_count()],
        dissipation_integral: vec![0.0; grid.shell_count()],
        snapshots: Vec::new(),
    };
    let mut mode_integral = vec![0.0; grid.len()];
    let mut phi = g.clone();

    let sample = |record: &mut TrajectoryRecord, phi: &SpectralField, t: f64| -> Result<()> {
        let l2 = phi.l2_norm_sq();
        let tail: f64 = tail_modes
            .iter()
            .map(|&i| phi.amplitudes()[i].norm_sqr())
            .sum();
        let fraction = if l2 > 0.0 { tail / l2 } else { 0.0 };
        record.times.push(t);
        record.l2.push(l2);
        record.grad.push(phi.grad_norm_sq());
        record.hminus1.push(phi.hminus1_unchecked());
        record.tail_fraction.push(fraction);
        if fraction > options.tail_threshold {
            return Err(Error::TailAbort {
                time: t,
                fraction,
                threshold: options.tail_threshold,
            });
        }
        Ok(())
    };

    sample(&mut record, &phi, 0.0)?;
    if options.snapshot_every.is_some() {
        record.snapshots.push(shell_snapshot(&phi, 0.0));
    }
    observer(0, 0.0, &phi)?;
    for n in 0..steps {
        let t = n as f64 * spec.dt;
        stepper.step_accumulating(&mut phi, model, t, Some(&mut mode_integral))?;
        let t_next = (n + 1) as f64 * spec.dt;
        if (n + 1) % sample_every == 0 || n + 1 == steps {
            sample(&mut record, &phi, t_next)?;
        }
        if let Some(every) = options.snapshot_every {
            if (n + 1) % every.max(1) == 0 {
                record.snapshots.push(shell_snapshot(&phi, t_next));
            }
        }
        observer(n + 1, t_next, &phi)?;
    }

    for (i, &v) in mode_integral.iter().enumerate() {
        let shell = grid.shell_of(i);
        record.mass_integral[shell] += v;
        record.dissipation_integral[shell] += 8.0 * PI * PI * nu * grid.modulus_sq(i) as f64 * v;
    }
    Ok(record)
}

fn shell_snapshot(phi: &SpectralField, time: f64) -> ShellSnapshot {
    let grid = phi.grid();
    let mut mass = vec![0.0; grid.shell_count()];
    for (i, a) in phi.amplitudes().iter().enumerate() {
        mass[grid.shell_of(i)] += a.norm_sqr();
    }
    ShellSnapshot { time, mass }
}

/// Evolve `initial` on `[0, T]`, optionally adding the white-in-time forcing
/// `sqrt(dt) xi_n g` after each step (`xi_n` i.i.d. standard normal drawn
/// from `noise_seed`).
pub fn evolve(
    initial: &SpectralField,
    model: &dyn VelocityModel,
    nu: f64,
    horizon: f64,
    spec: &IntegratorSpec,
    forcing: Option<(&SpectralField, u64)>,
) -> Result<SpectralField> {
    let steps = steps_for_horizon(horizon, spec.dt)?;
    let mut stepper = Stepper::new(initial.grid().clone(), nu, *spec, model)?;
    let mut rng = forcing.map(|(_, seed)| ChaCha8Rng::seed_from_u64(seed));
    let sqrt_dt = spec.dt.sqrt();
    let mut psi = initial.clone();
    for n in 0..steps {
        stepper.step(&mut psi, model, n as f64 * spec.dt)?;
        if let (Some((g, _)), Some(rng)) = (forcing, rng.as_mut()) {
            let xi: f64 = StandardNormal.sample(rng);
            let kick = sqrt_dt * xi;
            for (p, a) in psi.amplitudes_mut().iter_mut().zip(g.amplitudes()) {
                *p += a * kick;
            }
        }
    }
    Ok(psi)
}

/// One realization of the forced equation `d psi + (u.grad psi - nu lap psi) dt = g dW`
/// from `psi_0 = 0`, returning `psi_T`.
pub fn run_forced_oracle(
    g: &SpectralField,
    model: &dyn VelocityModel,
    nu: f64,
    horizon: f64,
    spec: &IntegratorSpec,
    noise_seed: u64,
) -> Result<SpectralField> {
    let zero = SpectralField::zeros(g.grid().clone());
    evolve(&zero, model, nu, horizon, spec, Some((g, noise_seed)))
}

/// Per-shell `|psi_hat|^2` sums.
pub fn shell_masses(psi: &SpectralField) -> Vec<f64> {
    shell_snapshot(psi, 0.0).mass
}
