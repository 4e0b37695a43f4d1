use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::run::worker_count;
use super::seed::{derive_seed, FORCED_VELOCITY, NOISE, VELOCITY};
use crate::error::{Error, Result};
use crate::evolution::{run_forced_oracle, run_phi_observed, shell_masses, steps_for_horizon};

/// A shell is compared only if its unforced mean exceeds this fraction of the total.
pub const OCCUPIED_FRACTION: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellComparison {
    pub radius: f64,
    pub forced_mean: f64,
    pub forced_se: f64,
    pub unforced_mean: f64,
    pub unforced_se: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckReport {
    /// True when no forced realizations were requested.
    pub skipped: bool,
    pub forced_members: usize,
    pub unforced_members: usize,
    pub shells: Vec<ShellComparison>,
    pub occupied: usize,
    pub fraction_within_3: f64,
}

fn mean_se(samples: &[Vec<f64>], shell: usize) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().map(|s| s[shell]).sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples
        .iter()
        .map(|s| (s[shell] - mean).powi(2))
        .sum::<f64>()
        / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Compare `E |P_k psi_T|^2` of the forced equation started from zero against
/// the ensemble time integral of the unforced shell masses.
///
/// The forcing enters as a kick after every step, so the forced second moment
/// equals the left Riemann sum `dt sum_{n<K} E m_n` of the unforced masses
/// once the flow law is stationary under shifts by `dt`. The unforced side
/// accumulates exactly that sum instead of the exact time integral, so the
/// comparison carries no time-discretization bias. Flows with a fixed phase
/// origin are not stationary; use `random_offset = true` for Pierrehumbert.
pub fn ito_cross_check(config: &ExperimentConfig, forced_m: usize) -> Result<CrossCheckReport> {
    config.validate()?;
    let unforced_m = config.ensemble.members;
    if forced_m == 0 {
        return Ok(CrossCheckReport {
            skipped: true,
            forced_members: 0,
            unforced_members: unforced_m,
            shells: Vec::new(),
            occupied: 0,
            fraction_within_3: 0.0,
        });
    }
    let g = config.initial_field()?;
    let grid = g.grid().clone();
    let nu = config.physics.nu;
    let horizon = config.physics.horizon;
    let spec = config.integrator;
    let steps = steps_for_horizon(horizon, spec.dt)?;
    let master = config.ensemble.master_seed;
    let options = config.run_options();

    let unforced = |i: usize| -> Result<Vec<f64>> {
        let model = config.velocity_model(derive_seed(master, i as u64, VELOCITY))?;
        let mut sum = vec![0.0; grid.shell_count()];
        run_phi_observed(
            &g,
            &*model,
            nu,
            horizon,
            &spec,
            &options,
            &mut |n, _, phi| {
                if n < steps {
                    for (s, m) in sum.iter_mut().zip(shell_masses(phi)) {
                        *s += spec.dt * m;
                    }
                }
                Ok(())
            },
        )?;
        Ok(sum)
    };
    let forced = |i: usize| -> Result<Vec<f64>> {
        let model = config.velocity_model(derive_seed(master, i as u64, FORCED_VELOCITY))?;
        let psi = run_forced_oracle(
            &g,
            &*model,
            nu,
            horizon,
            &spec,
            derive_seed(master, i as u64, NOISE),
        )?;
        Ok(shell_masses(&psi))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(config))
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    type Masses = Vec<Result<Vec<f64>>>;
    let (u, f): (Masses, Masses) = pool.install(|| {
        rayon::join(
            || (0..unforced_m).into_par_iter().map(unforced).collect(),
            || (0..forced_m).into_par_iter().map(forced).collect(),
        )
    });
    let u = u.into_iter().collect::<Result<Vec<_>>>()?;
    let f = f.into_iter().collect::<Result<Vec<_>>>()?;
    if u.is_empty() {
        return Err(Error::config(
            "cross-check needs at least one unforced member",
        ));
    }

    let totals: Vec<(f64, f64)> = (0..grid.shell_count()).map(|s| mean_se(&u, s)).collect();
    let total: f64 = totals.iter().map(|t| t.0).sum();
    let mut shells = Vec::new();
    for (s, &(unforced_mean, unforced_se)) in totals.iter().enumerate() {
        if s == 0 || unforced_mean <= OCCUPIED_FRACTION * total {
            continue;
        }
        let (forced_mean, forced_se) = mean_se(&f, s);
        let spread = (forced_se.powi(2) + unforced_se.powi(2)).sqrt();
        let diff = forced_mean - unforced_mean;
        let z = if spread > 0.0 {
            diff / spread
        } else if diff.abs() <= 1e-12 * unforced_mean {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        shells.push(ShellComparison {
            radius: grid.shell_radii()[s],
            forced_mean,
            forced_se,
            unforced_mean,
            unforced_se,
            z,
        });
    }
    let occupied = shells.len();
    let within = shells.iter().filter(|c| c.z.abs() <= 3.0).count();
    Ok(CrossCheckReport {
        skipped: false,
        forced_members: forced_m,
        unforced_members: unforced_m,
        fraction_within_3: if occupied > 0 {
            within as f64 / occupied as f64
        } else {
            0.0
        },
        shells,
        occupied,
    })
}
