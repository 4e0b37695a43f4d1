//! Time integration of the unforced advection-diffusion equation, the
//! forced-equation oracle, and the exact Galerkin right-hand side.

pub mod bessel;
mod galerkin;
mod integrator;
mod trajectory;

pub use galerkin::{advection_direct, default_padding, fast_fft_size, galerkin_rhs, GalerkinRhs};
pub use integrator::{step, IntegratorSpec, Scheme, Stepper, MAX_CFL};
pub use trajectory::{
    evolve, run_forced_oracle, run_phi, run_phi_observed, shell_masses, steps_for_horizon,
    RunOptions, ShellSnapshot, StepObserver, TrajectoryRecord, DEFAULT_TAIL_THRESHOLD,
};
