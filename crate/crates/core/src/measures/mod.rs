//! Shell measures and the estimators built on them.

mod density;
mod estimate;
mod mixing;
mod shell;

pub use density::{
    alpha_star, bad_intervals, bad_intervals_padded, bad_set, log_density, log_density_indicator,
    log_grid, overcharged_intervals, overcharged_set, IntervalSet, POINTS_PER_DECADE,
};
pub use estimate::{
    cumulative_table, dissipation_scale, doubling_ratios, estimate_mass_measure, fit_log_slope,
    half_ensemble_z, n_zero, CumulativeRow, EnsembleEstimate, LogSlopeFit, DISSIPATION_TOLERANCE,
};
pub use mixing::{fit_mixing, fit_mixing_snr, hminus1_curve, MixingFit, SIGNAL_TO_NOISE};
pub use shell::{instantaneous_mass, Atom, ShellMeasure};
