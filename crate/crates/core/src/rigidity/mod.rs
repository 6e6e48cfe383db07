//! Variance functionals, the logarithmic test functions that drive them to
//! zero, and numerical checks of the decay and energy bounds.

mod decay;
mod jbounds;
mod test_function;
mod variance;

pub use decay::{decay_check, split_point, DecayReport, DecayRow, DEFAULT_GRID, DEFAULT_XI_MAX, DEFAULT_XI_MIN};
pub use jbounds::{
    c_r_estimate, c_r_exact, j_bounds, j_integrals, log_ratio_log1p_moment, log_ratio_sq, JReport,
    LOG1P_RATIO, LOG_RATIO_FULL, LOG_RATIO_HALF,
};
pub use test_function::{phi_eval, TestFunction};
pub use variance::{
    count_variance, weighted_energy, shift_defect, shift_defect_full, variance_linear_statistic,
    weight, weight_tail, VarianceReport, DEFAULT_TOL,
};

#[cfg(test)]
mod tests;
