//! Determinantal point processes whose kernels are Fourier transforms of
//! generalized Cantor sets and of their complements in `[0, 1]`.
//!
//! - [`cantor`]: construction of the sets, including target-measure sets with
//!   lengths kept in log-space.
//! - [`fourier`]: closed-form transforms `χ̂_I`, `χ̂_C` with certified
//!   truncation radii, plus a quadrature oracle.
//! - [`kernel`]: translation-invariant kernels and their Nyström matrices.
//! - [`rigidity`]: the log-tapered test function, decay diagnostics, the
//!   variance functional and the four domain integrals.
//! - [`sampler`]: spectral sampling of the processes on finite windows.

// `!(x > 0.0)` style guards are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cantor;
pub mod error;
pub mod fourier;
pub mod kernel;
pub mod quad;
pub mod rigidity;
pub mod sampler;
pub mod sum;

pub use cantor::{
    construct_theorem2, lengths_to_ratios, ratios_to_lengths, CantorSet, CantorSpec, SpecMode,
    ThetaConstruction, USequence,
};
pub use error::{Error, Result};
pub use fourier::{transform_c, transform_i, transform_interval, FourierValue};
pub use kernel::{gram, kernel_eval, projection_defect, GramMatrix, KernelHandle, QuadratureRule, Which};
pub use rigidity::{
    decay_check, j_integrals, phi_eval, split_point, variance_linear_statistic, DecayReport,
    JReport, TestFunction, VarianceReport,
};
pub use sampler::{estimate_linear_statistic, sample, PointSample, SampleConfig, SampleRun};

/// Formats a float with 17 significant digits, enough to round-trip.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0e0" noise
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}
