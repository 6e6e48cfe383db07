//! Variance of linear statistics and the weighted energy that bounds it.
//!
//! Both double integrals reduce to one-dimensional integrals in the lag
//! `u = x - y` through the shift defect `D(u) = ∫ (φ(y+u) - φ(y))² dy`:
//!
//! - `V = ½ ∬ (φ(x)-φ(y))² |K(x-y)|² = ∫_0^∞ g(u)² D(u) du`,
//! - `E = ∬ ((φ(x)-φ(y))/(x-y))² w(x-y) = 2 ∫_0^∞ w(u) D(u) / u² du`,
//!
//! with `w(u) = 1 + log^δ(1+|u|)`. For `u >= 2R` the supports of `φ` and its
//! shift are disjoint, so `D(u) = 2∫φ²` and the tails close in terms of
//! `∫ g² = m(M)` (Plancherel) and `G(2R) = ∫_{2R}^∞ w/u²`.

use rayon::prelude::*;
use serde::Serialize;

use super::TestFunction;
use crate::error::{Error, Result};
use crate::kernel::{KernelHandle, Which};
use crate::quad::{integrate, integrate_breakpoints, uniform_breakpoints, QuadOptions, Vector};

/// Default absolute tolerance for variance and energy integrals.
pub const DEFAULT_TOL: f64 = 1e-6;

const INNER: QuadOptions = QuadOptions {
    abs_tol: 1e-15,
    rel_tol: 1e-11,
    max_panels: 100_000,
};

/// Lag panels per chunk handed to one worker.
const CHUNK: f64 = 64.0;

/// `w(u) = 1 + log^δ(1 + |u|)`.
pub fn weight(delta: f64, u: f64) -> f64 {
    1.0 + u.abs().ln_1p().powf(delta)
}

/// `G(a) = ∫_a^∞ w(u)/u² du` for `a > 0`, via `u = a/t`.
pub fn weight_tail(delta: f64, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("tail start must be positive, got {a}")));
    }
    let q = integrate(
        |t: f64| (a / t).ln_1p().powf(delta),
        0.0,
        1.0,
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            ..QuadOptions::default()
        },
    )?;
    Ok((1.0 + q.value) / a)
}

fn shift_breakpoints(tf: &TestFunction, lo: f64, hi: f64, u: f64) -> Vec<f64> {
    let (r, big_r) = (tf.r, tf.big_r);
    let mut pts = vec![lo, hi];
    for p in [-big_r - u, -big_r, -r - u, -r, r - u, r, big_r - u, big_r] {
        if p > lo && p < hi {
            pts.push(p);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// `D(u) = ∫ (φ(y+u) - φ(y))² dy`, integrating the half line `y >= -u/2`
/// and doubling (the integrand is symmetric about `y = -u/2`).
pub fn shift_defect(tf: &TestFunction, u: f64) -> Result<f64> {
    let u = u.abs();
    if u == 0.0 {
        return Ok(0.0);
    }
    if u >= 2.0 * tf.big_r {
        return tf.l2_norm_sq().map(|p| 2.0 * p);
    }
    let pts = shift_breakpoints(tf, -0.5 * u, tf.big_r, u);
    let q = integrate_breakpoints(|y: f64| tf.diff(y + u, y).powi(2), &pts, INNER)?;
    Ok(2.0 * q.value)
}

/// `D(u)` over the full line; reference for the symmetric version.
pub fn shift_defect_full(tf: &TestFunction, u: f64) -> Result<f64> {
    let u = u.abs();
    let pts = shift_breakpoints(tf, -tf.big_r - u, tf.big_r, u);
    let q = integrate_breakpoints(|y: f64| tf.diff(y + u, y).powi(2), &pts, INNER)?;
    Ok(q.value)
}

/// Integrates `f` over `[0, 2R]` on unit-or-smaller panels, in parallel chunks,
/// with an absolute tolerance split in proportion to chunk length.
fn lag_integral<const N: usize, F>(tf: &TestFunction, width: f64, tol: f64, f: F) -> Result<(Vector<N>, f64)>
where
    F: Fn(f64) -> Vector<N> + Sync,
{
    let end = 2.0 * tf.big_r;
    let chunks = uniform_breakpoints(0.0, end, CHUNK * width);
    let parts: Vec<Result<(Vector<N>, f64)>> = chunks
        .par_windows(2)
        .map(|w| {
            let pts = uniform_breakpoints(w[0], w[1], width);
            let opts = QuadOptions {
                abs_tol: tol * (w[1] - w[0]) / end,
                rel_tol: 0.0,
                max_panels: 1_000_000,
            };
            integrate_breakpoints(&f, &pts, opts).map(|q| (q.value, q.error))
        })
        .collect();
    let mut total = Vector::<N>::default();
    let mut err = 0.0;
    for p in parts {
        let (v, e) = p?;
        total = total + v;
        err += e;
    }
    Ok((total, err))
}

fn defect_or_nan(tf: &TestFunction, u: f64) -> f64 {
    shift_defect(tf, u).unwrap_or(f64::NAN)
}

fn check_finite<const N: usize>(v: &Vector<N>) -> Result<()> {
    if v.0.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric("inner shift-defect quadrature failed".into()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VarianceReport {
    pub which: Which,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// `½ ∬ (φ(x)-φ(y))² |K(x,y)|² dx dy`.
    #[serde(rename = "V")]
    pub v: f64,
    pub error: f64,
    /// Weighted energy `∬ ((φ(x)-φ(y))/(x-y))² w(x-y)`, when attached.
    pub energy: Option<f64>,
    /// Decay constant `λ` used for the bound, when attached.
    pub lambda: Option<f64>,
    /// `½ λ E`, the variance bound implied by the decay estimate.
    #[serde(rename = "V_bound")]
    pub v_bound: Option<f64>,
}

impl VarianceReport {
    pub fn attach_bound(&mut self, lambda: f64, energy: f64) {
        self.lambda = Some(lambda);
        self.energy = Some(energy);
        self.v_bound = Some(0.5 * lambda * energy);
    }

    /// `V <= V_bound` up to the reported quadrature error; `None` without a bound.
    pub fn bound_holds(&self) -> Option<bool> {
        self.v_bound.map(|b| self.v - self.error <= b)
    }
}

/// `Var(S_φ) = ½ ∬ (φ(x)-φ(y))² |K(x,y)|² dx dy` for the kernel `h`.
pub fn variance_linear_statistic(
    h: &KernelHandle,
    tf: &TestFunction,
    tol: f64,
) -> Result<VarianceReport> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let phi2 = tf.l2_norm_sq()?;
    let m = h.measure();
    let (q, err) = lag_integral::<2, _>(tf, 1.0, 0.25 * tol / (1.0 + 2.0 * phi2), |u| {
        let g2 = h.reduced(u).powi(2);
        Vector([g2 * defect_or_nan(tf, u), g2])
    })?;
    check_finite(&q)?;
    let [head, mass] = q.0;
    let tail_mass = (0.5 * m - mass).max(0.0);
    let v = head + 2.0 * phi2 * tail_mass;
    // kernel truncation: |g² - g_N²| <= (2 + t) t with t the tail measure
    let t = h.set().tail_measure;
    let trunc = 8.0 * tf.big_r * phi2 * (2.0 + t) * t;
    let error = err * (1.0 + 2.0 * phi2) + trunc;
    if error > tol {
        return Err(Error::Accuracy {
            estimate: v,
            error,
            tolerance: tol,
        });
    }
    Ok(VarianceReport {
        which: h.which(),
        r: tf.r,
        big_r: tf.big_r,
        v,
        error,
        energy: None,
        lambda: None,
        v_bound: None,
    })
}

/// `∬ ((φ(x)-φ(y))/(x-y))² w(x-y) dx dy`, returned with its error estimate.
pub fn weighted_energy(tf: &TestFunction, delta: f64, tol: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    let phi2 = tf.l2_norm_sq()?;
    // Gauss–Kronrod nodes never sit on u = 0, where D(u)/u² -> ∫φ'².
    let (q, err) = lag_integral::<1, _>(tf, 8.0, 0.5 * tol, |u| {
        Vector([2.0 * weight(delta, u) * defect_or_nan(tf, u) / (u * u)])
    })?;
    check_finite(&q)?;
    let tail = 4.0 * phi2 * weight_tail(delta, 2.0 * tf.big_r)?;
    let total = q.0[0] + tail;
    let error = err + 1e-12 * tail;
    if error > tol {
        return Err(Error::Accuracy {
            estimate: total,
            error,
            tolerance: tol,
        });
    }
    Ok((total, error))
}

/// Number variance `Var(#[-a, a]) = ∫ g(u)² min(|u|, 2a) du`.
pub fn count_variance(h: &KernelHandle, a: f64, tol: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("half-width must be positive, got {a}")));
    }
    let end = 2.0 * a;
    let pts = uniform_breakpoints(0.0, end, 1.0);
    let q = integrate_breakpoints(
        |u: f64| {
            let g2 = h.reduced(u).powi(2);
            Vector([g2 * u, g2])
        },
        &pts,
        QuadOptions::abs(0.1 * tol / (1.0 + end)),
    )?;
    let [head, mass] = q.value.0;
    let m = h.measure();
    let v = 2.0 * head + 2.0 * end * (0.5 * m - mass).max(0.0);
    Ok((v, q.error * (2.0 + 2.0 * end)))
}
