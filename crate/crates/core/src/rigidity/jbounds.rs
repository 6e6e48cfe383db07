//! The weighted energy split over the four off-diagonal domains
//!
//! - `D1: r < |x|, |y| < R`,
//! - `D2: |x| < r < |y| < R`,
//! - `D3: |x| < r < R < |y|`,
//! - `D4: r < |x| < R < |y|`,
//!
//! and the closed-form upper bounds for each piece. The full energy is
//! `J1 + 2 (J2 + J3 + J4)`, the factor two covering the mirrored domains.

use std::f64::consts::PI;

use serde::Serialize;

use super::variance::{weight, weight_tail};
use super::TestFunction;
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_breakpoints, QuadOptions};

const INNER: QuadOptions = QuadOptions {
    abs_tol: 1e-15,
    rel_tol: 1e-11,
    max_panels: 100_000,
};

/// `∫_0^∞ (log t / (t-1))² dt`.
pub const LOG_RATIO_FULL: f64 = 2.0 * PI * PI / 3.0;
/// `∫_1^∞ (log t / (t-1))² dt`.
pub const LOG_RATIO_HALF: f64 = PI * PI / 3.0;
/// `∫_0^∞ (log(1+t) / t)² dt`.
pub const LOG1P_RATIO: f64 = PI * PI / 3.0;

/// `(log t / (t-1))²`, continuous at `t = 1`.
pub fn log_ratio_sq(t: f64) -> f64 {
    let d = t - 1.0;
    if d.abs() < 1e-8 {
        let v = 1.0 - 0.5 * d + d * d / 3.0;
        return v * v;
    }
    let log = if d.abs() < 0.5 { d.ln_1p() } else { t.ln() };
    (log / d).powi(2)
}

/// `∫_1^∞ (log t / (t-1))² log(1+t) dt`, computed on `(0, 1]` after `t = 1/s`.
pub fn log_ratio_log1p_moment() -> Result<f64> {
    let q = integrate(
        |s: f64| {
            if s > 0.0 {
                log_ratio_sq(s) * (s.ln_1p() - s.ln())
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            ..QuadOptions::default()
        },
    )?;
    Ok(q.value)
}

/// Lipschitz constant of `log(1+s-r)` against `log s` on `s > r`, as the
/// supremum of the difference-quotient ratio over pairs from a geometric grid
/// reaching `10^8 r` on both sides of the start.
pub fn c_r_estimate(r: f64) -> f64 {
    let n = 400;
    let grid: Vec<f64> = (0..n)
        .map(|k| r + r * 10f64.powf(-8.0 + 16.0 * k as f64 / (n - 1) as f64))
        .collect();
    let mut sup: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (grid[i], grid[j]);
            let num = ((b - a) / (1.0 + a - r)).ln_1p();
            let den = ((b - a) / a).ln_1p();
            sup = sup.max(num / den);
        }
    }
    sup
}

/// Supremum of `s / (1 + s - r)` over `s > r`, the exact constant: `max(1, r)`.
pub fn c_r_exact(r: f64) -> f64 {
    r.max(1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct JReport {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub delta: f64,
    #[serde(rename = "J")]
    pub j: [f64; 4],
    pub errors: [f64; 4],
    pub bounds: [f64; 4],
    /// Numerical estimate of `c(r)` used in `bounds[0]` and `bounds[3]`.
    pub c_r: f64,
    pub c_r_exact: f64,
    /// `J1 + 2 (J2 + J3 + J4)`.
    pub total: f64,
}

impl JReport {
    /// `J_i <= bound_i` allowing for the quadrature error.
    pub fn holds(&self) -> [bool; 4] {
        std::array::from_fn(|i| self.j[i] - self.errors[i] <= self.bounds[i])
    }

    pub fn total_error(&self) -> f64 {
        self.errors[0] + 2.0 * (self.errors[1] + self.errors[2] + self.errors[3])
    }
}

/// Geometric breakpoints on `[a, b]` clustering toward `a`, `a >= 0`.
fn geometric_points(a: f64, b: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let span = b - a;
    let mut h = span;
    let mut stack = Vec::new();
    while h > 1e-3 * span.min(1.0) && stack.len() < 60 {
        stack.push(a + h);
        h *= 0.5;
    }
    pts.extend(stack.into_iter().rev());
    pts
}

fn finish(value: f64, error: f64, tol: f64) -> Result<(f64, f64)> {
    if !value.is_finite() {
        return Err(Error::Numeric("inner quadrature failed".into()));
    }
    if error > tol {
        return Err(Error::Accuracy {
            estimate: value,
            error,
            tolerance: tol,
        });
    }
    Ok((value, error))
}

/// `J1 = (4/L²) ∫_r^R dx ∫_r^x dy (ψx-ψy)² [w(x-y)/(x-y)² + w(x+y)/(x+y)²]`.
fn j1(tf: &TestFunction, delta: f64, tol: f64) -> Result<(f64, f64)> {
    let (r, big_r) = (tf.r, tf.big_r);
    let l = tf.log_span();
    let scale = 4.0 / (l * l);
    let inner = |x: f64| -> f64 {
        let f = |y: f64| {
            // (φ(x) - φ(y))² = (ψx - ψy)²/L²; the 1/L² is folded into `scale`
            let d = tf.diff(x, y) * l;
            let same = if x == y {
                (1.0 / (1.0 + x - r)).powi(2)
            } else {
                (d / (x - y)).powi(2) * weight(delta, x - y)
            };
            same + (d / (x + y)).powi(2) * weight(delta, x + y)
        };
        integrate(f, r, x, INNER).map_or(f64::NAN, |q| q.value)
    };
    let pts = geometric_points(r, big_r);
    let q = integrate_breakpoints(inner, &pts, QuadOptions::abs(0.5 * tol / scale))?;
    finish(scale * q.value, scale * q.error, tol)
}

/// `J2 = (2/L²) ∫_r^R ψ(y)² H(y) dy` with `H(y) = ∫_{y-r}^{y+r} w(u)/u² du`.
fn j2(tf: &TestFunction, delta: f64, tol: f64) -> Result<(f64, f64)> {
    let (r, big_r) = (tf.r, tf.big_r);
    let l = tf.log_span();
    let scale = 2.0 / (l * l);
    let f = |y: f64| {
        let psi = (y - r).ln_1p();
        let h = integrate(
            |u: f64| weight(delta, u) / (u * u),
            y - r,
            y + r,
            INNER,
        )
        .map_or(f64::NAN, |q| q.value);
        psi * psi * h
    };
    let pts = geometric_points(r, big_r);
    let q = integrate_breakpoints(f, &pts, QuadOptions::abs(0.5 * tol / scale))?;
    finish(scale * q.value, scale * q.error, tol)
}

/// `J3 = 2 ∫_{-r}^{r} G(R - x) dx`.
fn j3(tf: &TestFunction, delta: f64, tol: f64) -> Result<(f64, f64)> {
    let (r, big_r) = (tf.r, tf.big_r);
    let f = |x: f64| weight_tail(delta, big_r - x).unwrap_or(f64::NAN);
    let q = integrate(f, -r, r, QuadOptions::abs(0.25 * tol))?;
    finish(2.0 * q.value, 2.0 * q.error, tol)
}

/// `J4 = (2/L²) ∫_r^R (L - ψ(x))² [G(R-x) + G(R+x)] dx`.
fn j4(tf: &TestFunction, delta: f64, tol: f64) -> Result<(f64, f64)> {
    let (r, big_r) = (tf.r, tf.big_r);
    let l = tf.log_span();
    let scale = 2.0 / (l * l);
    let f = |x: f64| {
        if x >= big_r {
            return 0.0;
        }
        // L - ψ(x) = log((1+R-r)/(1+x-r))
        let gap = ((big_r - x) / (1.0 + x - r)).ln_1p();
        let g = weight_tail(delta, big_r - x).unwrap_or(f64::NAN)
            + weight_tail(delta, big_r + x).unwrap_or(f64::NAN);
        gap * gap * g
    };
    // cluster panels toward x = R, where G(R-x) blows up
    let pts: Vec<f64> = geometric_points(0.0, big_r - r)
        .into_iter()
        .rev()
        .map(|t| big_r - t)
        .collect();
    let q = integrate_breakpoints(f, &pts, QuadOptions::abs(0.5 * tol / scale))?;
    finish(scale * q.value, scale * q.error, tol)
}

/// Closed-form upper bounds for `J1..J4` with the given `c(r)`.
pub fn j_bounds(tf: &TestFunction, delta: f64, c_r: f64) -> Result<[f64; 4]> {
    let (r, big_r) = (tf.r, tf.big_r);
    let l = tf.log_span();
    let l2 = l * l;
    let log_ratio = big_r.ln() - r.ln();
    let c2 = c_r * c_r;
    let b1 = 4.0 * c2 * weight(delta, 2.0 * big_r) * log_ratio / l2 * LOG_RATIO_FULL;
    let b2 = 4.0 * r * weight(delta, big_r + r) / l2 * LOG1P_RATIO;
    let b3 = 4.0 * r * (1.0 / (big_r - r) + (big_r - r).powf(delta - 1.0) / (1.0 - delta));
    let moment = log_ratio_log1p_moment()?;
    let b4 = 4.0 * c2 * log_ratio / l2
        * (weight(delta, big_r) * LOG_RATIO_HALF + moment / big_r.ln_1p().powf(1.0 - delta));
    Ok([b1, b2, b3, b4])
}

/// `J1..J4` by nested adaptive quadrature, each to absolute tolerance `tol`,
/// with their closed-form bounds.
pub fn j_integrals(tf: &TestFunction, delta: f64, tol: f64) -> Result<JReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let parts = [
        j1(tf, delta, tol)?,
        j2(tf, delta, tol)?,
        j3(tf, delta, tol)?,
        j4(tf, delta, tol)?,
    ];
    let c_r = c_r_estimate(tf.r);
    let j = parts.map(|p| p.0);
    Ok(JReport {
        r: tf.r,
        big_r: tf.big_r,
        delta,
        j,
        errors: parts.map(|p| p.1),
        bounds: j_bounds(tf, delta, c_r)?,
        c_r,
        c_r_exact: c_r_exact(tf.r),
        total: j[0] + 2.0 * (j[1] + j[2] + j[3]),
    })
}
