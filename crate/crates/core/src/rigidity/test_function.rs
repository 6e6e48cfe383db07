use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};

/// The logarithmic taper `φ^(r,R)`: one on `[-r, r]`, zero outside
/// `(-R, R)`, and `1 - log(1+|x|-r)/log(1+R-r)` in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
}

impl TestFunction {
    pub fn new(r: f64, big_r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("inner radius must be positive, got {r}")));
        }
        if !(big_r > r && big_r.is_finite()) {
            return Err(Error::Domain(format!(
                "outer radius must exceed the inner radius, got r = {r}, R = {big_r}"
            )));
        }
        Ok(Self { r, big_r })
    }

    /// `L = log(1 + R - r)`.
    pub fn log_span(&self) -> f64 {
        (self.big_r - self.r).ln_1p()
    }

    fn clamp(&self, x: f64) -> f64 {
        x.abs().clamp(self.r, self.big_r)
    }

    pub fn phi(&self, x: f64) -> f64 {
        let s = x.abs();
        if s <= self.r {
            1.0
        } else if s >= self.big_r {
            0.0
        } else {
            1.0 - (s - self.r).ln_1p() / self.log_span()
        }
    }

    /// `φ(a) - φ(b)` without cancellation when `a` and `b` are close.
    pub fn diff(&self, a: f64, b: f64) -> f64 {
        let sa = self.clamp(a);
        let sb = self.clamp(b);
        if sa == sb {
            return 0.0;
        }
        ((sb - sa) / (1.0 + sa - self.r)).ln_1p() / self.log_span()
    }

    /// `(φ(x) - φ(y)) / (x - y)` for `x != y`; `φ'(x)` from the right when equal.
    pub fn slope(&self, x: f64, y: f64) -> f64 {
        if x == y {
            let s = x.abs();
            if s < self.r || s >= self.big_r {
                return 0.0;
            }
            return -x.signum() / ((1.0 + s - self.r) * self.log_span());
        }
        self.diff(x, y) / (x - y)
    }

    /// `∫ φ²`, by quadrature of `(1 - t/L)² e^t` over `[0, L]`.
    pub fn l2_norm_sq(&self) -> Result<f64> {
        let l = self.log_span();
        let q = integrate(
            |t: f64| (1.0 - t / l).powi(2) * t.exp(),
            0.0,
            l,
            QuadOptions {
                abs_tol: 0.0,
                rel_tol: 1e-12,
                ..QuadOptions::default()
            },
        )?;
        Ok(2.0 * (self.r + q.value))
    }
}

/// `φ^(r,R)(x)`.
pub fn phi_eval(tf: &TestFunction, x: f64) -> f64 {
    tf.phi(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn branches() {
        let tf = TestFunction::new(1.0, 4.0).unwrap();
        assert_eq!(phi_eval(&tf, 0.3), 1.0);
        assert_eq!(phi_eval(&tf, -1.0), 1.0);
        assert!((phi_eval(&tf, 2.0) - 0.5).abs() < 1e-15);
        assert_eq!(phi_eval(&tf, 4.0), 0.0);
        assert_eq!(phi_eval(&tf, -7.5), 0.0);
    }

    #[test]
    fn rejects_bad_radii() {
        assert!(TestFunction::new(0.0, 1.0).is_err());
        assert!(TestFunction::new(2.0, 2.0).is_err());
        assert!(TestFunction::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn continuity_at_breakpoints() {
        let tf = TestFunction::new(1.5, 30.0).unwrap();
        for &b in &[1.5, 30.0] {
            let h = 1e-9;
            assert!((tf.phi(b - h) - tf.phi(b + h)).abs() < 1e-8);
        }
    }

    #[test]
    fn norm_matches_closed_form() {
        for &(r, big_r) in &[(1.0, 10.0), (0.5, 1000.0), (2.0, 2.5)] {
            let tf = TestFunction::new(r, big_r).unwrap();
            let l = tf.log_span();
            let closed = -1.0 - 2.0 / l + 2.0 * (big_r - r) / (l * l);
            let expect = 2.0 * (r + closed);
            let got = tf.l2_norm_sq().unwrap();
            assert!((got - expect).abs() < 1e-9 * expect, "{got} vs {expect}");
        }
    }

    proptest! {
        #[test]
        fn bounded_even_monotone(r in 0.1f64..5.0, span in 0.1f64..1e4, x in -2e4f64..2e4, t in 0.0f64..1.0) {
            let tf = TestFunction::new(r, r + span).unwrap();
            let v = tf.phi(x);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, tf.phi(-x));
            let y = x.abs() * (1.0 + t) + t;
            prop_assert!(tf.phi(y) <= v);
        }

        #[test]
        fn diff_matches_direct(r in 0.1f64..5.0, span in 0.1f64..1e3, a in -2e3f64..2e3, b in -2e3f64..2e3) {
            let tf = TestFunction::new(r, r + span).unwrap();
            let direct = tf.phi(a) - tf.phi(b);
            prop_assert!((tf.diff(a, b) - direct).abs() < 1e-13);
        }
    }
}
