//! Fourier transforms `ĝ(ξ) = ∫ g(x) e^{-2πixξ} dx` of indicators.
//!
//! Every set built here is symmetric about `1/2`, so `χ̂_M(ξ) e^{πiξ}` is real.
//! The level sums factor as well: the `2^(n-1)` centers of level `n` are the
//! sums `L_{n-1}/2 + Σ_{j<n} ε_j s_j` with `ε_j ∈ {0, 1}` and
//! `s_j = L_j + l_j`, hence
//!
//! ```text
//! χ̂_I(ξ) = e^{-πiξ} Σ_n l_n sinc(π l_n ξ) Π_{j<n} 2 cos(π s_j ξ).
//! ```
//!
//! [`transform_i`] evaluates this in `O(N)`; [`transform_i_enumerated`] sums
//! the closed forms of the individual intervals and is used to cross-check it.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::cantor::{CantorSet, MAX_ENUMERATED_LEVEL};
use crate::error::{Error, Result};
use crate::quad::{integrate_breakpoints, uniform_breakpoints, QuadOptions};
use crate::sum::{log2_add, ComplexNeumaierSum, NeumaierSum};

/// Below this value of `|ξ (b - a)|` the Taylor branch of `sinc` is used.
pub const SINC_TAYLOR_THRESHOLD: f64 = 1e-8;

/// A transform value with a bound on the error from untreated levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourierValue {
    pub value: Complex64,
    pub tail_radius: f64,
    pub xi: f64,
}

impl FourierValue {
    pub fn modulus(&self) -> f64 {
        self.value.norm()
    }
}

/// `sin(πlξ) / (πlξ)` with a three-term series near zero.
#[inline]
fn sinc_pi(length: f64, xi: f64) -> f64 {
    let t = length * xi;
    if t.abs() < SINC_TAYLOR_THRESHOLD {
        let x2 = (PI * t) * (PI * t);
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        let x = PI * t;
        x.sin() / x
    }
}

/// `e^{-2πiθ}` with the argument reduced modulo one first.
#[inline]
fn phase(theta: f64) -> Complex64 {
    let t = theta - theta.round();
    let (s, c) = (2.0 * PI * t).sin_cos();
    Complex64::new(c, -s)
}

/// Transform of the indicator of the interval with the given center and length.
#[inline]
pub fn transform_centered(center: f64, length: f64, xi: f64) -> Complex64 {
    phase(center * xi) * (length * sinc_pi(length, xi))
}

/// `∫_a^b e^{-2πixξ} dx = (e^{-2πiaξ} - e^{-2πibξ}) / (2πiξ)`, equal to
/// `b - a` at `ξ = 0`.
pub fn transform_interval(a: f64, b: f64, xi: f64) -> Result<Complex64> {
    if !(a < b) {
        return Err(Error::Domain(format!("interval endpoints must satisfy a < b, got ({a}, {b})")));
    }
    Ok(transform_centered(0.5 * (a + b), b - a, xi))
}

/// Real factor `e^{πiξ} χ̂_{[0,1]}(ξ) = sinc(πξ)`.
pub fn reduced_unit(xi: f64) -> f64 {
    sinc_pi(1.0, xi)
}

/// Real factor `e^{πiξ} χ̂_I(ξ)` over the materialized levels.
pub fn reduced_i(set: &CantorSet, xi: f64) -> f64 {
    let mut sum = NeumaierSum::new();
    let mut product = 1.0;
    for level in &set.levels {
        sum.add(level.length * sinc_pi(level.length, xi) * product);
        product *= 2.0 * (PI * level.child_shift() * xi).cos();
    }
    sum.value()
}

/// Real factor `e^{πiξ} χ̂_C(ξ)`.
pub fn reduced_c(set: &CantorSet, xi: f64) -> f64 {
    reduced_unit(xi) - reduced_i(set, xi)
}

/// Bound on `|Σ_{n>N} Σ_k χ̂_{I_{n,k}}(ξ)|`:
/// `(1/(π|ξ|)) Σ_{n>N} 2^(n-1) min(1, π l_n |ξ|)`, capped by the tail measure.
pub fn tail_radius(set: &CantorSet, xi: f64) -> f64 {
    if xi == 0.0 {
        return set.tail_measure;
    }
    let depth = set.depth();
    let log2_freq = (PI * xi.abs()).log2();
    let mut acc = set.tail.log2_remainder;
    for (j, &l) in set.tail.log2_lengths.iter().enumerate() {
        let log2_count = (depth + j) as f64;
        acc = log2_add(acc, (log2_count - log2_freq).min(log2_count + l));
    }
    acc.exp2().min(set.tail_measure)
}

/// `χ̂_I(ξ)` for the complement of the Cantor set in `[0, 1]`.
pub fn transform_i(set: &CantorSet, xi: f64) -> FourierValue {
    FourierValue {
        value: phase(0.5 * xi) * reduced_i(set, xi),
        tail_radius: tail_radius(set, xi),
        xi,
    }
}

/// `χ̂_C(ξ) = χ̂_{[0,1]}(ξ) - χ̂_I(ξ)`.
pub fn transform_c(set: &CantorSet, xi: f64) -> FourierValue {
    let i = transform_i(set, xi);
    FourierValue {
        value: transform_centered(0.5, 1.0, xi) - i.value,
        tail_radius: i.tail_radius,
        xi,
    }
}

/// `χ̂_I(ξ)` as the level-major compensated sum of the closed forms of all
/// `2^N - 1` enumerated intervals.
pub fn transform_i_enumerated(set: &CantorSet, xi: f64) -> Result<FourierValue> {
    if set.depth() > MAX_ENUMERATED_LEVEL {
        return Err(Error::Domain(format!(
            "depth {} too large to enumerate (limit {MAX_ENUMERATED_LEVEL})",
            set.depth()
        )));
    }
    let mut sum = ComplexNeumaierSum::new();
    for n in 1..=set.depth() {
        for iv in set.intervals(n)? {
            sum.add(transform_centered(iv.center, iv.length, xi));
        }
    }
    Ok(FourierValue {
        value: sum.value(),
        tail_radius: tail_radius(set, xi),
        xi,
    })
}

/// Per-level sums `Σ_k χ̂_{I_{n,k}}(ξ)` in their real reduced form.
pub fn level_sums(set: &CantorSet, xi: f64) -> Vec<f64> {
    let mut product = 1.0;
    set.levels
        .iter()
        .map(|level| {
            let v = level.length * sinc_pi(level.length, xi) * product;
            product *= 2.0 * (PI * level.child_shift() * xi).cos();
            v
        })
        .collect()
}

/// Adaptive-quadrature value of `Σ_j ∫_{a_j}^{b_j} e^{-2πixξ} dx`.
///
/// The tolerance is split across intervals in proportion to their lengths.
/// Independent of the closed forms above; meant for cross-checks.
pub fn quadrature_oracle(intervals: &[(f64, f64)], xi: f64, tol: f64) -> Result<Complex64> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let total: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    let mut sum = ComplexNeumaierSum::new();
    let f = |x: f64| phase(x * xi);
    for &(a, b) in intervals {
        if !(a <= b) {
            return Err(Error::Domain(format!("interval ({a}, {b}) is reversed")));
        }
        if a == b {
            continue;
        }
        let share = tol * (b - a) / total;
        // start from panels of at most a quarter period
        let width = if xi == 0.0 { b - a } else { 0.25 / xi.abs() };
        let pts = uniform_breakpoints(a, b, width.max((b - a) / 1e5));
        let opts = QuadOptions {
            abs_tol: share,
            rel_tol: 0.0,
            max_panels: 1_000_000,
        };
        let r = integrate_breakpoints(f, &pts, opts)?;
        sum.add(r.value);
    }
    Ok(sum.value())
}

/// Quadrature oracle applied to the enumerated removed intervals of `set`.
pub fn oracle_i(set: &CantorSet, xi: f64, tol: f64) -> Result<Complex64> {
    let ivs: Vec<(f64, f64)> = set
        .all_intervals(set.depth())?
        .into_iter()
        .map(|iv| (iv.left, iv.right))
        .collect();
    quadrature_oracle(&ivs, xi, tol)
}

/// Quadrature oracle applied to the closed intervals of `C_N`.
pub fn oracle_c(set: &CantorSet, xi: f64, tol: f64) -> Result<Complex64> {
    let ivs = set.stage_intervals(set.depth())?;
    quadrature_oracle(&ivs, xi, tol)
}

/// CSV rows `xi,re,im,modulus,tail_radius` for a frequency grid.
pub fn transform_csv(values: &[FourierValue]) -> String {
    let mut s = String::from("xi,re,im,modulus,tail_radius\n");
    for v in values {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            crate::fmt_f64(v.xi),
            crate::fmt_f64(v.value.re),
            crate::fmt_f64(v.value.im),
            crate::fmt_f64(v.modulus()),
            crate::fmt_f64(v.tail_radius)
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantor::{CantorSpec, USequence};
    use proptest::prelude::*;

    fn middle_thirds(n: usize) -> CantorSet {
        CantorSet::build(&CantorSpec::middle_thirds(n)).unwrap()
    }

    #[test]
    fn unit_interval_at_half() {
        let v = transform_interval(0.0, 1.0, 0.5).unwrap();
        assert!((v.norm() - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn interval_at_zero_is_length() {
        let v = transform_interval(0.2, 0.7, 0.0).unwrap();
        assert_eq!(v, Complex64::new(0.7 - 0.2, 0.0));
    }

    #[test]
    fn unit_interval_vanishes_at_integers() {
        for k in [-3.0, -1.0, 1.0, 2.0, 7.0] {
            assert!(transform_interval(0.0, 1.0, k).unwrap().norm() < 1e-15);
        }
    }

    #[test]
    fn reversed_interval_is_domain_error() {
        assert!(matches!(transform_interval(0.5, 0.5, 1.0), Err(Error::Domain(_))));
        assert!(transform_interval(0.6, 0.5, 1.0).is_err());
    }

    #[test]
    fn endpoint_form_agrees_with_center_form() {
        for &(a, b, xi) in &[(0.1, 0.35, 3.7), (0.0, 1.0, 0.123), (0.4, 0.41, -250.0)] {
            let i2pixi = Complex64::new(0.0, 2.0 * PI * xi);
            let endpoint = (phase(a * xi) - phase(b * xi)) / i2pixi;
            assert!((endpoint - transform_interval(a, b, xi).unwrap()).norm() < 1e-14);
        }
    }

    #[test]
    fn taylor_branch_is_continuous() {
        for t in [0.5, 0.9, 0.999_999] {
            let t = t * SINC_TAYLOR_THRESHOLD;
            let x = PI * t;
            assert!((sinc_pi(1.0, t) - x.sin() / x).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_frequency_gives_removed_mass() {
        let set = middle_thirds(8);
        let v = transform_i(&set, 0.0);
        assert!((v.value.re - set.enumerated_mass()).abs() < 1e-15);
        assert_eq!(v.tail_radius, set.tail_measure);
        let c = transform_c(&set, 0.0);
        assert!((c.value.re - set.measure_c).abs() < 1e-15);
    }

    #[test]
    fn factorized_matches_enumerated_sum() {
        let set = middle_thirds(12);
        for &xi in &[0.3, 1.0, 7.25, -41.0, 999.5] {
            let a = transform_i(&set, xi).value;
            let b = transform_i_enumerated(&set, xi).unwrap().value;
            assert!((a - b).norm() < 1e-12, "xi={xi}: {a} vs {b}");
        }
    }

    #[test]
    fn middle_thirds_matches_oracle() {
        let set = middle_thirds(12);
        let a = transform_i(&set, 1.0).value;
        let b = oracle_i(&set, 1.0, 1e-11).unwrap();
        assert!((a - b).norm() < 1e-9);
        let c = transform_c(&set, 3.0).value;
        let d = oracle_c(&set, 3.0, 1e-11).unwrap();
        assert!((c - d).norm() < 1e-9);
    }

    #[test]
    fn oracle_simple_cases() {
        let v = quadrature_oracle(&[(0.0, 1.0)], 0.5, 1e-12).unwrap();
        assert!((v - transform_interval(0.0, 1.0, 0.5).unwrap()).norm() < 1e-12);
        let z = quadrature_oracle(&[(0.0, 0.25), (0.5, 0.6)], 0.0, 1e-12).unwrap();
        assert!((z.re - 0.35).abs() < 1e-14 && z.im.abs() < 1e-14);
        assert!(quadrature_oracle(&[(0.0, 1.0)], 1.0, 0.0).is_err());
    }

    #[test]
    fn oracle_reports_unreachable_tolerance() {
        // 1e-300 is beneath the round-off floor of any panel
        let err = quadrature_oracle(&[(0.0, 1.0)], 3.0, 1e-300).unwrap_err();
        assert!(err.is_accuracy());
    }

    #[test]
    fn sine_majorant_holds_for_theorem2_set() {
        let set = CantorSet::build(&CantorSpec::theorem2(0.5, 0.5, USequence::Geometric)).unwrap();
        let xi = 100.0;
        let v = transform_i(&set, xi);
        let majorant: f64 = set
            .levels
            .iter()
            .map(|l| ((l.index - 1) as f64).exp2() * (PI * l.length * xi).abs().min(1.0))
            .sum::<f64>()
            / (PI * xi);
        assert!(v.modulus() <= majorant + v.tail_radius);
    }

    #[test]
    fn tail_radius_bounded_by_tail_measure() {
        let spec = CantorSpec {
            max_level: Some(1),
            ..CantorSpec::theorem2(0.3, 0.8, USequence::Geometric)
        };
        let set = CantorSet::build(&spec).unwrap();
        assert!(set.tail_measure > 0.0);
        for &xi in &[0.0, 1e-3, 1.0, 1e3] {
            let r = tail_radius(&set, xi);
            assert!(r <= set.tail_measure && r >= 0.0);
        }
        // |χ̂_I| stays below the full measure once the tail is accounted for
        let v = transform_i(&set, 0.0);
        assert!((v.value.re + v.tail_radius - set.measure_i).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn conjugate_symmetry_and_complement(
            ratios in prop::collection::vec(0.05f64..0.95, 1..=10),
            xi in -1000.0f64..1000.0,
        ) {
            let n = ratios.len();
            let set = CantorSet::build(&CantorSpec::from_ratios(ratios, n)).unwrap();
            let plus = transform_i(&set, xi);
            let minus = transform_i(&set, -xi);
            prop_assert_eq!(minus.value, plus.value.conj());
            prop_assert!(plus.modulus() <= set.measure_i + plus.tail_radius + 1e-15);
            let c = transform_c(&set, xi);
            let unit = transform_interval(0.0, 1.0, xi).unwrap();
            prop_assert!((c.value + plus.value - unit).norm() <= 1e-13);
        }
    }
}
