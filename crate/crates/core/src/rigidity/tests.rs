use std::f64::consts::PI;
use std::sync::Arc;

use super::*;
use crate::cantor::{CantorSet, CantorSpec, USequence};
use crate::kernel::{KernelHandle, Which};
use crate::quad::{integrate, integrate_breakpoints, uniform_breakpoints, QuadOptions};

fn theorem2_set() -> CantorSet {
    CantorSet::build(&CantorSpec::theorem2(0.5, 0.5, USequence::Geometric)).unwrap()
}

fn sine_limit() -> KernelHandle {
    let set = CantorSet::build(&CantorSpec::from_ratios(vec![1.0 - 1e-12], 1)).unwrap();
    KernelHandle::new(Arc::new(set), Which::I)
}

#[test]
fn split_point_values() {
    let a = split_point(0.5, 10.0, 0.0);
    assert!((a - 11f64.ln() / 2f64.ln()).abs() < 1e-14);
    assert!((a - 3.459).abs() < 1e-3);
    let mut prev = 0.0;
    for k in 0..50 {
        let xi = 10f64.powf(-2.0 + 0.15 * k as f64);
        let s = split_point(0.5, 16.0, xi);
        assert!(s >= prev);
        prev = s;
        let env = 1.0 + xi.ln_1p().powf(0.25);
        assert!(2f64.powf(s.floor()) - 1.0 <= 16.0 * env);
    }
}

#[test]
fn improper_constants() {
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        ..QuadOptions::default()
    };
    // ∫_0^1 + ∫_1^∞, the latter mapped back to (0, 1] by t = 1/s
    let lower = integrate(log_ratio_sq, 0.0, 1.0, opts).unwrap().value;
    let upper = integrate(|s: f64| log_ratio_sq(1.0 / s) / (s * s), 0.0, 1.0, opts)
        .unwrap()
        .value;
    assert!((upper - LOG_RATIO_HALF).abs() < 1e-11);
    assert!((lower + upper - LOG_RATIO_FULL).abs() < 1e-11);

    // ∫_0^∞ (log(1+t)/t)² dt split at 1, tail mapped by t = 1/s
    let f = |t: f64| {
        if t == 0.0 {
            1.0
        } else {
            (t.ln_1p() / t).powi(2)
        }
    };
    let a = integrate(f, 0.0, 1.0, opts).unwrap().value;
    let b = integrate(|s: f64| f(1.0 / s) / (s * s), 0.0, 1.0, opts).unwrap().value;
    assert!((a + b - LOG1P_RATIO).abs() < 1e-11);
}

#[test]
fn log1p_moment_two_routes() {
    let m = log_ratio_log1p_moment().unwrap();
    // t = e^s on [0, 60]; the omitted tail is below 1e-20
    let g = |s: f64| {
        let d = s.exp_m1();
        let q = if s == 0.0 { 1.0 } else { (s / d).powi(2) };
        q * s.exp().ln_1p() * s.exp()
    };
    let pts = uniform_breakpoints(0.0, 60.0, 2.0);
    let direct = integrate_breakpoints(g, &pts, QuadOptions::abs(1e-13)).unwrap().value;
    assert!((m - direct).abs() < 1e-10, "{m} vs {direct}");
}

#[test]
fn c_r_estimates() {
    assert!((c_r_estimate(1.0) - 1.0).abs() < 1e-12);
    assert!((c_r_estimate(3.0) - 3.0).abs() < 1e-6);
    let half = c_r_estimate(0.5);
    assert!(half <= 1.0 + 1e-12 && half > 0.999);
    assert_eq!(c_r_exact(0.5), 1.0);
}

#[test]
fn closed_form_d3_bound() {
    let tf = TestFunction::new(1.0, 101.0).unwrap();
    let b = j_bounds(&tf, 0.5, 1.0).unwrap();
    assert!((b[2] - 0.84).abs() < 1e-14);
}

#[test]
fn weight_tail_matches_split_integral() {
    let a = 7.0;
    let direct = integrate_breakpoints(
        |u: f64| weight(0.5, u) / (u * u),
        &[7.0, 70.0, 700.0, 7000.0, 7e4, 7e5, 7e6, 7e7],
        QuadOptions::abs(1e-13),
    )
    .unwrap()
    .value;
    // ∫_{7e7}^∞ w/u² <= (1 + log^½(1+u)) / u at u = 7e7 up to the log growth
    let rest = (1.0 + (7e7f64).ln_1p().sqrt() + 1.0) / 7e7;
    let g = weight_tail(0.5, a).unwrap();
    assert!(g >= direct && g <= direct + rest, "{g} vs {direct}");
}

#[test]
fn shift_defect_symmetry() {
    let tf = TestFunction::new(1.0, 20.0).unwrap();
    for &u in &[0.01, 0.7, 1.9, 5.0, 19.0, 25.0, 39.9] {
        let half = shift_defect(&tf, u).unwrap();
        let full = shift_defect_full(&tf, u).unwrap();
        assert!((half - full).abs() <= 1e-10 * full.max(1e-300), "u={u}: {half} vs {full}");
    }
    let phi2 = tf.l2_norm_sq().unwrap();
    assert!((shift_defect(&tf, 40.0).unwrap() - 2.0 * phi2).abs() < 1e-12);
    assert!((shift_defect_full(&tf, 40.0).unwrap() - 2.0 * phi2).abs() < 1e-9);
    assert_eq!(shift_defect(&tf, 0.0).unwrap(), 0.0);
}

/// `Var(S_φ) = ∫ |φ̂(ξ)|² |M \ (M + ξ)| dξ`; for `M = [0, 1]` the measure
/// factor is `min(|ξ|, 1)`, and `φ̂(ξ) = (1/(πξL)) ∫_r^R sin(2πξx)/(1+x-r) dx`
/// after one integration by parts.
#[test]
fn variance_matches_spectral_route() {
    let (r, big_r) = (1.0, 5.0);
    let tf = TestFunction::new(r, big_r).unwrap();
    let l = tf.log_span();
    let phi_hat = |xi: f64| -> f64 {
        let period = 1.0 / xi;
        let pts = uniform_breakpoints(r, big_r, (0.5 * period).min(0.5));
        let q = integrate_breakpoints(
            |x: f64| (2.0 * PI * xi * x).sin() / (1.0 + x - r),
            &pts,
            QuadOptions::abs(1e-12),
        )
        .unwrap();
        q.value / (PI * xi * l)
    };
    let cut = 100.0;
    let pts = uniform_breakpoints(0.0, cut, 0.25);
    let spectral = 2.0
        * integrate_breakpoints(
            |xi: f64| {
                if xi == 0.0 {
                    0.0
                } else {
                    phi_hat(xi).powi(2) * xi.min(1.0)
                }
            },
            &pts,
            QuadOptions::abs(1e-11),
        )
        .unwrap()
        .value;
    // |φ̂(ξ)| <= TV(φ')/(4π²ξ²) with TV(φ') = 4/L
    let tail = 2.0 / (l * l * PI.powi(4) * 3.0 * cut.powi(3));
    let h = sine_limit();
    let rep = variance_linear_statistic(&h, &tf, 1e-8).unwrap();
    assert!(
        (rep.v - spectral).abs() < tail + 1e-8,
        "{} vs {spectral}",
        rep.v
    );
}

#[test]
fn energy_routes_agree() {
    let tf = TestFunction::new(1.0, 11.0).unwrap();
    let j = j_integrals(&tf, 0.5, 1e-8).unwrap();
    let (e, err) = weighted_energy(&tf, 0.5, 1e-8).unwrap();
    assert!(
        (j.total - e).abs() < 1e-7 + err + j.total_error(),
        "{} vs {e}",
        j.total
    );
    for (i, ok) in j.holds().iter().enumerate() {
        assert!(ok, "J{} = {} > {}", i + 1, j.j[i], j.bounds[i]);
    }
}

#[test]
fn variance_below_decay_bound() {
    let set = Arc::new(theorem2_set());
    let report = decay_check(&set, 0.5, 1e3, 200).unwrap();
    let tf = TestFunction::new(1.0, 10.0).unwrap();
    let (e, _) = weighted_energy(&tf, 0.5, 1e-6).unwrap();
    for (which, lambda) in [(Which::C, report.lambda_c), (Which::I, report.lambda_i)] {
        let h = KernelHandle::new(set.clone(), which);
        let mut v = variance_linear_statistic(&h, &tf, 1e-6).unwrap();
        assert!(v.v > 0.0);
        v.attach_bound(lambda, e);
        assert_eq!(v.bound_holds(), Some(true));
    }
}

#[test]
fn count_variance_is_positive_and_grows_slowly() {
    let h = sine_limit();
    let (v1, _) = count_variance(&h, 1.0, 1e-9).unwrap();
    let (v4, _) = count_variance(&h, 4.0, 1e-9).unwrap();
    assert!(v1 > 0.0 && v4 > v1);
    // logarithmic growth: far below the Poisson value 2a
    assert!(v4 < 1.0);
}

#[test]
fn decay_theorem2_has_no_violations() {
    let set = theorem2_set();
    let report = decay_check(&set, 0.5, 1e4, 300).unwrap();
    assert!(report.summable);
    assert!(report.warnings.is_empty());
    assert_eq!(report.series_violations, 0);
    assert!(report.passes());
    assert!(report.root_series_tail < 1e-15 * report.root_series);
    let kappa = report.a_const
        + 0.5 * PI * (report.a_const + 1.0) * (report.root_series + report.root_series_tail);
    assert_eq!(report.kappa, kappa);
    assert!(report.ratio_sup_i <= report.lambda_i);
    assert!(report.ratio_sup_c <= report.lambda_c);
}

#[test]
fn root_series_partial_sums_are_cauchy() {
    let set = theorem2_set();
    let law = set.law.unwrap();
    let term = |n: usize| {
        let root = (law.log2_root(n)).exp2();
        (2.0 * root).powi(n as i32)
    };
    let head: f64 = (1..=8).map(term).sum();
    let more: f64 = (1..=16).map(term).sum();
    assert!((more - head) < 1e-12);
    let report = decay_check(&set, 0.5, 10.0, 10).unwrap();
    assert!((report.root_series - more).abs() < 1e-12 * more);
}

#[test]
fn middle_thirds_warns() {
    let set = CantorSet::build(&CantorSpec::middle_thirds(20)).unwrap();
    let report = decay_check(&set, 0.5, 1e4, 100).unwrap();
    assert!(!report.summable);
    assert_eq!(report.warnings.len(), 1);
}

#[test]
fn decay_rejects_bad_input() {
    let set = theorem2_set();
    assert!(decay_check(&set, 1.0, 1e3, 10).is_err());
    assert!(decay_check(&set, 0.5, -1.0, 10).is_err());
    assert!(decay_check(&set, 0.5, 1e3, 1).is_err());
}
