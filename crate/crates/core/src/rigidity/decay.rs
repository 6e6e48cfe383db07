//! Numerical check of the `|χ̂|² ≲ (1 + log^δ(1+|ξ|)) / ξ²` decay through the
//! sine-series majorant `Σ 2^(n-1) |sin(π l_n ξ)| <= κ [1 + log^(δ/2)(1+|ξ|)]`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::cantor::{root_exponent, CantorSet};
use crate::error::{Error, Result};
use crate::fourier::{tail_radius, transform_c, transform_i};
use crate::sum::NeumaierSum;

pub const DEFAULT_GRID: usize = 1000;
pub const DEFAULT_XI_MIN: f64 = 1e-2;
pub const DEFAULT_XI_MAX: f64 = 1e4;

/// Largest split constant tried, `2^40`.
const MAX_LOG2_A: i32 = 40;

/// `a(ξ) = log(1 + A [1 + log^(δ/2)(1+|ξ|)]) / log 2`.
pub fn split_point(delta: f64, a: f64, xi: f64) -> f64 {
    (a * envelope(delta, xi)).ln_1p() / std::f64::consts::LN_2
}

/// `1 + log^(δ/2)(1+|ξ|)`.
fn envelope(delta: f64, xi: f64) -> f64 {
    1.0 + xi.abs().ln_1p().powf(0.5 * delta)
}

/// `1 + log^δ(1+|ξ|)`.
fn weight(delta: f64, xi: f64) -> f64 {
    1.0 + xi.abs().ln_1p().powf(delta)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub xi: f64,
    /// `Σ_{n<=N} 2^(n-1) |sin(π l_n ξ)|` over materialized levels.
    pub lhs: f64,
    /// Bound on the same sum over the unmaterialized levels.
    pub slack: f64,
    /// `κ [1 + log^(δ/2)(1+|ξ|)]`.
    pub rhs: f64,
    /// `a(ξ)` for the pinned `A`.
    pub split: f64,
    /// `(|χ̂_I| + tail)² ξ² / (1 + log^δ(1+|ξ|))`.
    pub ratio_i: f64,
    pub ratio_c: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub delta: f64,
    #[serde(rename = "A")]
    pub a_const: f64,
    pub kappa: f64,
    /// Partial sum of `Σ (2 l_n^(1/4^(n/δ)))^n`.
    pub root_series: f64,
    /// Certified bound on the omitted terms of that series.
    pub root_series_tail: f64,
    /// `2κ²/π²`, the constant for `|χ̂_I|²`.
    pub lambda_i: f64,
    /// `2(1+κ)²/π²`, the constant for `|χ̂_C|²`.
    pub lambda_c: f64,
    pub ratio_sup_i: f64,
    pub argmax_i: f64,
    pub ratio_sup_c: f64,
    pub argmax_c: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub grid: usize,
    /// Grid points where `lhs + slack > rhs`.
    pub series_violations: usize,
    pub lambda_violations_i: usize,
    pub lambda_violations_c: usize,
    /// Whether `Σ l_n^(1/4^(n/δ))` is judged finite.
    pub summable: bool,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub rows: Vec<DecayRow>,
}

impl DecayReport {
    pub fn passes(&self) -> bool {
        self.series_violations == 0
            && self.lambda_violations_i == 0
            && self.lambda_violations_c == 0
            && self.ratio_sup_i.is_finite()
            && self.ratio_sup_c.is_finite()
    }

    /// CSV with header `xi,lhs,slack,rhs,ratio,ratio_i,ratio_c`, where
    /// `ratio = (lhs + slack) / rhs`.
    pub fn csv(&self) -> String {
        use crate::fmt_f64 as f;
        let mut s = String::from("xi,lhs,slack,rhs,ratio,ratio_i,ratio_c\n");
        for row in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                f(row.xi),
                f(row.lhs),
                f(row.slack),
                f(row.rhs),
                f((row.lhs + row.slack) / row.rhs),
                f(row.ratio_i),
                f(row.ratio_c)
            ));
        }
        s
    }
}

/// `log2` of the `n`-th root term `l_n^(1/4^(n/δ))`.
fn log2_root(set: &CantorSet, delta: f64, n: usize) -> f64 {
    match set.law {
        Some(law) => {
            let e = root_exponent(n, delta);
            law.log2_theta_const / e + root_exponent(n, law.delta) / e * law.u.log2_term(n)
        }
        None => set.log2_length(n) / root_exponent(n, delta),
    }
}

/// `Σ (2 l_n^(1/4^(n/δ)))^n` with a certified tail bound, both in linear scale.
///
/// For a length law `l_n = Θ u_n^(4^(n/δ))` with `u` nonincreasing,
/// `2 l_m^(1/e_m) <= 2 max(Θ,1)^(1/e_n) u_n =: 2^c` for `m >= n`, so the terms
/// past `n` are dominated by a geometric series once `c < 0`.
fn root_series(set: &CantorSet, delta: f64) -> (f64, f64) {
    let mut sum = NeumaierSum::new();
    match set.law {
        Some(law) if (law.delta - delta).abs() < f64::EPSILON => {
            let log2_big = law.log2_theta_const.max(0.0);
            let mut n = 1;
            loop {
                let term = n as f64 * (1.0 + log2_root(set, delta, n));
                sum.add(term.exp2());
                let c = 1.0 + log2_big / root_exponent(n + 1, delta) + law.u.log2_term(n + 1);
                if (c < -1.0 && term < sum.value().log2() - 60.0) || n >= 4000 {
                    let log2_tail = (n + 1) as f64 * c - (-(c.exp2())).ln_1p() / std::f64::consts::LN_2;
                    let tail = if c < 0.0 { log2_tail.exp2() } else { f64::INFINITY };
                    return (sum.value(), tail);
                }
                n += 1;
            }
        }
        _ => {
            let total = set.depth() + set.tail.log2_lengths.len();
            for n in 1..=total {
                sum.add((n as f64 * (1.0 + log2_root(set, delta, n))).exp2());
            }
            let tail = if set.tail.log2_remainder > f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                0.0
            };
            (sum.value(), tail)
        }
    }
}

fn summability(set: &CantorSet, delta: f64) -> (bool, Option<String>) {
    if let Some(law) = set.law {
        if (law.delta - delta).abs() < f64::EPSILON {
            return (true, None);
        }
    }
    let total = set.depth() + set.tail.log2_lengths.len();
    if total < 2 {
        return (true, None);
    }
    let last = log2_root(set, delta, total).exp2();
    let prev = log2_root(set, delta, total - 1).exp2();
    if last >= 0.5 || last >= prev {
        let msg = format!(
            "root terms l_n^(1/4^(n/delta)) do not decay (term {} = {last:.6}, term {} = {prev:.6}); \
             the summability hypothesis fails",
            total,
            total - 1
        );
        (false, Some(msg))
    } else {
        (true, None)
    }
}

/// Smallest `A = 2^k >= 1` with `(1+ξ)^(n/4^(n/δ)) <= (A+1)[1 + log^(δ/2)(1+ξ)]`
/// at `n = ⌊a(ξ)⌋ + 1` for every grid point.
fn pick_a(delta: f64, grid: &[f64]) -> Result<f64> {
    for k in 0..=MAX_LOG2_A {
        let a = 2f64.powi(k);
        let ok = grid.iter().all(|&xi| {
            let n = split_point(delta, a, xi).floor() + 1.0;
            let lhs = xi.ln_1p() * n / 4f64.powf(n / delta);
            lhs <= ((a + 1.0) * envelope(delta, xi)).ln()
        });
        if ok {
            return Ok(a);
        }
    }
    Err(Error::Numeric(format!("no split constant A <= 2^{MAX_LOG2_A} satisfies the grid condition")))
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

fn series_at(set: &CantorSet, xi: f64) -> (f64, f64) {
    let mut sum = NeumaierSum::new();
    for level in &set.levels {
        let count = 2f64.powi(level.index as i32 - 1);
        sum.add(count * (PI * level.length * xi).sin().abs());
    }
    let slack = PI * xi.abs() * tail_radius(set, xi);
    (sum.value(), slack)
}

/// Probes the decay of `χ̂_I` and `χ̂_C` on `grid` log-spaced frequencies in
/// `[min(10^-2, ξ_max/10), ξ_max]`.
pub fn decay_check(set: &CantorSet, delta: f64, xi_max: f64, grid: usize) -> Result<DecayReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    if !(xi_max > 0.0 && xi_max.is_finite()) {
        return Err(Error::Domain(format!("xi_max must be positive, got {xi_max}")));
    }
    if grid < 2 {
        return Err(Error::Domain("grid needs at least two points".into()));
    }
    let xi_min = DEFAULT_XI_MIN.min(0.1 * xi_max);
    let xs = log_grid(xi_min, xi_max, grid);
    let a_const = pick_a(delta, &xs)?;
    let (root_sum, root_tail) = root_series(set, delta);
    let kappa = a_const + 0.5 * PI * (a_const + 1.0) * (root_sum + root_tail);
    let lambda_i = 2.0 * kappa * kappa / (PI * PI);
    let lambda_c = 2.0 * (1.0 + kappa).powi(2) / (PI * PI);
    let (summable, warning) = summability(set, delta);

    let rows: Vec<DecayRow> = xs
        .par_iter()
        .map(|&xi| {
            let (lhs, slack) = series_at(set, xi);
            let w = weight(delta, xi);
            let ti = transform_i(set, xi);
            let tc = transform_c(set, xi);
            DecayRow {
                xi,
                lhs,
                slack,
                rhs: kappa * envelope(delta, xi),
                split: split_point(delta, a_const, xi),
                ratio_i: (ti.modulus() + ti.tail_radius).powi(2) * xi * xi / w,
                ratio_c: (tc.modulus() + tc.tail_radius).powi(2) * xi * xi / w,
            }
        })
        .collect();

    let argmax = |f: fn(&DecayRow) -> f64| {
        rows.iter()
            .fold((f64::NEG_INFINITY, f64::NAN), |(m, x), row| {
                let v = f(row);
                if v > m {
                    (v, row.xi)
                } else {
                    (m, x)
                }
            })
    };
    let (ratio_sup_i, argmax_i) = argmax(|r| r.ratio_i);
    let (ratio_sup_c, argmax_c) = argmax(|r| r.ratio_c);
    let mut warnings: Vec<String> = warning.into_iter().collect();
    if !kappa.is_finite() {
        warnings.push("kappa is not finite".into());
    }
    Ok(DecayReport {
        delta,
        a_const,
        kappa,
        root_series: root_sum,
        root_series_tail: root_tail,
        lambda_i,
        lambda_c,
        ratio_sup_i,
        argmax_i,
        ratio_sup_c,
        argmax_c,
        xi_min,
        xi_max,
        grid,
        series_violations: rows.iter().filter(|r| r.lhs + r.slack > r.rhs).count(),
        lambda_violations_i: rows.iter().filter(|r| r.ratio_i > lambda_i).count(),
        lambda_violations_c: rows.iter().filter(|r| r.ratio_c > lambda_c).count(),
        summable,
        warnings,
        rows,
    })
}
