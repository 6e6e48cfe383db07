//! Generalized Cantor sets on `[0, 1]`.
//!
//! At stage `n` the open middle `α_n`-th of each of the `2^(n-1)` closed
//! intervals of `C_{n-1}` is removed. Every removed interval of stage `n` has
//! the same length `l_n`, so a set is fully described by its per-level
//! geometry; individual intervals are generated on demand.
//!
//! Lengths are kept as `log2(l_n)`. Sets built from a target measure have
//! lengths like `2^-512` at the second level already, far below anything the
//! linear scale can hold for deeper levels.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::{log2_add, log2_sub, NeumaierSum};

/// Default truncation depth for ratio and length specs.
pub const DEFAULT_MAX_LEVEL: usize = 30;

/// Default floor below which a level is not materialized (`l_min = 2^-1074`).
pub const DEFAULT_LOG2_FLOOR: f64 = -1074.0;

/// Deepest level whose intervals may be enumerated one by one.
pub const MAX_ENUMERATED_LEVEL: usize = 24;

/// Relative size of the certified remainder of the normalizing series.
const SERIES_LOG2_REL_TOL: f64 = -80.0;

/// Hard cap on the number of levels examined when summing series.
const MAX_SERIES_LEVELS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecMode {
    Ratios,
    Lengths,
    Theorem2,
}

/// Built-in positive summable sequences `u_n` for the target-measure recipe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum USequence {
    /// `u_n = 2^-n`
    Geometric,
    /// `u_n = n^-2`
    Quadratic,
}

impl USequence {
    pub fn log2_term(self, n: usize) -> f64 {
        match self {
            USequence::Geometric => -(n as f64),
            USequence::Quadratic => -2.0 * (n as f64).log2(),
        }
    }

    pub fn term(self, n: usize) -> f64 {
        self.log2_term(n).exp2()
    }

    pub fn name(self) -> &'static str {
        match self {
            USequence::Geometric => "geometric",
            USequence::Quadratic => "quadratic",
        }
    }
}

impl std::str::FromStr for USequence {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(USequence::Geometric),
            "quadratic" => Ok(USequence::Quadratic),
            other => Err(Error::Spec(format!("unknown u sequence '{other}'"))),
        }
    }
}

/// `4^(n/δ)`, the root index appearing in the summability hypothesis.
pub fn root_exponent(n: usize, delta: f64) -> f64 {
    (2.0 * n as f64 / delta).exp2()
}

/// Defining data of a generalized Cantor set, in its JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorSpec {
    pub mode: SpecMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratios: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Rigidity exponent. Required for `theorem2`, optional elsewhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, rename = "u_seq_id", alias = "u_seq", skip_serializing_if = "Option::is_none")]
    pub u_seq: Option<USequence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_level: Option<usize>,
    /// `log2(l_min)`; levels with shorter intervals only enter through the tail.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log2_floor: Option<f64>,
}

impl CantorSpec {
    /// Ratio spec. When `max_level` exceeds the number of ratios the last ratio
    /// is repeated.
    pub fn from_ratios(ratios: Vec<f64>, max_level: usize) -> Self {
        Self {
            mode: SpecMode::Ratios,
            ratios: Some(ratios),
            lengths: None,
            theta: None,
            delta: None,
            u_seq: None,
            max_level: Some(max_level),
            log2_floor: None,
        }
    }

    /// The classical middle-thirds set truncated at `max_level`.
    pub fn middle_thirds(max_level: usize) -> Self {
        Self::from_ratios(vec![1.0 / 3.0], max_level)
    }

    pub fn from_lengths(lengths: Vec<f64>) -> Self {
        Self {
            mode: SpecMode::Lengths,
            ratios: None,
            max_level: Some(lengths.len()),
            lengths: Some(lengths),
            theta: None,
            delta: None,
            u_seq: None,
            log2_floor: None,
        }
    }

    pub fn theorem2(theta: f64, delta: f64, u_seq: USequence) -> Self {
        Self {
            mode: SpecMode::Theorem2,
            ratios: None,
            lengths: None,
            theta: Some(theta),
            delta: Some(delta),
            u_seq: Some(u_seq),
            max_level: None,
            log2_floor: None,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let spec: CantorSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Domain(format!("delta = {d} must lie in (0, 1)")));
            }
        }
        if let Some(f) = self.log2_floor {
            if !(f.is_finite() && f <= 0.0) {
                return Err(Error::Spec(format!("log2_floor = {f} must be finite and <= 0")));
            }
        }
        match self.mode {
            SpecMode::Ratios => {
                let r = self
                    .ratios
                    .as_ref()
                    .ok_or_else(|| Error::Spec("ratios mode requires 'ratios'".into()))?;
                if r.is_empty() && self.max_level.unwrap_or(DEFAULT_MAX_LEVEL) > 0 {
                    return Err(Error::Spec("'ratios' is empty".into()));
                }
                for (i, &a) in r.iter().enumerate() {
                    if !(a > 0.0 && a < 1.0) {
                        return Err(Error::RatioOutOfRange { index: i + 1, value: a });
                    }
                }
            }
            SpecMode::Lengths => {
                let l = self
                    .lengths
                    .as_ref()
                    .ok_or_else(|| Error::Spec("lengths mode requires 'lengths'".into()))?;
                lengths_to_ratios(l)?;
            }
            SpecMode::Theorem2 => {
                let theta = self
                    .theta
                    .ok_or_else(|| Error::Spec("theorem2 mode requires 'theta'".into()))?;
                if !(0.0..1.0).contains(&theta) {
                    return Err(Error::Domain(format!("theta = {theta} must lie in [0, 1)")));
                }
                if self.delta.is_none() {
                    return Err(Error::Spec("theorem2 mode requires 'delta'".into()));
                }
                if self.u_seq.is_none() {
                    return Err(Error::Spec("theorem2 mode requires 'u_seq'".into()));
                }
            }
        }
        Ok(())
    }

    fn floor(&self) -> f64 {
        self.log2_floor.unwrap_or(DEFAULT_LOG2_FLOOR)
    }
}

/// `l_n = 2^-(n-1) α_n Π_{k<n} (1 - α_k)` for `n = 1..=n_levels`, returned
/// as `log2(l_n)`. Ratios shorter than `n_levels` are extended by repeating
/// the last one.
pub fn ratios_to_lengths(ratios: &[f64], n_levels: usize) -> Result<Vec<f64>> {
    Ok(ratio_levels(ratios, n_levels)?
        .into_iter()
        .map(|l| l.log2_length)
        .collect())
}

/// Inverse of [`ratios_to_lengths`]:
/// `α_n = 2^(n-1) l_n / (1 - Σ_{k<n} 2^(k-1) l_k)`.
pub fn lengths_to_ratios(lengths: &[f64]) -> Result<Vec<f64>> {
    Ok(length_levels(lengths)?.into_iter().map(|l| l.ratio).collect())
}

#[derive(Debug, Clone, Copy)]
struct RawLevel {
    ratio: f64,
    log2_keep: f64,
    log2_length: f64,
}

fn ratio_levels(ratios: &[f64], n_levels: usize) -> Result<Vec<RawLevel>> {
    if n_levels > 0 && ratios.is_empty() {
        return Err(Error::Domain("no ratios given".into()));
    }
    let mut out = Vec::with_capacity(n_levels);
    let mut log2_mass = 0.0; // log2 Π_{k<n} (1 - α_k)
    for n in 1..=n_levels {
        let a = ratios[(n - 1).min(ratios.len() - 1)];
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::RatioOutOfRange { index: n, value: a });
        }
        let log2_keep = (-a).ln_1p() / LN_2;
        out.push(RawLevel {
            ratio: a,
            log2_keep,
            log2_length: log2_mass + a.log2() - (n - 1) as f64,
        });
        log2_mass += log2_keep;
    }
    Ok(out)
}

fn length_levels(lengths: &[f64]) -> Result<Vec<RawLevel>> {
    let mut remaining = 1.0;
    let mut out = Vec::with_capacity(lengths.len());
    for (i, &l) in lengths.iter().enumerate() {
        let n = i + 1;
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Domain(format!("length l_{n} = {l} must be positive")));
        }
        let mass = l * ((n - 1) as f64).exp2();
        if !(mass < remaining) {
            return Err(Error::InfeasibleLengths { level: n, mass, remaining });
        }
        // sequential subtraction keeps the inverse backward stable
        let after = remaining - mass;
        out.push(RawLevel {
            ratio: mass / remaining,
            log2_keep: after.log2() - remaining.log2(),
            log2_length: l.log2(),
        });
        remaining = after;
    }
    Ok(out)
}

/// The closed-form length law `l_n = Θ u_n^(4^(n/δ))` of a target-measure set,
/// evaluable at any level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LengthLaw {
    pub log2_theta_const: f64,
    pub delta: f64,
    pub u: USequence,
}

impl LengthLaw {
    pub fn log2_length(&self, n: usize) -> f64 {
        let e = root_exponent(n, self.delta);
        let v = self.log2_theta_const + e * self.u.log2_term(n);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    /// `log2(l_n^(1/4^(n/δ))) = log2(Θ)/4^(n/δ) + log2(u_n)`.
    pub fn log2_root(&self, n: usize) -> f64 {
        self.log2_theta_const / root_exponent(n, self.delta) + self.u.log2_term(n)
    }
}

/// Result of the target-measure recipe.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaConstruction {
    pub theta: f64,
    pub delta: f64,
    pub u: USequence,
    /// Normalization constant Θ.
    pub theta_const: f64,
    pub log2_theta_const: f64,
    /// `log2` of the partial sum of `Σ 2^(n-1) u_n^(4^(n/δ))`.
    pub log2_series: f64,
    /// `log2` of the certified bound on the omitted remainder of that series.
    pub log2_series_remainder: f64,
    /// `log2(l_n)` for `n = 1..=len`.
    pub log2_lengths: Vec<f64>,
    /// `log2(D_n)` with `D_n = 1 - Σ_{k<n} 2^(k-1) l_k`, for `n = 1..=len+1`.
    pub log2_remaining: Vec<f64>,
    /// Partial sums of `Σ l_n^(1/4^(n/δ))`.
    pub root_partial_sums: Vec<f64>,
}

impl ThetaConstruction {
    pub fn law(&self) -> LengthLaw {
        LengthLaw {
            log2_theta_const: self.log2_theta_const,
            delta: self.delta,
            u: self.u,
        }
    }

    /// `Θ Σ 2^(n-1) u_n^(4^(n/δ))`, which must equal `1 - θ`.
    pub fn normalized_series(&self) -> f64 {
        (self.log2_theta_const + self.log2_series).exp2()
    }

    /// `(1 + Θ) Σ u_n`, the comparison bound for `Σ l_n^(1/4^(n/δ))`.
    pub fn root_sum_bound(&self) -> f64 {
        let sum_u = match self.u {
            USequence::Geometric => 1.0,
            USequence::Quadratic => std::f64::consts::PI.powi(2) / 6.0,
        };
        (1.0 + self.theta_const) * sum_u
    }
}

/// Certified upper bound (log2) on `Σ_{m>n} 2^(m-1) u_m^(4^(m/δ))` for a
/// nonincreasing `u` with `u_{n+1} < 1`.
///
/// With `q = u_{n+1}^(4^((n+1)/δ))`, each later term is at most
/// `2^(n+j) q^(4^j) <= 2^n q (2 q^3)^j`.
fn log2_series_remainder(n: usize, delta: f64, u: USequence) -> f64 {
    let log2_q = root_exponent(n + 1, delta) * u.log2_term(n + 1);
    let log2_ratio = 1.0 + 3.0 * log2_q;
    if log2_q == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    debug_assert!(log2_ratio < 0.0);
    n as f64 + log2_q - (-(log2_ratio.exp2())).ln_1p() / LN_2
}

/// Builds Θ and the derived lengths for target measure `theta`.
///
/// Levels are generated until the lengths fall below `log2_floor` and the
/// remainder of the normalizing series is below `2^-80` of the last retained
/// term.
pub fn construct_theorem2(
    theta: f64,
    delta: f64,
    u: USequence,
    log2_floor: f64,
) -> Result<ThetaConstruction> {
    if !(0.0..1.0).contains(&theta) {
        return Err(Error::Domain(format!("theta = {theta} must lie in [0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    // log2 of 2^(n-1) u_n^(4^(n/δ))
    let term = |n: usize| (n - 1) as f64 + root_exponent(n, delta) * u.log2_term(n);
    let mut terms: Vec<f64> = Vec::new();
    let mut log2_sum = f64::NEG_INFINITY;
    let mut remainder;
    loop {
        let n = terms.len() + 1;
        let t = term(n);
        terms.push(t);
        log2_sum = log2_add(log2_sum, t);
        remainder = log2_series_remainder(n, delta, u);
        // Θ is at most (1-θ)/term_1, so this bounds log2(l_n) from above.
        let log2_len_bound = (1.0 - theta).log2() - terms[0] + t - (n - 1) as f64;
        let tail_small = remainder <= t + SERIES_LOG2_REL_TOL || t == f64::NEG_INFINITY;
        if (tail_small && log2_len_bound < log2_floor) || n >= MAX_SERIES_LEVELS {
            break;
        }
    }
    if log2_sum - SERIES_LOG2_REL_TOL < remainder {
        return Err(Error::Numeric("normalizing series remainder not certified".into()));
    }
    let log2_theta_const = (1.0 - theta).log2() - log2_sum;
    let k = terms.len();
    let log2_lengths: Vec<f64> = (1..=k)
        .map(|n| terms[n - 1] - (n - 1) as f64 + log2_theta_const)
        .collect();
    // D_n = θ + Θ Σ_{m>=n} 2^(m-1) u_m^(...)
    let log2_theta = if theta > 0.0 { theta.log2() } else { f64::NEG_INFINITY };
    let mut log2_remaining = vec![f64::NEG_INFINITY; k + 1];
    let mut acc = f64::NEG_INFINITY;
    log2_remaining[k] = log2_theta;
    for n in (1..=k).rev() {
        acc = log2_add(acc, terms[n - 1]);
        log2_remaining[n - 1] = log2_add(log2_theta, log2_theta_const + acc);
    }
    let law = LengthLaw {
        log2_theta_const,
        delta,
        u,
    };
    let mut root_partial_sums = Vec::with_capacity(k);
    let mut s = NeumaierSum::new();
    for n in 1..=k {
        s.add(law.log2_root(n).exp2());
        root_partial_sums.push(s.value());
    }
    Ok(ThetaConstruction {
        theta,
        delta,
        u,
        theta_const: log2_theta_const.exp2(),
        log2_theta_const,
        log2_series: log2_sum,
        log2_series_remainder: remainder,
        log2_lengths,
        log2_remaining,
        root_partial_sums,
    })
}

/// Geometry shared by all removed intervals of one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Level {
    /// Level index `n >= 1`.
    pub index: usize,
    /// `α_n`. May round to 1 in floating point; `log2_keep` stays exact.
    pub ratio: f64,
    /// `log2(1 - α_n)`.
    pub log2_keep: f64,
    pub log2_length: f64,
    /// `l_n`, zero if it underflows.
    pub length: f64,
    /// `L_{n-1}`, length of each closed interval of `C_{n-1}`.
    pub parent_length: f64,
    /// `L_n`.
    pub child_length: f64,
}

impl Level {
    /// Offset of the right child from the left child: `L_n + l_n`.
    pub fn child_shift(&self) -> f64 {
        self.child_length + self.length
    }

    /// Lebesgue measure removed at this level, `2^(n-1) l_n`.
    pub fn removed_mass(&self) -> f64 {
        (self.log2_length + (self.index - 1) as f64).exp2()
    }
}

/// A removed open interval `I_{n,k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RemovedInterval {
    pub level: usize,
    /// 1-based position within the level, left to right.
    pub k: usize,
    pub left: f64,
    pub right: f64,
    pub center: f64,
    pub length: f64,
    pub log2_length: f64,
}

/// Levels beyond the materialized depth.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Tail {
    /// `log2(l_n)` for the listed levels `N+1, N+2, ...`.
    pub log2_lengths: Vec<f64>,
    /// log2 of a bound on `Σ 2^(n-1) l_n` over levels past the listed ones.
    pub log2_remainder: f64,
}

impl Tail {
    fn empty() -> Self {
        Self {
            log2_lengths: Vec::new(),
            log2_remainder: f64::NEG_INFINITY,
        }
    }
}

/// An immutable generalized Cantor set truncated at `max_level` with a
/// certified account of everything below.
#[derive(Debug, Clone, Serialize)]
pub struct CantorSet {
    pub mode: SpecMode,
    pub levels: Vec<Level>,
    pub tail: Tail,
    pub measure_c: f64,
    pub measure_i: f64,
    /// `Σ_{n>N} 2^(n-1) l_n`.
    pub tail_measure: f64,
    /// Bound on the absolute error of generated endpoints.
    pub endpoint_error: f64,
    /// Rigidity exponent carried over from the spec, if any.
    pub delta: Option<f64>,
    /// Length law of target-measure sets.
    pub law: Option<LengthLaw>,
}

impl CantorSet {
    /// Builds the set described by `spec`.
    pub fn build(spec: &CantorSpec) -> Result<Self> {
        spec.validate()?;
        match spec.mode {
            SpecMode::Ratios => {
                let n = spec.max_level.unwrap_or(DEFAULT_MAX_LEVEL);
                let raw = ratio_levels(spec.ratios.as_deref().unwrap_or(&[]), n)?;
                Ok(Self::assemble(spec, raw, Tail::empty(), None, None))
            }
            SpecMode::Lengths => {
                let lengths = spec.lengths.as_deref().unwrap_or(&[]);
                let n = spec
                    .max_level
                    .unwrap_or(DEFAULT_MAX_LEVEL)
                    .min(lengths.len());
                let raw = length_levels(&lengths[..n])?;
                Ok(Self::assemble(spec, raw, Tail::empty(), None, None))
            }
            SpecMode::Theorem2 => {
                let tc = construct_theorem2(
                    spec.theta.unwrap(),
                    spec.delta.unwrap(),
                    spec.u_seq.unwrap(),
                    spec.floor(),
                )?;
                Ok(Self::from_theta_construction(&tc, spec))
            }
        }
    }

    /// Set induced by a target-measure construction.
    pub fn from_theta_construction(tc: &ThetaConstruction, spec: &CantorSpec) -> Self {
        let floor = spec.floor();
        let k = tc.log2_lengths.len();
        let mut depth = tc
            .log2_lengths
            .iter()
            .rposition(|&l| l >= floor)
            .map_or(0, |i| i + 1);
        if let Some(cap) = spec.max_level {
            depth = depth.min(cap);
        }
        let raw: Vec<RawLevel> = (1..=depth)
            .map(|n| {
                let log2_keep = tc.log2_remaining[n] - tc.log2_remaining[n - 1];
                RawLevel {
                    ratio: ((n - 1) as f64 + tc.log2_lengths[n - 1] - tc.log2_remaining[n - 1])
                        .exp2(),
                    log2_keep,
                    log2_length: tc.log2_lengths[n - 1],
                }
            })
            .collect();
        let tail = Tail {
            log2_lengths: tc.log2_lengths[depth..k].to_vec(),
            log2_remainder: tc.log2_theta_const + tc.log2_series_remainder,
        };
        let spec = CantorSpec {
            delta: Some(tc.delta),
            ..spec.clone()
        };
        let mut set = Self::assemble(&spec, raw, tail, Some(tc.law()), Some(tc.log2_remaining[depth]));
        set.mode = SpecMode::Theorem2;
        set
    }

    fn assemble(
        spec: &CantorSpec,
        raw: Vec<RawLevel>,
        tail: Tail,
        law: Option<LengthLaw>,
        log2_kept_override: Option<f64>,
    ) -> Self {
        let mut levels = Vec::with_capacity(raw.len());
        let mut log2_parent = 0.0f64; // log2 L_0
        let mut log2_kept = 0.0f64; // log2 Π (1 - α_k)
        for (i, r) in raw.iter().enumerate() {
            let log2_child = log2_parent + r.log2_keep - 1.0;
            levels.push(Level {
                index: i + 1,
                ratio: r.ratio,
                log2_keep: r.log2_keep,
                log2_length: r.log2_length,
                length: r.log2_length.exp2(),
                parent_length: log2_parent.exp2(),
                child_length: log2_child.exp2(),
            });
            log2_parent = log2_child;
            log2_kept += r.log2_keep;
        }
        let depth = levels.len();
        let log2_tail = tail
            .log2_lengths
            .iter()
            .enumerate()
            .fold(tail.log2_remainder, |acc, (j, &l)| {
                log2_add(acc, l + (depth + j) as f64)
            });
        let tail_measure = log2_tail.exp2();
        let kept = log2_kept_override.unwrap_or(log2_kept);
        // Π_{n<=N}(1-α_n) minus what the deeper levels still remove.
        let measure_c = if log2_tail > f64::NEG_INFINITY && kept >= log2_tail {
            log2_sub(kept, log2_tail).exp2()
        } else {
            kept.exp2() - tail_measure
        }
        .max(0.0);
        CantorSet {
            mode: spec.mode,
            levels,
            tail,
            measure_c,
            measure_i: 1.0 - measure_c,
            tail_measure,
            endpoint_error: (depth.max(1) as f64) * f64::EPSILON,
            delta: spec.delta,
            law,
        }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// `(m(C), m(I), tail_measure)`.
    pub fn measures(&self) -> (f64, f64, f64) {
        (self.measure_c, self.measure_i, self.tail_measure)
    }

    /// Measure of the stage-`n` set `C_n`, `Π_{k<=n} (1 - α_k)`.
    pub fn stage_measure(&self, n: usize) -> f64 {
        self.levels[..n.min(self.depth())]
            .iter()
            .map(|l| l.log2_keep)
            .sum::<f64>()
            .exp2()
    }

    /// Enumerated removed mass `Σ_{n<=N} 2^(n-1) l_n`.
    pub fn enumerated_mass(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l.removed_mass())
            .collect::<NeumaierSum>()
            .value()
    }

    /// `log2(l_n)` for any `n >= 1`: materialized, listed tail, closed-form
    /// law, or `-inf` past the end of a finite set.
    pub fn log2_length(&self, n: usize) -> f64 {
        let d = self.depth();
        if n >= 1 && n <= d {
            return self.levels[n - 1].log2_length;
        }
        if let Some(law) = self.law {
            return law.log2_length(n);
        }
        match self.tail.log2_lengths.get(n.wrapping_sub(d + 1)) {
            Some(&l) => l,
            None => f64::NEG_INFINITY,
        }
    }

    /// Left endpoints of the closed intervals of `C_n`, ascending.
    fn stage_left_endpoints(&self, n: usize) -> Vec<f64> {
        let mut lefts = vec![0.0];
        for level in &self.levels[..n] {
            let s = level.child_shift();
            let mut next = Vec::with_capacity(lefts.len() * 2);
            for &a in &lefts {
                next.push(a);
                next.push(a + s);
            }
            lefts = next;
        }
        lefts
    }

    /// All `2^(n-1)` removed intervals of level `n`, left to right.
    pub fn intervals(&self, n: usize) -> Result<Vec<RemovedInterval>> {
        if n == 0 || n > self.depth() {
            return Err(Error::Domain(format!(
                "level {n} outside 1..={}",
                self.depth()
            )));
        }
        if n > MAX_ENUMERATED_LEVEL {
            return Err(Error::Domain(format!(
                "level {n} has 2^{} intervals; enumeration is limited to level {MAX_ENUMERATED_LEVEL}",
                n - 1
            )));
        }
        let level = &self.levels[n - 1];
        Ok(self
            .stage_left_endpoints(n - 1)
            .into_iter()
            .enumerate()
            .map(|(i, a)| RemovedInterval {
                level: n,
                k: i + 1,
                left: a + level.child_length,
                right: a + level.child_shift(),
                center: a + 0.5 * level.parent_length,
                length: level.length,
                log2_length: level.log2_length,
            })
            .collect())
    }

    /// Removed intervals of all levels up to `max_level`, level-major.
    pub fn all_intervals(&self, max_level: usize) -> Result<Vec<RemovedInterval>> {
        let mut out = Vec::new();
        for n in 1..=max_level.min(self.depth()) {
            out.extend(self.intervals(n)?);
        }
        Ok(out)
    }

    /// Closed intervals `[left, right]` of `C_n`.
    pub fn stage_intervals(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        if n > self.depth() || n > MAX_ENUMERATED_LEVEL {
            return Err(Error::Domain(format!("stage {n} cannot be enumerated")));
        }
        let len = if n == 0 { 1.0 } else { self.levels[n - 1].child_length };
        Ok(self
            .stage_left_endpoints(n)
            .into_iter()
            .map(|a| (a, a + len))
            .collect())
    }

    /// CSV dump with header `level,k,left,right,log2_length`.
    pub fn interval_csv(&self, max_level: usize) -> Result<String> {
        let mut s = String::from("level,k,left,right,log2_length\n");
        for iv in self.all_intervals(max_level)? {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                iv.level,
                iv.k,
                crate::fmt_f64(iv.left),
                crate::fmt_f64(iv.right),
                crate::fmt_f64(iv.log2_length)
            ));
        }
        Ok(s)
    }
}
