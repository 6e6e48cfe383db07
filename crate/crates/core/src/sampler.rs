//! Spectral sampling of `P_{K_C}` and `P_{K_I}` restricted to a window.
//!
//! The restricted operator is discretized on trapezoid nodes. Each replicate
//! keeps eigenvector `k` with probability `λ_k`, samples the resulting
//! projection process on the nodes one point at a time (each pick conditions
//! the rest through a rank-one Schur complement update), and spreads every
//! picked node uniformly over its quadrature cell.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::CantorSet;
use crate::error::{Error, Result};
use crate::kernel::{gram, GramMatrix, KernelHandle, QuadratureRule, Which};
use crate::rigidity::TestFunction;

/// Eigenvalues this far outside `[0, 1]` are clamped; farther ones abort.
pub const CLAMP_THRESHOLD: f64 = 1e-3;
/// Largest Gram defect `ε_proj` the sampler accepts.
pub const MAX_EPS_PROJ: f64 = 0.1;
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub which: Which,
    /// Half-width `W` of the window `[-W, W]`.
    pub window: f64,
    pub nodes: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl SampleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window > 0.0 && self.window.is_finite()) {
            return Err(Error::Domain(format!("window must be positive, got {}", self.window)));
        }
        if self.nodes < MIN_NODES {
            return Err(Error::Domain(format!(
                "at least {MIN_NODES} nodes are required, got {}",
                self.nodes
            )));
        }
        if self.replicates == 0 {
            return Err(Error::Domain("at least one replicate is required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSample {
    pub replicate: usize,
    pub seed_used: u64,
    /// Strictly increasing positions in `[-W, W]`.
    pub points: Vec<f64>,
    /// Number of eigenfunctions kept by the Bernoulli selection.
    pub selected: usize,
    pub eigen_clamp_events: usize,
}

impl PointSample {
    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn count_in(&self, a: f64, b: f64) -> usize {
        self.points.iter().filter(|&&x| x >= a && x <= b).count()
    }
}

#[derive(Debug, Clone)]
pub struct SampleRun {
    pub config: SampleConfig,
    pub samples: Vec<PointSample>,
    pub eigen_clamp_events: usize,
    pub eps_proj: f64,
    /// `2W m(M)`, the exact expected number of points in the window.
    pub expected_count: f64,
    /// `Σ λ_k` after clamping, the expected count of the discretized process.
    pub clamped_trace: f64,
}

/// Spectral data shared by all replicates.
struct Spectrum {
    lambdas: Vec<f64>,
    vectors: DMatrix<f64>,
    nodes: Vec<f64>,
    window: f64,
    clamp_events: usize,
}

fn clamp_spectrum(g: &GramMatrix) -> Result<(Vec<f64>, usize)> {
    let mut events = 0;
    let lambdas = g
        .eigenvalues
        .iter()
        .map(|&l| {
            if !(-CLAMP_THRESHOLD..=1.0 + CLAMP_THRESHOLD).contains(&l) {
                Err(Error::Precondition(format!(
                    "eigenvalue {l} lies outside [-{CLAMP_THRESHOLD}, 1+{CLAMP_THRESHOLD}]; increase the node count"
                )))
            } else if l < 0.0 {
                events += 1;
                Ok(0.0)
            } else if l > 1.0 {
                events += 1;
                Ok(1.0)
            } else {
                Ok(l)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((lambdas, events))
}

impl Spectrum {
    /// Trapezoid cell of node `i`: between the midpoints to its neighbours.
    fn cell(&self, i: usize) -> (f64, f64) {
        let x = &self.nodes;
        let lo = if i == 0 { -self.window } else { 0.5 * (x[i - 1] + x[i]) };
        let hi = if i + 1 == x.len() { self.window } else { 0.5 * (x[i] + x[i + 1]) };
        (lo, hi)
    }

    fn replicate(&self, seed: u64, replicate: usize) -> PointSample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(replicate as u64);
        let picked: Vec<usize> = self
            .lambdas
            .iter()
            .enumerate()
            .filter(|&(_, &l)| rng.random::<f64>() < l)
            .map(|(k, _)| k)
            .collect();
        let n = self.nodes.len();
        let k = picked.len();
        let v = DMatrix::from_fn(n, k, |i, c| self.vectors[(i, picked[c])]);

        // d_i = P_ii - Σ_s e_s[i]² with P = V Vᵀ
        let mut d: Vec<f64> = (0..n).map(|i| v.row(i).norm_squared()).collect();
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut points = Vec::with_capacity(k);
        for t in 0..k {
            let total: f64 = d.iter().map(|x| x.max(0.0)).sum();
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &di) in d.iter().enumerate() {
                let di = di.max(0.0);
                if target < di {
                    pick = i;
                    break;
                }
                target -= di;
            }
            while d[pick] <= 0.0 && pick > 0 {
                pick -= 1;
            }
            let norm = d[pick].max(f64::MIN_POSITIVE).sqrt();
            let column = &v * v.row(pick).transpose();
            let mut e: Vec<f64> = column.iter().copied().collect();
            for prev in &basis {
                let c = prev[pick];
                for (ej, pj) in e.iter_mut().zip(prev) {
                    *ej -= c * pj;
                }
            }
            for ej in e.iter_mut() {
                *ej /= norm;
            }
            for (dj, ej) in d.iter_mut().zip(&e) {
                *dj -= ej * ej;
            }
            d[pick] = 0.0;
            if t + 1 < k {
                basis.push(e);
            }
            let (lo, hi) = self.cell(pick);
            points.push(lo + (hi - lo) * rng.random::<f64>());
        }
        points.sort_by(f64::total_cmp);
        PointSample {
            replicate,
            seed_used: seed,
            points,
            selected: k,
            eigen_clamp_events: self.clamp_events,
        }
    }
}

/// Draws `cfg.replicates` independent configurations of the process with
/// kernel `K_C` or `K_I` of `set`, restricted to `[-W, W]`.
pub fn sample(cfg: &SampleConfig, set: &CantorSet) -> Result<SampleRun> {
    cfg.validate()?;
    let h = KernelHandle::new(Arc::new(set.clone()), cfg.which);
    let g = gram(&h, cfg.window, cfg.nodes, QuadratureRule::Trapezoid)?;
    if g.eps_proj >= MAX_EPS_PROJ {
        return Err(Error::Precondition(format!(
            "Gram defect {:.3e} exceeds {MAX_EPS_PROJ}; increase the node count",
            g.eps_proj
        )));
    }
    let (lambdas, clamp_events) = clamp_spectrum(&g)?;
    let clamped_trace = lambdas.iter().sum();
    let spectrum = Spectrum {
        lambdas,
        vectors: g.eigenvectors.clone(),
        nodes: g.nodes.clone(),
        window: cfg.window,
        clamp_events,
    };
    let samples: Vec<PointSample> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| spectrum.replicate(cfg.seed, r))
        .collect();
    Ok(SampleRun {
        config: *cfg,
        samples,
        eigen_clamp_events: clamp_events,
        eps_proj: g.eps_proj,
        expected_count: 2.0 * cfg.window * h.measure(),
        clamped_trace,
    })
}

/// Sample moments of a statistic with jackknife standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub replicates: usize,
    pub mean: f64,
    pub variance: f64,
    pub mean_stderr: f64,
    pub variance_stderr: f64,
}

/// Mean and unbiased variance of `values`, with jackknife standard errors.
pub fn moments(values: &[f64]) -> Result<MomentEstimate> {
    let m = values.len();
    if m == 0 {
        return Err(Error::Domain("no samples".into()));
    }
    let mf = m as f64;
    let mean = values.iter().sum::<f64>() / mf;
    if m == 1 {
        return Ok(MomentEstimate {
            replicates: 1,
            mean,
            variance: 0.0,
            mean_stderr: f64::INFINITY,
            variance_stderr: f64::INFINITY,
        });
    }
    let centered: Vec<f64> = values.iter().map(|x| x - mean).collect();
    let s2: f64 = centered.iter().map(|c| c * c).sum();
    let variance = s2 / (mf - 1.0);
    let mean_stderr = (variance / mf).sqrt();
    let variance_stderr = if m < 3 {
        f64::INFINITY
    } else {
        // leave-one-out variances from the centered sums (Σ c = 0)
        let loo: Vec<f64> = centered
            .iter()
            .map(|&c| {
                let mu = -c / (mf - 1.0);
                (s2 - c * c - (mf - 1.0) * mu * mu) / (mf - 2.0)
            })
            .collect();
        let bar = loo.iter().sum::<f64>() / mf;
        ((mf - 1.0) / mf * loo.iter().map(|v| (v - bar).powi(2)).sum::<f64>()).sqrt()
    };
    Ok(MomentEstimate {
        replicates: m,
        mean,
        variance,
        mean_stderr,
        variance_stderr,
    })
}

/// `S_f(X) = Σ_{x∈X} f(x)` for every sample.
pub fn linear_statistics<F: Fn(f64) -> f64>(samples: &[PointSample], f: F) -> Vec<f64> {
    samples
        .iter()
        .map(|s| s.points.iter().map(|&x| f(x)).sum())
        .collect()
}

/// Moments of `S_f` over `samples`.
pub fn estimate_linear_statistic<F: Fn(f64) -> f64>(
    samples: &[PointSample],
    f: F,
) -> Result<MomentEstimate> {
    moments(&linear_statistics(samples, f))
}

/// CSV with header `replicate,count,S_phi`, one row per replicate.
pub fn replicate_csv(samples: &[PointSample], tf: &TestFunction) -> String {
    let mut s = String::from("replicate,count,S_phi\n");
    for (sample, v) in samples.iter().zip(linear_statistics(samples, |x| tf.phi(x))) {
        s.push_str(&format!(
            "{},{},{}\n",
            sample.replicate,
            sample.count(),
            crate::fmt_f64(v)
        ));
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentSummary {
    pub which: Which,
    pub window: f64,
    pub nodes: usize,
    pub replicates: usize,
    pub seed: u64,
    pub eps_proj: f64,
    pub eigen_clamp_events: usize,
    pub expected_count: f64,
    pub count: MomentEstimate,
    pub s_phi: MomentEstimate,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// Replicates whose point count differs from the selected-eigenfunction count.
    pub count_mismatches: usize,
}

impl SampleRun {
    pub fn summary(&self, tf: &TestFunction) -> Result<MomentSummary> {
        let counts: Vec<f64> = self.samples.iter().map(|s| s.count() as f64).collect();
        Ok(MomentSummary {
            which: self.config.which,
            window: self.config.window,
            nodes: self.config.nodes,
            replicates: self.config.replicates,
            seed: self.config.seed,
            eps_proj: self.eps_proj,
            eigen_clamp_events: self.eigen_clamp_events,
            expected_count: self.expected_count,
            count: moments(&counts)?,
            s_phi: estimate_linear_statistic(&self.samples, |x| tf.phi(x))?,
            r: tf.r,
            big_r: tf.big_r,
            count_mismatches: self
                .samples
                .iter()
                .filter(|s| s.count() != s.selected)
                .count(),
        })
    }
}
