//! Translation-invariant kernels `K_M(x, y) = χ̂_M(x - y)` and their Nyström
//! discretizations on windows `[-W, W]`.
//!
//! `K_M(x, y) = e^{-πi(x-y)} g_M(x - y)` with `g_M` real and even, so the
//! weighted Gram matrix is `D G_r D*` where `D = diag(e^{-πi x_i})` and
//! `G_r` is real symmetric. Spectra and determinantal probabilities are
//! invariant under this diagonal unitary change, so eigen-solves work on
//! `G_r`; the complex entries remain available through [`GramMatrix::entry`].

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::CantorSet;
use crate::error::{Error, Result};
use crate::fourier::{self, FourierValue};
use crate::quad::gauss_legendre;

/// Frequency differences are rounded to multiples of `2^-40` before lookup.
pub const CACHE_QUANTUM_LOG2: i32 = -40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    C,
    I,
}

impl std::str::FromStr for Which {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "C" | "c" => Ok(Which::C),
            "I" | "i" => Ok(Which::I),
            other => Err(Error::Spec(format!("expected C or I, got '{other}'"))),
        }
    }
}

impl std::fmt::Display for Which {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Which::C => "C",
            Which::I => "I",
        })
    }
}

fn quantize(u: f64) -> (i64, f64) {
    let scale = 2f64.powi(-CACHE_QUANTUM_LOG2);
    let key = (u * scale).round();
    (key as i64, key / scale)
}

/// A kernel `K_C` or `K_I` bound to a set, with a memo of evaluated values.
#[derive(Debug)]
pub struct KernelHandle {
    set: Arc<CantorSet>,
    which: Which,
    cache: RwLock<HashMap<i64, f64>>,
}

impl Clone for KernelHandle {
    fn clone(&self) -> Self {
        Self::new(self.set.clone(), self.which)
    }
}

impl KernelHandle {
    pub fn new(set: Arc<CantorSet>, which: Which) -> Self {
        Self {
            set,
            which,
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn set(&self) -> &CantorSet {
        &self.set
    }

    pub fn which(&self) -> Which {
        self.which
    }

    /// `m(M)`, the diagonal value `K(x, x)`.
    pub fn measure(&self) -> f64 {
        match self.which {
            Which::C => self.set.measure_c,
            Which::I => self.set.measure_i,
        }
    }

    /// Real even factor `g_M(u) = e^{πiu} χ̂_M(u)`.
    pub fn reduced(&self, u: f64) -> f64 {
        match self.which {
            Which::C => fourier::reduced_c(&self.set, u),
            Which::I => fourier::reduced_i(&self.set, u),
        }
    }

    /// `g_M` at `u` rounded to the cache quantum, memoized.
    pub fn reduced_cached(&self, u: f64) -> f64 {
        let (key, uq) = quantize(u);
        if let Some(&v) = self.cache.read().unwrap().get(&key) {
            return v;
        }
        let v = self.reduced(uq);
        self.cache.write().unwrap().insert(key, v);
        v
    }

    /// `χ̂_M(u)` with its truncation radius.
    pub fn transform(&self, u: f64) -> FourierValue {
        match self.which {
            Which::C => fourier::transform_c(&self.set, u),
            Which::I => fourier::transform_i(&self.set, u),
        }
    }

    pub fn cache_len(&self) -> usize {
        self.cache.read().unwrap().len()
    }
}

/// `K_M(x, y) = χ̂_M(x - y)`, evaluated at the quantized difference.
pub fn kernel_eval(h: &KernelHandle, x: f64, y: f64) -> Complex64 {
    let (_, uq) = quantize(x - y);
    let t = 0.5 * uq;
    let t = t - t.round();
    let (s, c) = (2.0 * PI * t).sin_cos();
    Complex64::new(c, -s) * h.reduced_cached(uq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureRule {
    Trapezoid,
    Gauss,
}

impl std::str::FromStr for QuadratureRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(QuadratureRule::Trapezoid),
            "gauss" => Ok(QuadratureRule::Gauss),
            other => Err(Error::Rule(format!("unknown rule '{other}'"))),
        }
    }
}

/// Nodes and weights of `rule` on `[-w, w]`. A single node is the midpoint rule.
pub fn quadrature_nodes(rule: QuadratureRule, w: f64, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::Domain(format!("window half-width must be positive, got {w}")));
    }
    if n == 0 {
        return Err(Error::Domain("node count must be positive".into()));
    }
    let (nodes, weights) = match (rule, n) {
        (_, 1) => (vec![0.0], vec![2.0 * w]),
        (QuadratureRule::Trapezoid, _) => {
            let h = 2.0 * w / (n - 1) as f64;
            let nodes = (0..n).map(|i| -w + h * i as f64).collect();
            let mut weights = vec![h; n];
            weights[0] = 0.5 * h;
            weights[n - 1] = 0.5 * h;
            (nodes, weights)
        }
        (QuadratureRule::Gauss, _) => {
            let (x, wt) = gauss_legendre(n);
            (
                x.into_iter().map(|x| w * x).collect(),
                wt.into_iter().map(|v| w * v).collect(),
            )
        }
    };
    if let Some(bad) = weights.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Rule(format!("non-positive quadrature weight {bad}")));
    }
    Ok((nodes, weights))
}

/// Weighted Nyström matrix `√w_i K(x_i, x_j) √w_j` with its spectrum.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    pub which: Which,
    pub rule: QuadratureRule,
    pub window: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Real symmetric gauge-reduced matrix `√w_i g(x_i - x_j) √w_j`.
    pub reduced: DMatrix<f64>,
    /// Eigenvalues, ascending.
    pub eigenvalues: DVector<f64>,
    /// Orthonormal eigenvectors of `reduced`, columns matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    /// `max(-λ_min, λ_max - 1, 0)`.
    pub eps_proj: f64,
}

impl GramMatrix {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Complex entry `√w_i K(x_i, x_j) √w_j`.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let t = 0.5 * (self.nodes[i] - self.nodes[j]);
        let t = t - t.round();
        let (s, c) = (2.0 * PI * t).sin_cos();
        Complex64::new(c, -s) * self.reduced[(i, j)]
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }

    pub fn trace(&self) -> f64 {
        self.reduced.trace()
    }

    /// `max |G_ij - conj(G_ji)| / max |G_ij|` over the complex entries.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = self.entry(i, j);
                scale = scale.max(a.norm());
                worst = worst.max((a - self.entry(j, i).conj()).norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

/// Builds the Nyström matrix of `h` on `[-window, window]` with `n` nodes.
pub fn gram(h: &KernelHandle, window: f64, n: usize, rule: QuadratureRule) -> Result<GramMatrix> {
    let (nodes, weights) = quadrature_nodes(rule, window, n)?;
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let reduced = match rule {
        QuadratureRule::Trapezoid if n > 1 => {
            // Toeplitz: one kernel value per node offset
            let step = nodes[1] - nodes[0];
            let diag: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|d| h.reduced(quantize(d as f64 * step).1))
                .collect();
            DMatrix::from_fn(n, n, |i, j| diag[i.abs_diff(j)] * (sqrt_w[i] * sqrt_w[j]))
        }
        _ => {
            let rows: Vec<Vec<f64>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let u = quantize(nodes[i] - nodes[j]).1;
                            h.reduced(u) * (sqrt_w[i] * sqrt_w[j])
                        })
                        .collect()
                })
                .collect();
            DMatrix::from_fn(n, n, |i, j| rows[i][j])
        }
    };
    let eig = SymmetricEigen::try_new(reduced.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigen-solver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let eigenvectors = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
    let lmin = eigenvalues[0];
    let lmax = eigenvalues[n - 1];
    Ok(GramMatrix {
        which: h.which(),
        rule,
        window,
        nodes,
        weights,
        reduced,
        eigenvalues,
        eigenvectors,
        eps_proj: (-lmin).max(lmax - 1.0).max(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionDefect {
    pub eps_proj: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `‖G² - G‖_F / ‖G‖_F`.
    pub relative_defect: f64,
    pub trace: f64,
}

/// Distance of the discretized operator from a projection.
pub fn projection_defect(g: &GramMatrix) -> Result<ProjectionDefect> {
    if g.is_empty() {
        return Err(Error::Numeric("empty Gram matrix".into()));
    }
    let ev = &g.eigenvalues;
    if ev.iter().any(|l| !l.is_finite()) {
        return Err(Error::Numeric("non-finite eigenvalue".into()));
    }
    let num: f64 = ev.iter().map(|l| (l * l - l).powi(2)).sum::<f64>().sqrt();
    let den: f64 = ev.iter().map(|l| l * l).sum::<f64>().sqrt();
    Ok(ProjectionDefect {
        eps_proj: g.eps_proj,
        lambda_min: ev[0],
        lambda_max: ev[ev.len() - 1],
        relative_defect: if den > 0.0 { num / den } else { 0.0 },
        trace: g.trace(),
    })
}

/// CSV with header `index,eigenvalue`, ascending.
pub fn eigenvalue_csv(g: &GramMatrix) -> String {
    let mut s = String::from("index,eigenvalue\n");
    for (i, l) in g.eigenvalues.iter().enumerate() {
        s.push_str(&format!("{},{}\n", i, crate::fmt_f64(*l)));
    }
    s
}
