//! Globally adaptive Gauss–Kronrod (7, 15) quadrature and Gauss–Legendre rules.
//!
//! The integrator keeps every panel in a max-heap keyed by its error estimate
//! and bisects the worst one until the summed error meets the tolerance. It is
//! generic over the integrand's value type so the same routine integrates real
//! and complex functions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Values an integrand may return.
pub trait QuadValue:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Several real integrands sharing one set of panels. Error control uses the
/// max norm, so components should have comparable absolute tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vector<const N: usize>(pub [f64; N]);

impl<const N: usize> Default for Vector<N> {
    fn default() -> Self {
        Vector([0.0; N])
    }
}

impl<const N: usize> Add for Vector<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

impl<const N: usize> Sub for Vector<N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl<const N: usize> Mul<f64> for Vector<N> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for a in self.0.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl<const N: usize> QuadValue for Vector<N> {
    fn magnitude(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_panels: 200_000,
        }
    }
}

impl QuadOptions {
    pub fn abs(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol: 0.0,
            ..Self::default()
        }
    }

    pub fn with_max_panels(mut self, max_panels: usize) -> Self {
        self.max_panels = max_panels;
        self
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut e = err.abs();
    if resasc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / resasc).powf(1.5);
        e = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        e = e.max(50.0 * f64::EPSILON * resabs);
    }
    e
}

/// One 15-point Kronrod evaluation of `f` on `[a, b]`.
pub fn gk15<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut resabs = fc.magnitude() * WGK[7];
    let mut fv1 = [T::default(); 7];
    let mut fv2 = [T::default(); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kron = kron + (f1 + f2) * WGK[j];
        resabs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            gauss = gauss + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kron * 0.5;
    let mut resasc = WGK[7] * (fc - mean).magnitude();
    for j in 0..7 {
        resasc += WGK[j] * ((fv1[j] - mean).magnitude() + (fv2[j] - mean).magnitude());
    }
    let habs = half.abs();
    let err = rescale_error(
        (kron - gauss).magnitude() * half,
        resabs * habs,
        resasc * habs,
    );
    (kron * half, err)
}

/// Adaptive integral of `f` over `[a, b]`.
pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    opts: QuadOptions,
) -> Result<QuadResult<T>> {
    integrate_breakpoints(f, &[a, b], opts)
}

/// Adaptive integral over consecutive segments of `points`, which must be
/// nondecreasing. Zero-width segments are skipped.
pub fn integrate_breakpoints<T: QuadValue, F: FnMut(f64) -> T>(
    mut f: F,
    points: &[f64],
    opts: QuadOptions,
) -> Result<QuadResult<T>> {
    let mut heap = BinaryHeap::new();
    let mut total = T::default();
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(a <= b) {
            return Err(Error::Domain(format!("breakpoints out of order: {a} > {b}")));
        }
        if a == b {
            continue;
        }
        let (v, e) = gk15(&mut f, a, b);
        evaluations += 15;
        total = total + v;
        total_err += e;
        heap.push(Panel { a, b, value: v, error: e });
    }
    loop {
        let target = opts.abs_tol.max(opts.rel_tol * total.magnitude());
        if total_err <= target {
            break;
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::Accuracy {
                estimate: total.magnitude(),
                error: total_err,
                tolerance: target,
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            return Err(Error::Accuracy {
                estimate: total.magnitude(),
                error: total_err,
                tolerance: target,
            });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        evaluations += 30;
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum from the panels to avoid drift from the running updates.
    let mut value = T::default();
    let mut error = 0.0;
    for p in heap.iter() {
        value = value + p.value;
        error += p.error;
    }
    Ok(QuadResult {
        value,
        error,
        evaluations,
    })
}

/// Splits `[a, b]` into panels no wider than `width`.
pub fn uniform_breakpoints(a: f64, b: f64, width: f64) -> Vec<f64> {
    let n = (((b - a) / width).ceil() as usize).max(1);
    let mut pts: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    pts[n] = b;
    pts
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
