//! Compensated (Neumaier) summation.

use num_complex::Complex64;

/// Running sum with a Neumaier error-free-transform correction term.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Componentwise compensated sum of complex values.
#[derive(Debug, Default, Clone, Copy)]
pub struct ComplexNeumaierSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexNeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// log2(2^a + 2^b) without overflow or underflow.
pub fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
}

/// log2(2^a - 2^b) for a >= b. Returns -inf when the difference vanishes.
pub fn log2_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    debug_assert!(a >= b);
    let d = b - a;
    if d >= 0.0 {
        return f64::NEG_INFINITY;
    }
    a + (-(d.exp2())).ln_1p() / std::f64::consts::LN_2
}
