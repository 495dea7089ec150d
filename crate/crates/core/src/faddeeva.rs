//! Scaled complex error function `w(z) = exp(-z^2) erfc(-iz)` and the plasma
//! dispersion function `Z(z) = i sqrt(pi) w(z)`.
//!
//! Upper half plane: Weideman's rational expansion with 32 terms.
//! Lower half plane: `w(z) = 2 exp(-z^2) - w(-z)`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::spectral::fft;

const TERMS: usize = 32;

#[derive(Debug, Clone)]
pub struct Faddeeva {
    coeffs: Vec<f64>,
    scale: f64,
}

impl Default for Faddeeva {
    fn default() -> Self {
        Self::new()
    }
}

impl Faddeeva {
    pub fn new() -> Self {
        let n = TERMS;
        let m = 2 * n;
        let m2 = 2 * m;
        let scale = (n as f64 / 2.0.sqrt()).sqrt();
        let mut samples = Vec::with_capacity(m2);
        samples.push(0.0);
        for k in -(m as i64) + 1..m as i64 {
            let theta = k as f64 * PI / m as f64;
            let t = scale * (theta / 2.0).tan();
            samples.push((-t * t).exp() * (scale * scale + t * t));
        }
        let mut buf: Vec<Complex64> =
            (0..m2).map(|i| Complex64::new(samples[(i + m) % m2], 0.0)).collect();
        fft(&mut buf);
        let coeffs = buf[1..=n].iter().map(|c| c.re / m2 as f64).collect();
        Self { coeffs, scale }
    }

    fn upper(&self, z: Complex64) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        let denom = Complex64::new(self.scale, 0.0) - i * z;
        let big = (Complex64::new(self.scale, 0.0) + i * z) / denom;
        let mut p = Complex64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            p = p * big + c;
        }
        p * 2.0 / (denom * denom) + 1.0 / (PI.sqrt() * denom)
    }

    pub fn w(&self, z: Complex64) -> Complex64 {
        if z.im >= 0.0 {
            self.upper(z)
        } else {
            (-(z * z)).exp() * 2.0 - self.upper(-z)
        }
    }

    /// Plasma dispersion function.
    pub fn plasma_z(&self, z: Complex64) -> Complex64 {
        Complex64::new(0.0, PI.sqrt()) * self.w(z)
    }
}
