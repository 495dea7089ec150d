//! Discrete Fourier transforms and spectral operators on periodic grids.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

fn transform(buf: &mut [Complex64], sign: f64) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    if !n.is_power_of_two() {
        let src = buf.to_vec();
        for (k, out) in buf.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, s) in src.iter().enumerate() {
                let phase = sign * 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                acc += s * Complex64::new(phase.cos(), phase.sin());
            }
            *out = acc;
        }
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let r = i.reverse_bits() >> (usize::BITS - bits);
        if r > i {
            buf.swap(i, r);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let twiddles: Vec<Complex64> = (0..half)
            .map(|j| {
                let phase = sign * 2.0 * PI * j as f64 / len as f64;
                Complex64::new(phase.cos(), phase.sin())
            })
            .collect();
        for start in (0..n).step_by(len) {
            for j in 0..half {
                let a = buf[start + j];
                let b = buf[start + j + half] * twiddles[j];
                buf[start + j] = a + b;
                buf[start + j + half] = a - b;
            }
        }
        len <<= 1;
    }
}

/// Forward DFT, `X_k = sum_j x_j exp(-2 pi i j k / n)`, in place.
pub fn fft(buf: &mut [Complex64]) {
    transform(buf, -1.0);
}

/// Inverse DFT including the `1/n` factor, in place.
pub fn ifft(buf: &mut [Complex64]) {
    transform(buf, 1.0);
    let scale = 1.0 / buf.len() as f64;
    for c in buf.iter_mut() {
        *c *= scale;
    }
}

/// Forward DFT of real samples.
pub fn fft_real(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft(&mut buf);
    buf
}

/// Signed mode number of DFT index `k` (Nyquist mapped to `+n/2`).
pub fn mode_number(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Angular wavenumber `2 pi m / L` of DFT index `k`.
pub fn wavenumber(k: usize, n: usize, length: f64) -> f64 {
    2.0 * PI * mode_number(k, n) as f64 / length
}

/// `order`-th spectral derivative of periodic samples on `[0, length)`.
///
/// The Nyquist mode is dropped for odd orders, where its derivative is not
/// representable on the grid.
pub fn derivative(values: &[f64], length: f64, order: u32) -> Vec<f64> {
    let n = values.len();
    if order == 0 {
        return values.to_vec();
    }
    let mut buf = fft_real(values);
    for (k, c) in buf.iter_mut().enumerate() {
        if n % 2 == 0 && k == n / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let kappa = wavenumber(k, n, length);
        *c *= Complex64::new(0.0, kappa).powu(order);
    }
    ifft(&mut buf);
    buf.iter().map(|c| c.re).collect()
}

/// Evaluates the trigonometric interpolant of periodic samples at `x`.
pub fn eval_trig(coeffs: &[Complex64], length: f64, x: f64) -> f64 {
    let n = coeffs.len();
    let mut acc = 0.0;
    for (k, c) in coeffs.iter().enumerate() {
        let m = mode_number(k, n);
        let phase = 2.0 * PI * m as f64 * x / length;
        let term = c * Complex64::new(phase.cos(), phase.sin());
        if n % 2 == 0 && k == n / 2 {
            acc += c.re * phase.cos();
        } else {
            acc += term.re;
        }
    }
    acc / n as f64
}
