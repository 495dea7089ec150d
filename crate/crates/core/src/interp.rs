//! Uniform-shift Lagrange interpolation along one grid line.

#[allow(unused_imports)]
use num_traits::Float;

/// Interpolation stencil used by the semi-Lagrangian shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Linear,
    #[default]
    Cubic,
}

/// Shifts closer than this to an integer are applied as exact index moves.
pub const SNAP: f64 = 1e-12;

/// Boundary treatment for points outside the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Zero,
}

fn weights(order: Interpolation, theta: f64) -> ([f64; 4], i64) {
    match order {
        Interpolation::Linear => ([1.0 - theta, theta, 0.0, 0.0], 0),
        Interpolation::Cubic => {
            let t = theta;
            (
                [
                    -t * (t - 1.0) * (t - 2.0) / 6.0,
                    (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
                    -(t + 1.0) * t * (t - 2.0) / 2.0,
                    (t + 1.0) * t * (t - 1.0) / 6.0,
                ],
                -1,
            )
        }
    }
}

/// Writes `out[i] = src(i - shift)` where `shift` is measured in cells.
///
/// `src` is read with stride `stride` starting at `offset`, and so is `out`.
pub fn shift_line(
    src: &[f64],
    out: &mut [f64],
    n: usize,
    offset: usize,
    stride: usize,
    shift: f64,
    order: Interpolation,
    boundary: Boundary,
) {
    let rounded = shift.round();
    let foot = -shift;
    let (base, theta) = if (shift - rounded).abs() < SNAP {
        (-rounded as i64, 0.0)
    } else {
        let fl = foot.floor();
        (fl as i64, foot - fl)
    };
    let at = |idx: i64| -> f64 {
        match boundary {
            Boundary::Periodic => src[offset + idx.rem_euclid(n as i64) as usize * stride],
            Boundary::Zero => {
                if idx < 0 || idx >= n as i64 {
                    0.0
                } else {
                    src[offset + idx as usize * stride]
                }
            }
        }
    };
    if theta == 0.0 {
        for i in 0..n {
            out[offset + i * stride] = at(i as i64 + base);
        }
        return;
    }
    let (w, first) = weights(order, theta);
    let width = match order {
        Interpolation::Linear => 2,
        Interpolation::Cubic => 4,
    };
    for i in 0..n {
        let start = i as i64 + base + first;
        let mut acc = 0.0;
        for (m, wm) in w.iter().take(width).enumerate() {
            acc += wm * at(start + m as i64);
        }
        out[offset + i * stride] = acc;
    }
}

/// Periodic interpolation of `src` at fractional index `pos`.
pub fn sample_periodic(src: &[f64], pos: f64, order: Interpolation) -> f64 {
    let n = src.len() as i64;
    let rounded = pos.round();
    if (pos - rounded).abs() < SNAP {
        return src[(rounded as i64).rem_euclid(n) as usize];
    }
    let fl = pos.floor();
    let (w, first) = weights(order, pos - fl);
    let width = match order {
        Interpolation::Linear => 2,
        Interpolation::Cubic => 4,
    };
    let start = fl as i64 + first;
    w.iter()
        .take(width)
        .enumerate()
        .map(|(m, wm)| wm * src[(start + m as i64).rem_euclid(n) as usize])
        .sum()
}
