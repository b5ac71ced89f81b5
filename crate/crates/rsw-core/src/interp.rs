//! Interpolation utilities: plain 4-point cubic for field values and a
//! shape-preserving monotone cubic for coordinate maps.
//!
//! The monotone variant trades a little accuracy for a hard guarantee: the
//! interpolant of strictly increasing samples is strictly increasing, so
//! coordinate maps stay invertible after resampling.

use crate::error::{Error, Result};
use crate::grid::Field1D;

/// Evaluates f at x by 4-point Lagrange cubic interpolation on the field's
/// uniform grid. x is clamped to the grid window; near the ends the stencil
/// shifts inward (one-sided cubic).
pub fn cubic_eval(f: &Field1D, x: f64) -> f64 {
    let g = f.grid();
    let n = f.len();
    let v = f.values();
    let t = ((x - g.xi_min()) / g.dxi()).clamp(0.0, (n - 1) as f64);
    let mut j = t.floor() as usize;
    if j >= n - 1 {
        j = n - 2;
    }
    // stencil [j0, j0+3] around cell j
    let j0 = j.saturating_sub(1).min(n - 4);
    let s = t - j0 as f64; // local coordinate in stencil units
    let mut acc = 0.0;
    for (k, &fk) in v[j0..j0 + 4].iter().enumerate() {
        let mut w = 1.0;
        for m in 0..4 {
            if m != k {
                w *= (s - m as f64) / (k as f64 - m as f64);
            }
        }
        acc += w * fk;
    }
    acc
}

/// Shape-preserving cubic interpolant of strictly increasing samples on a
/// uniform grid (Fritsch–Carlson slopes). Provides forward evaluation and
/// inversion; both stay strictly monotone.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x0: f64,
    dx: f64,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x0: f64, dx: f64, y: Vec<f64>) -> Result<Self> {
        if y.len() < 3 {
            return Err(Error::Domain(format!(
                "monotone interpolant needs at least 3 samples, got {}",
                y.len()
            )));
        }
        if !(dx > 0.0) {
            return Err(Error::Domain(format!("spacing must be positive, got {dx}")));
        }
        if y.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition(
                "monotone interpolant needs strictly increasing samples".into(),
            ));
        }
        let n = y.len();
        let d: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = clip_end_slope(1.5 * d[0] - 0.5 * d[1], d[0]);
        for i in 1..n - 1 {
            // harmonic mean of neighbouring secants (uniform spacing)
            slopes[i] = 2.0 * d[i - 1] * d[i] / (d[i - 1] + d[i]);
        }
        slopes[n - 1] = clip_end_slope(1.5 * d[n - 2] - 0.5 * d[n - 3], d[n - 2]);
        Ok(MonotoneCubic { x0, dx, y, slopes })
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + (self.y.len() - 1) as f64 * self.dx
    }

    pub fn y_min(&self) -> f64 {
        self.y[0]
    }

    pub fn y_max(&self) -> f64 {
        *self.y.last().unwrap()
    }

    /// Hermite evaluation; x clamped to the sample range.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let t = ((x - self.x0) / self.dx).clamp(0.0, (n - 1) as f64);
        let mut i = t.floor() as usize;
        if i >= n - 1 {
            i = n - 2;
        }
        let s = t - i as f64;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.slopes[i] * self.dx, self.slopes[i + 1] * self.dx);
        let s2 = s * s;
        let s3 = s2 * s;
        y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
            + m0 * (s3 - 2.0 * s2 + s)
            + y1 * (-2.0 * s3 + 3.0 * s2)
            + m1 * (s3 - s2)
    }

    /// Solves eval(x) = y for x; y clamped to the sample range. Monotonicity
    /// makes the root unique, so plain bisection inside the bracketing cell
    /// suffices.
    pub fn invert(&self, y: f64) -> f64 {
        let n = self.y.len();
        let y = y.clamp(self.y[0], self.y[n - 1]);
        // locate bracketing cell by binary search over the sample values
        let mut lo_cell = 0;
        let mut hi_cell = n - 1;
        while hi_cell - lo_cell > 1 {
            let mid = (lo_cell + hi_cell) / 2;
            if self.y[mid] <= y {
                lo_cell = mid;
            } else {
                hi_cell = mid;
            }
        }
        let mut lo = self.x0 + lo_cell as f64 * self.dx;
        let mut hi = lo + self.dx;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.eval(mid) <= y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn clip_end_slope(m: f64, d: f64) -> f64 {
    if m * d <= 0.0 {
        0.0
    } else if m.abs() > 3.0 * d.abs() {
        3.0 * d
    } else {
        m
    }
}
