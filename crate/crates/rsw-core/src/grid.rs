//! Uniform grids, sampled fields, and finite-difference stencils.
//!
//! Everything downstream works on node-centred uniform grids
//! ξ_i = ξ_min + i·Δξ, i = 0..n−1, with both window endpoints included.
//! Fields are plain sample vectors tied to such a grid; all stencil choices
//! used for diagnostics live here so that every module differentiates the
//! same way.

use crate::error::{Error, Result};

/// Descriptor of a uniform node-centred grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    xi_min: f64,
    dxi: f64,
    n: usize,
}

impl Grid {
    /// Grid spanning [xi_min, xi_max] with n nodes including both endpoints.
    pub fn new(xi_min: f64, xi_max: f64, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("grid needs at least 3 nodes, got {n}")));
        }
        if !(xi_min.is_finite() && xi_max.is_finite()) || xi_max <= xi_min {
            return Err(Error::Domain(format!(
                "invalid grid window [{xi_min}, {xi_max}]"
            )));
        }
        Ok(Grid {
            xi_min,
            dxi: (xi_max - xi_min) / (n - 1) as f64,
            n,
        })
    }

    pub fn xi_min(&self) -> f64 {
        self.xi_min
    }

    pub fn xi_max(&self) -> f64 {
        self.xi(self.n - 1)
    }

    pub fn dxi(&self) -> f64 {
        self.dxi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of node i.
    pub fn xi(&self, i: usize) -> f64 {
        self.xi_min + i as f64 * self.dxi
    }

    /// Midpoint of the window.
    pub fn center(&self) -> f64 {
        0.5 * (self.xi_min + self.xi_max())
    }
}

/// A real-valued field sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Field1D {
    grid: Grid,
    values: Vec<f64>,
}

impl Field1D {
    /// Wraps samples, validating length and finiteness.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "sample count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerics(format!(
                "non-finite sample {} at node {i}",
                values[i]
            )));
        }
        Ok(Field1D { grid, values })
    }

    /// Samples f at every node. The closure is trusted to return finite values.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.xi(i))).collect();
        Field1D { grid, values }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Field1D {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Applies f pointwise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Field1D {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Combines two fields on the same grid pointwise.
    pub fn zip_with(&self, other: &Field1D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Precondition("fields live on different grids".into()));
        }
        Ok(Field1D {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Trapezoid quadrature over the whole window.
    pub fn trapezoid(&self) -> f64 {
        let inner: f64 = self.values[1..self.values.len() - 1].iter().sum();
        self.grid.dxi() * (inner + 0.5 * (self.values[0] + self.values[self.values.len() - 1]))
    }

    /// Diagnostic first derivative: fourth-order centred in the interior,
    /// second-order centred one node in, second-order one-sided at the ends.
    pub fn derivative(&self) -> Field1D {
        let mut out = vec![0.0; self.values.len()];
        deriv_centered4(&self.values, self.grid.dxi(), &mut out);
        Field1D {
            grid: self.grid,
            values: out,
        }
    }

    /// Second-order first derivative: centred interior, one-sided ends.
    pub fn derivative_centered2(&self) -> Field1D {
        let mut out = vec![0.0; self.values.len()];
        deriv_centered2(&self.values, self.grid.dxi(), &mut out);
        Field1D {
            grid: self.grid,
            values: out,
        }
    }

    /// Diagnostic second derivative: fourth-order centred in the interior,
    /// lower order near the ends.
    pub fn second_derivative(&self) -> Field1D {
        let mut out = vec![0.0; self.values.len()];
        second_deriv_centered4(&self.values, self.grid.dxi(), &mut out);
        Field1D {
            grid: self.grid,
            values: out,
        }
    }
}

/// Fourth-order centred second derivative, lower order near the ends.
pub(crate) fn second_deriv_centered4(f: &[f64], dxi: f64, out: &mut [f64]) {
    let n = f.len();
    debug_assert!(n >= 3 && out.len() == n);
    let h2 = dxi * dxi;
    out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f.get(3).copied().unwrap_or(f[2])) / h2;
    out[1] = (f[0] - 2.0 * f[1] + f[2]) / h2;
    for i in 2..n - 2 {
        out[i] =
            (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h2);
    }
    out[n - 2] = (f[n - 3] - 2.0 * f[n - 2] + f[n - 1]) / h2;
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3]
        - f.get(n.wrapping_sub(4)).copied().unwrap_or(f[n - 3]))
        / h2;
}

/// Fourth-order centred first derivative with graceful edge fallback.
pub(crate) fn deriv_centered4(f: &[f64], dxi: f64, out: &mut [f64]) {
    let n = f.len();
    debug_assert!(n >= 3 && out.len() == n);
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dxi);
    out[1] = (f[2] - f[0]) / (2.0 * dxi);
    for i in 2..n - 2 {
        out[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * dxi);
    }
    out[n - 2] = (f[n - 1] - f[n - 3]) / (2.0 * dxi);
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dxi);
}

/// Second-order centred first derivative, one-sided at the ends.
pub(crate) fn deriv_centered2(f: &[f64], dxi: f64, out: &mut [f64]) {
    let n = f.len();
    debug_assert!(n >= 3 && out.len() == n);
    out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dxi);
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) / (2.0 * dxi);
    }
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dxi);
}
