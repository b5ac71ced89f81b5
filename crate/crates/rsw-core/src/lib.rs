//! Numerical laboratory for the 1-D rotating shallow water system in
//! Lagrangian coordinates,
//!
//!   ∂t h + h² ∂ξ u = 0,
//!   ∂t u + ∂ξ (h^γ/γ) − v = 0,      γ ≥ 1,
//!   ∂t v + u = 0,
//!
//! covering the closed-form kernels of the gradient blow-up theory, a
//! method-of-lines solver for the diagonalized system, comparison-ODE
//! machinery bounding the blow-up time, the constant-vorticity Klein-Gordon
//! reformulation, and the Euler–Lagrange coordinate maps.

pub mod blowup;
pub mod coords;
pub mod error;
pub mod fields;
pub mod grid;
pub mod interp;
pub mod kernels;
pub mod kg;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Field1D, Grid};
pub use kernels::{BoundConstants, GammaLaw};
