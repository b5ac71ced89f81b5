//! Grid-sampled state, initial-data generators, and per-snapshot diagnostics.
//!
//! A `LagrangianState` carries the primitive variables (h, u, v) on a shared
//! grid; `RiemannState` carries the diagonalizing invariants
//!
//!   R₁ = u − K(h),   R₂ = u + K(h),   R₃ = v,
//!
//! and the two are exact algebraic images of each other away from vacuum.
//! Diagnostics (weighted gradients, potential vorticity, energy, threshold
//! report) use fourth-order stencils so that bound checks are not polluted
//! by the solver's own discretization error.

use crate::error::{Error, Result};
use crate::grid::{Field1D, Grid};
use crate::kernels::{
    energy_density, f_gamma_inv, kappa, vartheta, BoundConstants, GammaLaw, F_GAMMA_INV_TOL,
};
use rand::Rng;

/// Relative cutoff defining the numerical support of a deviation field.
pub const SUPPORT_CUTOFF: f64 = 1e-10;

/// Primitive state (h, u, v) at one time on a shared grid. h stays strictly
/// positive; the far field is the rest state (1, 0, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianState {
    t: f64,
    h: Field1D,
    u: Field1D,
    v: Field1D,
}

impl LagrangianState {
    pub fn new(t: f64, h: Field1D, u: Field1D, v: Field1D) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Domain(format!("time must be finite and ≥ 0, got {t}")));
        }
        if h.grid() != u.grid() || h.grid() != v.grid() {
            return Err(Error::Precondition(
                "state fields must share one grid".into(),
            ));
        }
        if h.min() <= 0.0 {
            return Err(Error::Vacuum(format!(
                "height must stay positive, min h = {}",
                h.min()
            )));
        }
        Ok(LagrangianState { t, h, u, v })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn h(&self) -> &Field1D {
        &self.h
    }

    pub fn u(&self) -> &Field1D {
        &self.u
    }

    pub fn v(&self) -> &Field1D {
        &self.v
    }

    pub fn grid(&self) -> Grid {
        self.h.grid()
    }

    pub fn into_parts(self) -> (f64, Field1D, Field1D, Field1D) {
        (self.t, self.h, self.u, self.v)
    }
}

/// Riemann-invariant state (R₁, R₂, R₃) at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannState {
    t: f64,
    r1: Field1D,
    r2: Field1D,
    r3: Field1D,
}

impl RiemannState {
    pub fn new(t: f64, r1: Field1D, r2: Field1D, r3: Field1D) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Domain(format!("time must be finite and ≥ 0, got {t}")));
        }
        if r1.grid() != r2.grid() || r1.grid() != r3.grid() {
            return Err(Error::Precondition(
                "invariant fields must share one grid".into(),
            ));
        }
        Ok(RiemannState { t, r1, r2, r3 })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r1(&self) -> &Field1D {
        &self.r1
    }

    pub fn r2(&self) -> &Field1D {
        &self.r2
    }

    pub fn r3(&self) -> &Field1D {
        &self.r3
    }

    pub fn grid(&self) -> Grid {
        self.r1.grid()
    }
}

/// Scalar diagnostics extracted from one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub min_z: f64,
    pub max_z: f64,
    pub min_h: f64,
    pub max_h: f64,
    pub max_pv_drift: f64,
    pub max_abs_r: f64,
    pub support_halfwidth: f64,
}

/// Closed-form constants and blow-up verdicts evaluated on initial data.
///
/// `valid` is false when sup ω₀ ≤ 0, in which case every square root in the
/// theory is undefined and the threshold fields are NaN. A NaN
/// `thm12_threshold` with `valid == true` means the criterion window is
/// empty for this data (sup ω₀ < 1/h*).
#[derive(Debug, Clone)]
pub struct ThresholdReport {
    pub constants: BoundConstants,
    pub thm11_threshold: f64,
    pub thm12_threshold: f64,
    pub inf_z0: f64,
    pub thm11_satisfied: bool,
    pub thm12_satisfied: bool,
    pub h_star: f64,
    pub f_inv: f64,
    pub valid: bool,
}

/// Initial-data families. All are C¹ with compact support and far field
/// (1, 0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BumpKind {
    /// Perturbs h only; u = v = 0.
    HeightBump,
    /// Perturbs u only; h = 1, v = 0, so the potential vorticity is 1.
    VelocityBump,
    /// Perturbs v and sets h = 1/(1 − ∂ξv) with the discrete derivative, so
    /// the grid potential vorticity equals 1 to rounding.
    ConstantPv,
}

/// Compactly supported bump profile b(s) = (1 − s²)³ on |s| ≤ 1, zero
/// outside. C² at the support edge; sup |b′| = 96/(25√5) at s = ∓1/√5.
#[inline]
pub fn bump_kernel(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - s * s;
        q * q * q
    }
}

/// Builds t = 0 data with one bump of the given kind centered in the grid
/// window. The support must clear each boundary by at least 10% of the
/// window so the far field stays at rest during a run.
pub fn make_bump_data(
    kind: BumpKind,
    amplitude: f64,
    width: f64,
    grid: Grid,
) -> Result<LagrangianState> {
    if !(width > 0.0) || !width.is_finite() || !amplitude.is_finite() {
        return Err(Error::Domain(format!(
            "bump needs finite amplitude and positive width, got a={amplitude}, w={width}"
        )));
    }
    let window = grid.xi_max() - grid.xi_min();
    if width > 0.4 * window {
        return Err(Error::Precondition(format!(
            "bump of width {width} leaves less than 10% margin in window {window}"
        )));
    }
    let center = grid.center();
    let bump = Field1D::from_fn(grid, |xi| amplitude * bump_kernel((xi - center) / width));
    let zero = Field1D::constant(grid, 0.0);
    match kind {
        BumpKind::HeightBump => {
            let h = bump.map(|b| 1.0 + b);
            if h.min() <= 0.0 {
                return Err(Error::Vacuum(format!(
                    "height bump of amplitude {amplitude} reaches vacuum"
                )));
            }
            LagrangianState::new(0.0, h, zero.clone(), zero)
        }
        BumpKind::VelocityBump => {
            let h = Field1D::constant(grid, 1.0);
            LagrangianState::new(0.0, h, bump, zero)
        }
        BumpKind::ConstantPv => {
            let dv = bump.derivative();
            if dv.max() >= 1.0 {
                return Err(Error::Vacuum(format!(
                    "transverse bump of amplitude {amplitude} needs ∂ξv < 1, got max {}",
                    dv.max()
                )));
            }
            let h = dv.map(|d| 1.0 / (1.0 - d));
            LagrangianState::new(0.0, h, zero, bump)
        }
    }
}

/// A sum of one to three kernel bumps with random amplitudes, widths, and
/// centers, clear of the boundary. Used by property suites that need
/// generic C¹ compactly supported profiles.
pub fn random_bump_field<R: Rng + ?Sized>(grid: Grid, rng: &mut R) -> Field1D {
    let window = grid.xi_max() - grid.xi_min();
    let lo = grid.xi_min() + 0.12 * window;
    let hi = grid.xi_max() - 0.12 * window;
    let n_bumps = rng.gen_range(1..=3);
    let mut parts = Vec::with_capacity(n_bumps);
    for _ in 0..n_bumps {
        let width = window * rng.gen_range(0.05..0.18);
        let center = rng.gen_range(lo + width..hi - width);
        let amplitude = rng.gen_range(-2.0..2.0);
        parts.push((amplitude, center, width));
    }
    Field1D::from_fn(grid, |xi| {
        parts
            .iter()
            .map(|&(a, c, w)| a * bump_kernel((xi - c) / w))
            .sum()
    })
}

/// Diagonalizing change of variables; exact pointwise algebra.
pub fn to_riemann(state: &LagrangianState, law: GammaLaw) -> Result<RiemannState> {
    let n = state.h.len();
    let mut r1 = Vec::with_capacity(n);
    let mut r2 = Vec::with_capacity(n);
    for (&h, &u) in state.h.values().iter().zip(state.u.values()) {
        let k = kappa(h, law)?;
        r1.push(u - k);
        r2.push(u + k);
    }
    RiemannState::new(
        state.t,
        Field1D::new(state.grid(), r1)?,
        Field1D::new(state.grid(), r2)?,
        state.v.clone(),
    )
}

/// Inverse of `to_riemann`: h = ϑ((R₂ − R₁)/2), u = (R₁ + R₂)/2, v = R₃.
pub fn from_riemann(rs: &RiemannState, law: GammaLaw) -> Result<LagrangianState> {
    let n = rs.r1.len();
    let mut h = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    for (&a, &b) in rs.r1.values().iter().zip(rs.r2.values()) {
        h.push(vartheta(0.5 * (b - a), law)?);
        u.push(0.5 * (a + b));
    }
    LagrangianState::new(
        rs.t,
        Field1D::new(rs.grid(), h)?,
        Field1D::new(rs.grid(), u)?,
        rs.r3.clone(),
    )
}

/// Weighted gradients Z_j = √h·[∂ξu + (−1)ʲ h^((γ−3)/2) ∂ξh], j = 1, 2.
/// These are the quantities whose negative excursions drive gradient
/// blow-up.
pub fn weighted_gradients(state: &LagrangianState, law: GammaLaw) -> Result<(Field1D, Field1D)> {
    if state.h.min() <= 0.0 {
        return Err(Error::Vacuum("weighted gradients need h > 0".into()));
    }
    let du = state.u.derivative();
    let dh = state.h.derivative();
    let g = law.gamma();
    let n = state.h.len();
    let mut z1 = Vec::with_capacity(n);
    let mut z2 = Vec::with_capacity(n);
    for i in 0..n {
        let h = state.h.values()[i];
        let sqrt_h = h.sqrt();
        let hp = if g == 2.0 {
            1.0 / sqrt_h
        } else {
            h.powf(0.5 * (g - 3.0))
        };
        let a = du.values()[i];
        let b = hp * dh.values()[i];
        z1.push(sqrt_h * (a - b));
        z2.push(sqrt_h * (a + b));
    }
    Ok((
        Field1D::new(state.grid(), z1)?,
        Field1D::new(state.grid(), z2)?,
    ))
}

/// Potential vorticity ω = 1/h + ∂ξv, an exact invariant of the flow; its
/// drift from the initial profile measures solver error.
pub fn potential_vorticity(state: &LagrangianState) -> Result<Field1D> {
    if state.h.min() <= 0.0 {
        return Err(Error::Vacuum("potential vorticity needs h > 0".into()));
    }
    let dv = state.v.derivative();
    state.h.zip_with(&dv, |h, d| 1.0 / h + d)
}

/// Conserved energy ∫ ½(u² + v²) + Q(h) dξ by the trapezoid rule.
pub fn total_energy(state: &LagrangianState, law: GammaLaw) -> Result<f64> {
    let n = state.h.len();
    let mut density = Vec::with_capacity(n);
    for i in 0..n {
        let u = state.u.values()[i];
        let v = state.v.values()[i];
        density.push(0.5 * (u * u + v * v) + energy_density(state.h.values()[i], law)?);
    }
    Ok(Field1D::new(state.grid(), density)?.trapezoid())
}

/// Half-width of the numerical support of the deviation from the rest state:
/// the largest |ξ − ξ_center| where any of |h − 1|, |u|, |v| exceeds
/// `SUPPORT_CUTOFF` times its own sup norm.
pub fn support_halfwidth(state: &LagrangianState) -> f64 {
    let grid = state.grid();
    let center = grid.center();
    let mut half = 0.0_f64;
    let deviations = [
        state.h.values().iter().map(|&h| h - 1.0).collect::<Vec<_>>(),
        state.u.values().to_vec(),
        state.v.values().to_vec(),
    ];
    for dev in &deviations {
        let sup = dev.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
        if sup == 0.0 {
            continue;
        }
        let cut = SUPPORT_CUTOFF * sup;
        for (i, &d) in dev.iter().enumerate() {
            if d.abs() > cut {
                half = half.max((grid.xi(i) - center).abs());
            }
        }
    }
    half
}

/// Full set of per-snapshot diagnostics against the initial potential
/// vorticity profile `pv0`.
pub fn diagnostics(
    state: &LagrangianState,
    law: GammaLaw,
    pv0: &Field1D,
) -> Result<DiagnosticsRecord> {
    let (z1, z2) = weighted_gradients(state, law)?;
    let pv = potential_vorticity(state)?;
    let drift = pv.zip_with(pv0, |a, b| (a - b).abs())?;
    let rs = to_riemann(state, law)?;
    let max_abs_r = rs
        .r1()
        .max_abs()
        .max(rs.r2().max_abs())
        .max(rs.r3().max_abs());
    Ok(DiagnosticsRecord {
        t: state.t,
        energy: total_energy(state, law)?,
        min_z: z1.min().min(z2.min()),
        max_z: z1.max().max(z2.max()),
        min_h: state.h.min(),
        max_h: state.h.max(),
        max_pv_drift: drift.max(),
        max_abs_r,
        support_halfwidth: support_halfwidth(state),
    })
}

/// Evaluates every closed-form constant and both blow-up criteria on t = 0
/// data. The first criterion is the sharp bar −√(2 sup ω₀); the second is
/// the energy-weighted bar −√2·√(sup ω₀ − 1/h*), valid on the window where
/// the first does not already apply.
pub fn threshold_report(state0: &LagrangianState, law: GammaLaw) -> Result<ThresholdReport> {
    if state0.t != 0.0 {
        return Err(Error::Precondition(format!(
            "threshold report wants initial data, got t = {}",
            state0.t
        )));
    }
    let pv = potential_vorticity(state0)?;
    let omega0_sharp = pv.max();
    let (z1, z2) = weighted_gradients(state0, law)?;
    let z0_sharp = z1.max().max(z2.max());
    let inf_z0 = z1.min().min(z2.min());
    let e0 = total_energy(state0, law)?;
    let rs = to_riemann(state0, law)?;
    let m0 = rs
        .r1()
        .max_abs()
        .max(rs.r2().max_abs())
        .max(rs.r3().max_abs());
    let h0_min = state0.h.min();

    if omega0_sharp <= 0.0 {
        let constants = BoundConstants {
            omega0_sharp,
            z0_sharp,
            w0_sharp: f64::NAN,
            g0: f64::NAN,
            e0,
            m0,
            h0_min,
        };
        return Ok(ThresholdReport {
            constants,
            thm11_threshold: f64::NAN,
            thm12_threshold: f64::NAN,
            inf_z0,
            thm11_satisfied: false,
            thm12_satisfied: false,
            h_star: f64::NAN,
            f_inv: f64::NAN,
            valid: false,
        });
    }

    let constants = BoundConstants::from_parts(omega0_sharp, z0_sharp, e0, m0, h0_min)?;
    let thm11_threshold = -(2.0 * omega0_sharp).sqrt();
    let f_inv = if e0 == 0.0 {
        0.0
    } else {
        f_gamma_inv(constants.g0 * e0, law, F_GAMMA_INV_TOL)?
    };
    let h_star = (f_inv + 1.0).powf(2.0 / law.gamma());
    let radicand = omega0_sharp - 1.0 / h_star;
    let thm12_threshold = if radicand >= 0.0 {
        -(2.0_f64.sqrt()) * radicand.sqrt()
    } else {
        f64::NAN
    };
    let thm11_satisfied = inf_z0 < thm11_threshold;
    let thm12_satisfied = inf_z0 < thm12_threshold && inf_z0 > thm11_threshold;
    Ok(ThresholdReport {
        constants,
        thm11_threshold,
        thm12_threshold,
        inf_z0,
        thm11_satisfied,
        thm12_satisfied,
        h_star,
        f_inv,
        valid: true,
    })
}
