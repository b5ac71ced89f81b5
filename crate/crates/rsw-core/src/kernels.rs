//! Closed-form scalar kernels of the blow-up theory.
//!
//! Everything here is a pure function of real arguments: the integrating
//! factor K(h) = ∫₁ʰ s^((γ−3)/2) ds and its inverse ϑ, the internal energy
//! density Q(h), the gap function F_γ and its numerical inverse, the envelope
//! bounds θ♯/θ♭, and the two elementary inequalities used by the energy
//! argument (with the sup-cube bound's constant exposed as a parameter).

use crate::error::{Error, Result};
use crate::grid::Field1D;

/// Pressure-law exponent γ ≥ 1 of p(h) = h^γ/γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaLaw {
    gamma: f64,
}

impl GammaLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 1.0 {
            return Err(Error::Domain(format!(
                "pressure-law exponent must satisfy gamma >= 1, got {gamma}"
            )));
        }
        Ok(GammaLaw { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// γ̄ = (γ−1)/4, the coupling weight in the Z dynamics.
    pub fn gamma_bar(&self) -> f64 {
        0.25 * (self.gamma - 1.0)
    }

    /// Characteristic wave factor h^((γ+1)/2).
    #[inline]
    pub fn wave_factor(&self, h: f64) -> f64 {
        if self.gamma == 2.0 {
            h * h.sqrt()
        } else if self.gamma == 1.0 {
            h
        } else {
            h.powf(0.5 * (self.gamma + 1.0))
        }
    }
}

/// K(h) = ∫₁ʰ s^((γ−3)/2) ds: (2/(γ−1))(h^((γ−1)/2) − 1) for γ > 1, ln h at γ = 1.
pub fn kappa(h: f64, law: GammaLaw) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Vacuum(format!("kappa needs h > 0, got {h}")));
    }
    let g = law.gamma();
    if g == 1.0 {
        Ok(h.ln())
    } else if g == 2.0 {
        Ok(2.0 * (h.sqrt() - 1.0))
    } else {
        Ok(2.0 / (g - 1.0) * (h.powf(0.5 * (g - 1.0)) - 1.0))
    }
}

/// ϑ(z) = K⁻¹(z): ((γ−1)z/2 + 1)^(2/(γ−1)) for γ > 1, e^z at γ = 1.
pub fn vartheta(z: f64, law: GammaLaw) -> Result<f64> {
    let g = law.gamma();
    if g == 1.0 {
        return Ok(z.exp());
    }
    let base = 0.5 * (g - 1.0) * z + 1.0;
    if base <= 0.0 {
        return Err(Error::Vacuum(format!(
            "vartheta argument {z} at or below the vacuum boundary {}",
            -2.0 / (g - 1.0)
        )));
    }
    if g == 2.0 {
        Ok(base * base)
    } else {
        Ok(base.powf(2.0 / (g - 1.0)))
    }
}

/// Internal energy density Q(h) = (1/γ)∫₁ʰ (s^(γ−2) − s^(−2)) ds ≥ 0.
pub fn energy_density(h: f64, law: GammaLaw) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Vacuum(format!("energy_density needs h > 0, got {h}")));
    }
    let g = law.gamma();
    if g == 1.0 {
        Ok(h.ln() + 1.0 / h - 1.0)
    } else if g == 2.0 {
        let d = h - 1.0;
        Ok(d * d / (2.0 * h))
    } else {
        Ok((h.powf(g - 1.0) - 1.0) / (g * (g - 1.0)) + (1.0 / h - 1.0) / g)
    }
}

/// ζ(β, γ) = (1/γ²)[(β+1)^(−2/γ) + (β+1)^(−2/γ−1)]; positive, decreasing in β.
pub fn zeta(beta: f64, law: GammaLaw) -> Result<f64> {
    if !(beta > -1.0) {
        return Err(Error::Domain(format!("zeta needs beta > -1, got {beta}")));
    }
    let g = law.gamma();
    let p = (beta + 1.0).powf(-2.0 / g);
    Ok((p + p / (beta + 1.0)) / (g * g))
}

/// Gap function F_γ(α) = (16/(3γ³))·α³/(α+1)³·[(α+1)^(3−2/γ) + (α+1)^(2−2/γ)].
pub fn f_gamma(alpha: f64, law: GammaLaw) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("f_gamma needs alpha > 0, got {alpha}")));
    }
    let g = law.gamma();
    let a1 = alpha + 1.0;
    let bracket = a1.powf(3.0 - 2.0 / g) + a1.powf(2.0 - 2.0 / g);
    Ok(16.0 / (3.0 * g * g * g) * (alpha / a1).powi(3) * bracket)
}

/// Default relative tolerance for [`f_gamma_inv`].
pub const F_GAMMA_INV_TOL: f64 = 1e-12;

/// Numerical inverse of F_γ by bisection after geometric bracket expansion.
///
/// Returns α with |F_γ(α) − y| ≤ tol·max(1, y). Monotonicity of F_γ makes the
/// bracket [0, hi] valid once F_γ(hi) ≥ y.
pub fn f_gamma_inv(y: f64, law: GammaLaw, tol: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("f_gamma_inv needs y > 0, got {y}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("f_gamma_inv needs tol > 0, got {tol}")));
    }
    let mut hi = 1.0_f64;
    let mut expansions = 0;
    while f_gamma(hi, law)? < y {
        hi *= 2.0;
        expansions += 1;
        if expansions > 1100 {
            return Err(Error::Numerics(format!(
                "bracket expansion failed inverting f_gamma at y = {y}"
            )));
        }
    }
    let mut lo = 0.0_f64;
    let target = tol * y.max(1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let f = f_gamma(mid, law)?;
        if (f - y).abs() <= target {
            return Ok(mid);
        }
        if f < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let residual = (f_gamma(alpha.max(f64::MIN_POSITIVE), law)? - y).abs();
    if residual <= target {
        Ok(alpha)
    } else {
        Err(Error::Numerics(format!(
            "bisection stalled inverting f_gamma at y = {y}, residual {residual}"
        )))
    }
}

/// Upper depth envelope θ♯(t) = ϑ(M₀·e^t); nondecreasing in t.
pub fn theta_sharp(t: f64, m0: f64, law: GammaLaw) -> Result<f64> {
    if !(m0 >= 0.0) {
        return Err(Error::Domain(format!(
            "theta_sharp needs the sup bound m0 >= 0, got {m0}"
        )));
    }
    vartheta(m0 * t.exp(), law)
}

/// Lower depth envelope θ♭(t) = [h0_min^(−1/2) + (t/2)·W₀♯]^(−2).
pub fn theta_flat(t: f64, h0_min: f64, w0_sharp: f64) -> Result<f64> {
    if !(h0_min > 0.0) {
        return Err(Error::Domain(format!(
            "theta_flat needs h0_min > 0, got {h0_min}"
        )));
    }
    if !(w0_sharp >= 0.0) {
        return Err(Error::Domain(format!(
            "theta_flat needs w0_sharp >= 0, got {w0_sharp}"
        )));
    }
    let root = 1.0 / h0_min.sqrt() + 0.5 * t * w0_sharp;
    Ok(1.0 / (root * root))
}

/// Margin of the pointwise energy inequality α² · ζ(β,γ) ≤ Q((α+1)^(2/γ))
/// for −1 < α ≤ β, returned as Q − ζ·α² (nonnegative when the inequality holds).
///
/// The cap must satisfy β ≥ 0: for negative caps the inequality genuinely
/// fails (γ = 2, α = β = −1/2 gives margin α³/(4(α+1)²) < 0), and the
/// monotonicity argument behind it only closes when the path from α to 0
/// stays below the cap.
pub fn prop_b1_margin(alpha: f64, beta: f64, law: GammaLaw) -> Result<f64> {
    if !(beta >= 0.0) {
        return Err(Error::Domain(format!(
            "prop_b1_margin needs the cap beta >= 0, got {beta}"
        )));
    }
    if !(alpha > -1.0 && alpha <= beta) {
        return Err(Error::Domain(format!(
            "prop_b1_margin needs -1 < alpha <= beta, got alpha={alpha}, beta={beta}"
        )));
    }
    let h = (alpha + 1.0).powf(2.0 / law.gamma());
    Ok(energy_density(h, law)? - zeta(beta, law)? * alpha * alpha)
}

/// Default constant for [`cube_sup_bound`]; see the crate README for why the
/// printed 3/4 is not the default.
pub const CUBE_SUP_DEFAULT_CONSTANT: f64 = 1.5;

/// Discrete sides of the sup-cube inequality
/// ‖g‖³_{L^∞} ≤ constant · ‖g‖²_{L²} · ‖g′‖_{L^∞}
/// for compactly supported g: returns (lhs, rhs) with trapezoid L² and
/// centred-difference derivative sup.
pub fn cube_sup_bound(g: &Field1D, constant: f64) -> Result<(f64, f64)> {
    if g.len() < 3 {
        return Err(Error::Domain(format!(
            "cube_sup_bound needs at least 3 samples, got {}",
            g.len()
        )));
    }
    let sup = g.max_abs();
    let lhs = sup * sup * sup;
    let l2sq = g.map(|v| v * v).trapezoid();
    let dsup = g.derivative_centered2().max_abs();
    Ok((lhs, constant * l2sq * dsup))
}

/// The constants of Lemmas 2.1/2.2 and Theorem 1.2, as measured from data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    /// ω₀♯ = sup of the initial potential vorticity.
    pub omega0_sharp: f64,
    /// Z₀♯ = sup over both families of the initial weighted gradients.
    pub z0_sharp: f64,
    /// W₀♯ = max(Z₀♯, √(2ω₀♯)).
    pub w0_sharp: f64,
    /// G₀ = √(2ω₀♯) + W₀♯.
    pub g0: f64,
    /// E₀ = total initial energy.
    pub e0: f64,
    /// M₀ = sup over the three Riemann invariants of |R_i(0)|.
    pub m0: f64,
    /// inf of the initial depth.
    pub h0_min: f64,
}

impl BoundConstants {
    /// Builds the derived constants from the measured ones.
    pub fn from_parts(
        omega0_sharp: f64,
        z0_sharp: f64,
        e0: f64,
        m0: f64,
        h0_min: f64,
    ) -> Result<Self> {
        if !(omega0_sharp > 0.0) {
            return Err(Error::Domain(format!(
                "vorticity sup must be positive, got {omega0_sharp}"
            )));
        }
        if !(e0 >= 0.0) || !(m0 >= 0.0) || !(h0_min > 0.0) {
            return Err(Error::Domain(format!(
                "invalid data constants: e0={e0}, m0={m0}, h0_min={h0_min}"
            )));
        }
        let gap = (2.0 * omega0_sharp).sqrt();
        let w0_sharp = z0_sharp.max(gap);
        Ok(BoundConstants {
            omega0_sharp,
            z0_sharp,
            w0_sharp,
            g0: gap + w0_sharp,
            e0,
            m0,
            h0_min,
        })
    }
}
