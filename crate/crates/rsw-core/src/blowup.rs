//! The proof machinery as executable objects: scalar comparison ODEs whose
//! trajectories dominate inf min(Z₁, Z₂), the blow-up-time bound obtained by
//! composing them, and characteristic tracing with residual checks of the
//! gradient dynamics.
//!
//! Two comparison equations appear. Past the sharp threshold the bound
//! trajectory solves
//!
//!   m′ = √θ♭(t)·[−m²/2 + ω₀♯ − 1/(2θ♯(t))],
//!
//! with the envelope functions θ♭, θ♯ of the a-priori height bounds. In the
//! sub-threshold energy window the height is pinned below h*, and
//!
//!   m′ = √h*·(−m²/2 + ω₀♯) − 1/√h*
//!
//! drives m down to the sharp bar in finite time, where the first equation
//! takes over.

use crate::error::{Error, Result};
use crate::fields::{
    potential_vorticity, threshold_report, weighted_gradients, LagrangianState,
};
use crate::grid::Field1D;
use crate::interp::cubic_eval;
use crate::kernels::{f_gamma_inv, vartheta, BoundConstants, GammaLaw, F_GAMMA_INV_TOL};

/// |m| level treated as divergence. The Riccati tail beyond it contributes
/// O(1e−8) to the blow-up time, below reported precision.
pub const DIVERGENCE_LEVEL: f64 = 1e8;

/// Envelope cap: once θ♯ exceeds this, the −1/(2θ♯) forcing is dropped.
/// Dropping a negative forcing only lifts the trajectory, which keeps it a
/// valid upper envelope for inf Z.
pub const THETA_SHARP_CAP: f64 = 1e12;

const MAX_RECORDS: usize = 200_000;
const BOUND_T_MAX: f64 = 5000.0;
const BOUND_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparisonKind {
    Thm11,
    Thm33,
    FrozenRiccati,
}

/// A comparison trajectory m(t), strictly decreasing in the regimes where
/// the equations apply, with the time at which it left [−1e8, 1e8] if it
/// did.
#[derive(Debug, Clone)]
pub struct ComparisonTrajectory {
    pub kind: ComparisonKind,
    pub times: Vec<f64>,
    pub m_values: Vec<f64>,
    pub divergence_time: Option<f64>,
}

impl ComparisonTrajectory {
    /// Linear interpolation of m at time t; None outside the recorded span.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let times = &self.times;
        if times.is_empty() || t < times[0] || t > *times.last().unwrap() {
            return None;
        }
        let idx = match times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return Some(self.m_values[i]),
            Err(i) => i,
        };
        let (t0, t1) = (times[idx - 1], times[idx]);
        let (m0, m1) = (self.m_values[idx - 1], self.m_values[idx]);
        Some(m0 + (m1 - m0) * (t - t0) / (t1 - t0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    One,
    Two,
}

impl Family {
    pub fn index(self) -> u8 {
        match self {
            Family::One => 1,
            Family::Two => 2,
        }
    }
}

/// A characteristic curve Ξ(t) with the matching weighted gradient sampled
/// along it, and the worst defect of the along-curve gradient equation.
#[derive(Debug, Clone)]
pub struct CharacteristicTrace {
    pub family: Family,
    pub times: Vec<f64>,
    pub xi_positions: Vec<f64>,
    pub z_along: Vec<f64>,
    pub z_residual_max: f64,
    /// True when the curve left the grid window before the last snapshot.
    pub truncated: bool,
}

/// h* = [F_γ⁻¹(G₀E₀) + 1]^(2/γ), the energy-budget height ceiling; E₀ = 0
/// collapses it to 1 by continuous extension.
pub fn h_star(constants: &BoundConstants, law: GammaLaw) -> Result<f64> {
    let f_inv = if constants.e0 == 0.0 {
        0.0
    } else {
        f_gamma_inv(constants.g0 * constants.e0, law, F_GAMMA_INV_TOL)?
    };
    Ok((f_inv + 1.0).powf(2.0 / law.gamma()))
}

/// Shared adaptive RK4 driver: steps shrink as |m| grows, points are
/// recorded on a bounded cadence, and an optional level crossing is located
/// by linear interpolation on the raw steps.
fn integrate(
    kind: ComparisonKind,
    rhs: impl Fn(f64, f64) -> f64,
    m_init: f64,
    t_start: f64,
    t_end: f64,
    dt: f64,
    crossing_level: Option<f64>,
) -> (ComparisonTrajectory, Option<f64>) {
    let span = t_end - t_start;
    let rec_dt = dt.max(span / MAX_RECORDS as f64);
    let mut times = vec![t_start];
    let mut m_values = vec![m_init];
    let mut divergence_time = None;
    let mut crossing = match crossing_level {
        Some(level) if m_init <= level => Some(t_start),
        _ => None,
    };
    let mut t = t_start;
    let mut m = m_init;
    let mut next_rec = t_start + rec_dt;
    while t < t_end {
        let tau = (dt / (1.0 + m.abs())).min(t_end - t);
        let k1 = rhs(t, m);
        let k2 = rhs(t + 0.5 * tau, m + 0.5 * tau * k1);
        let k3 = rhs(t + 0.5 * tau, m + 0.5 * tau * k2);
        let k4 = rhs(t + tau, m + tau * k3);
        let m_new = m + tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let t_new = t + tau;
        if let (Some(level), None) = (crossing_level, crossing) {
            if m > level && m_new <= level {
                crossing = Some(t + (level - m) / (m_new - m) * tau);
            }
        }
        t = t_new;
        m = m_new;
        if !m.is_finite() || m.abs() > DIVERGENCE_LEVEL {
            times.push(t);
            m_values.push(m);
            divergence_time = Some(t);
            break;
        }
        if t >= next_rec - 1e-15 {
            times.push(t);
            m_values.push(m);
            next_rec += rec_dt;
        }
    }
    if divergence_time.is_none() && *times.last().unwrap() < t {
        times.push(t);
        m_values.push(m);
    }
    (
        ComparisonTrajectory {
            kind,
            times,
            m_values,
            divergence_time,
        },
        crossing,
    )
}

/// Upper envelope for inf Z past the sharp threshold, integrated from
/// (t_start, m_init). Requires m_init ≤ −√(2ω₀♯); at equality the
/// trajectory still departs downward because the −1/(2θ♯) forcing is
/// strictly negative.
pub fn comparison_ode_thm11(
    constants: &BoundConstants,
    law: GammaLaw,
    m_init: f64,
    t_start: f64,
    t_end: f64,
    dt: f64,
) -> Result<ComparisonTrajectory> {
    validate_ode_args(t_start, t_end, dt)?;
    if !(constants.omega0_sharp > 0.0) || !(constants.h0_min > 0.0) || constants.m0 < 0.0 {
        return Err(Error::Precondition(
            "comparison equation needs ω₀♯ > 0, inf h₀ > 0, and a nonnegative sup |R|".into(),
        ));
    }
    let bar = -(2.0 * constants.omega0_sharp).sqrt();
    if m_init > bar {
        return Err(Error::Precondition(format!(
            "initial value {m_init} sits above the sharp threshold {bar}"
        )));
    }
    let omega = constants.omega0_sharp;
    let w0 = constants.w0_sharp;
    let m0 = constants.m0;
    let inv_sqrt_h0 = 1.0 / constants.h0_min.sqrt();
    let rhs = move |t: f64, m: f64| {
        // √θ♭(t) with θ♭ = [h₀_min^(−1/2) + t·W₀♯/2]^(−2)
        let sqrt_flat = 1.0 / (inv_sqrt_h0 + 0.5 * t * w0);
        let theta_sharp = vartheta(m0 * t.exp(), law).unwrap_or(f64::INFINITY);
        let forcing = if theta_sharp.is_finite() && theta_sharp <= THETA_SHARP_CAP {
            0.5 / theta_sharp
        } else {
            0.0
        };
        sqrt_flat * (-0.5 * m * m + omega - forcing)
    };
    let (traj, _) = integrate(ComparisonKind::Thm11, rhs, m_init, t_start, t_end, dt, None);
    Ok(traj)
}

/// Sub-threshold envelope with the height pinned at h*. Returns the
/// trajectory together with the first time it crosses −√(2ω₀♯), the
/// hand-off point to the sharp-threshold equation.
pub fn comparison_ode_thm33(
    constants: &BoundConstants,
    law: GammaLaw,
    m0: f64,
    t_end: f64,
    dt: f64,
) -> Result<(ComparisonTrajectory, Option<f64>)> {
    validate_ode_args(0.0, t_end, dt)?;
    if !(constants.omega0_sharp > 0.0) {
        return Err(Error::Precondition("comparison equation needs ω₀♯ > 0".into()));
    }
    let hs = h_star(constants, law)?;
    let radicand = constants.omega0_sharp - 1.0 / hs;
    if radicand < 0.0 {
        return Err(Error::Precondition(format!(
            "criterion window is empty: ω₀♯ = {} < 1/h* = {}",
            constants.omega0_sharp,
            1.0 / hs
        )));
    }
    let bar = -(2.0_f64.sqrt()) * radicand.sqrt();
    if m0 >= bar {
        return Err(Error::Precondition(format!(
            "initial value {m0} must lie strictly below {bar}"
        )));
    }
    let omega = constants.omega0_sharp;
    let s = hs.sqrt();
    let rhs = move |_t: f64, m: f64| s * (-0.5 * m * m + omega) - 1.0 / s;
    let handoff = -(2.0 * omega).sqrt();
    let (traj, crossing) = integrate(
        ComparisonKind::Thm33,
        rhs,
        m0,
        0.0,
        t_end,
        dt,
        Some(handoff),
    );
    Ok((traj, crossing))
}

/// The degenerate comparison equation m′ = −m²/2, whose exact solution
/// m(t) = m₀/(1 + m₀t/2) calibrates the integrator.
pub fn frozen_riccati(m_init: f64, t_end: f64, dt: f64) -> Result<ComparisonTrajectory> {
    validate_ode_args(0.0, t_end, dt)?;
    let (traj, _) = integrate(
        ComparisonKind::FrozenRiccati,
        |_t, m| -0.5 * m * m,
        m_init,
        0.0,
        t_end,
        dt,
        None,
    );
    Ok(traj)
}

/// Upper bound on the blow-up time from the initial data: the divergence
/// time of the applicable comparison trajectory, composing the
/// sub-threshold leg with the sharp-threshold leg when the data start in
/// the energy window.
pub fn predicted_blowup_bound(state0: &LagrangianState, law: GammaLaw) -> Result<f64> {
    let report = threshold_report(state0, law)?;
    if !report.valid {
        return Err(Error::NoPrediction("sup ω₀ ≤ 0".into()));
    }
    let constants = &report.constants;
    if report.thm11_satisfied || report.inf_z0 <= report.thm11_threshold {
        let traj = comparison_ode_thm11(
            constants,
            law,
            report.inf_z0,
            0.0,
            BOUND_T_MAX,
            BOUND_DT,
        )?;
        return traj.divergence_time.ok_or_else(|| {
            Error::Numerics(format!(
                "comparison trajectory did not diverge before t = {BOUND_T_MAX}"
            ))
        });
    }
    if report.thm12_satisfied {
        let (leg1, crossing) =
            comparison_ode_thm33(constants, law, report.inf_z0, BOUND_T_MAX, BOUND_DT)?;
        let _ = crossing.ok_or_else(|| {
            Error::Numerics(format!(
                "sub-threshold trajectory did not reach the sharp bar before t = {BOUND_T_MAX}"
            ))
        })?;
        let bar = report.thm11_threshold;
        let idx = leg1
            .m_values
            .iter()
            .position(|&m| m < bar)
            .ok_or_else(|| Error::Numerics("no recorded point below the sharp bar".into()))?;
        let leg2 = comparison_ode_thm11(
            constants,
            law,
            leg1.m_values[idx],
            leg1.times[idx],
            leg1.times[idx] + BOUND_T_MAX,
            BOUND_DT,
        )?;
        return leg2.divergence_time.ok_or_else(|| {
            Error::Numerics(format!(
                "hand-off trajectory did not diverge before t = {BOUND_T_MAX}"
            ))
        });
    }
    Err(Error::NoPrediction(
        "initial data satisfy neither blow-up criterion".into(),
    ))
}

/// Integrates dΞ/dt = ∓h^((γ+1)/2)(t, Ξ) through a snapshot sequence
/// (cubic in ξ, linear in t) and samples the matching weighted gradient
/// along the curve. The residual compares the forward time difference of Z
/// against the along-curve dynamics
///
///   DZ = √h·[−(γ̄ + ½)Z² + γ̄ Z₁Z₂ + ω₀(ξ) − 1/h],
///
/// with ω₀ read from the t = 0 snapshot at the curve's foot.
pub fn trace_characteristic(
    snapshots: &[LagrangianState],
    law: GammaLaw,
    family: Family,
    xi_start: f64,
) -> Result<CharacteristicTrace> {
    if snapshots.len() < 2 {
        return Err(Error::Precondition(
            "tracing needs at least two snapshots".into(),
        ));
    }
    let grid = snapshots[0].grid();
    if snapshots[0].t() != 0.0 {
        return Err(Error::Precondition(
            "the first snapshot must be the initial data".into(),
        ));
    }
    for w in snapshots.windows(2) {
        if w[1].grid() != grid {
            return Err(Error::Precondition("snapshots must share one grid".into()));
        }
        if w[1].t() <= w[0].t() {
            return Err(Error::Precondition(
                "snapshot times must be strictly increasing".into(),
            ));
        }
    }
    let lo = grid.xi_min() + 2.0 * grid.dxi();
    let hi = grid.xi_max() - 2.0 * grid.dxi();
    if !(xi_start > lo && xi_start < hi) {
        return Err(Error::Precondition(format!(
            "start point {xi_start} is outside the traceable window [{lo}, {hi}]"
        )));
    }

    let sign = match family {
        Family::One => -1.0,
        Family::Two => 1.0,
    };
    let exponent = 0.5 * (law.gamma() + 1.0);
    let speeds: Vec<Field1D> = snapshots
        .iter()
        .map(|s| s.h().map(|h| h.powf(exponent)))
        .collect();
    let mut gradients = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        gradients.push(weighted_gradients(s, law)?);
    }
    let pv0 = potential_vorticity(&snapshots[0])?;

    let mut times = vec![0.0];
    let mut xi_positions = vec![xi_start];
    let mut truncated = false;
    let mut xi = xi_start;

    'outer: for k in 0..snapshots.len() - 1 {
        let (t0, t1) = (snapshots[k].t(), snapshots[k + 1].t());
        let span = t1 - t0;
        let speed = |t: f64, x: f64| {
            let lambda = ((t - t0) / span).clamp(0.0, 1.0);
            let c0 = cubic_eval(&speeds[k], x);
            let c1 = cubic_eval(&speeds[k + 1], x);
            sign * ((1.0 - lambda) * c0 + lambda * c1)
        };
        let substeps = 4;
        let tau = span / substeps as f64;
        let mut t = t0;
        for _ in 0..substeps {
            let k1 = speed(t, xi);
            let k2 = speed(t + 0.5 * tau, xi + 0.5 * tau * k1);
            let k3 = speed(t + 0.5 * tau, xi + 0.5 * tau * k2);
            let k4 = speed(t + tau, xi + tau * k3);
            xi += tau / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += tau;
            if xi <= lo || xi >= hi {
                truncated = true;
                break 'outer;
            }
        }
        times.push(t1);
        xi_positions.push(xi);
    }

    let mut z_along = Vec::with_capacity(times.len());
    for (k, &x) in xi_positions.iter().enumerate() {
        let (ref z1, ref z2) = gradients[k];
        let zf = match family {
            Family::One => cubic_eval(z1, x),
            Family::Two => cubic_eval(z2, x),
        };
        z_along.push(zf);
    }

    let gbar = law.gamma_bar();
    let mut z_residual_max = 0.0_f64;
    for k in 0..times.len().saturating_sub(1) {
        let x = xi_positions[k];
        let h = cubic_eval(snapshots[k].h(), x);
        let z1 = cubic_eval(&gradients[k].0, x);
        let z2 = cubic_eval(&gradients[k].1, x);
        let zf = z_along[k];
        let omega = cubic_eval(&pv0, x);
        let rhs = h.sqrt() * (-(gbar + 0.5) * zf * zf + gbar * z1 * z2 + omega - 1.0 / h);
        let rate = (z_along[k + 1] - z_along[k]) / (times[k + 1] - times[k]);
        z_residual_max = z_residual_max.max((rate - rhs).abs());
    }

    Ok(CharacteristicTrace {
        family,
        times,
        xi_positions,
        z_along,
        z_residual_max,
        truncated,
    })
}

fn validate_ode_args(t_start: f64, t_end: f64, dt: f64) -> Result<()> {
    if !(t_end > t_start) || !t_end.is_finite() {
        return Err(Error::Domain(format!(
            "time span must be nonempty, got [{t_start}, {t_end}]"
        )));
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_bump_data, BumpKind};
    use crate::grid::Grid;
    use crate::solver::{run, RunStatus, SolverConfig};

    fn law2() -> GammaLaw {
        GammaLaw::new(2.0).unwrap()
    }

    /// Constants engineered so the sharp-threshold equation degenerates to
    /// m′ = −m²/2: θ♭ ≡ 1 needs W₀♯ = 0 and inf h₀ = 1; the forcing then
    /// must equal ω₀♯, i.e. ω₀♯ = 1/(2θ♯) = 1/2 with sup |R|₀ = 0.
    fn frozen_constants() -> BoundConstants {
        BoundConstants {
            omega0_sharp: 0.5,
            z0_sharp: 0.0,
            w0_sharp: 0.0,
            g0: 1.0,
            e0: 0.0,
            m0: 0.0,
            h0_min: 1.0,
        }
    }

    #[test]
    fn thm11_reproduces_frozen_riccati() {
        let c = frozen_constants();
        let m0 = -1.0;
        let traj = comparison_ode_thm11(&c, law2(), m0, 0.0, 3.0, 1e-3).unwrap();
        // exact solution m(t) = 2/(t − 2), diverging at t = 2
        for (&t, &m) in traj.times.iter().zip(&traj.m_values) {
            if m <= -1e3 {
                break;
            }
            let exact = 2.0 / (t - 2.0);
            assert!(
                (m - exact).abs() <= 1e-6,
                "at t={t}: integrator {m} vs exact {exact}"
            );
        }
        let div = traj.divergence_time.expect("trajectory must diverge");
        assert!((div - 2.0).abs() < 1e-3, "divergence at {div}");
    }

    #[test]
    fn frozen_riccati_helper_matches_closed_form() {
        let traj = frozen_riccati(-1.0, 1.5, 1e-3).unwrap();
        for (&t, &m) in traj.times.iter().zip(&traj.m_values) {
            let exact = -1.0 / (1.0 - t / 2.0);
            assert!((m - exact).abs() <= 1e-8, "at t={t}: {m} vs {exact}");
        }
        // positive initial data decay instead of diverging
        let decay = frozen_riccati(1.0, 10.0, 1e-3).unwrap();
        assert!(decay.divergence_time.is_none());
        assert!(decay.m_values.last().unwrap() > &0.0);
    }

    #[test]
    fn thm11_departs_downward_from_the_bar() {
        let c = BoundConstants::from_parts(1.0, 0.5, 0.1, 0.5, 0.9).unwrap();
        let bar = -(2.0_f64).sqrt();
        let traj = comparison_ode_thm11(&c, law2(), bar, 0.0, 5.0, 1e-3).unwrap();
        assert!(traj.m_values.windows(2).all(|w| w[1] < w[0]));
        assert!(traj.m_values[1] < bar);
    }

    #[test]
    fn thm11_rejects_data_above_the_bar() {
        let c = BoundConstants::from_parts(1.0, 0.5, 0.1, 0.5, 0.9).unwrap();
        assert!(matches!(
            comparison_ode_thm11(&c, law2(), -1.0, 0.0, 5.0, 1e-3),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn thm11_divergence_is_monotone_in_depth() {
        let c = BoundConstants::from_parts(1.0, 0.5, 0.2, 0.5, 1.0).unwrap();
        let div = |m0: f64| {
            comparison_ode_thm11(&c, law2(), m0, 0.0, 200.0, 1e-3)
                .unwrap()
                .divergence_time
                .expect("past-threshold trajectory must diverge")
        };
        let d15 = div(-1.5);
        let d20 = div(-2.0);
        let d30 = div(-3.0);
        assert!(d20 <= d15, "deeper start diverged later: {d20} vs {d15}");
        assert!(d30 <= d20, "deeper start diverged later: {d30} vs {d20}");
    }

    #[test]
    fn thm33_crossing_closed_form() {
        // ω₀♯ = 1, E₀ = 0 → h* = 1 and the equation is m′ = −m²/2; from
        // m(0) = −0.1 the crossing of −√2 is at 2(1/0.1 − 1/√2)
        let c = BoundConstants::from_parts(1.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let (traj, crossing) = comparison_ode_thm33(&c, law2(), -0.1, 25.0, 1e-3).unwrap();
        let t_c = crossing.expect("trajectory must reach the sharp bar");
        let exact = 2.0 * (10.0 - 1.0 / 2.0_f64.sqrt());
        assert!((t_c - exact).abs() < 1e-4, "crossing {t_c} vs {exact}");
        assert!(traj.m_values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn thm33_rejects_boundary_and_empty_window() {
        let c = BoundConstants::from_parts(1.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        // h* = 1 makes the admissible set m0 < 0; the boundary is rejected
        assert!(matches!(
            comparison_ode_thm33(&c, law2(), 0.0, 10.0, 1e-3),
            Err(Error::Precondition(_))
        ));
        // ω₀♯ < 1/h* leaves no admissible m0 at all
        let mut tiny = c;
        tiny.omega0_sharp = 0.3;
        tiny.e0 = 0.0;
        assert!(matches!(
            comparison_ode_thm33(&tiny, law2(), -5.0, 10.0, 1e-3),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn thm33_crossing_monotone_and_continuous_in_depth() {
        let c = BoundConstants::from_parts(1.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let crossing = |m0: f64| {
            comparison_ode_thm33(&c, law2(), m0, 400.0, 1e-3)
                .unwrap()
                .1
                .expect("must cross")
        };
        let depths = [-0.05, -0.1, -0.2, -0.4, -0.8, -1.2];
        let mut prev = f64::INFINITY;
        for &m0 in &depths {
            let t_c = crossing(m0);
            assert!(t_c < prev, "crossing not decreasing at m0={m0}");
            prev = t_c;
        }
        // continuity probe: a 1% change in depth moves the crossing by o(1)
        let a = crossing(-0.4);
        let b = crossing(-0.404);
        assert!((a - b).abs() < 0.2, "crossing jumped from {a} to {b}");
    }

    #[test]
    fn predicted_bound_for_supercritical_bump() {
        let lw = law2();
        let g = Grid::new(-12.0, 12.0, 1024).unwrap();
        let amp_for = |target: f64| target * 2.0 / 1.7173002067198384;
        // already past the sharp bar: the bound is the single-leg time
        let s = make_bump_data(BumpKind::VelocityBump, amp_for(1.5), 2.0, g).unwrap();
        let bound = predicted_blowup_bound(&s, lw).unwrap();
        assert!(bound.is_finite() && bound > 0.0);
        // deeper data never get a later bound
        let mut prev = f64::INFINITY;
        for target in [1.5, 1.8, 2.4] {
            let s = make_bump_data(BumpKind::VelocityBump, amp_for(target), 2.0, g).unwrap();
            let b = predicted_blowup_bound(&s, lw).unwrap();
            assert!(b <= prev + 1e-9, "bound grew to {b} at depth {target}");
            prev = b;
        }
    }

    #[test]
    fn predicted_bound_rejects_subcritical_data() {
        let lw = law2();
        let g = Grid::new(-12.0, 12.0, 512).unwrap();
        let s = make_bump_data(BumpKind::VelocityBump, 0.1, 2.0, g).unwrap();
        assert!(matches!(
            predicted_blowup_bound(&s, lw),
            Err(Error::NoPrediction(_))
        ));
    }

    #[test]
    fn grid_minimum_stays_below_comparison_trajectory() {
        // the comparison principle: the grid inf of min(Z₁,Z₂) sits below
        // m(t) at every sampled time until detection
        let lw = law2();
        let g = Grid::new(-12.0, 12.0, 1024).unwrap();
        let amp = 1.5 * 2.0 / 1.7173002067198384;
        let s = make_bump_data(BumpKind::VelocityBump, amp, 2.0, g).unwrap();
        let config = SolverConfig {
            t_end: 15.0,
            blowup_z_floor: -15.0,
            ..SolverConfig::default()
        };
        let out = run(&s, lw, &config).unwrap();
        assert_eq!(out.status, RunStatus::Blowup);
        let rep_inf_z0 = out.diagnostics[0].min_z;
        let traj = comparison_ode_thm11(&out.constants, lw, rep_inf_z0, 0.0, 50.0, 1e-3).unwrap();
        for r in &out.diagnostics {
            if let Some(m) = traj.value_at(r.t) {
                assert!(
                    r.min_z < m + 1e-3,
                    "at t={}: grid min {} vs trajectory {}",
                    r.t,
                    r.min_z,
                    m
                );
            }
        }
    }

    #[test]
    fn trace_on_rest_state_moves_at_unit_speed() {
        let g = Grid::new(-10.0, 10.0, 256).unwrap();
        let lw = law2();
        let state_at = |t: f64| {
            LagrangianState::new(
                t,
                Field1D::constant(g, 1.0),
                Field1D::constant(g, 0.0),
                Field1D::constant(g, 0.0),
            )
            .unwrap()
        };
        let snaps = vec![state_at(0.0), state_at(1.0), state_at(2.0)];
        let tr = trace_characteristic(&snaps, lw, Family::One, 3.0).unwrap();
        assert!(!tr.truncated);
        assert!((tr.xi_positions[2] - 1.0).abs() < 1e-12, "Ξ(2) = {}", tr.xi_positions[2]);
        assert!(tr.z_along.iter().all(|z| z.abs() < 1e-14));
        assert!(tr.z_residual_max < 1e-13);
        let tr2 = trace_characteristic(&snaps, lw, Family::Two, -3.0).unwrap();
        assert!((tr2.xi_positions[2] + 1.0).abs() < 1e-12);
        // family one drifts left, family two right
        assert!(tr.xi_positions.windows(2).all(|w| w[1] < w[0]));
        assert!(tr2.xi_positions.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn trace_on_oscillation_state_has_zero_residual() {
        // spatially constant u(t) = ε cos t, v(t) = −ε sin t, h ≡ 1: no
        // gradients anywhere, and ω₀ ≡ 1 cancels 1/h in the dynamics
        let g = Grid::new(-10.0, 10.0, 128).unwrap();
        let lw = law2();
        let eps = 1e-3;
        let snaps: Vec<_> = (0..=8)
            .map(|k| {
                let t = 0.25 * k as f64;
                LagrangianState::new(
                    t,
                    Field1D::constant(g, 1.0),
                    Field1D::constant(g, eps * t.cos()),
                    Field1D::constant(g, -eps * t.sin()),
                )
                .unwrap()
            })
            .collect();
        let tr = trace_characteristic(&snaps, lw, Family::Two, 0.0).unwrap();
        assert!(tr.z_residual_max < 1e-12, "residual {}", tr.z_residual_max);
    }

    #[test]
    fn trace_residual_shrinks_with_snapshot_cadence() {
        let lw = law2();
        let g = Grid::new(-15.0, 15.0, 2048).unwrap();
        let s = make_bump_data(BumpKind::VelocityBump, 0.5, 2.0, g).unwrap();
        let residual_at = |interval: f64| {
            let config = SolverConfig {
                t_end: 2.0,
                sample_interval: interval,
                ..SolverConfig::default()
            };
            let (out, snaps) = crate::solver::run_with_snapshots(&s, lw, &config).unwrap();
            assert_eq!(out.status, RunStatus::Survived);
            trace_characteristic(&snaps, lw, Family::One, 1.0)
                .unwrap()
                .z_residual_max
        };
        let coarse = residual_at(0.2);
        let fine = residual_at(0.1);
        assert!(
            coarse / fine > 1.4,
            "expected ~first-order decay, got {coarse} → {fine}"
        );
    }

    #[test]
    fn trace_truncates_at_the_window_edge() {
        let g = Grid::new(-5.0, 5.0, 256).unwrap();
        let lw = law2();
        let state_at = |t: f64| {
            LagrangianState::new(
                t,
                Field1D::constant(g, 1.0),
                Field1D::constant(g, 0.0),
                Field1D::constant(g, 0.0),
            )
            .unwrap()
        };
        let snaps: Vec<_> = (0..=8).map(|k| state_at(k as f64)).collect();
        let tr = trace_characteristic(&snaps, lw, Family::One, -3.0).unwrap();
        assert!(tr.truncated);
        assert!(tr.times.len() < snaps.len());
    }
}
