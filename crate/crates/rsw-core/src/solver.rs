//! Time integration of the diagonal form
//!
//!   ∂tR₁ = h^((γ+1)/2) ∂ξR₁ + R₃
//!   ∂tR₂ = −h^((γ+1)/2) ∂ξR₂ + R₃
//!   ∂tR₃ = −(R₁ + R₂)/2,      h = ϑ((R₂ − R₁)/2)
//!
//! by method of lines: family-wise upwind-biased differences in ξ and
//! classical RK4 in t, with the CFL step recomputed from max h^((γ+1)/2)
//! every step. The two outermost cells on each side are frozen at the
//! far-field rest values, and a run aborts if the perturbation's support
//! gets near them. Blow-up here is gradient blow-up: the solution stays
//! continuous while min(Z₁, Z₂) dives, so there is no limiter; the run ends
//! when the Z floor is hit.

use crate::blowup;
use crate::error::{Error, Result};
use crate::fields::{
    diagnostics, potential_vorticity, threshold_report, to_riemann, DiagnosticsRecord,
    LagrangianState, RiemannState, SUPPORT_CUTOFF,
};
use crate::grid::Field1D;
use crate::kernels::{vartheta, BoundConstants, GammaLaw};

/// Spatial order of the upwind stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeOrder {
    Two,
    Four,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Courant number in (0, 1]. The biased stencils are stable with RK4
    /// up to 0.8; the default leaves margin.
    pub cfl: f64,
    pub t_end: f64,
    /// Cadence of full diagnostics (and of snapshots when requested).
    pub sample_interval: f64,
    /// Run terminates with blow-up once min(Z₁, Z₂) falls to this level.
    pub blowup_z_floor: f64,
    /// A CFL step below this is treated as a collapse of the time step.
    pub dt_floor: f64,
    pub scheme_order: SchemeOrder,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cfl: 0.4,
            t_end: 10.0,
            sample_interval: 0.1,
            blowup_z_floor: -1e4,
            dt_floor: 1e-12,
            scheme_order: SchemeOrder::Four,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::Domain(format!("cfl must be in (0,1], got {}", self.cfl)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::Domain(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.sample_interval > 0.0) || self.sample_interval > self.t_end {
            return Err(Error::Domain(format!(
                "sample_interval must lie in (0, t_end], got {}",
                self.sample_interval
            )));
        }
        if !(self.blowup_z_floor < 0.0) {
            return Err(Error::Domain(format!(
                "blowup_z_floor must be negative, got {}",
                self.blowup_z_floor
            )));
        }
        if !(self.dt_floor > 0.0) {
            return Err(Error::Domain(format!(
                "dt_floor must be positive, got {}",
                self.dt_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Survived,
    Blowup,
    Vacuum,
    BoundaryContact,
    NumericalFailure,
}

/// Terminal report of a run: how it ended, when, where (for blow-up), the
/// sampled diagnostics series, the a-priori bound on the blow-up time when
/// one of the criteria applies at t = 0, and the data constants.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub t_final: f64,
    pub blowup_location: Option<f64>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub predicted_bound: Option<f64>,
    pub constants: BoundConstants,
}

/// Post-hoc classification of a diagnostics history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowupVerdict {
    Smooth,
    Blowup,
    NumericalFailure,
}

/// Largest characteristic speed max_ξ h^((γ+1)/2) on the grid.
pub fn max_wave_speed(state: &LagrangianState, law: GammaLaw) -> Result<f64> {
    if state.h().min() <= 0.0 {
        return Err(Error::Vacuum("wave speed needs h > 0".into()));
    }
    Ok(state
        .h()
        .values()
        .iter()
        .fold(0.0_f64, |m, &h| m.max(law.wave_factor(h))))
}

/// One explicit RK4 step of the semi-discretization. h is recomputed from
/// (R₂ − R₁)/2 inside every stage, so vacuum is caught mid-step.
pub fn step(rs: &RiemannState, dt: f64, law: GammaLaw, config: &SolverConfig) -> Result<RiemannState> {
    config.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let grid = rs.grid();
    let n = grid.len();
    let mut ws = Workspace::new(n);
    let mut y = [
        rs.r1().values().to_vec(),
        rs.r2().values().to_vec(),
        rs.r3().values().to_vec(),
    ];
    compute_h(&y[0], &y[1], law, &mut ws.h)?;
    let speed = ws.h.iter().fold(0.0_f64, |m, &h| m.max(law.wave_factor(h)));
    if dt > 1.0000001 * config.cfl * grid.dxi() / speed {
        return Err(Error::Precondition(format!(
            "dt = {dt} exceeds the CFL limit {}",
            config.cfl * grid.dxi() / speed
        )));
    }
    rk4_step(&mut y, dt, law, config.scheme_order, grid.dxi(), &mut ws)?;
    let [r1, r2, r3] = y;
    RiemannState::new(
        rs.t() + dt,
        Field1D::new(grid, r1)?,
        Field1D::new(grid, r2)?,
        Field1D::new(grid, r3)?,
    )
}

/// Advances initial data to t_end or to termination, recording diagnostics
/// every sample_interval.
pub fn run(state0: &LagrangianState, law: GammaLaw, config: &SolverConfig) -> Result<RunOutcome> {
    run_impl(state0, law, config, None)
}

/// As `run`, but also returns the full state at every sample time
/// (including t = 0 and the terminal time).
pub fn run_with_snapshots(
    state0: &LagrangianState,
    law: GammaLaw,
    config: &SolverConfig,
) -> Result<(RunOutcome, Vec<LagrangianState>)> {
    let mut snaps = Vec::new();
    let outcome = run_impl(state0, law, config, Some(&mut snaps))?;
    Ok((outcome, snaps))
}

/// Classifies a diagnostics history: blow-up requires the one-sided
/// signature — min Z through the floor while max Z stays below
/// W₀♯ + 5% — and a two-sided divergence is numerical failure instead.
pub fn detect_blowup(
    history: &[DiagnosticsRecord],
    config: &SolverConfig,
    w0_sharp: f64,
) -> BlowupVerdict {
    let floor_hit = history.iter().any(|r| r.min_z <= config.blowup_z_floor);
    if !floor_hit {
        return BlowupVerdict::Smooth;
    }
    let guard = w0_sharp + 0.05 * w0_sharp.abs();
    let max_z_diverged = history.iter().any(|r| r.max_z > guard);
    if max_z_diverged {
        BlowupVerdict::NumericalFailure
    } else {
        BlowupVerdict::Blowup
    }
}

struct Workspace {
    h: Vec<f64>,
    k1: [Vec<f64>; 3],
    k2: [Vec<f64>; 3],
    k3: [Vec<f64>; 3],
    k4: [Vec<f64>; 3],
    tmp: [Vec<f64>; 3],
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = || [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        Workspace {
            h: vec![0.0; n],
            k1: z(),
            k2: z(),
            k3: z(),
            k4: z(),
            tmp: z(),
        }
    }
}

fn compute_h(r1: &[f64], r2: &[f64], law: GammaLaw, out: &mut [f64]) -> Result<()> {
    for i in 0..r1.len() {
        out[i] = vartheta(0.5 * (r2[i] - r1[i]), law)?;
    }
    Ok(())
}

/// Semi-discrete right-hand side. Family 1 moves left (speed −h^((γ+1)/2)),
/// so its stencil leans right; family 2 mirrors it. The two outermost cells
/// per side are frozen (rhs = 0).
fn rhs(
    y: &[Vec<f64>; 3],
    law: GammaLaw,
    order: SchemeOrder,
    dxi: f64,
    h: &mut [f64],
    out: &mut [Vec<f64>; 3],
) -> Result<()> {
    let n = y[0].len();
    let (r1, r2, r3) = (&y[0], &y[1], &y[2]);
    compute_h(r1, r2, law, h)?;
    for k in 0..3 {
        out[k][0] = 0.0;
        out[k][1] = 0.0;
        out[k][n - 2] = 0.0;
        out[k][n - 1] = 0.0;
    }
    let inv = 1.0 / dxi;
    for i in 2..n - 2 {
        let c = law.wave_factor(h[i]);
        let d1 = match order {
            SchemeOrder::Four if i + 3 < n => {
                (-0.25 * r1[i - 1] - (5.0 / 6.0) * r1[i] + 1.5 * r1[i + 1] - 0.5 * r1[i + 2]
                    + (1.0 / 12.0) * r1[i + 3])
                    * inv
            }
            _ => (-1.5 * r1[i] + 2.0 * r1[i + 1] - 0.5 * r1[i + 2]) * inv,
        };
        let d2 = match order {
            SchemeOrder::Four if i >= 3 => {
                (-(1.0 / 12.0) * r2[i - 3] + 0.5 * r2[i - 2] - 1.5 * r2[i - 1]
                    + (5.0 / 6.0) * r2[i]
                    + 0.25 * r2[i + 1])
                    * inv
            }
            _ => (1.5 * r2[i] - 2.0 * r2[i - 1] + 0.5 * r2[i - 2]) * inv,
        };
        out[0][i] = c * d1 + r3[i];
        out[1][i] = -c * d2 + r3[i];
        out[2][i] = -0.5 * (r1[i] + r2[i]);
    }
    Ok(())
}

fn rk4_step(
    y: &mut [Vec<f64>; 3],
    dt: f64,
    law: GammaLaw,
    order: SchemeOrder,
    dxi: f64,
    ws: &mut Workspace,
) -> Result<()> {
    let n = y[0].len();
    let Workspace { h, k1, k2, k3, k4, tmp } = ws;
    rhs(y, law, order, dxi, h, k1)?;
    for k in 0..3 {
        for i in 0..n {
            tmp[k][i] = y[k][i] + 0.5 * dt * k1[k][i];
        }
    }
    rhs(tmp, law, order, dxi, h, k2)?;
    for k in 0..3 {
        for i in 0..n {
            tmp[k][i] = y[k][i] + 0.5 * dt * k2[k][i];
        }
    }
    rhs(tmp, law, order, dxi, h, k3)?;
    for k in 0..3 {
        for i in 0..n {
            tmp[k][i] = y[k][i] + dt * k3[k][i];
        }
    }
    rhs(tmp, law, order, dxi, h, k4)?;
    let w = dt / 6.0;
    for k in 0..3 {
        for i in 0..n {
            y[k][i] += w * (k1[k][i] + 2.0 * k2[k][i] + 2.0 * k3[k][i] + k4[k][i]);
        }
    }
    for k in 0..3 {
        if y[k].iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerics(
                "non-finite value produced by a time step".into(),
            ));
        }
    }
    Ok(())
}

/// Cheap per-step gradient probe: Z_j = √h ∂ξR_j with centered second-order
/// differences. Returns (min value, ξ index of the min, max value).
fn cheap_z_extrema(
    r1: &[f64],
    r2: &[f64],
    h: &[f64],
    dxi: f64,
) -> (f64, usize, f64) {
    let n = r1.len();
    let mut min_z = f64::INFINITY;
    let mut max_z = f64::NEG_INFINITY;
    let mut arg = 0;
    let inv2 = 0.5 / dxi;
    for i in 1..n - 1 {
        let s = h[i].sqrt();
        let z1 = s * (r1[i + 1] - r1[i - 1]) * inv2;
        let z2 = s * (r2[i + 1] - r2[i - 1]) * inv2;
        let lo = z1.min(z2);
        if lo < min_z {
            min_z = lo;
            arg = i;
        }
        max_z = max_z.max(z1.max(z2));
    }
    (min_z, arg, max_z)
}

fn support_touches_boundary(y: &[Vec<f64>; 3], n: usize) -> bool {
    for arr in y.iter() {
        let sup = arr.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
        if sup == 0.0 {
            continue;
        }
        let cut = SUPPORT_CUTOFF * sup;
        for &i in &[2usize, 3, n - 4, n - 3] {
            if arr[i].abs() > cut {
                return true;
            }
        }
    }
    false
}

fn run_impl(
    state0: &LagrangianState,
    law: GammaLaw,
    config: &SolverConfig,
    mut snapshots: Option<&mut Vec<LagrangianState>>,
) -> Result<RunOutcome> {
    config.validate()?;
    let grid = state0.grid();
    let n = grid.len();
    if n < 8 {
        return Err(Error::Precondition(format!(
            "grid of {n} cells is too small for the boundary treatment"
        )));
    }
    let pv0 = potential_vorticity(state0)?;
    let report = threshold_report(state0, law)?;
    let constants = report.constants.clone();
    let predicted_bound = blowup::predicted_blowup_bound(state0, law).ok();
    let guard = constants.w0_sharp + 0.05 * constants.w0_sharp.abs();

    let rs0 = to_riemann(state0, law)?;
    let mut y = [
        rs0.r1().values().to_vec(),
        rs0.r2().values().to_vec(),
        rs0.r3().values().to_vec(),
    ];
    let mut ws = Workspace::new(n);
    let mut records = vec![diagnostics(state0, law, &pv0)?];
    if let Some(s) = snapshots.as_mut() {
        s.push(state0.clone());
    }

    let mut t = 0.0_f64;
    let mut next_sample = config.sample_interval;
    let mut prev_min_z = f64::INFINITY;
    let time_eps = 1e-9 * config.t_end.max(1.0);

    let make_state = |t: f64, y: &[Vec<f64>; 3], h: &[f64]| -> Result<LagrangianState> {
        let u: Vec<f64> = y[0].iter().zip(&y[1]).map(|(&a, &b)| 0.5 * (a + b)).collect();
        LagrangianState::new(
            t,
            Field1D::new(grid, h.to_vec())?,
            Field1D::new(grid, u)?,
            Field1D::new(grid, y[2].clone())?,
        )
    };

    let finish = |status: RunStatus,
                  t: f64,
                  blowup_location: Option<f64>,
                  records: Vec<DiagnosticsRecord>| RunOutcome {
        status,
        t_final: t,
        blowup_location,
        diagnostics: records,
        predicted_bound,
        constants: constants.clone(),
    };

    loop {
        match compute_h(&y[0], &y[1], law, &mut ws.h) {
            Ok(()) => {}
            Err(Error::Vacuum(_)) => return Ok(finish(RunStatus::Vacuum, t, None, records)),
            Err(e) => return Err(e),
        }
        let speed = ws.h.iter().fold(0.0_f64, |m, &h| m.max(law.wave_factor(h)));
        if !speed.is_finite() {
            return Ok(finish(RunStatus::NumericalFailure, t, None, records));
        }
        let raw_dt = config.cfl * grid.dxi() / speed;
        if raw_dt < config.dt_floor {
            // time step collapsed; a falling min Z means gradient blow-up
            let (min_z, arg, _) = cheap_z_extrema(&y[0], &y[1], &ws.h, grid.dxi());
            let status = if min_z < prev_min_z {
                RunStatus::Blowup
            } else {
                RunStatus::NumericalFailure
            };
            if let Ok(state) = make_state(t, &y, &ws.h) {
                records.push(diagnostics(&state, law, &pv0)?);
                if let Some(s) = snapshots.as_mut() {
                    s.push(state);
                }
            }
            let loc = (status == RunStatus::Blowup).then(|| grid.xi(arg));
            return Ok(finish(status, t, loc, records));
        }
        if t >= config.t_end - time_eps {
            break;
        }
        let dt = raw_dt.min(next_sample - t).min(config.t_end - t).max(config.dt_floor);
        match rk4_step(&mut y, dt, law, config.scheme_order, grid.dxi(), &mut ws) {
            Ok(()) => {}
            Err(Error::Vacuum(_)) => return Ok(finish(RunStatus::Vacuum, t, None, records)),
            Err(Error::Numerics(_)) => {
                return Ok(finish(RunStatus::NumericalFailure, t, None, records))
            }
            Err(e) => return Err(e),
        }
        t += dt;

        compute_h(&y[0], &y[1], law, &mut ws.h)?;
        let (min_z, arg, max_z) = cheap_z_extrema(&y[0], &y[1], &ws.h, grid.dxi());
        if min_z <= config.blowup_z_floor {
            let state = make_state(t, &y, &ws.h)?;
            records.push(diagnostics(&state, law, &pv0)?);
            if let Some(s) = snapshots.as_mut() {
                s.push(state);
            }
            let status = if max_z > guard {
                RunStatus::NumericalFailure
            } else {
                RunStatus::Blowup
            };
            let loc = (status == RunStatus::Blowup).then(|| grid.xi(arg));
            return Ok(finish(status, t, loc, records));
        }
        prev_min_z = min_z;

        if support_touches_boundary(&y, n) {
            let state = make_state(t, &y, &ws.h)?;
            records.push(diagnostics(&state, law, &pv0)?);
            if let Some(s) = snapshots.as_mut() {
                s.push(state);
            }
            return Ok(finish(RunStatus::BoundaryContact, t, None, records));
        }

        if t >= next_sample - time_eps {
            let state = make_state(t, &y, &ws.h)?;
            let rec = diagnostics(&state, law, &pv0)?;
            let min_z_full = rec.min_z;
            records.push(rec);
            if let Some(s) = snapshots.as_mut() {
                s.push(state);
            }
            next_sample += config.sample_interval;
            if min_z_full <= config.blowup_z_floor {
                let status = if records.iter().any(|r| r.max_z > guard) {
                    RunStatus::NumericalFailure
                } else {
                    RunStatus::Blowup
                };
                let loc = (status == RunStatus::Blowup).then(|| grid.xi(arg));
                return Ok(finish(status, t, loc, records));
            }
        }
    }

    // ensure the terminal time is sampled even if the cadence skipped it
    if records
        .last()
        .map(|r| (r.t - t).abs() > time_eps)
        .unwrap_or(true)
    {
        compute_h(&y[0], &y[1], law, &mut ws.h)?;
        let state = make_state(t, &y, &ws.h)?;
        records.push(diagnostics(&state, law, &pv0)?);
        if let Some(s) = snapshots.as_mut() {
            s.push(state);
        }
    }
    Ok(finish(RunStatus::Survived, t, None, records))
}
