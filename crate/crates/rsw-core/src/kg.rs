//! Second-order wave form of the γ = 2 system.
//!
//! When the pressure law is quadratic, the flow is equivalent to a
//! quasilinear Klein-Gordon equation for the transverse velocity alone:
//! with the (time independent) vorticity profile ω₀(ξ),
//!
//! ```text
//!   ∂ₜₜv = ∂ξξv / (ω₀ − ∂ξv)³ − v − ω₀′ / (ω₀ − ∂ξv)³
//! ```
//!
//! and the primitive fields are recovered as h = 1/(ω₀ − ∂ξv), u = −∂ₜv.
//! Because ω₀ enters as a frozen label field, potential vorticity is
//! conserved structurally here, which makes this form a useful independent
//! check on the first-order solver.

use num_complex::Complex64;

use crate::blowup;
use crate::error::{Error, Result};
use crate::fields::{
    diagnostics, potential_vorticity, threshold_report, weighted_gradients, DiagnosticsRecord,
    LagrangianState, SUPPORT_CUTOFF,
};
use crate::grid::{deriv_centered4, second_deriv_centered4, Field1D, Grid};
use crate::kernels::GammaLaw;
use crate::solver::{RunOutcome, RunStatus, SolverConfig};

/// State of the wave form: (v, ∂ₜv) plus the frozen vorticity profile.
/// Valid states keep ω₀ − ∂ξv > 0, so the height 1/(ω₀ − ∂ξv) is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct KGState {
    t: f64,
    v: Field1D,
    vt: Field1D,
    omega0: Field1D,
}

impl KGState {
    pub fn new(t: f64, v: Field1D, vt: Field1D, omega0: Field1D) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Precondition(format!(
                "time must be finite and nonnegative, got {t}"
            )));
        }
        if v.grid() != vt.grid() || v.grid() != omega0.grid() {
            return Err(Error::Precondition(
                "v, ∂ₜv and ω₀ must share one grid".into(),
            ));
        }
        let dv = v.derivative();
        let gap = omega0
            .values()
            .iter()
            .zip(dv.values())
            .map(|(&w, &s)| w - s)
            .fold(f64::INFINITY, f64::min);
        if !(gap > 0.0) {
            return Err(Error::Vacuum(format!(
                "ω₀ − ∂ξv reaches {gap}; the height 1/(ω₀ − ∂ξv) must stay positive"
            )));
        }
        Ok(KGState { t, v, vt, omega0 })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn v(&self) -> &Field1D {
        &self.v
    }

    pub fn vt(&self) -> &Field1D {
        &self.vt
    }

    pub fn omega0(&self) -> &Field1D {
        &self.omega0
    }

    pub fn grid(&self) -> Grid {
        self.v.grid()
    }
}

/// Gradient of the vorticity profile, or None when the profile is constant.
/// Skipping the stencil keeps the forcing term exactly zero in that case
/// instead of rounding-level noise.
fn omega0_prime_values(omega0: &Field1D) -> Option<Vec<f64>> {
    if omega0.min() == omega0.max() {
        return None;
    }
    let mut out = vec![0.0; omega0.len()];
    deriv_centered4(omega0.values(), omega0.grid().dxi(), &mut out);
    Some(out)
}

/// Acceleration field ∂ₜₜv at the given state, with all spatial derivatives
/// taken by the diagnostic (fourth-order centred) stencils.
pub fn kg_rhs(state: &KGState) -> Result<Field1D> {
    let grid = state.grid();
    let n = grid.len();
    let dxi = grid.dxi();
    let v = state.v.values();
    let w = state.omega0.values();
    let wp = omega0_prime_values(&state.omega0);
    let mut dv = vec![0.0; n];
    let mut d2v = vec![0.0; n];
    deriv_centered4(v, dxi, &mut dv);
    second_deriv_centered4(v, dxi, &mut d2v);
    let mut out = vec![0.0; n];
    for i in 0..n {
        let cube = {
            let gap = w[i] - dv[i];
            gap * gap * gap
        };
        out[i] = d2v[i] / cube - v[i];
        if let Some(wp) = &wp {
            out[i] -= wp[i] / cube;
        }
    }
    Field1D::new(grid, out)
}

/// Recovers the primitive fields (h, u, v) = (1/(ω₀ − ∂ξv), −∂ₜv, v).
pub fn kg_to_primitive(state: &KGState) -> Result<LagrangianState> {
    let dv = state.v.derivative();
    let h = state.omega0.zip_with(&dv, |w, s| 1.0 / (w - s))?;
    let u = state.vt.map(|x| -x);
    LagrangianState::new(state.t, h, u, state.v.clone())
}

/// Packages a primitive state as wave-form data: v is kept, ∂ₜv = −u, and
/// ω₀ is the potential vorticity profile of the state.
pub fn kg_from_primitive(state: &LagrangianState) -> Result<KGState> {
    let omega0 = potential_vorticity(state)?;
    let vt = state.u().map(|x| -x);
    KGState::new(state.t(), state.v().clone(), vt, omega0)
}

struct KgWorkspace {
    dv: Vec<f64>,
    d2v: Vec<f64>,
    sv: Vec<f64>,
    a1: Vec<f64>,
    a2: Vec<f64>,
    a3: Vec<f64>,
    a4: Vec<f64>,
}

impl KgWorkspace {
    fn new(n: usize) -> Self {
        KgWorkspace {
            dv: vec![0.0; n],
            d2v: vec![0.0; n],
            sv: vec![0.0; n],
            a1: vec![0.0; n],
            a2: vec![0.0; n],
            a3: vec![0.0; n],
            a4: vec![0.0; n],
        }
    }
}

/// Acceleration on the raw arrays. The outer two cells are frozen (zero
/// acceleration); interior stencils still read them, which pins the far
/// field in place.
fn kg_acc(
    v: &[f64],
    w: &[f64],
    wp: Option<&[f64]>,
    dxi: f64,
    ws_dv: &mut [f64],
    ws_d2v: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    let n = v.len();
    deriv_centered4(v, dxi, ws_dv);
    second_deriv_centered4(v, dxi, ws_d2v);
    out[0] = 0.0;
    out[1] = 0.0;
    out[n - 2] = 0.0;
    out[n - 1] = 0.0;
    for i in 2..n - 2 {
        let gap = w[i] - ws_dv[i];
        if !(gap > 0.0) {
            return Err(Error::Vacuum(format!(
                "ω₀ − ∂ξv reached {gap} during a stage"
            )));
        }
        let cube = gap * gap * gap;
        out[i] = ws_d2v[i] / cube - v[i];
        if let Some(wp) = wp {
            out[i] -= wp[i] / cube;
        }
    }
    Ok(())
}

/// One RK4 step on (v, ∂ₜv) with the outer two cells frozen.
fn kg_rk4(
    v: &mut [f64],
    vt: &mut [f64],
    dt: f64,
    w: &[f64],
    wp: Option<&[f64]>,
    dxi: f64,
    ws: &mut KgWorkspace,
) -> Result<()> {
    let n = v.len();
    let half = 0.5 * dt;

    kg_acc(v, w, wp, dxi, &mut ws.dv, &mut ws.d2v, &mut ws.a1)?;

    ws.sv.copy_from_slice(v);
    for i in 2..n - 2 {
        ws.sv[i] = v[i] + half * vt[i];
    }
    kg_acc(&ws.sv, w, wp, dxi, &mut ws.dv, &mut ws.d2v, &mut ws.a2)?;

    for i in 2..n - 2 {
        ws.sv[i] = v[i] + half * (vt[i] + half * ws.a1[i]);
    }
    kg_acc(&ws.sv, w, wp, dxi, &mut ws.dv, &mut ws.d2v, &mut ws.a3)?;

    for i in 2..n - 2 {
        ws.sv[i] = v[i] + dt * (vt[i] + half * ws.a2[i]);
    }
    kg_acc(&ws.sv, w, wp, dxi, &mut ws.dv, &mut ws.d2v, &mut ws.a4)?;

    let sixth = dt / 6.0;
    for i in 2..n - 2 {
        v[i] += dt * vt[i] + dt * sixth * (ws.a1[i] + ws.a2[i] + ws.a3[i]);
        vt[i] += sixth * (ws.a1[i] + 2.0 * ws.a2[i] + 2.0 * ws.a3[i] + ws.a4[i]);
        if !v[i].is_finite() || !vt[i].is_finite() {
            return Err(Error::Numerics(format!(
                "nonfinite value at cell {i} after a step"
            )));
        }
    }
    Ok(())
}

/// Largest characteristic speed max_ξ (ω₀ − ∂ξv)^(−3/2) on the grid. This
/// agrees with the primitive speed h^(3/2) under h = 1/(ω₀ − ∂ξv).
pub fn kg_wave_speed(state: &KGState) -> f64 {
    let dv = state.v.derivative();
    let gap = state
        .omega0
        .values()
        .iter()
        .zip(dv.values())
        .map(|(&w, &s)| w - s)
        .fold(f64::INFINITY, f64::min);
    gap.powf(-1.5)
}

/// One explicit RK4 step of the wave form, checked against the CFL limit.
pub fn kg_step(state: &KGState, dt: f64, config: &SolverConfig) -> Result<KGState> {
    config.validate()?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let grid = state.grid();
    let speed = kg_wave_speed(state);
    if dt > 1.0000001 * config.cfl * grid.dxi() / speed {
        return Err(Error::Precondition(format!(
            "dt = {dt} exceeds the CFL limit {}",
            config.cfl * grid.dxi() / speed
        )));
    }
    let mut v = state.v.values().to_vec();
    let mut vt = state.vt.values().to_vec();
    let wp = omega0_prime_values(&state.omega0);
    let mut ws = KgWorkspace::new(grid.len());
    kg_rk4(
        &mut v,
        &mut vt,
        dt,
        state.omega0.values(),
        wp.as_deref(),
        grid.dxi(),
        &mut ws,
    )?;
    KGState::new(
        state.t + dt,
        Field1D::new(grid, v)?,
        Field1D::new(grid, vt)?,
        state.omega0.clone(),
    )
}

fn kg_touches_boundary(v: &[f64], vt: &[f64], n: usize) -> bool {
    for arr in [v, vt] {
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

/// ξ position of the most negative weighted gradient, over both families.
fn z_argmin_location(state: &LagrangianState, law: GammaLaw) -> Result<f64> {
    let (z1, z2) = weighted_gradients(state, law)?;
    let grid = state.grid();
    let mut best = f64::INFINITY;
    let mut arg = 0;
    for (i, (&a, &b)) in z1.values().iter().zip(z2.values()).enumerate() {
        let lo = a.min(b);
        if lo < best {
            best = lo;
            arg = i;
        }
    }
    Ok(grid.xi(arg))
}

/// Advances wave-form initial data to t_end or to termination, recording
/// primitive diagnostics every sample_interval and returning the state at
/// every sample time. Gradient probes run at the sample cadence only; the
/// first-order solver is the instrument of record for blow-up hunting.
pub fn kg_run(state0: &KGState, config: &SolverConfig) -> Result<(Vec<KGState>, RunOutcome)> {
    config.validate()?;
    let grid = state0.grid();
    let n = grid.len();
    if n < 8 {
        return Err(Error::Precondition(format!(
            "grid of {n} cells is too small for the boundary treatment"
        )));
    }
    if state0.t != 0.0 {
        return Err(Error::Precondition(format!(
            "runs start from t = 0, got t = {}",
            state0.t
        )));
    }
    let law = GammaLaw::new(2.0)?;
    let primitive0 = kg_to_primitive(state0)?;
    let pv0 = potential_vorticity(&primitive0)?;
    let report = threshold_report(&primitive0, law)?;
    let constants = report.constants;
    let predicted_bound = blowup::predicted_blowup_bound(&primitive0, law).ok();
    let guard = constants.w0_sharp + 0.05 * constants.w0_sharp.abs();

    let dxi = grid.dxi();
    let w = state0.omega0.values().to_vec();
    let wp = omega0_prime_values(&state0.omega0);
    let mut v = state0.v.values().to_vec();
    let mut vt = state0.vt.values().to_vec();
    let mut ws = KgWorkspace::new(n);

    let mut snapshots = vec![state0.clone()];
    let mut records = vec![diagnostics(&primitive0, law, &pv0)?];

    let mut t = 0.0_f64;
    let mut next_sample = config.sample_interval;
    let time_eps = 1e-9 * config.t_end.max(1.0);

    let make_state = |t: f64, v: &[f64], vt: &[f64]| -> Result<KGState> {
        KGState::new(
            t,
            Field1D::new(grid, v.to_vec())?,
            Field1D::new(grid, vt.to_vec())?,
            state0.omega0.clone(),
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
        constants,
    };

    loop {
        deriv_centered4(&v, dxi, &mut ws.dv);
        let gap = w
            .iter()
            .zip(&ws.dv)
            .map(|(&w, &s)| w - s)
            .fold(f64::INFINITY, f64::min);
        if !(gap > 0.0) {
            return Ok((snapshots, finish(RunStatus::Vacuum, t, None, records)));
        }
        let speed = gap.powf(-1.5);
        if !speed.is_finite() {
            return Ok((snapshots, finish(RunStatus::NumericalFailure, t, None, records)));
        }
        let raw_dt = config.cfl * dxi / speed;
        if raw_dt < config.dt_floor {
            // time step collapsed; a falling min Z means gradient blow-up
            let prev_min_z = records.last().map(|r| r.min_z).unwrap_or(f64::INFINITY);
            match make_state(t, &v, &vt) {
                Ok(state) => {
                    let prim = kg_to_primitive(&state)?;
                    let rec = diagnostics(&prim, law, &pv0)?;
                    let status = if rec.min_z < prev_min_z {
                        RunStatus::Blowup
                    } else {
                        RunStatus::NumericalFailure
                    };
                    let loc = if status == RunStatus::Blowup {
                        Some(z_argmin_location(&prim, law)?)
                    } else {
                        None
                    };
                    records.push(rec);
                    snapshots.push(state);
                    return Ok((snapshots, finish(status, t, loc, records)));
                }
                Err(Error::Vacuum(_)) => {
                    return Ok((snapshots, finish(RunStatus::Vacuum, t, None, records)))
                }
                Err(e) => return Err(e),
            }
        }
        if t >= config.t_end - time_eps {
            break;
        }
        let dt = raw_dt
            .min(next_sample - t)
            .min(config.t_end - t)
            .max(config.dt_floor);
        match kg_rk4(&mut v, &mut vt, dt, &w, wp.as_deref(), dxi, &mut ws) {
            Ok(()) => {}
            Err(Error::Vacuum(_)) => {
                return Ok((snapshots, finish(RunStatus::Vacuum, t, None, records)))
            }
            Err(Error::Numerics(_)) => {
                return Ok((snapshots, finish(RunStatus::NumericalFailure, t, None, records)))
            }
            Err(e) => return Err(e),
        }
        t += dt;

        if kg_touches_boundary(&v, &vt, n) {
            match make_state(t, &v, &vt) {
                Ok(state) => {
                    let prim = kg_to_primitive(&state)?;
                    records.push(diagnostics(&prim, law, &pv0)?);
                    snapshots.push(state);
                    return Ok((snapshots, finish(RunStatus::BoundaryContact, t, None, records)));
                }
                Err(Error::Vacuum(_)) => {
                    return Ok((snapshots, finish(RunStatus::Vacuum, t, None, records)))
                }
                Err(e) => return Err(e),
            }
        }

        if t >= next_sample - time_eps {
            let state = match make_state(t, &v, &vt) {
                Ok(state) => state,
                Err(Error::Vacuum(_)) => {
                    return Ok((snapshots, finish(RunStatus::Vacuum, t, None, records)))
                }
                Err(e) => return Err(e),
            };
            let prim = kg_to_primitive(&state)?;
            let rec = diagnostics(&prim, law, &pv0)?;
            let min_z_full = rec.min_z;
            records.push(rec);
            snapshots.push(state);
            next_sample += config.sample_interval;
            if min_z_full <= config.blowup_z_floor {
                let status = if records.iter().any(|r| r.max_z > guard) {
                    RunStatus::NumericalFailure
                } else {
                    RunStatus::Blowup
                };
                let loc = if status == RunStatus::Blowup {
                    Some(z_argmin_location(&prim, law)?)
                } else {
                    None
                };
                return Ok((snapshots, finish(status, t, loc, records)));
            }
        }
    }

    // ensure the terminal time is sampled even if the cadence skipped it
    if records
        .last()
        .map(|r| (r.t - t).abs() > time_eps)
        .unwrap_or(true)
    {
        let state = match make_state(t, &v, &vt) {
            Ok(state) => state,
            Err(Error::Vacuum(_)) => {
                return Ok((snapshots, finish(RunStatus::Vacuum, t, None, records)))
            }
            Err(e) => return Err(e),
        };
        let prim = kg_to_primitive(&state)?;
        records.push(diagnostics(&prim, law, &pv0)?);
        snapshots.push(state);
    }
    Ok((snapshots, finish(RunStatus::Survived, t, None, records)))
}

/// Null-form coefficients of the second-order expansion around a plane wave
/// of frequency ω₁, evaluated through the complex recipe
/// q = −i·Q(−a, ib) and p = −P(−a, ib) at (a, b) = (ω₁², ω₁),
/// where Q(a, b) = 3ba and P(a, b) = 6b²a. Both come out real; the
/// imaginary parts cancel structurally and are asserted to be zero rather
/// than assumed.
pub fn null_coeffs(omega1: f64) -> (f64, f64) {
    let a = Complex64::new(omega1 * omega1, 0.0);
    let ib = Complex64::new(0.0, omega1);
    let i = Complex64::new(0.0, 1.0);
    let q = -i * (3.0 * ib * (-a));
    let p = -(6.0 * ib * ib * (-a));
    assert!(
        q.im == 0.0 && p.im == 0.0,
        "null coefficients must be real"
    );
    (q.re, p.re)
}

/// Side-by-side comparison of the first-order solver and the wave form on
/// the same initial data: sup-norm discrepancies of (h, u, v) at each
/// common sample time.
#[derive(Debug, Clone)]
pub struct CrossValidationReport {
    pub times: Vec<f64>,
    pub h_discrepancy: Vec<f64>,
    pub u_discrepancy: Vec<f64>,
    pub v_discrepancy: Vec<f64>,
    pub max_discrepancy: f64,
    pub primitive_status: RunStatus,
    pub kg_status: RunStatus,
}

/// Runs both solvers on the same data and reports how far apart they stay.
/// The wave form needs γ = 2 and a spatially constant vorticity profile
/// (within 1e−10); anything else is rejected up front.
pub fn cross_validate(
    state0: &LagrangianState,
    law: GammaLaw,
    config: &SolverConfig,
) -> Result<CrossValidationReport> {
    if law.gamma() != 2.0 {
        return Err(Error::Precondition(format!(
            "the wave form needs γ = 2, got γ = {}",
            law.gamma()
        )));
    }
    let pv = potential_vorticity(state0)?;
    if pv.max() - pv.min() > 1e-10 {
        return Err(Error::Precondition(format!(
            "potential vorticity must be constant to 1e-10, spread is {}",
            pv.max() - pv.min()
        )));
    }

    let (primitive_outcome, prim_snaps) = crate::solver::run_with_snapshots(state0, law, config)?;
    let kg0 = kg_from_primitive(state0)?;
    let (kg_snaps, kg_outcome) = kg_run(&kg0, config)?;

    let len = prim_snaps.len().min(kg_snaps.len());
    let mut times = Vec::with_capacity(len);
    let mut h_discrepancy = Vec::with_capacity(len);
    let mut u_discrepancy = Vec::with_capacity(len);
    let mut v_discrepancy = Vec::with_capacity(len);
    let mut max_discrepancy = 0.0_f64;
    for k in 0..len {
        let a = &prim_snaps[k];
        let b = kg_to_primitive(&kg_snaps[k])?;
        if (a.t() - b.t()).abs() > 1e-6 {
            // sample cadences fell out of step (early abort mid-interval)
            break;
        }
        let dh = a.h().zip_with(b.h(), |x, y| x - y)?.max_abs();
        let du = a.u().zip_with(b.u(), |x, y| x - y)?.max_abs();
        let dv = a.v().zip_with(b.v(), |x, y| x - y)?.max_abs();
        max_discrepancy = max_discrepancy.max(dh).max(du).max(dv);
        times.push(a.t());
        h_discrepancy.push(dh);
        u_discrepancy.push(du);
        v_discrepancy.push(dv);
    }
    Ok(CrossValidationReport {
        times,
        h_discrepancy,
        u_discrepancy,
        v_discrepancy,
        max_discrepancy,
        primitive_status: primitive_outcome.status,
        kg_status: kg_outcome.status,
    })
}
