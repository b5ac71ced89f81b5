//! Maps between the Eulerian position x and the Lagrangian mass label ξ.
//!
//! At t = 0 the label is ξ = φ(x) with φ(x) = ∫₀ˣ h(0, s) ds, and the
//! inverse change of variables is χ(ξ) = ∫₀^ξ dς / h̃(0, ς). For later
//! times the forward map σ(t, ξ) follows the particle paths ∂ₜσ = u(t, σ),
//! while the backward map Υ(t, x) obeys ∂ₜΥ = −(ũ h̃)(t, Υ). Both flows
//! leave a measurable residual in the mass-coordinate identity
//! h(t, σ) ∂ξσ = 1, which is reported as the Jacobian defect.
//!
//! Interpolation policy: the monotone maps are built and inverted with the
//! shape-preserving cubic, transported fields use the plain four-point
//! cubic, and time dependence between snapshots is linear (so flows are
//! second order in the snapshot spacing, fourth order in the substeps).

use crate::error::{Error, Result};
use crate::fields::LagrangianState;
use crate::grid::{Field1D, Grid};
use crate::interp::{cubic_eval, MonotoneCubic};

/// Which way a stored map sends coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Samples are Υ(t, x): Eulerian position to Lagrangian label.
    EulerToLagrange,
    /// Samples are σ(t, ξ): Lagrangian label to Eulerian position.
    LagrangeToEuler,
}

/// A time-indexed family of monotone coordinate maps, one slice per
/// snapshot time, with the worst mass-coordinate defect observed.
#[derive(Debug, Clone)]
pub struct CoordinateMap {
    pub direction: Direction,
    pub times: Vec<f64>,
    pub map_samples: Vec<Field1D>,
    pub jacobian_defect_max: f64,
    /// True when a path left the data window and was evolved with
    /// edge-clamped fields from then on.
    pub truncated: bool,
}

/// Snapshot of (h, u, v) on a fixed Eulerian grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianState {
    t: f64,
    h: Field1D,
    u: Field1D,
    v: Field1D,
}

impl EulerianState {
    pub fn new(t: f64, h: Field1D, u: Field1D, v: Field1D) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Precondition(format!(
                "time must be finite and nonnegative, got {t}"
            )));
        }
        if h.grid() != u.grid() || h.grid() != v.grid() {
            return Err(Error::Precondition(
                "h, u and v must share one grid".into(),
            ));
        }
        if !(h.min() > 0.0) {
            return Err(Error::Vacuum(format!(
                "height must stay positive, min is {}",
                h.min()
            )));
        }
        Ok(EulerianState { t, h, u, v })
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
}

/// Cumulative trapezoid of f anchored so the antiderivative vanishes at
/// coordinate zero, which therefore must lie inside the grid window.
fn cumulative_anchored(f: &Field1D) -> Result<Vec<f64>> {
    let grid = f.grid();
    if grid.xi_min() > 0.0 || grid.xi_max() < 0.0 {
        return Err(Error::Precondition(format!(
            "the anchor x = 0 lies outside the window [{}, {}]",
            grid.xi_min(),
            grid.xi_max()
        )));
    }
    let dx = grid.dxi();
    let v = f.values();
    let mut cum = vec![0.0; v.len()];
    for i in 1..v.len() {
        cum[i] = cum[i - 1] + 0.5 * dx * (v[i - 1] + v[i]);
    }
    // linear interpolation of the cumulative at x = 0
    let frac = (0.0 - grid.xi_min()) / dx;
    let j = (frac.floor() as usize).min(v.len() - 2);
    let theta = frac - j as f64;
    let at_zero = cum[j] + theta * (cum[j + 1] - cum[j]);
    for c in &mut cum {
        *c -= at_zero;
    }
    Ok(cum)
}

/// Initial mass label φ(x) = ∫₀ˣ h(0, s) ds on the Eulerian grid. Strictly
/// increasing whenever the height is positive.
pub fn phi_map(h0_euler: &Field1D) -> Result<Field1D> {
    if !(h0_euler.min() > 0.0) {
        return Err(Error::Vacuum(format!(
            "height must stay positive, min is {}",
            h0_euler.min()
        )));
    }
    let cum = cumulative_anchored(h0_euler)?;
    Field1D::new(h0_euler.grid(), cum)
}

/// Initial position χ(ξ) = ∫₀^ξ dς / h̃(0, ς) on the Lagrangian grid; the
/// inverse of φ up to quadrature error.
pub fn chi_map(h0_lagrange: &Field1D) -> Result<Field1D> {
    if !(h0_lagrange.min() > 0.0) {
        return Err(Error::Vacuum(format!(
            "height must stay positive, min is {}",
            h0_lagrange.min()
        )));
    }
    let recip = h0_lagrange.map(|h| 1.0 / h);
    let cum = cumulative_anchored(&recip)?;
    Field1D::new(h0_lagrange.grid(), cum)
}

fn monotone_inverse(map: &Field1D) -> Result<MonotoneCubic> {
    MonotoneCubic::new(map.grid().xi_min(), map.grid().dxi(), map.values().to_vec())
}

const FLOW_SUBSTEPS: usize = 4;

/// RK4 transport of a batch of positions through a velocity field that is
/// cubic in space and linear in time across one snapshot interval.
#[allow(clippy::too_many_arguments)]
fn advect_interval(
    positions: &mut [f64],
    f_lo: &Field1D,
    f_hi: &Field1D,
    t_lo: f64,
    t_hi: f64,
    window: (f64, f64),
    truncated: &mut bool,
) {
    let span = t_hi - t_lo;
    let dt = span / FLOW_SUBSTEPS as f64;
    let vel = |lambda: f64, x: f64| -> f64 {
        (1.0 - lambda) * cubic_eval(f_lo, x) + lambda * cubic_eval(f_hi, x)
    };
    for step in 0..FLOW_SUBSTEPS {
        let l0 = step as f64 / FLOW_SUBSTEPS as f64;
        let lh = (step as f64 + 0.5) / FLOW_SUBSTEPS as f64;
        let l1 = (step as f64 + 1.0) / FLOW_SUBSTEPS as f64;
        for x in positions.iter_mut() {
            let k1 = vel(l0, *x);
            let k2 = vel(lh, *x + 0.5 * dt * k1);
            let k3 = vel(lh, *x + 0.5 * dt * k2);
            let k4 = vel(l1, *x + dt * k3);
            *x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if *x < window.0 || *x > window.1 {
                *truncated = true;
            }
        }
    }
}

fn check_times<T>(snapshots: &[T], time_of: impl Fn(&T) -> f64) -> Result<()> {
    if snapshots.len() < 2 {
        return Err(Error::Precondition(
            "at least two snapshots are needed to build a flow".into(),
        ));
    }
    if time_of(&snapshots[0]) != 0.0 {
        return Err(Error::Precondition(format!(
            "the first snapshot must sit at t = 0, got t = {}",
            time_of(&snapshots[0])
        )));
    }
    for k in 1..snapshots.len() {
        if time_of(&snapshots[k]) <= time_of(&snapshots[k - 1]) {
            return Err(Error::Precondition(
                "snapshot times must be strictly increasing".into(),
            ));
        }
    }
    Ok(())
}

fn monotone_sample(grid: Grid, positions: &[f64]) -> Result<Field1D> {
    for i in 1..positions.len() {
        if positions[i] <= positions[i - 1] {
            return Err(Error::Numerics(
                "particle paths crossed; the coordinate map stopped being monotone".into(),
            ));
        }
    }
    Field1D::new(grid, positions.to_vec())
}

/// Forward flow map σ(t, ξ) from Eulerian snapshots: σ(0, ξ) = φ⁻¹(ξ) and
/// ∂ₜσ = u(t, σ). The Jacobian defect is max |h(t, σ) ∂ξσ − 1| over the
/// interior label nodes of every recorded slice.
pub fn sigma_flow(snapshots: &[EulerianState], xi_grid: Grid) -> Result<CoordinateMap> {
    check_times(snapshots, |s| s.t())?;
    let x_grid = snapshots[0].grid();
    for s in snapshots {
        if s.grid() != x_grid {
            return Err(Error::Precondition(
                "snapshots must share one grid".into(),
            ));
        }
    }
    let phi = phi_map(snapshots[0].h())?;
    let inv = monotone_inverse(&phi)?;
    let mut positions = Vec::with_capacity(xi_grid.len());
    for i in 0..xi_grid.len() {
        let xi = xi_grid.xi(i);
        if xi < inv.y_min() || xi > inv.y_max() {
            return Err(Error::Precondition(format!(
                "label {xi} is outside the initial mass range [{}, {}]",
                inv.y_min(),
                inv.y_max()
            )));
        }
        positions.push(inv.invert(xi));
    }

    let window = (x_grid.xi_min(), x_grid.xi_max());
    let mut truncated = false;
    let mut times = Vec::with_capacity(snapshots.len());
    let mut map_samples = Vec::with_capacity(snapshots.len());
    times.push(snapshots[0].t());
    map_samples.push(monotone_sample(xi_grid, &positions)?);
    for k in 0..snapshots.len() - 1 {
        advect_interval(
            &mut positions,
            snapshots[k].u(),
            snapshots[k + 1].u(),
            snapshots[k].t(),
            snapshots[k + 1].t(),
            window,
            &mut truncated,
        );
        times.push(snapshots[k + 1].t());
        map_samples.push(monotone_sample(xi_grid, &positions)?);
    }

    let mut defect = 0.0_f64;
    for (slice, snap) in map_samples.iter().zip(snapshots) {
        let dsigma = slice.derivative();
        for i in 2..xi_grid.len() - 2 {
            let h_at = cubic_eval(snap.h(), slice.values()[i]);
            defect = defect.max((h_at * dsigma.values()[i] - 1.0).abs());
        }
    }

    Ok(CoordinateMap {
        direction: Direction::LagrangeToEuler,
        times,
        map_samples,
        jacobian_defect_max: defect,
        truncated,
    })
}

/// Backward flow map Υ(t, x) from Lagrangian snapshots: Υ(0, x) = χ⁻¹(x)
/// and ∂ₜΥ = −(ũ h̃)(t, Υ). The Jacobian defect is max |∂ₓΥ / h(t, Υ) − 1|
/// over the interior position nodes of every recorded slice.
pub fn upsilon_flow(snapshots: &[LagrangianState], x_grid: Grid) -> Result<CoordinateMap> {
    check_times(snapshots, |s| s.t())?;
    let xi_grid = snapshots[0].grid();
    for s in snapshots {
        if s.grid() != xi_grid {
            return Err(Error::Precondition(
                "snapshots must share one grid".into(),
            ));
        }
    }
    let chi = chi_map(snapshots[0].h())?;
    let inv = monotone_inverse(&chi)?;
    let mut labels = Vec::with_capacity(x_grid.len());
    for i in 0..x_grid.len() {
        let x = x_grid.xi(i);
        if x < inv.y_min() || x > inv.y_max() {
            return Err(Error::Precondition(format!(
                "position {x} is outside the initial extent [{}, {}]",
                inv.y_min(),
                inv.y_max()
            )));
        }
        labels.push(inv.invert(x));
    }

    // velocity of the backward flow is the mass flux with reversed sign
    let fluxes: Vec<Field1D> = snapshots
        .iter()
        .map(|s| {
            s.u()
                .zip_with(s.h(), |u, h| -u * h)
                .expect("state fields share one grid")
        })
        .collect();

    let window = (xi_grid.xi_min(), xi_grid.xi_max());
    let mut truncated = false;
    let mut times = Vec::with_capacity(snapshots.len());
    let mut map_samples = Vec::with_capacity(snapshots.len());
    times.push(snapshots[0].t());
    map_samples.push(monotone_sample(x_grid, &labels)?);
    for k in 0..snapshots.len() - 1 {
        advect_interval(
            &mut labels,
            &fluxes[k],
            &fluxes[k + 1],
            snapshots[k].t(),
            snapshots[k + 1].t(),
            window,
            &mut truncated,
        );
        times.push(snapshots[k + 1].t());
        map_samples.push(monotone_sample(x_grid, &labels)?);
    }

    let mut defect = 0.0_f64;
    for (slice, snap) in map_samples.iter().zip(snapshots) {
        let dupsilon = slice.derivative();
        for i in 2..x_grid.len() - 2 {
            let h_at = cubic_eval(snap.h(), slice.values()[i]);
            defect = defect.max((dupsilon.values()[i] / h_at - 1.0).abs());
        }
    }

    Ok(CoordinateMap {
        direction: Direction::EulerToLagrange,
        times,
        map_samples,
        jacobian_defect_max: defect,
        truncated,
    })
}

fn check_map_against_times(map: &CoordinateMap, times: &[f64], want: Direction) -> Result<()> {
    if map.direction != want {
        return Err(Error::Precondition(
            "the coordinate map points the wrong way for this resampling".into(),
        ));
    }
    if map.times.len() != times.len() {
        return Err(Error::Precondition(format!(
            "map has {} slices but there are {} snapshots",
            map.times.len(),
            times.len()
        )));
    }
    for (a, b) in map.times.iter().zip(times) {
        if (a - b).abs() > 1e-9 * b.abs().max(1.0) {
            return Err(Error::Precondition(format!(
                "map slice at t = {a} does not match snapshot at t = {b}"
            )));
        }
    }
    Ok(())
}

/// Transports Lagrangian snapshots onto the Eulerian grid of the backward
/// map: f(t, x) = f̃(t, Υ(t, x)). The second return flags labels that fell
/// outside the source window and were evaluated with clamped interpolation.
pub fn lagrange_to_euler(
    snapshots: &[LagrangianState],
    map: &CoordinateMap,
) -> Result<(Vec<EulerianState>, bool)> {
    let times: Vec<f64> = snapshots.iter().map(|s| s.t()).collect();
    check_map_against_times(map, &times, Direction::EulerToLagrange)?;
    let mut out = Vec::with_capacity(snapshots.len());
    let mut clamped = false;
    for (snap, slice) in snapshots.iter().zip(&map.map_samples) {
        let xi_grid = snap.grid();
        let x_grid = slice.grid();
        let mut h = Vec::with_capacity(x_grid.len());
        let mut u = Vec::with_capacity(x_grid.len());
        let mut v = Vec::with_capacity(x_grid.len());
        for &label in slice.values() {
            if label < xi_grid.xi_min() || label > xi_grid.xi_max() {
                clamped = true;
            }
            h.push(cubic_eval(snap.h(), label));
            u.push(cubic_eval(snap.u(), label));
            v.push(cubic_eval(snap.v(), label));
        }
        out.push(EulerianState::new(
            snap.t(),
            Field1D::new(x_grid, h)?,
            Field1D::new(x_grid, u)?,
            Field1D::new(x_grid, v)?,
        )?);
    }
    Ok((out, clamped))
}

/// Transports Eulerian snapshots onto the Lagrangian grid of the forward
/// map: f̃(t, ξ) = f(t, σ(t, ξ)). The second return flags positions that
/// fell outside the source window and were evaluated with clamped
/// interpolation.
pub fn euler_to_lagrange(
    snapshots: &[EulerianState],
    map: &CoordinateMap,
) -> Result<(Vec<LagrangianState>, bool)> {
    let times: Vec<f64> = snapshots.iter().map(|s| s.t()).collect();
    check_map_against_times(map, &times, Direction::LagrangeToEuler)?;
    let mut out = Vec::with_capacity(snapshots.len());
    let mut clamped = false;
    for (snap, slice) in snapshots.iter().zip(&map.map_samples) {
        let x_grid = snap.grid();
        let xi_grid = slice.grid();
        let mut h = Vec::with_capacity(xi_grid.len());
        let mut u = Vec::with_capacity(xi_grid.len());
        let mut v = Vec::with_capacity(xi_grid.len());
        for &pos in slice.values() {
            if pos < x_grid.xi_min() || pos > x_grid.xi_max() {
                clamped = true;
            }
            h.push(cubic_eval(snap.h(), pos));
            u.push(cubic_eval(snap.u(), pos));
            v.push(cubic_eval(snap.v(), pos));
        }
        out.push(LagrangianState::new(
            snap.t(),
            Field1D::new(xi_grid, h)?,
            Field1D::new(xi_grid, u)?,
            Field1D::new(xi_grid, v)?,
        )?);
    }
    Ok((out, clamped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_bump_data, BumpKind};
    use crate::kernels::GammaLaw;
    use crate::solver::{run_with_snapshots, RunStatus, SolverConfig};

    fn bump(s: f64) -> f64 {
        if s.abs() >= 1.0 {
            0.0
        } else {
            let q = 1.0 - s * s;
            q * q * q
        }
    }

    #[test]
    fn phi_is_the_identity_on_unit_height() {
        let grid = Grid::new(-10.0, 10.0, 257).unwrap();
        let phi = phi_map(&Field1D::constant(grid, 1.0)).unwrap();
        for i in 0..grid.len() {
            assert!((phi.values()[i] - grid.xi(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_and_chi_scale_with_the_density() {
        let grid = Grid::new(-10.0, 10.0, 257).unwrap();
        let two = Field1D::constant(grid, 2.0);
        let phi = phi_map(&two).unwrap();
        let chi = chi_map(&two).unwrap();
        for i in 0..grid.len() {
            let x = grid.xi(i);
            assert!((phi.values()[i] - 2.0 * x).abs() < 1e-12);
            assert!((chi.values()[i] - 0.5 * x).abs() < 1e-12);
        }
        let inv = monotone_inverse(&phi).unwrap();
        for &xi in &[-3.0, -0.7, 0.0, 1.9, 8.4] {
            assert!((inv.invert(xi) - 0.5 * xi).abs() < 1e-9);
        }
    }

    #[test]
    fn maps_reject_bad_input() {
        let grid = Grid::new(-10.0, 10.0, 65).unwrap();
        let err = phi_map(&Field1D::constant(grid, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Vacuum(_)));
        let off = Grid::new(1.0, 5.0, 65).unwrap();
        let err = phi_map(&Field1D::constant(off, 1.0)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn chi_inverts_phi_at_second_order() {
        let composition_error = |n: usize| -> f64 {
            let x_grid = Grid::new(-10.0, 10.0, n).unwrap();
            let h0 = Field1D::from_fn(x_grid, |x| 1.0 + 0.4 * bump(x / 4.0));
            let phi = phi_map(&h0).unwrap();
            let inv = monotone_inverse(&phi).unwrap();
            let xi_grid = Grid::new(-9.0, 9.0, n).unwrap();
            let h0_lag = Field1D::from_fn(xi_grid, |xi| {
                cubic_eval(&h0, inv.invert(xi))
            });
            let chi = chi_map(&h0_lag).unwrap();
            let mut worst = 0.0_f64;
            for i in 0..x_grid.len() {
                let x = x_grid.xi(i);
                if x.abs() > 8.0 {
                    continue;
                }
                let xi = phi.values()[i];
                worst = worst.max((cubic_eval(&chi, xi) - x).abs());
            }
            worst
        };
        let coarse = composition_error(256);
        let fine = composition_error(512);
        assert!(coarse < 1e-3, "composition defect {coarse}");
        assert!(
            coarse > 3.0 * fine,
            "coarse {coarse} vs fine {fine}: not second order"
        );
    }

    fn still_euler_snaps(grid: Grid, times: &[f64]) -> Vec<EulerianState> {
        times
            .iter()
            .map(|&t| {
                EulerianState::new(
                    t,
                    Field1D::from_fn(grid, |x| 1.0 + 0.3 * bump(x / 4.0)),
                    Field1D::constant(grid, 0.0),
                    Field1D::constant(grid, 0.0),
                )
                .unwrap()
            })
            .collect()
    }

    #[test]
    fn sigma_flow_is_stationary_without_velocity() {
        let x_grid = Grid::new(-10.0, 10.0, 512).unwrap();
        let snaps = still_euler_snaps(x_grid, &[0.0, 0.5, 1.0]);
        let xi_grid = Grid::new(-9.0, 9.0, 512).unwrap();
        let map = sigma_flow(&snaps, xi_grid).unwrap();
        assert_eq!(map.direction, Direction::LagrangeToEuler);
        assert!(!map.truncated);
        assert_eq!(map.map_samples.len(), 3);
        for slice in &map.map_samples[1..] {
            let dev = slice
                .zip_with(&map.map_samples[0], |a, b| a - b)
                .unwrap()
                .max_abs();
            assert!(dev < 1e-13, "paths moved by {dev}");
        }
        assert!(map.jacobian_defect_max < 5e-3, "{}", map.jacobian_defect_max);
    }

    #[test]
    fn jacobian_defect_shrinks_at_second_order() {
        let defect = |n: usize| -> f64 {
            let x_grid = Grid::new(-10.0, 10.0, n).unwrap();
            let snaps = still_euler_snaps(x_grid, &[0.0, 0.5]);
            let xi_grid = Grid::new(-9.0, 9.0, n).unwrap();
            sigma_flow(&snaps, xi_grid).unwrap().jacobian_defect_max
        };
        let coarse = defect(256);
        let fine = defect(512);
        assert!(
            coarse > 3.0 * fine,
            "coarse {coarse} vs fine {fine}: not second order"
        );
    }

    #[test]
    fn sigma_flow_translates_rigidly() {
        let x_grid = Grid::new(-10.0, 10.0, 256).unwrap();
        let c = 0.3;
        let snaps: Vec<EulerianState> = [0.0, 0.4, 0.8]
            .iter()
            .map(|&t| {
                EulerianState::new(
                    t,
                    Field1D::constant(x_grid, 1.0),
                    Field1D::constant(x_grid, c),
                    Field1D::constant(x_grid, 0.0),
                )
                .unwrap()
            })
            .collect();
        let xi_grid = Grid::new(-5.0, 5.0, 128).unwrap();
        let map = sigma_flow(&snaps, xi_grid).unwrap();
        assert!(!map.truncated);
        for (slice, &t) in map.map_samples.iter().zip(&map.times) {
            for i in 0..xi_grid.len() {
                let want = xi_grid.xi(i) + c * t;
                assert!((slice.values()[i] - want).abs() < 1e-10);
            }
        }
        assert!(map.jacobian_defect_max < 1e-10);
    }

    #[test]
    fn flow_error_is_second_order_in_snapshot_spacing() {
        // spatially flat, time-varying velocity: the only error source is
        // the linear-in-time blend between snapshots
        let x_grid = Grid::new(-10.0, 10.0, 64).unwrap();
        let make = |times: &[f64]| -> Vec<EulerianState> {
            times
                .iter()
                .map(|&t| {
                    EulerianState::new(
                        t,
                        Field1D::constant(x_grid, 1.0),
                        Field1D::constant(x_grid, 0.5 * t.cos()),
                        Field1D::constant(x_grid, 0.0),
                    )
                    .unwrap()
                })
                .collect()
        };
        let xi_grid = Grid::new(-5.0, 5.0, 64).unwrap();
        let error_at_one = |times: &[f64]| -> f64 {
            let map = sigma_flow(&make(times), xi_grid).unwrap();
            let last = map.map_samples.last().unwrap();
            let shift = 0.5 * 1.0_f64.sin();
            (0..xi_grid.len())
                .map(|i| (last.values()[i] - xi_grid.xi(i) - shift).abs())
                .fold(0.0, f64::max)
        };
        let coarse = error_at_one(&[0.0, 0.5, 1.0]);
        let fine = error_at_one(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(
            coarse > 3.0 * fine,
            "coarse {coarse} vs fine {fine}: not second order in the spacing"
        );
    }

    #[test]
    fn upsilon_flow_mirrors_on_a_constant_state() {
        let xi_grid = Grid::new(-10.0, 10.0, 256).unwrap();
        let c = 0.3;
        let snaps: Vec<LagrangianState> = [0.0, 0.4, 0.8]
            .iter()
            .map(|&t| {
                LagrangianState::new(
                    t,
                    Field1D::constant(xi_grid, 1.0),
                    Field1D::constant(xi_grid, c),
                    Field1D::constant(xi_grid, 0.0),
                )
                .unwrap()
            })
            .collect();
        let x_grid = Grid::new(-5.0, 5.0, 128).unwrap();
        let map = upsilon_flow(&snaps, x_grid).unwrap();
        assert_eq!(map.direction, Direction::EulerToLagrange);
        assert!(!map.truncated);
        for (slice, &t) in map.map_samples.iter().zip(&map.times) {
            for i in 0..x_grid.len() {
                let want = x_grid.xi(i) - c * t;
                assert!((slice.values()[i] - want).abs() < 1e-10);
            }
        }
        assert!(map.jacobian_defect_max < 1e-10);
    }

    #[test]
    fn resampling_keeps_constants_and_checks_direction() {
        let xi_grid = Grid::new(-10.0, 10.0, 128).unwrap();
        let snaps: Vec<LagrangianState> = [0.0, 0.5]
            .iter()
            .map(|&t| {
                LagrangianState::new(
                    t,
                    Field1D::constant(xi_grid, 1.0),
                    Field1D::constant(xi_grid, 0.2),
                    Field1D::constant(xi_grid, -0.1),
                )
                .unwrap()
            })
            .collect();
        let x_grid = Grid::new(-5.0, 5.0, 64).unwrap();
        let map = upsilon_flow(&snaps, x_grid).unwrap();
        let (euler, clamped) = lagrange_to_euler(&snaps, &map).unwrap();
        assert!(!clamped);
        assert_eq!(euler.len(), 2);
        for s in &euler {
            assert!((s.h().max() - 1.0).abs() < 1e-13 && (s.h().min() - 1.0).abs() < 1e-13);
            assert!((s.u().max() - 0.2).abs() < 1e-13 && (s.u().min() - 0.2).abs() < 1e-13);
            assert!((s.v().max() + 0.1).abs() < 1e-13 && (s.v().min() + 0.1).abs() < 1e-13);
        }
        let err = euler_to_lagrange(&euler, &map).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn flows_are_mutual_inverses_on_a_solver_run() {
        let law = GammaLaw::new(2.0).unwrap();
        let xi_grid = Grid::new(-15.0, 15.0, 384).unwrap();
        let data = make_bump_data(BumpKind::ConstantPv, 0.1, 2.0, xi_grid).unwrap();
        let config = SolverConfig {
            t_end: 1.0,
            sample_interval: 0.5,
            ..SolverConfig::default()
        };
        let (outcome, lag_snaps) = run_with_snapshots(&data, law, &config).unwrap();
        assert_eq!(outcome.status, RunStatus::Survived);

        let x_grid = Grid::new(-13.0, 13.0, 384).unwrap();
        let upsilon = upsilon_flow(&lag_snaps, x_grid).unwrap();
        assert!(!upsilon.truncated);
        let (euler_snaps, clamped) = lagrange_to_euler(&lag_snaps, &upsilon).unwrap();
        assert!(!clamped);

        let label_grid = Grid::new(-12.0, 12.0, 384).unwrap();
        let sigma = sigma_flow(&euler_snaps, label_grid).unwrap();
        assert!(!sigma.truncated);

        // mutual inverse: following sigma and reading upsilon back lands on
        // the starting label, to the quadrature and interpolation order
        let mut worst = 0.0_f64;
        for (k, slice) in sigma.map_samples.iter().enumerate() {
            let upsilon_k = &upsilon.map_samples[k];
            for i in 2..label_grid.len() - 2 {
                let x = slice.values()[i];
                let back = cubic_eval(upsilon_k, x);
                worst = worst.max((back - label_grid.xi(i)).abs());
            }
        }
        let dxi = label_grid.dxi();
        assert!(worst < 40.0 * dxi * dxi, "roundtrip defect {worst}");

        // transporting the run back to labels reproduces the solver fields
        let (lag_back, _) = euler_to_lagrange(&euler_snaps, &sigma).unwrap();
        let mut worst_h = 0.0_f64;
        for (k, s) in lag_back.iter().enumerate() {
            let orig = &lag_snaps[k];
            for i in 2..label_grid.len() - 2 {
                let want = cubic_eval(orig.h(), label_grid.xi(i));
                worst_h = worst_h.max((s.h().values()[i] - want).abs());
            }
        }
        assert!(worst_h < 5e-3, "height roundtrip defect {worst_h}");
    }

    #[test]
    fn eulerian_mass_balance_holds_at_sampling_order() {
        let law = GammaLaw::new(2.0).unwrap();
        let xi_grid = Grid::new(-15.0, 15.0, 512).unwrap();
        let data = make_bump_data(BumpKind::ConstantPv, 0.05, 2.0, xi_grid).unwrap();
        let config = SolverConfig {
            t_end: 1.0,
            sample_interval: 0.25,
            ..SolverConfig::default()
        };
        let (outcome, lag_snaps) = run_with_snapshots(&data, law, &config).unwrap();
        assert_eq!(outcome.status, RunStatus::Survived);
        let x_grid = Grid::new(-13.0, 13.0, 512).unwrap();
        let upsilon = upsilon_flow(&lag_snaps, x_grid).unwrap();
        let (euler, _) = lagrange_to_euler(&lag_snaps, &upsilon).unwrap();

        let mut worst = 0.0_f64;
        for k in 1..euler.len() - 1 {
            let span = euler[k + 1].t() - euler[k - 1].t();
            let dh_dt = euler[k + 1]
                .h()
                .zip_with(euler[k - 1].h(), |a, b| (a - b) / span)
                .unwrap();
            let flux = euler[k].h().zip_with(euler[k].u(), |h, u| h * u).unwrap();
            let dflux = flux.derivative();
            for i in 4..x_grid.len() - 4 {
                worst = worst.max((dh_dt.values()[i] + dflux.values()[i]).abs());
            }
        }
        assert!(worst < 2e-2, "mass residual {worst}");
    }
}
