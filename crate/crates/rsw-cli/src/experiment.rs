//! Experiment orchestration: builds the initial state a config describes,
//! dispatches the requested mode, and writes the artifacts (diagnostics.csv,
//! summary.json, optional snapshots/) into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rsw_core::blowup::{
    comparison_ode_thm11, comparison_ode_thm33, predicted_blowup_bound, trace_characteristic,
    ComparisonTrajectory, Family,
};
use rsw_core::coords::{lagrange_to_euler, sigma_flow, upsilon_flow};
use rsw_core::fields::{
    diagnostics, make_bump_data, potential_vorticity, random_bump_field, threshold_report,
    BumpKind, LagrangianState, ThresholdReport,
};
use rsw_core::interp::cubic_eval;
use rsw_core::kernels::{
    cube_sup_bound, energy_density, f_gamma, f_gamma_inv, kappa, prop_b1_margin, theta_flat,
    theta_sharp, vartheta, zeta, CUBE_SUP_DEFAULT_CONSTANT, F_GAMMA_INV_TOL,
};
use rsw_core::kg::{cross_validate, null_coeffs};
use rsw_core::solver::{run, run_with_snapshots, RunOutcome, RunStatus, SchemeOrder, SolverConfig};
use rsw_core::{Error, Field1D, GammaLaw, Grid};

use crate::config::{DataKind, ExperimentConfig, Mode};
use crate::output::{diagnostics_csv, fmt_f64, snapshot_csv, status_name, Json};
use crate::CliError;

/// Step used when a comparison trajectory is integrated for serialization.
const COMPARISON_DT: f64 = 1e-3;

/// Command-line settings that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub quiet: bool,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn say(quiet: bool, msg: &str) {
    if !quiet {
        println!("{msg}");
    }
}

/// Maps a terminal run status onto the documented process exit codes.
/// Blow-up is a scientific result, not a failure.
pub fn status_exit_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::Survived | RunStatus::Blowup => 0,
        RunStatus::Vacuum => 3,
        RunStatus::BoundaryContact => 4,
        RunStatus::NumericalFailure => 5,
    }
}

/// Runs one experiment end to end and returns the process exit code.
pub fn run_experiment(
    config: &ExperimentConfig,
    overrides: &Overrides,
) -> Result<i32, CliError> {
    let law = GammaLaw::new(config.gamma)?;
    let seed = overrides.seed.or(config.seed);
    let out_dir = overrides
        .out
        .clone()
        .or_else(|| config.output_dir.clone());
    match config.mode {
        Mode::Threshold => mode_threshold(config, law, &dir_or_default(out_dir), overrides.quiet),
        Mode::Simulate => mode_simulate(config, law, &dir_or_default(out_dir), overrides.quiet),
        Mode::PredictBound => {
            mode_predict_bound(config, law, &dir_or_default(out_dir), overrides.quiet)
        }
        Mode::CompareKg => mode_compare_kg(config, law, &dir_or_default(out_dir), overrides.quiet),
        Mode::Trace => mode_trace(config, law, &dir_or_default(out_dir), overrides.quiet),
        Mode::Coordmaps => mode_coordmaps(config, law, &dir_or_default(out_dir), overrides.quiet),
        // the print-oriented modes only write artifacts when a directory
        // was asked for explicitly
        Mode::Kernels => mode_kernels(config, law, out_dir.as_deref()),
        Mode::Props => mode_props(config, seed, out_dir.as_deref(), overrides.quiet),
    }
}

fn dir_or_default(dir: Option<PathBuf>) -> PathBuf {
    dir.unwrap_or_else(|| PathBuf::from("out"))
}

/// Builds the t = 0 state from the [grid] and [data] sections.
fn build_state(config: &ExperimentConfig) -> Result<LagrangianState, CliError> {
    let gs = config
        .grid
        .ok_or_else(|| config_err("this mode needs a [grid] section"))?;
    let grid = Grid::new(gs.xi_min, gs.xi_max, gs.n)?;
    let data = config
        .data
        .as_ref()
        .ok_or_else(|| config_err("this mode needs a [data] section"))?;
    let state = match data.kind {
        DataKind::File => {
            let path = data
                .path
                .as_ref()
                .ok_or_else(|| config_err("data.kind = \"file\" needs data.path"))?;
            read_state_csv(path, grid)?
        }
        kind => {
            let bump = match kind {
                DataKind::HeightBump => BumpKind::HeightBump,
                DataKind::VelocityBump => BumpKind::VelocityBump,
                DataKind::ConstantPv => BumpKind::ConstantPv,
                DataKind::File => unreachable!(),
            };
            let amplitude = data
                .amplitude
                .ok_or_else(|| config_err("bump data needs data.amplitude"))?;
            let width = data
                .width
                .ok_or_else(|| config_err("bump data needs data.width"))?;
            make_bump_data(bump, amplitude, width, grid)?
        }
    };
    Ok(state)
}

/// Reads a `xi,h,u,v` table whose label column must match the configured
/// grid node for node.
fn read_state_csv(path: &Path, grid: Grid) -> Result<LagrangianState, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == "xi,h,u,v" => {}
        _ => {
            return Err(config_err(format!(
                "{} must start with the header xi,h,u,v",
                path.display()
            )))
        }
    }
    let mut h = Vec::with_capacity(grid.len());
    let mut u = Vec::with_capacity(grid.len());
    let mut v = Vec::with_capacity(grid.len());
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let i = h.len();
        let row: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| config_err(format!("{} line {}: {e}", path.display(), k + 2)))?;
        if row.len() != 4 {
            return Err(config_err(format!(
                "{} line {}: expected 4 columns, got {}",
                path.display(),
                k + 2,
                row.len()
            )));
        }
        if i >= grid.len() {
            return Err(config_err(format!(
                "{} has more than the configured {} rows",
                path.display(),
                grid.len()
            )));
        }
        let xi = grid.xi(i);
        if (row[0] - xi).abs() > 1e-9 * xi.abs().max(1.0) {
            return Err(config_err(format!(
                "{} line {}: xi = {} does not match grid node {xi}",
                path.display(),
                k + 2,
                row[0]
            )));
        }
        h.push(row[1]);
        u.push(row[2]);
        v.push(row[3]);
    }
    if h.len() != grid.len() {
        return Err(config_err(format!(
            "{} has {} rows, the configured grid wants {}",
            path.display(),
            h.len(),
            grid.len()
        )));
    }
    Ok(LagrangianState::new(
        0.0,
        Field1D::new(grid, h)?,
        Field1D::new(grid, u)?,
        Field1D::new(grid, v)?,
    )?)
}

fn solver_config(config: &ExperimentConfig) -> SolverConfig {
    let s = &config.solver;
    SolverConfig {
        cfl: s.cfl,
        t_end: s.t_end,
        sample_interval: s.sample_interval,
        blowup_z_floor: s.blowup_z_floor,
        dt_floor: s.dt_floor,
        scheme_order: if s.scheme_order == 2 {
            SchemeOrder::Two
        } else {
            SchemeOrder::Four
        },
    }
}

/// The comparison trajectory matching whichever criterion the data fire:
/// the sharp-bar equation directly when inf Z₀ already sits at or below
/// −√(2ω₀♯), otherwise the pinned-height leg glued to the sharp-bar leg at
/// the first recorded point past the bar.
fn composed_comparison(
    report: &ThresholdReport,
    law: GammaLaw,
    t_end: f64,
) -> Option<ComparisonTrajectory> {
    if !report.valid {
        return None;
    }
    let c = &report.constants;
    if report.thm11_satisfied || report.inf_z0 <= report.thm11_threshold {
        return comparison_ode_thm11(c, law, report.inf_z0, 0.0, t_end, COMPARISON_DT).ok();
    }
    if !report.thm12_satisfied {
        return None;
    }
    let (leg, crossing) =
        comparison_ode_thm33(c, law, report.inf_z0, t_end, COMPARISON_DT).ok()?;
    if crossing.is_none() {
        return Some(leg);
    }
    let bar = report.thm11_threshold;
    let idx = leg.m_values.iter().position(|&m| m < bar)?;
    let tail = comparison_ode_thm11(
        c,
        law,
        leg.m_values[idx],
        leg.times[idx],
        t_end.max(leg.times[idx]),
        COMPARISON_DT,
    )
    .ok()?;
    let mut times = leg.times[..=idx].to_vec();
    let mut m_values = leg.m_values[..=idx].to_vec();
    times.extend_from_slice(&tail.times[1..]);
    m_values.extend_from_slice(&tail.m_values[1..]);
    Some(ComparisonTrajectory {
        kind: leg.kind,
        times,
        m_values,
        divergence_time: tail.divergence_time,
    })
}

// ---------------------------------------------------------------- summaries

fn summary_prologue(config: &ExperimentConfig, seed: Option<u64>) -> Vec<(&'static str, Json)> {
    let mut entries = vec![
        ("schema_version", Json::int(1)),
        ("mode", Json::str(config.mode.name())),
        ("gamma", Json::num(config.gamma)),
        ("seed", seed.map_or(Json::Null, Json::int)),
    ];
    if let Some(g) = &config.grid {
        entries.push((
            "grid",
            Json::Obj(vec![
                ("xi_min", Json::num(g.xi_min)),
                ("xi_max", Json::num(g.xi_max)),
                ("n", Json::int(g.n as u64)),
            ]),
        ));
    }
    if let Some(d) = &config.data {
        let mut obj = vec![("kind", Json::str(d.kind.name()))];
        if let Some(a) = d.amplitude {
            obj.push(("amplitude", Json::num(a)));
        }
        if let Some(w) = d.width {
            obj.push(("width", Json::num(w)));
        }
        if let Some(p) = &d.path {
            obj.push(("path", Json::str(p.display().to_string())));
        }
        entries.push(("data", Json::Obj(obj)));
    }
    entries
}

fn threshold_json(report: &ThresholdReport) -> Json {
    let c = &report.constants;
    Json::Obj(vec![
        ("valid", Json::Bool(report.valid)),
        ("inf_z0", Json::num(report.inf_z0)),
        ("thm11_threshold", Json::num(report.thm11_threshold)),
        ("thm12_threshold", Json::num(report.thm12_threshold)),
        ("thm11_satisfied", Json::Bool(report.thm11_satisfied)),
        ("thm12_satisfied", Json::Bool(report.thm12_satisfied)),
        ("h_star", Json::num(report.h_star)),
        ("f_inv", Json::num(report.f_inv)),
        (
            "constants",
            Json::Obj(vec![
                ("omega0_sharp", Json::num(c.omega0_sharp)),
                ("z0_sharp", Json::num(c.z0_sharp)),
                ("w0_sharp", Json::num(c.w0_sharp)),
                ("g0", Json::num(c.g0)),
                ("e0", Json::num(c.e0)),
                ("m0", Json::num(c.m0)),
                ("h0_min", Json::num(c.h0_min)),
            ]),
        ),
    ])
}

fn run_json(outcome: &RunOutcome) -> Json {
    Json::Obj(vec![
        ("status", Json::str(status_name(outcome.status))),
        ("t_final", Json::num(outcome.t_final)),
        ("blowup_location", Json::opt_num(outcome.blowup_location)),
        ("predicted_bound", Json::opt_num(outcome.predicted_bound)),
        ("samples", Json::int(outcome.diagnostics.len() as u64)),
    ])
}

fn tolerances_json(config: &ExperimentConfig) -> Json {
    let s = &config.solver;
    Json::Obj(vec![
        ("cfl", Json::num(s.cfl)),
        ("t_end", Json::num(s.t_end)),
        ("sample_interval", Json::num(s.sample_interval)),
        ("blowup_z_floor", Json::num(s.blowup_z_floor)),
        ("dt_floor", Json::num(s.dt_floor)),
        ("scheme_order", Json::int(s.scheme_order as u64)),
        ("f_gamma_inv_tol", Json::num(F_GAMMA_INV_TOL)),
        ("comparison_dt", Json::num(COMPARISON_DT)),
    ])
}

fn write_summary(dir: &Path, entries: Vec<(&'static str, Json)>) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("summary.json"), Json::Obj(entries).render())?;
    Ok(())
}

fn write_diagnostics(dir: &Path, table: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("diagnostics.csv"), table)?;
    Ok(())
}

fn write_snapshots(
    dir: &Path,
    snaps: &[LagrangianState],
    law: GammaLaw,
) -> Result<(), CliError> {
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    let mut index = String::from("idx,t\n");
    for (i, s) in snaps.iter().enumerate() {
        index.push_str(&format!("{i},{}\n", fmt_f64(s.t())));
        fs::write(snap_dir.join(format!("snap_{i:06}.csv")), snapshot_csv(s, law)?)?;
    }
    fs::write(snap_dir.join("index.csv"), index)?;
    Ok(())
}

// -------------------------------------------------------------------- modes

fn mode_threshold(
    config: &ExperimentConfig,
    law: GammaLaw,
    dir: &Path,
    quiet: bool,
) -> Result<i32, CliError> {
    let state0 = build_state(config)?;
    let report = threshold_report(&state0, law)?;
    let pv0 = potential_vorticity(&state0)?;
    let record = diagnostics(&state0, law, &pv0)?;
    write_diagnostics(
        dir,
        &diagnostics_csv(&[record], &report.constants, law, None),
    )?;
    let mut entries = summary_prologue(config, None);
    entries.push(("threshold", threshold_json(&report)));
    entries.push(("tolerances", tolerances_json(config)));
    write_summary(dir, entries)?;
    say(
        quiet,
        &format!(
            "threshold: thm11={} thm12={} (inf Z0 = {:.6}, sharp bar = {:.6})",
            report.thm11_satisfied, report.thm12_satisfied, report.inf_z0, report.thm11_threshold
        ),
    );
    Ok(0)
}

fn mode_simulate(
    config: &ExperimentConfig,
    law: GammaLaw,
    dir: &Path,
    quiet: bool,
) -> Result<i32, CliError> {
    let state0 = build_state(config)?;
    let report = threshold_report(&state0, law)?;
    let sc = solver_config(config);
    let (outcome, snaps) = if config.snapshots {
        let (outcome, snaps) = run_with_snapshots(&state0, law, &sc)?;
        (outcome, Some(snaps))
    } else {
        (run(&state0, law, &sc)?, None)
    };
    let comparison = composed_comparison(&report, law, sc.t_end);
    write_diagnostics(
        dir,
        &diagnostics_csv(
            &outcome.diagnostics,
            &outcome.constants,
            law,
            comparison.as_ref(),
        ),
    )?;
    if let Some(snaps) = &snaps {
        write_snapshots(dir, snaps, law)?;
    }
    let mut entries = summary_prologue(config, None);
    entries.push(("threshold", threshold_json(&report)));
    entries.push(("run", run_json(&outcome)));
    entries.push(("tolerances", tolerances_json(config)));
    write_summary(dir, entries)?;
    say(
        quiet,
        &format!(
            "simulate: status={} t_final={:.6} -> {}",
            status_name(outcome.status),
            outcome.t_final,
            dir.display()
        ),
    );
    Ok(status_exit_code(outcome.status))
}

fn mode_predict_bound(
    config: &ExperimentConfig,
    law: GammaLaw,
    dir: &Path,
    quiet: bool,
) -> Result<i32, CliError> {
    let state0 = build_state(config)?;
    let report = threshold_report(&state0, law)?;
    let (bound, note) = match predicted_blowup_bound(&state0, law) {
        Ok(b) => (Some(b), None),
        Err(Error::NoPrediction(msg)) => (None, Some(msg)),
        Err(e) => return Err(e.into()),
    };
    let mut entries = summary_prologue(config, None);
    entries.push(("threshold", threshold_json(&report)));
    entries.push(("predicted_bound", Json::opt_num(bound)));
    if let Some(msg) = &note {
        entries.push(("note", Json::str(msg.clone())));
    }
    entries.push(("tolerances", tolerances_json(config)));
    write_summary(dir, entries)?;
    match bound {
        Some(b) => say(quiet, &format!("predict-bound: T <= {}", fmt_f64(b))),
        None => say(
            quiet,
            &format!("predict-bound: no prediction ({})", note.unwrap_or_default()),
        ),
    }
    Ok(0)
}

fn mode_compare_kg(
    config: &ExperimentConfig,
    law: GammaLaw,
    dir: &Path,
    quiet: bool,
) -> Result<i32, CliError> {
    let state0 = build_state(config)?;
    let report = threshold_report(&state0, law)?;
    let sc = solver_config(config);
    let cv = cross_validate(&state0, law, &sc)?;
    let outcome = run(&state0, law, &sc)?;
    write_diagnostics(
        dir,
        &diagnostics_csv(&outcome.diagnostics, &outcome.constants, law, None),
    )?;
    let mut entries = summary_prologue(config, None);
    entries.push(("threshold", threshold_json(&report)));
    entries.push(("run", run_json(&outcome)));
    entries.push((
        "compare_kg",
        Json::Obj(vec![
            ("times", Json::arr_num(&cv.times)),
            ("h_discrepancy", Json::arr_num(&cv.h_discrepancy)),
            ("u_discrepancy", Json::arr_num(&cv.u_discrepancy)),
            ("v_discrepancy", Json::arr_num(&cv.v_discrepancy)),
            ("max_discrepancy", Json::num(cv.max_discrepancy)),
            ("primitive_status", Json::str(status_name(cv.primitive_status))),
            ("kg_status", Json::str(status_name(cv.kg_status))),
        ]),
    ));
    entries.push(("tolerances", tolerances_json(config)));
    write_summary(dir, entries)?;
    say(
        quiet,
        &format!(
            "compare-kg: max discrepancy {} (primitive {}, wave form {})",
            fmt_f64(cv.max_discrepancy),
            status_name(cv.primitive_status),
            status_name(cv.kg_status)
        ),
    );
    Ok(status_exit_code(cv.primitive_status).max(status_exit_code(cv.kg_status)))
}

fn mode_trace(
    config: &ExperimentConfig,
    law: GammaLaw,
    dir: &Path,
    quiet: bool,
) -> Result<i32, CliError> {
    let state0 = build_state(config)?;
    let report = threshold_report(&state0, law)?;
    let trace_cfg = config
        .trace
        .ok_or_else(|| config_err("mode trace needs a [trace] section"))?;
    let family = if trace_cfg.family == 1 {
        Family::One
    } else {
        Family::Two
    };
    let sc = solver_config(config);
    let (outcome, snaps) = run_with_snapshots(&state0, law, &sc)?;
    let trace = trace_characteristic(&snaps, law, family, trace_cfg.xi_start)?;
    write_diagnostics(
        dir,
        &diagnostics_csv(&outcome.diagnostics, &outcome.constants, law, None),
    )?;
    if config.snapshots {
        write_snapshots(dir, &snaps, law)?;
    }
    let mut table = String::from("t,xi,z\n");
    for i in 0..trace.times.len() {
        table.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(trace.times[i]),
            fmt_f64(trace.xi_positions[i]),
            fmt_f64(trace.z_along[i]),
        ));
    }
    fs::write(dir.join("trace.csv"), table)?;
    let mut entries = summary_prologue(config, None);
    entries.push(("threshold", threshold_json(&report)));
    entries.push(("run", run_json(&outcome)));
    entries.push((
        "trace",
        Json::Obj(vec![
            ("family", Json::int(trace_cfg.family as u64)),
            ("xi_start", Json::num(trace_cfg.xi_start)),
            ("truncated", Json::Bool(trace.truncated)),
            ("z_residual_max", Json::num(trace.z_residual_max)),
            ("samples", Json::int(trace.times.len() as u64)),
        ]),
    ));
    entries.push(("tolerances", tolerances_json(config)));
    write_summary(dir, entries)?;
    say(
        quiet,
        &format!(
            "trace: family {} from xi = {}, {} samples, residual {}",
            trace_cfg.family,
            trace_cfg.xi_start,
            trace.times.len(),
            fmt_f64(trace.z_residual_max)
        ),
    );
    Ok(status_exit_code(outcome.status))
}

fn mode_coordmaps(
    config: &ExperimentConfig,
    law: GammaLaw,
    dir: &Path,
    quiet: bool,
) -> Result<i32, CliError> {
    let state0 = build_state(config)?;
    let report = threshold_report(&state0, law)?;
    let grid = state0.grid();
    let cm = config.coordmaps.unwrap_or_default();
    let window = grid.xi_max() - grid.xi_min();
    // the physical window keeps 10% margin so paths stay inside the data,
    // the label window 20% so the mutual-inverse check never extrapolates
    let x_min = cm.x_min.unwrap_or(grid.xi_min() + 0.1 * window);
    let x_max = cm.x_max.unwrap_or(grid.xi_max() - 0.1 * window);
    let label_min = cm.label_min.unwrap_or(grid.xi_min() + 0.2 * window);
    let label_max = cm.label_max.unwrap_or(grid.xi_max() - 0.2 * window);
    if !(x_min < x_max) || !(label_min < label_max) {
        return Err(config_err(format!(
            "coordmaps windows must be nonempty, got x [{x_min}, {x_max}], labels [{label_min}, {label_max}]"
        )));
    }
    let x_grid = Grid::new(x_min, x_max, grid.len())?;
    let label_grid = Grid::new(label_min, label_max, grid.len())?;
    let sc = solver_config(config);
    let (outcome, snaps) = run_with_snapshots(&state0, law, &sc)?;
    let upsilon = upsilon_flow(&snaps, x_grid)?;
    let (euler_snaps, clamped) = lagrange_to_euler(&snaps, &upsilon)?;
    let sigma = sigma_flow(&euler_snaps, label_grid)?;
    // sup over times and interior labels of |Upsilon(t, sigma(t, xi)) - xi|
    let mut inverse_defect = 0.0_f64;
    for (ups, sig) in upsilon.map_samples.iter().zip(&sigma.map_samples) {
        for i in 2..label_grid.len() - 2 {
            let x = sig.values()[i];
            inverse_defect = inverse_defect.max((cubic_eval(ups, x) - label_grid.xi(i)).abs());
        }
    }
    write_diagnostics(
        dir,
        &diagnostics_csv(&outcome.diagnostics, &outcome.constants, law, None),
    )?;
    if config.snapshots {
        write_snapshots(dir, &snaps, law)?;
    }
    let mut entries = summary_prologue(config, None);
    entries.push(("threshold", threshold_json(&report)));
    entries.push(("run", run_json(&outcome)));
    entries.push((
        "coordmaps",
        Json::Obj(vec![
            ("x_min", Json::num(x_min)),
            ("x_max", Json::num(x_max)),
            ("label_min", Json::num(label_min)),
            ("label_max", Json::num(label_max)),
            (
                "jacobian_defect_upsilon",
                Json::num(upsilon.jacobian_defect_max),
            ),
            ("jacobian_defect_sigma", Json::num(sigma.jacobian_defect_max)),
            ("inverse_defect", Json::num(inverse_defect)),
            ("upsilon_truncated", Json::Bool(upsilon.truncated)),
            ("sigma_truncated", Json::Bool(sigma.truncated)),
            ("interpolation_clamped", Json::Bool(clamped)),
        ]),
    ));
    entries.push(("tolerances", tolerances_json(config)));
    write_summary(dir, entries)?;
    say(
        quiet,
        &format!(
            "coordmaps: jacobian defect {} / {}, inverse defect {}",
            fmt_f64(upsilon.jacobian_defect_max),
            fmt_f64(sigma.jacobian_defect_max),
            fmt_f64(inverse_defect)
        ),
    );
    Ok(status_exit_code(outcome.status))
}

fn mode_kernels(
    config: &ExperimentConfig,
    law: GammaLaw,
    dir: Option<&Path>,
) -> Result<i32, CliError> {
    let spec = config
        .kernels
        .as_ref()
        .ok_or_else(|| config_err("mode kernels needs a [kernels] section"))?;
    let value = eval_kernel(&spec.name, &spec.args, law)?;
    // the value is the output of this mode, so it prints even under --quiet
    println!("{}", fmt_f64(value));
    if let Some(dir) = dir {
        let mut entries = summary_prologue(config, None);
        entries.push((
            "kernels",
            Json::Obj(vec![
                ("name", Json::str(spec.name.clone())),
                ("args", Json::arr_num(&spec.args)),
                ("value", Json::num(value)),
            ]),
        ));
        write_summary(dir, entries)?;
    }
    Ok(0)
}

/// Evaluates one named closed-form kernel. Argument counts are checked
/// here so the error names the expectation.
pub fn eval_kernel(name: &str, args: &[f64], law: GammaLaw) -> Result<f64, CliError> {
    let want = |n: usize| -> Result<(), CliError> {
        if args.len() == n {
            Ok(())
        } else {
            Err(config_err(format!(
                "kernel {name} takes {n} argument{}, got {}",
                if n == 1 { "" } else { "s" },
                args.len()
            )))
        }
    };
    let value = match name {
        "gamma-bar" => {
            want(0)?;
            law.gamma_bar()
        }
        "kappa" => {
            want(1)?;
            kappa(args[0], law)?
        }
        "vartheta" => {
            want(1)?;
            vartheta(args[0], law)?
        }
        "wave-factor" => {
            want(1)?;
            law.wave_factor(args[0])
        }
        "energy-density" => {
            want(1)?;
            energy_density(args[0], law)?
        }
        "zeta" => {
            want(1)?;
            zeta(args[0], law)?
        }
        "f-gamma" => {
            want(1)?;
            f_gamma(args[0], law)?
        }
        "f-gamma-inv" => {
            want(1)?;
            f_gamma_inv(args[0], law, F_GAMMA_INV_TOL)?
        }
        "theta-sharp" => {
            want(2)?;
            theta_sharp(args[0], args[1], law)?
        }
        "theta-flat" => {
            want(3)?;
            theta_flat(args[0], args[1], args[2])?
        }
        "prop-b1-margin" => {
            want(2)?;
            prop_b1_margin(args[0], args[1], law)?
        }
        "null-coeff-q" => {
            want(1)?;
            null_coeffs(args[0]).0
        }
        "null-coeff-p" => {
            want(1)?;
            null_coeffs(args[0]).1
        }
        other => {
            return Err(config_err(format!(
                "unknown kernel {other}; known: gamma-bar, kappa, vartheta, wave-factor, \
energy-density, zeta, f-gamma, f-gamma-inv, theta-sharp, theta-flat, prop-b1-margin, \
null-coeff-q, null-coeff-p"
            )))
        }
    };
    Ok(value)
}

fn mode_props(
    config: &ExperimentConfig,
    seed: Option<u64>,
    dir: Option<&Path>,
    quiet: bool,
) -> Result<i32, CliError> {
    let seed = seed.unwrap_or(0);
    let mut all_pass = true;
    let mut lines = Vec::new();

    // pointwise energy inequality margin over the (alpha, beta) triangle
    let mut min_margin = f64::INFINITY;
    for &g in &[1.0, 2.0, 3.0] {
        let l = GammaLaw::new(g)?;
        for i in 0..100 {
            let beta = 10.0 * i as f64 / 99.0;
            for j in 0..100 {
                let alpha = (-0.9 + (beta + 0.9) * j as f64 / 99.0).min(beta);
                min_margin = min_margin.min(prop_b1_margin(alpha, beta, l)?);
            }
        }
    }
    let b1_pass = min_margin >= -1e-12;
    all_pass &= b1_pass;
    lines.push(format!(
        "B.1 energy inequality margin: {} (min margin {} over gamma in {{1, 2, 3}})",
        if b1_pass { "PASS" } else { "FAIL" },
        fmt_f64(min_margin)
    ));

    // sup-cube inequality with the shipped constant on random bumps
    let grid = Grid::new(-10.0, 10.0, 4096)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_ratio = 0.0_f64;
    for _ in 0..200 {
        let g = random_bump_field(grid, &mut rng);
        let (lhs, rhs) = cube_sup_bound(&g, CUBE_SUP_DEFAULT_CONSTANT)?;
        if rhs > 0.0 {
            worst_ratio = worst_ratio.max(lhs / rhs);
        }
    }
    let b2_pass = worst_ratio <= 1.0 + 1e-12;
    all_pass &= b2_pass;
    lines.push(format!(
        "B.2 sup-cube bound, constant 3/2: {} (worst lhs/rhs {} on 200 random bumps, seed {seed})",
        if b2_pass { "PASS" } else { "FAIL" },
        fmt_f64(worst_ratio)
    ));

    // the quartic bump defeats the printed constant 3/4
    let quartic = Field1D::from_fn(Grid::new(-1.2, 1.2, 4096)?, |x| {
        if x.abs() >= 1.0 {
            0.0
        } else {
            let q = 1.0 - x * x;
            q * q
        }
    });
    let (lhs, rhs) = cube_sup_bound(&quartic, 0.75)?;
    let audit_pass = lhs > rhs;
    all_pass &= audit_pass;
    lines.push(format!(
        "B.2 constant audit, printed 3/4: {} (quartic bump lhs {} vs rhs {})",
        if audit_pass {
            "COUNTEREXAMPLE CONFIRMED"
        } else {
            "FAIL: inequality held"
        },
        fmt_f64(lhs),
        fmt_f64(rhs)
    ));

    for line in &lines {
        say(quiet, line);
    }
    if let Some(dir) = dir {
        let mut entries = summary_prologue(config, Some(seed));
        entries.push((
            "props",
            Json::Obj(vec![
                ("b1_pass", Json::Bool(b1_pass)),
                ("b1_min_margin", Json::num(min_margin)),
                ("b2_pass", Json::Bool(b2_pass)),
                ("b2_worst_ratio", Json::num(worst_ratio)),
                ("b2_audit_counterexample", Json::Bool(audit_pass)),
                ("b2_audit_lhs", Json::num(lhs)),
                ("b2_audit_rhs", Json::num(rhs)),
            ]),
        ));
        write_summary(dir, entries)?;
    }
    Ok(if all_pass { 0 } else { 1 })
}
