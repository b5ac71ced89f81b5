//! Deterministic artifact serialization. Every float is printed with 17
//! significant digits (`{:.16e}`), which round-trips f64 exactly, so a rerun
//! of the same config and seed reproduces every output byte for byte. The
//! JSON emitter is deliberately hand-rolled: it keeps insertion order and
//! reuses the exact float format, which off-the-shelf writers do not pin.

use rsw_core::blowup::ComparisonTrajectory;
use rsw_core::fields::{
    potential_vorticity, to_riemann, weighted_gradients, DiagnosticsRecord, LagrangianState,
};
use rsw_core::kernels::{theta_flat, theta_sharp};
use rsw_core::solver::RunStatus;
use rsw_core::{BoundConstants, GammaLaw};

/// 17 significant digits, enough to reconstruct the exact bit pattern.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Minimal JSON document tree. Objects keep insertion order.
#[derive(Debug, Clone)]
pub enum Json {
    Null,
    Bool(bool),
    Num(String),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(&'static str, Json)>),
}

impl Json {
    pub fn num(x: f64) -> Json {
        if x.is_finite() {
            Json::Num(fmt_f64(x))
        } else {
            Json::Null
        }
    }

    pub fn int(x: u64) -> Json {
        Json::Num(x.to_string())
    }

    pub fn str(s: impl Into<String>) -> Json {
        Json::Str(s.into())
    }

    pub fn arr_num(values: &[f64]) -> Json {
        Json::Arr(values.iter().map(|&x| Json::num(x)).collect())
    }

    pub fn opt_num(x: Option<f64>) -> Json {
        x.map_or(Json::Null, Json::num)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, depth: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Num(s) => out.push_str(s),
            Json::Str(s) => {
                out.push('"');
                for c in s.chars() {
                    match c {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        '\r' => out.push_str("\\r"),
                        '\t' => out.push_str("\\t"),
                        c if (c as u32) < 0x20 => {
                            out.push_str(&format!("\\u{:04x}", c as u32));
                        }
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            Json::Arr(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    indent(out, depth + 1);
                    item.write(out, depth + 1);
                }
                out.push('\n');
                indent(out, depth);
                out.push(']');
            }
            Json::Obj(entries) => {
                if entries.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (i, (key, value)) in entries.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    indent(out, depth + 1);
                    out.push('"');
                    out.push_str(key);
                    out.push_str("\": ");
                    value.write(out, depth + 1);
                }
                out.push('\n');
                indent(out, depth);
                out.push('}');
            }
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

pub fn status_name(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Survived => "survived",
        RunStatus::Blowup => "blowup",
        RunStatus::Vacuum => "vacuum",
        RunStatus::BoundaryContact => "boundary-contact",
        RunStatus::NumericalFailure => "numerical-failure",
    }
}

pub const DIAGNOSTICS_HEADER: &str = "t,energy,min_z,max_z,min_h,max_h,max_pv_drift,max_abs_r,\
support_halfwidth,theta_sharp,theta_flat,w0_sharp,m_comparison";

/// The per-sample diagnostics table. The depth envelopes are evaluated from
/// the frozen initial constants at each sample time; the comparison column
/// is filled where a comparison trajectory applies and is defined.
pub fn diagnostics_csv(
    records: &[DiagnosticsRecord],
    c: &BoundConstants,
    law: GammaLaw,
    comparison: Option<&ComparisonTrajectory>,
) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in records {
        let sharp = theta_sharp(r.t, c.m0, law).map(fmt_f64).unwrap_or_default();
        let flat = theta_flat(r.t, c.h0_min, c.w0_sharp)
            .map(fmt_f64)
            .unwrap_or_default();
        let m = comparison
            .and_then(|traj| traj.value_at(r.t))
            .map(fmt_f64)
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{sharp},{flat},{},{m}\n",
            fmt_f64(r.t),
            fmt_f64(r.energy),
            fmt_f64(r.min_z),
            fmt_f64(r.max_z),
            fmt_f64(r.min_h),
            fmt_f64(r.max_h),
            fmt_f64(r.max_pv_drift),
            fmt_f64(r.max_abs_r),
            fmt_f64(r.support_halfwidth),
            fmt_f64(c.w0_sharp),
        ));
    }
    out
}

pub const SNAPSHOT_HEADER: &str = "xi,h,u,v,r1,r2,r3,z1,z2,omega";

/// One per-time field table: primitive fields, invariants and weighted
/// gradients at every grid node.
pub fn snapshot_csv(state: &LagrangianState, law: GammaLaw) -> rsw_core::Result<String> {
    let riemann = to_riemann(state, law)?;
    let (z1, z2) = weighted_gradients(state, law)?;
    let pv = potential_vorticity(state)?;
    let grid = state.grid();
    let mut out = String::from(SNAPSHOT_HEADER);
    out.push('\n');
    for i in 0..grid.len() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f64(grid.xi(i)),
            fmt_f64(state.h().values()[i]),
            fmt_f64(state.u().values()[i]),
            fmt_f64(state.v().values()[i]),
            fmt_f64(riemann.r1().values()[i]),
            fmt_f64(riemann.r2().values()[i]),
            fmt_f64(riemann.r3().values()[i]),
            fmt_f64(z1.values()[i]),
            fmt_f64(z2.values()[i]),
            fmt_f64(pv.values()[i]),
        ));
    }
    Ok(out)
}
