//! Experiment configuration: a flat TOML document with at most one level of
//! table nesting. Parsing is strict: unknown keys and duplicate keys are
//! rejected, naming the offender.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Threshold,
    PredictBound,
    CompareKg,
    Trace,
    Kernels,
    Props,
    Coordmaps,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Threshold => "threshold",
            Mode::PredictBound => "predict-bound",
            Mode::CompareKg => "compare-kg",
            Mode::Trace => "trace",
            Mode::Kernels => "kernels",
            Mode::Props => "props",
            Mode::Coordmaps => "coordmaps",
        }
    }

    /// Modes that evolve or inspect a concrete initial state.
    pub fn needs_data(self) -> bool {
        !matches!(self, Mode::Kernels | Mode::Props)
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub xi_min: f64,
    pub xi_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    HeightBump,
    VelocityBump,
    ConstantPv,
    File,
}

impl DataKind {
    pub fn name(self) -> &'static str {
        match self {
            DataKind::HeightBump => "height-bump",
            DataKind::VelocityBump => "velocity-bump",
            DataKind::ConstantPv => "constant-pv",
            DataKind::File => "file",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub kind: DataKind,
    pub amplitude: Option<f64>,
    pub width: Option<f64>,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub cfl: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    pub blowup_z_floor: f64,
    pub dt_floor: f64,
    pub scheme_order: u8,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            cfl: 0.4,
            t_end: 10.0,
            sample_interval: 0.1,
            blowup_z_floor: -1e4,
            dt_floor: 1e-12,
            scheme_order: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    pub family: u8,
    pub xi_start: f64,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoordmapsSection {
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub label_min: Option<f64>,
    pub label_max: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelsSection {
    pub name: String,
    pub args: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub gamma: f64,
    pub mode: Mode,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    /// When true, data modes also write per-time field tables.
    #[serde(default)]
    pub snapshots: bool,
    pub grid: Option<GridSection>,
    pub data: Option<DataSection>,
    #[serde(default)]
    pub solver: SolverSection,
    pub trace: Option<TraceSection>,
    pub coordmaps: Option<CoordmapsSection>,
    pub kernels: Option<KernelsSection>,
}

fn err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Parses and validates a config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| err(e.to_string()))?;
    validate(&config)?;
    Ok(config)
}

/// Reads, parses and validates a config file.
pub fn parse_config_file(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| err(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn validate(config: &ExperimentConfig) -> Result<(), CliError> {
    if !(config.gamma >= 1.0) || !config.gamma.is_finite() {
        return Err(err(format!("gamma must be >= 1, got {}", config.gamma)));
    }
    if let Some(grid) = &config.grid {
        if !grid.xi_min.is_finite() || !grid.xi_max.is_finite() || grid.xi_max <= grid.xi_min {
            return Err(err(format!(
                "grid window [{}, {}] must be finite with xi_max > xi_min",
                grid.xi_min, grid.xi_max
            )));
        }
        if grid.n < 64 {
            return Err(err(format!("grid.n must be at least 64, got {}", grid.n)));
        }
    }
    let s = &config.solver;
    if !(s.cfl > 0.0 && s.cfl <= 1.0) {
        return Err(err(format!("solver.cfl must be in (0, 1], got {}", s.cfl)));
    }
    if !(s.t_end > 0.0) || !s.t_end.is_finite() {
        return Err(err(format!("solver.t_end must be positive, got {}", s.t_end)));
    }
    if !(s.sample_interval > 0.0) || !s.sample_interval.is_finite() {
        return Err(err(format!(
            "solver.sample_interval must be positive, got {}",
            s.sample_interval
        )));
    }
    if !(s.blowup_z_floor < 0.0) {
        return Err(err(format!(
            "solver.blowup_z_floor must be negative, got {}",
            s.blowup_z_floor
        )));
    }
    if !(s.dt_floor > 0.0) {
        return Err(err(format!(
            "solver.dt_floor must be positive, got {}",
            s.dt_floor
        )));
    }
    if s.scheme_order != 2 && s.scheme_order != 4 {
        return Err(err(format!(
            "solver.scheme_order must be 2 or 4, got {}",
            s.scheme_order
        )));
    }
    if let Some(data) = &config.data {
        match data.kind {
            DataKind::File => {
                if data.path.is_none() {
                    return Err(err("data.kind = \"file\" needs data.path"));
                }
                if data.amplitude.is_some() || data.width.is_some() {
                    return Err(err(
                        "data.amplitude and data.width do not apply to file data",
                    ));
                }
            }
            _ => {
                if data.path.is_some() {
                    return Err(err("data.path only applies to data.kind = \"file\""));
                }
                let amp = data
                    .amplitude
                    .ok_or_else(|| err("bump data needs data.amplitude"))?;
                let width = data.width.ok_or_else(|| err("bump data needs data.width"))?;
                if !amp.is_finite() {
                    return Err(err(format!("data.amplitude must be finite, got {amp}")));
                }
                if !(width > 0.0) || !width.is_finite() {
                    return Err(err(format!("data.width must be positive, got {width}")));
                }
            }
        }
    }
    if config.mode.needs_data() {
        if config.grid.is_none() {
            return Err(err(format!("mode {} needs a [grid] section", config.mode.name())));
        }
        if config.data.is_none() {
            return Err(err(format!("mode {} needs a [data] section", config.mode.name())));
        }
    }
    if config.mode == Mode::Trace {
        let trace = config
            .trace
            .ok_or_else(|| err("mode trace needs a [trace] section"))?;
        if trace.family != 1 && trace.family != 2 {
            return Err(err(format!(
                "trace.family must be 1 or 2, got {}",
                trace.family
            )));
        }
        if !trace.xi_start.is_finite() {
            return Err(err("trace.xi_start must be finite"));
        }
    }
    if config.mode == Mode::Kernels && config.kernels.is_none() {
        return Err(err("mode kernels needs a [kernels] section"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> String {
        "\
gamma = 2.0
mode = \"threshold\"

[grid]
xi_min = -10.0
xi_max = 10.0
n = 256

[data]
kind = \"velocity-bump\"
amplitude = 0.5
width = 2.0
"
        .to_string()
    }

    #[test]
    fn parses_with_defaults() {
        let config = parse_config(&minimal()).unwrap();
        assert_eq!(config.mode, Mode::Threshold);
        assert_eq!(config.solver.cfl, 0.4);
        assert_eq!(config.solver.scheme_order, 4);
        assert_eq!(config.solver.blowup_z_floor, -1e4);
        assert!(!config.snapshots);
    }

    #[test]
    fn rejects_unknown_key_by_name() {
        let text = minimal() + "\n[solver]\nwibble = 1.0\n";
        let e = parse_config(&text).unwrap_err().to_string();
        assert!(e.contains("wibble"), "message was: {e}");
    }

    #[test]
    fn rejects_duplicate_key() {
        let text = "gamma = 2.0\ngamma = 3.0\nmode = \"props\"\n";
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn rejects_shallow_gamma() {
        let text = minimal().replace("gamma = 2.0", "gamma = 0.5");
        let e = parse_config(&text).unwrap_err().to_string();
        assert!(e.contains("gamma"), "message was: {e}");
    }

    #[test]
    fn rejects_small_grid() {
        let text = minimal().replace("n = 256", "n = 32");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn rejects_mixed_data_spec() {
        let text = minimal() + "\n";
        let text = text.replace("width = 2.0", "width = 2.0\npath = \"x.csv\"");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn trace_mode_needs_section() {
        let text = minimal().replace("mode = \"threshold\"", "mode = \"trace\"");
        assert!(parse_config(&text).is_err());
        let with = text + "\n[trace]\nfamily = 1\nxi_start = 0.0\n";
        assert!(parse_config(&with).is_ok());
    }
}
