//! Run configuration: TOML text in, validated [`RunConfig`] out.
//!
//! ```toml
//! band = 0
//! hbar = 1.0
//! output_dir = "out"
//!
//! [model]
//! name = "rotating-two-level"
//! B0 = 1.0
//!
//! [grid]
//! origin = [1.0, 0.4, 0.9]
//! spacing = [0.05, 0.04, 0.01]
//! shape = [21, 21, 21]
//! time = { t0 = 0.0, dt = 0.0315, nt = 200 }
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;

use berryfield::berry::{BundleOptions, GaugeChoice};
use berryfield::electro::SuiteOptions;
use berryfield::grid::{ParameterGrid, Rectangle, TimeAxis};
use berryfield::model::{
    builtin_family, DriveAxes, HamiltonianFamily, ModelParams, Monomial, Polynomial,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Fields,
    Verify,
    Monopole,
    Sweep,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Fields => "fields",
            Command::Verify => "verify",
            Command::Monopole => "monopole",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional in the file; the command line supplies it otherwise.
    #[serde(default)]
    pub command: Option<Command>,
    pub model: ModelConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub band: usize,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub gauge: GaugeChoice,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub monopole: MonopoleConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(rename = "B0", default)]
    pub b0: Option<f64>,
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub omega: Option<f64>,
    #[serde(default)]
    pub phi0: Option<f64>,
    /// Which drive parameters the grid axes scan.
    #[serde(default)]
    pub axes: Option<AxesConfig>,
    #[serde(default)]
    pub m: Option<f64>,
    /// Expected Hilbert-space dimension; checked against the family.
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    /// `static-diagonal` entries, each a list of monomials.
    #[serde(default)]
    pub diagonal: Option<Vec<Vec<MonomialConfig>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxesConfig {
    Fixed,
    AmplitudePolarPhase,
    AmplitudePolarFrequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialConfig {
    pub coef: f64,
    #[serde(default)]
    pub powers: [u32; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub shape: [usize; 3],
    #[serde(default)]
    pub periodic: [bool; 3],
    #[serde(default)]
    pub time: Option<TimeConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default)]
    pub t0: f64,
    pub dt: f64,
    pub nt: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative to the largest `|eigenvalue|` on the grid.
    pub gap_tol: f64,
    pub herm_tol: f64,
    pub overlap_floor: f64,
    pub residual_multiplier: f64,
    pub static_multiplier: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let bundle = BundleOptions::default();
        let suite = SuiteOptions::default();
        Self {
            gap_tol: bundle.gap_tol,
            herm_tol: bundle.herm_tol,
            overlap_floor: bundle.overlap_floor,
            residual_multiplier: suite.residual_multiplier,
            static_multiplier: suite.static_multiplier,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    /// Negative control: flip the sign of the eigenstate electric field.
    pub corrupt_electric: bool,
    /// Rectangle for the surface form of the magnetic current; a central
    /// one is chosen when absent.
    pub current_surface: Option<Rectangle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonopoleConfig {
    /// Time sample scanned.
    pub tau: usize,
    /// Nodes added around each degenerate cluster.
    pub margin: usize,
    /// Largest accepted distance of a charge from an integer.
    pub charge_tol: f64,
    /// Largest accepted distance of a plaquette Chern number from an integer.
    pub chern_tol: f64,
}

impl Default for MonopoleConfig {
    fn default() -> Self {
        Self {
            tau: 0,
            margin: 6,
            charge_tol: 0.03,
            chern_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Number of resolutions, the configured grid being the coarsest.
    pub levels: usize,
    pub refine_space: bool,
    pub refine_time: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            levels: 3,
            refine_space: true,
            refine_time: true,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Parses and validates configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let value: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        let (line, column) = e
            .span()
            .map(|s| line_column(text, s.start))
            .unwrap_or((0, 0));
        CliError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let config: RunConfig =
        toml::Value::Table(value)
            .try_into()
            .map_err(|e: toml::de::Error| {
                let message = e.message().to_string();
                CliError::Validation {
                    key: offending_key(&message),
                    message,
                }
            })?;
    config.validate()?;
    Ok(config)
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

/// The first back-quoted name in a deserializer message.
fn offending_key(message: &str) -> String {
    message.split('`').nth(1).unwrap_or("").to_string()
}

fn invalid(key: &str, message: impl Into<String>) -> CliError {
    CliError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        self.parameter_grid()?;
        let family = self.family()?;
        if let Some(n) = self.model.n.filter(|&n| n != family.dim()) {
            return Err(invalid(
                "N",
                format!(
                    "N = {n} but {} has dimension {}",
                    self.model.name,
                    family.dim()
                ),
            ));
        }
        if self.band >= family.dim() {
            return Err(invalid(
                "band",
                format!(
                    "band {} out of range for dimension {}",
                    self.band,
                    family.dim()
                ),
            ));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(invalid("hbar", "must be positive"));
        }
        let t = &self.tolerances;
        for (key, v) in [
            ("gap_tol", t.gap_tol),
            ("herm_tol", t.herm_tol),
            ("residual_multiplier", t.residual_multiplier),
            ("static_multiplier", t.static_multiplier),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(key, "must be positive"));
            }
        }
        if !(0.0..=1.0).contains(&t.overlap_floor) {
            return Err(invalid("overlap_floor", "must lie in [0, 1]"));
        }
        if self.command == Some(Command::Sweep) || self.sweep != SweepConfig::default() {
            self.check_sweep()?;
        }
        Ok(())
    }

    pub fn check_sweep(&self) -> Result<(), CliError> {
        if self.sweep.levels < 2 {
            return Err(invalid("levels", "a sweep needs at least two levels"));
        }
        if !self.sweep.refine_space && !self.sweep.refine_time {
            return Err(invalid(
                "refine_space",
                "a sweep must refine space, time or both",
            ));
        }
        Ok(())
    }

    pub fn parameter_grid(&self) -> Result<ParameterGrid, CliError> {
        let g = &self.grid;
        let time = g.time.map(|t| TimeAxis {
            t0: t.t0,
            dt: t.dt,
            nt: t.nt,
        });
        ParameterGrid::new(g.origin, g.spacing, g.shape, g.periodic, time).map_err(|e| {
            let key = match e {
                berryfield::Error::AxisTooShort { axis: 3, .. } => "nt",
                berryfield::Error::AxisTooShort { .. } => "shape",
                _ => "grid",
            };
            CliError::Validation {
                key: key.to_string(),
                message: e.to_string(),
            }
        })
    }

    pub fn model_params(&self) -> ModelParams {
        let m = &self.model;
        let d = ModelParams::default();
        ModelParams {
            b0: m.b0.unwrap_or(d.b0),
            theta: m.theta.unwrap_or(d.theta),
            omega: m.omega.unwrap_or(d.omega),
            phi0: m.phi0.unwrap_or(d.phi0),
            axes: match m.axes {
                None => d.axes,
                Some(AxesConfig::Fixed) => DriveAxes::Fixed,
                Some(AxesConfig::AmplitudePolarPhase) => DriveAxes::AmplitudePolarPhase,
                Some(AxesConfig::AmplitudePolarFrequency) => DriveAxes::AmplitudePolarFrequency,
            },
            m: m.m.unwrap_or(d.m),
            diagonal: match &m.diagonal {
                None => d.diagonal,
                Some(entries) => entries
                    .iter()
                    .map(|e| {
                        Polynomial(e.iter().map(|t| Monomial::new(t.coef, t.powers)).collect())
                    })
                    .collect(),
            },
        }
    }

    pub fn family(&self) -> Result<std::sync::Arc<dyn HamiltonianFamily>, CliError> {
        builtin_family(&self.model.name, &self.model_params())
            .map_err(|e| invalid("name", e.to_string()))
    }

    pub fn bundle_options(&self) -> BundleOptions {
        let t = &self.tolerances;
        BundleOptions {
            gap_tol: t.gap_tol,
            herm_tol: t.herm_tol,
            overlap_floor: t.overlap_floor,
            gauge: self.gauge,
            ..BundleOptions::default()
        }
    }

    pub fn suite_options(&self) -> SuiteOptions {
        SuiteOptions {
            hbar: self.hbar,
            bundle: self.bundle_options(),
            residual_multiplier: self.tolerances.residual_multiplier,
            static_multiplier: self.tolerances.static_multiplier,
            current_surface: self.verify.current_surface,
            corrupt_electric: self.verify.corrupt_electric,
            ..SuiteOptions::default()
        }
    }

    /// Model parameters that the named family reads, for reports.
    pub fn reported_parameters(&self) -> BTreeMap<String, f64> {
        let p = self.model_params();
        let mut out = BTreeMap::new();
        match self.model.name.as_str() {
            "rotating-two-level" => {
                out.insert("B0".into(), p.b0);
                out.insert("theta".into(), p.theta);
                out.insert("omega".into(), p.omega);
                out.insert("phi0".into(), p.phi0);
            }
            "two-band-lattice" => {
                out.insert("m".into(), p.m);
            }
            "static-diagonal" => {
                out.insert("N".into(), p.diagonal.len() as f64);
            }
            _ => {}
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
name = "spin-zeeman"

[grid]
origin = [-1.0, -1.0, -1.0]
spacing = [0.2, 0.2, 0.2]
shape = [11, 11, 11]
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.band, 0);
        assert_eq!(c.hbar, 1.0);
        assert_eq!(c.output_dir, PathBuf::from("out"));
        assert_eq!(c.gauge, GaugeChoice::Auto);
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.command, None);
        assert!(c.grid.time.is_none());
        assert_eq!(c.parameter_grid().unwrap().shape(), [11; 3]);
    }

    #[test]
    fn short_axis_is_a_validation_error() {
        let text = MINIMAL.replace("[11, 11, 11]", "[2, 2, 2]");
        match parse_config(&text) {
            Err(CliError::Validation { key, message }) => {
                assert_eq!(key, "shape");
                assert!(message.contains("at least 3"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_named() {
        let text = MINIMAL.replace(
            "name = \"spin-zeeman\"",
            "name = \"rotating-two-level\"\nomga = 2.0",
        );
        match parse_config(&text) {
            Err(CliError::Validation { key, .. }) => assert_eq!(key, "omga"),
            other => panic!("{other:?}"),
        }
        let text = format!("{MINIMAL}\n[tolerances]\ngap_tl = 1e-3\n");
        assert!(
            matches!(parse_config(&text), Err(CliError::Validation { key, .. }) if key == "gap_tl")
        );
    }

    #[test]
    fn syntax_errors_carry_a_position() {
        let text = "[model]\nname = \"spin-zeeman\"\n[grid\n";
        match parse_config(text) {
            Err(CliError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column >= 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_checks() {
        let bad_band = format!("band = 2\n{MINIMAL}");
        assert!(
            matches!(parse_config(&bad_band), Err(CliError::Validation { key, .. }) if key == "band")
        );
        let bad_model = MINIMAL.replace("spin-zeeman", "spin-zeman");
        assert!(
            matches!(parse_config(&bad_model), Err(CliError::Validation { key, .. }) if key == "name")
        );
        let one_level = format!("{MINIMAL}\n[sweep]\nlevels = 1\n");
        assert!(
            matches!(parse_config(&one_level), Err(CliError::Validation { key, .. }) if key == "levels")
        );
        let bad_hbar = format!("hbar = 0.0\n{MINIMAL}");
        assert!(
            matches!(parse_config(&bad_hbar), Err(CliError::Validation { key, .. }) if key == "hbar")
        );
    }

    #[test]
    fn drive_parameters_and_entries() {
        let text = r#"
gauge = "propagated"
[model]
name = "static-diagonal"
diagonal = [[{ coef = 2.0, powers = [1, 0, 0] }], [], [{ coef = 1.0 }]]
[grid]
origin = [0.5, 0.0, 0.0]
spacing = [0.1, 0.1, 0.1]
shape = [3, 3, 3]
time = { dt = 0.1, nt = 4 }
"#;
        let c = parse_config(text).unwrap();
        assert_eq!(c.gauge, GaugeChoice::Propagated);
        let p = c.model_params();
        assert_eq!(p.diagonal.len(), 3);
        assert_eq!(p.diagonal[0].eval([0.5, 0.0, 0.0]), 1.0);
        assert_eq!(p.diagonal[2].eval([9.0, 9.0, 9.0]), 1.0);
        assert_eq!(c.family().unwrap().dim(), 3);
        assert_eq!(c.grid.time.unwrap().t0, 0.0);
        assert_eq!(c.reported_parameters()["N"], 3.0);
    }
}
