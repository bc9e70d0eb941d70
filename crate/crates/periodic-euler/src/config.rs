//! Run configuration: a flat, human-editable TOML file (dotted key paths),
//! repeatable `key=value` overrides, and construction of validated domain
//! objects from the parsed values.

use crate::boundary::{BoundaryData, PeriodicSignal};
use crate::forcing::{BackgroundSolution, ForcingCoefficient, SineTerm};
use crate::gas::GasParams;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("bad override '{0}': expected key.path=value")]
    BadOverride(String),
    #[error("unknown {what} kind '{kind}'; expected one of {expected}")]
    UnknownKind {
        what: &'static str,
        kind: String,
        expected: &'static str,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsConfig {
    pub a: f64,
    pub gamma: f64,
    pub length: f64,
    pub period: f64,
    pub rho_ref: f64,
    pub u_ref: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            a: 1.0,
            gamma: 2.0,
            length: 1.0,
            period: 1.0,
            rho_ref: 1.0,
            u_ref: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForcingConfig {
    /// `zero`, `sine_series` or `tabulated`.
    pub kind: String,
    /// `[amplitude, harmonic]` pairs for `sine_series`.
    pub terms: Vec<(f64, u32)>,
    /// Uniform samples over one period for `tabulated`.
    pub samples: Vec<f64>,
    /// Accept coefficients whose integral dips below zero but keeps the
    /// background supersonic.
    pub relaxed: bool,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        ForcingConfig {
            kind: "sine_series".into(),
            terms: vec![(0.5, 1)],
            samples: Vec::new(),
            relaxed: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SignalConfig {
    /// `constant`, `background`, `background_plus_sine3`, `sine_series`
    /// or `tabulated`.
    pub kind: String,
    /// Value for `constant`.
    pub value: f64,
    /// Perturbation amplitude for `background_plus_sine3`.
    pub delta: f64,
    pub harmonic: u32,
    /// `[amplitude, harmonic]` pairs for `sine_series`.
    pub terms: Vec<(f64, u32)>,
    pub samples: Vec<f64>,
}

impl Default for SignalConfig {
    fn default() -> Self {
        SignalConfig {
            kind: "background".into(),
            value: 0.0,
            delta: 0.0,
            harmonic: 1,
            terms: Vec::new(),
            samples: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundaryConfig {
    pub rho: SignalConfig,
    pub u: SignalConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarchConfig {
    pub enabled: bool,
    pub nt_per_period: usize,
    pub scheme_order: u32,
    pub t_max: f64,
    pub record_per_period: usize,
    pub record_columns: usize,
}

impl Default for MarchConfig {
    fn default() -> Self {
        MarchConfig {
            enabled: true,
            nt_per_period: 512,
            scheme_order: 1,
            t_max: 4.0,
            record_per_period: 256,
            record_columns: 1024,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FvConfig {
    pub enabled: bool,
    pub nx: usize,
    pub cfl: f64,
    /// `rusanov` or `hll`.
    pub flux: String,
    pub scheme_order: u32,
}

impl Default for FvConfig {
    fn default() -> Self {
        FvConfig {
            enabled: false,
            nx: 1600,
            cfl: 0.45,
            flux: "hll".into(),
            scheme_order: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// `march` or `fv`.
    pub solver: String,
    /// Time nodes per period (march) or cell counts (fv).
    pub resolutions: Vec<usize>,
    pub t_max: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            solver: "march".into(),
            resolutions: vec![256, 512, 1024, 2048],
            t_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
    /// Extra row/column subsampling applied when writing field CSVs.
    pub stride: usize,
    pub write_fields: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "out".into(),
            stride: 1,
            write_fields: true,
        }
    }
}

/// The fully resolved configuration of a run. The default value is the
/// baseline scenario used throughout the verification suite.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsConfig,
    pub forcing: ForcingConfig,
    pub boundary: BoundaryConfig,
    pub march: MarchConfig,
    pub fv: FvConfig,
    pub convergence: ConvergenceConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// The baseline scenario: sine forcing beta = 0.5 and a delta = 1e-2
    /// sin^3 velocity perturbation on the background.
    pub fn baseline() -> Self {
        let mut cfg = RunConfig::default();
        cfg.boundary.u = SignalConfig {
            kind: "background_plus_sine3".into(),
            delta: 1e-2,
            ..SignalConfig::default()
        };
        cfg
    }

    pub fn from_str_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        Self::from_str_toml(&std::fs::read_to_string(path)?)
    }

    /// Loads and applies `key.path=value` overrides in order.
    pub fn load_with_overrides(
        path: Option<&Path>,
        overrides: &[String],
    ) -> Result<Self, ConfigError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)?,
            None => String::new(),
        };
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for ov in overrides {
            apply_override(&mut table, ov)?;
        }
        // round-trip through Value to run serde validation with defaults
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))
    }

    /// The resolved configuration as TOML lines, used as CSV provenance.
    pub fn provenance_lines(&self) -> Vec<String> {
        toml::to_string(self)
            .unwrap_or_default()
            .lines()
            .map(|l| l.to_string())
            .collect()
    }

    pub fn gas_params(&self) -> GasParams {
        GasParams {
            a: self.params.a,
            gamma: self.params.gamma,
            length: self.params.length,
            period: self.params.period,
            rho_ref: self.params.rho_ref,
            u_ref: self.params.u_ref,
        }
    }

    pub fn build_forcing(&self) -> Result<ForcingCoefficient, ConfigError> {
        let period = self.params.period;
        match self.forcing.kind.as_str() {
            "zero" => ForcingCoefficient::zero(period),
            "sine_series" => ForcingCoefficient::sine_series(
                period,
                self.forcing
                    .terms
                    .iter()
                    .map(|&(amplitude, harmonic)| SineTerm {
                        amplitude,
                        harmonic,
                    })
                    .collect(),
            ),
            "tabulated" => ForcingCoefficient::tabulated(period, self.forcing.samples.clone()),
            other => {
                return Err(ConfigError::UnknownKind {
                    what: "forcing",
                    kind: other.into(),
                    expected: "zero, sine_series, tabulated",
                })
            }
        }
        .map_err(|e| ConfigError::Parse(e.to_string()))
    }

    fn build_signal(&self, sc: &SignalConfig, what: &'static str) -> Result<PeriodicSignal, ConfigError> {
        match sc.kind.as_str() {
            "constant" => Ok(PeriodicSignal::Constant { value: sc.value }),
            "background" => Ok(PeriodicSignal::background()),
            "background_plus_sine3" => Ok(PeriodicSignal::BackgroundPlusSine3 {
                delta: sc.delta,
                harmonic: sc.harmonic,
            }),
            "sine_series" => Ok(PeriodicSignal::SineSeries {
                terms: sc.terms.clone(),
            }),
            "tabulated" => PeriodicSignal::tabulated(self.params.period, sc.samples.clone())
                .map_err(|e| ConfigError::Parse(e.to_string())),
            other => Err(ConfigError::UnknownKind {
                what,
                kind: other.into(),
                expected: "constant, background, background_plus_sine3, sine_series, tabulated",
            }),
        }
    }

    pub fn build_boundary(
        &self,
        background: BackgroundSolution,
    ) -> Result<BoundaryData, ConfigError> {
        let rho = self.build_signal(&self.boundary.rho, "boundary.rho")?;
        let u = self.build_signal(&self.boundary.u, "boundary.u")?;
        Ok(BoundaryData::new(background, rho, u))
    }

    pub fn fv_flux(&self) -> Result<crate::fv::FluxScheme, ConfigError> {
        match self.fv.flux.as_str() {
            "rusanov" => Ok(crate::fv::FluxScheme::Rusanov),
            "hll" => Ok(crate::fv::FluxScheme::Hll),
            other => Err(ConfigError::UnknownKind {
                what: "fv.flux",
                kind: other.into(),
                expected: "rusanov, hll",
            }),
        }
    }
}

fn apply_override(table: &mut toml::Table, ov: &str) -> Result<(), ConfigError> {
    let (key, raw_value) = ov
        .split_once('=')
        .ok_or_else(|| ConfigError::BadOverride(ov.into()))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(ConfigError::BadOverride(ov.into()));
    }
    let raw_value = raw_value.trim();
    // parse the value as TOML; bare words fall back to strings
    let value = format!("v = {raw_value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw_value.to_string()));

    let mut node = table;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::BadOverride(ov.into()))?;
    }
    node.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_baseline_scenario() {
        let cfg = RunConfig::baseline();
        assert_eq!(cfg.params.u_ref, 2.0);
        assert_eq!(cfg.forcing.terms, vec![(0.5, 1)]);
        assert_eq!(cfg.boundary.u.delta, 1e-2);
        assert!(cfg.gas_params().validate().is_ok());
        assert!(cfg.build_forcing().is_ok());
    }

    #[test]
    fn parses_dotted_keys() {
        let cfg = RunConfig::from_str_toml(
            "params.gamma = 1.4\nparams.u_ref = 3.0\nmarch.t_max = 2.5\nfv.flux = \"rusanov\"\n",
        )
        .unwrap();
        assert_eq!(cfg.params.gamma, 1.4);
        assert_eq!(cfg.march.t_max, 2.5);
        assert_eq!(cfg.fv.flux, "rusanov");
        // untouched fields keep defaults
        assert_eq!(cfg.params.a, 1.0);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(RunConfig::from_str_toml("params.gamm = 1.4\n").is_err());
    }

    #[test]
    fn overrides_take_effect_in_order() {
        let cfg = RunConfig::load_with_overrides(
            None,
            &[
                "params.gamma=1.4".into(),
                "params.gamma=1.6".into(),
                "fv.flux=rusanov".into(),
                "boundary.u.kind=background_plus_sine3".into(),
                "boundary.u.delta=5e-3".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.params.gamma, 1.6);
        assert_eq!(cfg.fv.flux, "rusanov");
        assert_eq!(cfg.boundary.u.delta, 5e-3);
    }

    #[test]
    fn bad_override_is_rejected() {
        assert!(RunConfig::load_with_overrides(None, &["nonsense".into()]).is_err());
        assert!(RunConfig::load_with_overrides(None, &["params.zzz=1".into()]).is_err());
    }

    #[test]
    fn unknown_kinds_are_reported() {
        let mut cfg = RunConfig::baseline();
        cfg.forcing.kind = "square_wave".into();
        assert!(matches!(
            cfg.build_forcing(),
            Err(ConfigError::UnknownKind { .. })
        ));
    }
}
