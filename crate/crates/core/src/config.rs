//! TOML experiment and sweep configurations.
//!
//! ```toml
//! methods = ["markov", "james2"]
//!
//! [system]
//! n = 2
//! detunings = [100.0, 100.0]
//! eta = 1.0
//! fock_cutoff = 3
//! cavity_leg = "emission"
//!
//! [[system.drives]]
//! kind = "constant"
//! amplitude = 1.0            # or [re, im]
//!
//! [simulate]
//! rabi_periods = 1.0         # or t_final = 150.0
//! # dt omitted: half the largest step allowed by the stability guard
//! initial_level = 0
//! initial_photons = 1
//!
//! [output]
//! directory = "out"
//! formats = ["csv", "text", "json"]
//! ```
//!
//! A sweep wraps an experiment under `[base]` and adds
//! `[sweep] axis = "detuning_scale" | "eta" | "detuning.K" | "drive.K"`
//! with a list of `values`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::elimination::Method;
use crate::error::{Error, Result};
use crate::model::SystemSpec;

const LAMBDA_2PHOTON: &str = include_str!("../../../configs/lambda_2photon.toml");
const FOURLEVEL_3PHOTON: &str = include_str!("../../../configs/fourlevel_3photon.toml");
const LAMBDA_SCALING_SWEEP: &str = include_str!("../../../configs/lambda_scaling_sweep.toml");

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 2] = ["lambda_2photon", "fourlevel_3photon"];
/// Names accepted by [`sweep_preset`].
pub const SWEEP_PRESETS: [&str; 1] = ["lambda_scaling_sweep"];

fn default_methods() -> Vec<Method> {
    vec![Method::Markov]
}

fn default_photons() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub system: SystemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    /// Window length in periods of the effective `P_N` oscillation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi_periods: Option<f64>,
    /// `None` selects half the stability-guard limit of the full model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub initial_level: usize,
    #[serde(default = "default_photons")]
    pub initial_photons: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fock_cutoff: Option<usize>,
    /// Steps between trajectory samples; `None` picks about 2000 samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm_tolerance: Option<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            t_final: None,
            rabi_periods: Some(1.0),
            dt: None,
            initial_level: 0,
            initial_photons: default_photons(),
            fock_cutoff: None,
            stride: None,
            norm_tolerance: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Text,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv, OutputFormat::Text],
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: OutputFormat) -> bool {
        self.formats.contains(&f)
    }
}

fn parse_toml<T: serde::de::DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    toml::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn finish(violations: Vec<String>) -> Result<()> {
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Validation(violations.join("; ")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        parse_toml(text, "config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        parse_toml(&read(path)?, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// System spec with the simulation cutoff override applied.
    pub fn simulation_spec(&self) -> SystemSpec {
        let mut spec = self.system.clone();
        if let Some(c) = self.simulate.as_ref().and_then(|s| s.fock_cutoff) {
            spec.fock_cutoff = c;
        }
        spec
    }

    /// Every violation as `field: rule`.
    pub fn validate(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .system
            .validate()
            .into_iter()
            .map(|v| format!("system.{v}"))
            .collect();
        if self.methods.is_empty() {
            out.push("methods: at least one method required".into());
        }
        for (i, m) in self.methods.iter().enumerate() {
            if !m.is_joint_space() && self.system.n != 2 {
                out.push(format!(
                    "methods[{i}]: {m} applies to the lambda system only (n = 2)"
                ));
            }
        }
        if let Some(sim) = &self.simulate {
            out.extend(sim.validate(&self.simulation_spec()));
        }
        if self.output.formats.is_empty() {
            out.push("output.formats: at least one format required".into());
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        finish(self.validate())
    }
}

impl SimulateConfig {
    fn validate(&self, spec: &SystemSpec) -> Vec<String> {
        let mut out = Vec::new();
        let positive = |v: f64| v > 0.0 && v.is_finite();
        match (self.t_final, self.rabi_periods) {
            (Some(_), Some(_)) => {
                out.push("simulate: give either t_final or rabi_periods, not both".into())
            }
            (None, None) => out.push("simulate: one of t_final or rabi_periods required".into()),
            (Some(t), None) if !positive(t) => {
                out.push(format!("simulate.t_final: must be positive, got {t}"))
            }
            (None, Some(r)) if !positive(r) => {
                out.push(format!("simulate.rabi_periods: must be positive, got {r}"))
            }
            _ => {}
        }
        if let Some(dt) = self.dt {
            if !positive(dt) {
                out.push(format!("simulate.dt: must be positive, got {dt}"));
            }
        }
        if self.initial_level > spec.n {
            out.push(format!(
                "simulate.initial_level: {} exceeds the top level {}",
                self.initial_level, spec.n
            ));
        }
        if self.fock_cutoff == Some(0) {
            out.push("simulate.fock_cutoff: must be at least 1".into());
        }
        if self.initial_photons > spec.fock_cutoff {
            out.push(format!(
                "simulate.initial_photons: {} exceeds the Fock cutoff {}",
                self.initial_photons, spec.fock_cutoff
            ));
        }
        if self.stride == Some(0) {
            out.push("simulate.stride: must be at least 1".into());
        }
        if let Some(tol) = self.norm_tolerance {
            if !positive(tol) {
                out.push(format!(
                    "simulate.norm_tolerance: must be positive, got {tol}"
                ));
            }
        }
        out
    }
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    /// Multiplies every detuning.
    DetuningScale,
    Eta,
    /// Sets `Δ_k` (1-based).
    Detuning(usize),
    /// Sets the amplitude of drive `Ω_k` (1-based).
    Drive(usize),
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepAxis::DetuningScale => f.write_str("detuning_scale"),
            SweepAxis::Eta => f.write_str("eta"),
            SweepAxis::Detuning(k) => write!(f, "detuning.{k}"),
            SweepAxis::Drive(k) => write!(f, "drive.{k}"),
        }
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let index = |rest: &str| {
            rest.parse::<usize>()
                .ok()
                .filter(|k| *k >= 1)
                .ok_or_else(|| format!("axis {s:?}: index must be a positive integer"))
        };
        match s {
            "detuning_scale" => Ok(SweepAxis::DetuningScale),
            "eta" => Ok(SweepAxis::Eta),
            _ => {
                if let Some(rest) = s.strip_prefix("detuning.") {
                    index(rest).map(SweepAxis::Detuning)
                } else if let Some(rest) = s.strip_prefix("drive.") {
                    index(rest).map(SweepAxis::Drive)
                } else {
                    Err(format!(
                        "unknown axis {s:?} (expected detuning_scale, eta, detuning.K or drive.K)"
                    ))
                }
            }
        }
    }
}

impl Serialize for SweepAxis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SweepAxis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl SweepAxis {
    /// `spec` with this axis set to `value`.
    pub fn apply(&self, spec: &SystemSpec, value: f64) -> Result<SystemSpec> {
        let mut out = spec.clone();
        match *self {
            SweepAxis::DetuningScale => out = spec.scaled_detunings(value),
            SweepAxis::Eta => out.eta = value,
            SweepAxis::Detuning(k) => match out.detunings.get_mut(k - 1) {
                Some(d) => *d = value,
                None => {
                    return Err(Error::validation(format!(
                        "axis detuning.{k}: system has {} detunings",
                        spec.detunings.len()
                    )))
                }
            },
            SweepAxis::Drive(k) => match out.drives.get_mut(k - 1) {
                Some(d) => *d.amplitude_mut() = C64::new(value, 0.0),
                None => {
                    return Err(Error::validation(format!(
                        "axis drive.{k}: system has {} drives",
                        spec.drives.len()
                    )))
                }
            },
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: ExperimentConfig,
    pub sweep: SweepSpec,
}

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        parse_toml(text, "sweep config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        parse_toml(&read(path)?, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Base experiment with the axis set to `value`.
    pub fn member(&self, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = self.base.clone();
        cfg.system = self.sweep.axis.apply(&self.base.system, value)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .base
            .validate()
            .into_iter()
            .map(|v| format!("base.{v}"))
            .collect();
        if self.sweep.values.is_empty() {
            out.push("sweep.values: at least one value required".into());
        }
        for (i, &v) in self.sweep.values.iter().enumerate() {
            if !v.is_finite() {
                out.push(format!("sweep.values[{i}]: must be finite, got {v}"));
                continue;
            }
            match self.member(v) {
                Ok(cfg) => out.extend(
                    cfg.system
                        .validate()
                        .into_iter()
                        .map(|viol| format!("sweep.values[{i}] = {v}: system.{viol}")),
                ),
                Err(e) => out.push(format!("sweep.axis: {e}")),
            }
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        finish(self.validate())
    }
}

/// Either kind of configuration file.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyConfig {
    Experiment(ExperimentConfig),
    Sweep(SweepConfig),
}

impl AnyConfig {
    /// A document with a top-level `sweep` table is a sweep.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: toml::Table = parse_toml(text, "config")?;
        if doc.contains_key("sweep") {
            SweepConfig::from_toml_str(text).map(AnyConfig::Sweep)
        } else {
            ExperimentConfig::from_toml_str(text).map(AnyConfig::Experiment)
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// Bundled experiment or sweep by name.
    pub fn preset(name: &str) -> Result<Self> {
        if SWEEP_PRESETS.contains(&name) {
            sweep_preset(name).map(AnyConfig::Sweep)
        } else {
            preset(name).map(AnyConfig::Experiment)
        }
    }

    pub fn validate(&self) -> Vec<String> {
        match self {
            AnyConfig::Experiment(c) => c.validate(),
            AnyConfig::Sweep(c) => c.validate(),
        }
    }
}

/// Bundled experiment by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let text = match name {
        "lambda_2photon" => LAMBDA_2PHOTON,
        "fourlevel_3photon" => FOURLEVEL_3PHOTON,
        _ => {
            return Err(Error::Config(format!(
                "unknown preset {name:?} (available: {})",
                PRESETS.join(", ")
            )))
        }
    };
    parse_toml(text, name)
}

/// Bundled sweep by name.
pub fn sweep_preset(name: &str) -> Result<SweepConfig> {
    match name {
        "lambda_scaling_sweep" => parse_toml(LAMBDA_SCALING_SWEEP, name),
        _ => Err(Error::Config(format!(
            "unknown sweep preset {name:?} (available: {})",
            SWEEP_PRESETS.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CavityLeg, DriveEnvelope};

    #[test]
    fn presets_parse_and_validate() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.ensure_valid().unwrap();
            assert!(cfg.simulate.is_some());
        }
        for name in SWEEP_PRESETS {
            sweep_preset(name).unwrap().ensure_valid().unwrap();
        }
        assert!(matches!(preset("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn lambda_preset_contents() {
        let cfg = preset("lambda_2photon").unwrap();
        assert_eq!(cfg.system.n, 2);
        assert_eq!(cfg.system.detunings, vec![100.0, 100.0]);
        assert_eq!(cfg.system.eta, 1.0);
        assert_eq!(cfg.system.fock_cutoff, 3);
        assert_eq!(cfg.system.cavity_leg, CavityLeg::Emission);
        assert_eq!(cfg.system.drives, vec![DriveEnvelope::constant(1.0)]);
    }

    #[test]
    fn round_trip() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            let text = cfg.to_toml_string().unwrap();
            assert_eq!(
                ExperimentConfig::from_toml_str(&text).unwrap(),
                cfg,
                "{text}"
            );
        }
        let sweep = sweep_preset("lambda_scaling_sweep").unwrap();
        let text = sweep.to_toml_string().unwrap();
        assert_eq!(SweepConfig::from_toml_str(&text).unwrap(), sweep);
    }

    #[test]
    fn complex_and_shaped_drives_round_trip() {
        let mut cfg = preset("fourlevel_3photon").unwrap();
        cfg.system.drives[0] = DriveEnvelope::Gaussian {
            amplitude: C64::new(0.5, -0.25),
            center: 10.0,
            width: 2.0,
        };
        cfg.system.drives[1] = DriveEnvelope::PiecewiseLinear {
            amplitude: C64::new(1.0, 0.0),
            breakpoints: vec![[0.0, 0.0], [5.0, 1.0]],
        };
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn field_precise_errors() {
        let mut cfg = preset("fourlevel_3photon").unwrap();
        cfg.system.detunings[1] = 0.0;
        cfg.methods.push(Method::Amplitude);
        let sim = cfg.simulate.as_mut().unwrap();
        sim.dt = Some(-1.0);
        sim.rabi_periods = Some(2.0);
        let v = cfg.validate();
        assert!(
            v.iter().any(|s| s.starts_with("system.detunings[2]")),
            "{v:?}"
        );
        assert!(v.iter().any(|s| s.starts_with("methods[")), "{v:?}");
        assert!(v.iter().any(|s| s.starts_with("simulate.dt")), "{v:?}");
        assert!(v.iter().any(|s| s.contains("not both")), "{v:?}");

        let err = ExperimentConfig::from_toml_str("methods = [\"bogus\"]\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn any_config_dispatch() {
        let sweep = sweep_preset("lambda_scaling_sweep").unwrap();
        let text = sweep.to_toml_string().unwrap();
        assert_eq!(
            AnyConfig::from_toml_str(&text).unwrap(),
            AnyConfig::Sweep(sweep)
        );
        let exp = preset("lambda_2photon").unwrap();
        let text = exp.to_toml_string().unwrap();
        assert_eq!(
            AnyConfig::from_toml_str(&text).unwrap(),
            AnyConfig::Experiment(exp)
        );
        assert!(matches!(
            AnyConfig::preset("lambda_scaling_sweep").unwrap(),
            AnyConfig::Sweep(_)
        ));
        assert!(AnyConfig::from_toml_str("= broken").is_err());
    }

    #[test]
    fn sweep_axes() {
        let base = preset("fourlevel_3photon").unwrap().system;
        assert_eq!("drive.2".parse::<SweepAxis>().unwrap(), SweepAxis::Drive(2));
        assert!("drive.0".parse::<SweepAxis>().is_err());
        assert!("phase".parse::<SweepAxis>().is_err());
        let s = SweepAxis::DetuningScale.apply(&base, 2.0).unwrap();
        assert_eq!(s.detunings, vec![100.0, 200.0, -300.0]);
        let s = SweepAxis::Detuning(3).apply(&base, -140.0).unwrap();
        assert_eq!(s.detunings[2], -140.0);
        let s = SweepAxis::Drive(1).apply(&base, 0.25).unwrap();
        assert_eq!(s.drive(1).amplitude(), C64::new(0.25, 0.0));
        assert!(SweepAxis::Drive(3).apply(&base, 1.0).is_err());
        assert_eq!(SweepAxis::Eta.apply(&base, 0.0).unwrap().eta, 0.0);
    }

    #[test]
    fn sweep_values_validated() {
        let mut sweep = sweep_preset("lambda_scaling_sweep").unwrap();
        sweep.sweep.values = vec![1.0, 0.0];
        let v = sweep.validate();
        assert!(v.iter().any(|s| s.starts_with("sweep.values[1]")), "{v:?}");
        sweep.sweep.values.clear();
        assert!(!sweep.validate().is_empty());
    }
}
