//! Run configuration: a TOML file whose every key is optional, plus
//! `section.key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bath::{BathParams, Temperature};
use crate::dynamics::CoherentStateSpec;
use crate::error::{Error, Result};
use crate::measures::TauOptions;
use crate::spectrum::{Omega0Convention, OscillatorParams, SpectrumOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OscillatorKind {
    #[default]
    Morse,
    Harmonic,
}

impl OscillatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OscillatorKind::Morse => "morse",
            OscillatorKind::Harmonic => "harmonic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OscillatorSection {
    pub well_depth: f64,
    pub width: f64,
    pub equilibrium: f64,
    pub mass: f64,
    pub hbar: f64,
    pub kind: OscillatorKind,
    pub omega0: Omega0Convention,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

impl Default for OscillatorSection {
    fn default() -> Self {
        let p = OscillatorParams::default();
        Self {
            well_depth: p.well_depth,
            width: p.width,
            equilibrium: p.equilibrium,
            mass: p.mass,
            hbar: p.hbar,
            kind: OscillatorKind::Morse,
            omega0: Omega0Convention::Exact,
            n_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    pub coupling: f64,
    /// Cutoff frequency in units of the oscillator frequency.
    pub cutoff_ratio: f64,
    #[serde(rename = "kT")]
    pub kt: f64,
    pub zero_temperature: bool,
}

impl Default for BathSection {
    fn default() -> Self {
        Self {
            coupling: 0.01,
            cutoff_ratio: 10.0,
            kt: 0.1,
            zero_temperature: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StateSection {
    pub mu: f64,
    pub sigma: f64,
    /// Upper-tail weight below which levels are dropped from the basis.
    pub truncation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_level: Option<usize>,
}

impl Default for StateSection {
    fn default() -> Self {
        Self {
            mu: 2.4,
            sigma: 0.5,
            truncation: 1e-12,
            max_level: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// Time grid in units of `1 / w0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub spacing: Spacing,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            spacing: Spacing::Log,
            start: 1e-2,
            stop: 1e4,
            count: 400,
        }
    }
}

impl GridSection {
    pub fn points(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        let mut points: Vec<f64> = (0..self.count)
            .map(|i| {
                let f = i as f64 / last;
                match self.spacing {
                    Spacing::Log => self.start * (self.stop / self.start).powf(f),
                    Spacing::Linear => self.start + (self.stop - self.start) * f,
                }
            })
            .collect();
        points[0] = self.start;
        points[self.count - 1] = self.stop;
        points
    }
}

/// Decoherence-time integration settings; times in units of `1 / w0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TauSection {
    pub magnitude_threshold: f64,
    pub tail_tol: f64,
    pub t_max: f64,
    pub first_panel: f64,
    pub rel_tol: f64,
}

impl Default for TauSection {
    fn default() -> Self {
        let o = TauOptions::default();
        Self {
            magnitude_threshold: o.magnitude_threshold,
            tail_tol: o.tail_tol,
            t_max: o.t_max,
            first_panel: o.first_panel,
            rel_tol: o.rel_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SweptParameter {
    #[default]
    #[serde(rename = "kT")]
    Temperature,
    #[serde(rename = "coupling", alias = "Gamma")]
    Coupling,
}

impl SweptParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweptParameter::Temperature => "kT",
            SweptParameter::Coupling => "coupling",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub parameter: SweptParameter,
    pub values: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            parameter: SweptParameter::Temperature,
            values: vec![0.01, 0.1, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub oscillator: OscillatorSection,
    pub bath: BathSection,
    pub state: StateSection,
    pub grid: GridSection,
    pub tau: TauSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

/// A sweep over one bath parameter with the rest of the run fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweptParameter,
    pub values: Vec<f64>,
    pub base: RunConfig,
}

impl SweepSpec {
    pub fn from_config(config: &RunConfig) -> Result<Self> {
        let spec = Self {
            parameter: config.sweep.parameter,
            values: config.sweep.values.clone(),
            base: config.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep.values must not be empty".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("sweep.values must be positive, got {v}")));
        }
        self.base.validate()
    }

    /// The base configuration with the swept parameter set to `value`.
    pub fn cell(&self, value: f64) -> RunConfig {
        let mut config = self.base.clone();
        match self.parameter {
            SweptParameter::Temperature => {
                config.bath.kt = value;
                config.bath.zero_temperature = false;
            }
            SweptParameter::Coupling => config.bath.coupling = value,
        }
        config
    }
}

fn parse_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut table) => table
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets `section.key = value` in a raw TOML table.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("override `{assignment}` has an empty key")));
    }
    let (last, parents) = keys.split_last().expect("split yields at least one key");
    let mut node = table;
    for key in parents {
        let entry = node
            .entry(key.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{assignment}`: `{key}` is not a section")))?;
    }
    node.insert(last.to_string(), parse_value(raw));
    Ok(())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = serde_path_to_error::deserialize(toml::Deserializer::new(text)).map_err(|e| {
            let path = e.path().to_string();
            let message = e.into_inner().message().to_string();
            if path == "." {
                Error::Config(message)
            } else {
                Error::Config(format!("{path}: {message}"))
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` (if any), applies the overrides in order and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                    path: p.to_path_buf(),
                    source,
                })?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| Error::Config(format!("{}: {}", p.display(), e.message())))?
            }
            None => toml::Table::new(),
        };
        for assignment in overrides {
            apply_override(&mut table, assignment)?;
        }
        let text = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.oscillator_params()?;
        let bad = |key: &str, why: &str| Err(Error::Config(format!("{key}: {why}")));
        let b = &self.bath;
        if !(b.coupling >= 0.0 && b.coupling.is_finite()) {
            return bad("bath.coupling", "must be >= 0");
        }
        if !(b.cutoff_ratio > 0.0 && b.cutoff_ratio.is_finite()) {
            return bad("bath.cutoff_ratio", "must be > 0");
        }
        if !b.zero_temperature && !(b.kt > 0.0 && b.kt.is_finite()) {
            return bad("bath.kT", "must be > 0 unless bath.zero_temperature is set");
        }
        let s = &self.state;
        if !(s.sigma > 0.0 && s.sigma.is_finite()) {
            return bad("state.sigma", "must be > 0");
        }
        if !s.mu.is_finite() {
            return bad("state.mu", "must be finite");
        }
        if !(s.truncation >= 0.0) {
            return bad("state.truncation", "must be >= 0");
        }
        let g = &self.grid;
        if g.count < 2 {
            return bad("grid.count", "must be at least 2");
        }
        if !(g.start > 0.0 && g.stop > g.start && g.stop.is_finite()) {
            return bad("grid", "bounds must be positive and ordered");
        }
        let t = &self.tau;
        if !(t.t_max > 0.0 && t.first_panel > 0.0 && t.tail_tol > 0.0 && t.rel_tol > 0.0) {
            return bad("tau", "t_max, first_panel, tail_tol and rel_tol must be positive");
        }
        if !(t.magnitude_threshold >= 0.0) {
            return bad("tau.magnitude_threshold", "must be >= 0");
        }
        Ok(())
    }

    pub fn oscillator_params(&self) -> Result<OscillatorParams> {
        let o = &self.oscillator;
        OscillatorParams::new(o.well_depth, o.width, o.equilibrium, o.mass, o.hbar)
    }

    pub fn spectrum_options(&self) -> SpectrumOptions {
        SpectrumOptions {
            omega0: self.oscillator.omega0,
            n_max_override: self.oscillator.n_max,
        }
    }

    /// Bath with the cutoff resolved against the oscillator frequency `omega0`.
    pub fn bath_params(&self, omega0: f64) -> Result<BathParams> {
        let b = &self.bath;
        let bath = BathParams {
            coupling: b.coupling,
            cutoff: b.cutoff_ratio * omega0,
            temperature: if b.zero_temperature {
                Temperature::Zero
            } else {
                Temperature::Thermal { kt: b.kt }
            },
        };
        bath.validate()?;
        Ok(bath)
    }

    pub fn state_spec(&self) -> CoherentStateSpec {
        CoherentStateSpec {
            mean: self.state.mu,
            spread: self.state.sigma,
            max_level: self.state.max_level,
        }
    }

    /// Options in physical time for a ladder with natural frequency `omega0`.
    pub fn tau_options(&self, omega0: f64) -> TauOptions {
        let t = &self.tau;
        TauOptions {
            magnitude_threshold: t.magnitude_threshold,
            tail_tol: t.tail_tol,
            t_max: t.t_max / omega0,
            first_panel: t.first_panel / omega0,
            rel_tol: t.rel_tol,
        }
    }
}
