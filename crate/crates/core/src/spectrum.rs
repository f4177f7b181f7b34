//! Morse well, its bound-state ladder and the harmonic limit.
//!
//! Units follow the usual molecular-model convention: energies, lengths and
//! masses are plain numbers with `hbar` carried explicitly (default 1).

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::special::laguerre_log;

/// Physical constants of the Morse well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub well_depth: f64,
    pub width: f64,
    pub equilibrium: f64,
    pub mass: f64,
    pub hbar: f64,
}

impl OscillatorParams {
    pub fn new(well_depth: f64, width: f64, equilibrium: f64, mass: f64, hbar: f64) -> Result<Self> {
        let params = Self {
            well_depth,
            width,
            equilibrium,
            mass,
            hbar,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("well_depth", self.well_depth),
            ("width", self.width),
            ("mass", self.mass),
            ("hbar", self.hbar),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {value}")));
            }
        }
        if !self.equilibrium.is_finite() {
            return Err(Error::invalid("equilibrium", "must be finite"));
        }
        Ok(())
    }

    /// Dimensionless well depth `sqrt(2 m D_e) / (a hbar)`.
    pub fn lambda(&self) -> f64 {
        (2.0 * self.mass * self.well_depth).sqrt() / (self.width * self.hbar)
    }

    /// Curvature frequency at the well minimum, `a sqrt(2 D_e / m)`.
    pub fn omega0(&self) -> f64 {
        self.width * (2.0 * self.well_depth / self.mass).sqrt()
    }
}

impl Default for OscillatorParams {
    fn default() -> Self {
        Self {
            well_depth: 40.0,
            width: 0.11,
            equilibrium: 1.0,
            mass: 1.0,
            hbar: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Morse,
    Harmonic,
    Custom,
}

/// How the natural frequency entering the level formulas is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Omega0Convention {
    /// `a sqrt(2 D_e / m)` from the well parameters.
    #[default]
    Exact,
    /// Round the natural frequency to exactly one.
    Unity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SpectrumOptions {
    pub omega0: Omega0Convention,
    /// Force the highest retained level index instead of `floor(lambda - 1/2)`.
    pub n_max_override: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergySpectrum {
    kind: SpectrumKind,
    levels: Vec<f64>,
    omega0: f64,
    lambda: Option<f64>,
}

impl EnergySpectrum {
    /// Arbitrary level ladder; used for few-level test systems.
    pub fn from_levels(levels: Vec<f64>, omega0: f64) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("levels", "at least one level required"));
        }
        if levels.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("levels", "must be strictly increasing"));
        }
        Ok(Self {
            kind: SpectrumKind::Custom,
            levels,
            omega0,
            lambda: None,
        })
    }

    pub fn kind(&self) -> SpectrumKind {
        self.kind
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn energy(&self, n: usize) -> Option<f64> {
        self.levels.get(n).copied()
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn n_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.levels.windows(2).map(|w| w[1] - w[0])
    }
}

/// `D_e (1 - exp(-a (x - x_e)))^2`.
pub fn morse_potential(params: &OscillatorParams, x: f64) -> f64 {
    let s = -(-params.width * (x - params.equilibrium)).exp_m1();
    params.well_depth * s * s
}

fn natural_frequency(params: &OscillatorParams, convention: Omega0Convention) -> f64 {
    match convention {
        Omega0Convention::Exact => params.omega0(),
        Omega0Convention::Unity => 1.0,
    }
}

pub fn morse_spectrum(params: &OscillatorParams) -> Result<EnergySpectrum> {
    morse_spectrum_with(params, SpectrumOptions::default())
}

/// Bound levels `E_n = hbar w0 (n + 1/2) - [hbar w0 (n + 1/2)]^2 / (4 D_e)`.
///
/// The depth parameter is `lambda = 2 D_e / (hbar w0)`, which reduces to
/// `sqrt(2 m D_e) / (a hbar)` for the exact frequency and keeps the ladder
/// monotone when the frequency is rounded.
pub fn morse_spectrum_with(params: &OscillatorParams, opts: SpectrumOptions) -> Result<EnergySpectrum> {
    params.validate()?;
    let omega0 = natural_frequency(params, opts.omega0);
    let quantum = params.hbar * omega0;
    let lambda = 2.0 * params.well_depth / quantum;
    if !(lambda > 0.5) {
        return Err(Error::NoBoundStates { lambda });
    }
    let formula_n_max = (lambda - 0.5).floor() as usize;
    let n_max = match opts.n_max_override {
        Some(n) if n > formula_n_max => {
            return Err(Error::LevelOutOfRange {
                n,
                n_max: formula_n_max,
            })
        }
        Some(n) => n,
        None => formula_n_max,
    };
    let levels = (0..=n_max)
        .map(|n| {
            let e = quantum * (n as f64 + 0.5);
            e - e * e / (4.0 * params.well_depth)
        })
        .collect();
    Ok(EnergySpectrum {
        kind: SpectrumKind::Morse,
        levels,
        omega0,
        lambda: Some(lambda),
    })
}

pub fn harmonic_spectrum(params: &OscillatorParams, n_levels: usize) -> Result<EnergySpectrum> {
    harmonic_spectrum_with(params, n_levels, Omega0Convention::Exact)
}

/// Equally spaced ladder `hbar w0 (n + 1/2)` sharing the Morse curvature.
pub fn harmonic_spectrum_with(
    params: &OscillatorParams,
    n_levels: usize,
    convention: Omega0Convention,
) -> Result<EnergySpectrum> {
    params.validate()?;
    if n_levels == 0 {
        return Err(Error::invalid("n_levels", "at least one level required"));
    }
    let omega0 = natural_frequency(params, convention);
    let quantum = params.hbar * omega0;
    Ok(EnergySpectrum {
        kind: SpectrumKind::Harmonic,
        levels: (0..n_levels).map(|n| quantum * (n as f64 + 0.5)).collect(),
        omega0,
        lambda: None,
    })
}

/// Normalised bound eigenfunction of the Morse well.
///
/// `psi_n(x) = N_n z^(lambda - n - 1/2) exp(-z/2) L_n^(2 lambda - 2n - 1)(z)`
/// with `z = 2 lambda exp(-a (x - x_e))`. The prefactor and the Laguerre
/// value are combined in the log domain.
pub fn morse_wavefunction(params: &OscillatorParams, n: usize, x: f64) -> Result<f64> {
    params.validate()?;
    let lambda = params.lambda();
    if !(lambda > 0.5) {
        return Err(Error::NoBoundStates { lambda });
    }
    let n_max = (lambda - 0.5).floor() as usize;
    if n > n_max {
        return Err(Error::LevelOutOfRange { n, n_max });
    }
    let nf = n as f64;
    let s = lambda - nf - 0.5;
    let alpha = 2.0 * s;
    let log_norm = 0.5 * (params.width.ln() + alpha.ln() + ln_gamma(nf + 1.0) - ln_gamma(2.0 * lambda - nf));
    let log_z = (2.0 * lambda).ln() - params.width * (x - params.equilibrium);
    let z = log_z.exp();
    if z == 0.0 {
        return Ok(0.0);
    }
    let (sign, log_lag) = laguerre_log(n, alpha, z);
    if sign == 0.0 {
        return Ok(0.0);
    }
    let value = sign * (log_norm + s * log_z - 0.5 * z + log_lag).exp();
    if !value.is_finite() {
        return Err(Error::Unstable { n, x });
    }
    Ok(value)
}
