//! Ohmic boson bath and the two dephasing kernels.
//!
//! With `J(w) = G w exp(-w / wc)` the kernels are
//!
//! ```text
//! eta(t)   = -int_0^inf J(w) sin(w t) / w^2 dw
//! gamma(t) =  int_0^inf J(w) sin^2(w t / 2) coth(beta w / 2) / w^2 dw
//! ```
//!
//! Both are evaluated for unit coupling and scaled by `G` afterwards, so they
//! are exactly linear in the coupling.
//!
//! Quadrature layout for a given `t`: the band `[0, W]` with `W = 2 pi K / t`
//! (K whole periods of `sin(w t)`) is integrated directly with a breakpoint at
//! every half period. Above `W` the oscillating factor is written as
//! `exp(i w t)` and the contour is turned onto the vertical line `W + i y`,
//! where it decays like `exp(-y t)`. The amplitudes are analytic for
//! `Re w > 0` (the `coth` poles sit on the imaginary axis), so the rotation
//! is exact. The non-oscillating half of `sin^2 = (1 - cos) / 2` is a smooth
//! integral on `[W, 40 wc]`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_vec, integrate_with_breaks, QuadError, Tolerance};

/// Whole periods of `sin(w t)` integrated on the real axis before the contour turn.
const DIRECT_PERIODS: f64 = 16.0;
/// Upper frequency limit in units of the cutoff; `exp(-40)` is below 1e-17.
const CUTOFF_MULTIPLE: f64 = 40.0;
/// Below this fraction of the cutoff the integrands take their analytic limits.
const ZERO_FREQUENCY: f64 = 1e-12;
/// `beta w` below which `coth(beta w / 2)` uses its Laurent series.
const COTH_SERIES: f64 = 1e-4;

const ETA_TOL: Tolerance = Tolerance::new(1e-13, 1e-12);
const GAMMA_TOL: Tolerance = Tolerance::new(1e-300, 1e-11);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Temperature {
    /// `coth == 1` exactly.
    Zero,
    Thermal {
        kt: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathParams {
    pub coupling: f64,
    pub cutoff: f64,
    pub temperature: Temperature,
}

impl BathParams {
    pub fn new(coupling: f64, cutoff: f64, kt: f64) -> Result<Self> {
        let bath = Self {
            coupling,
            cutoff,
            temperature: Temperature::Thermal { kt },
        };
        bath.validate()?;
        Ok(bath)
    }

    pub fn zero_temperature(coupling: f64, cutoff: f64) -> Result<Self> {
        let bath = Self {
            coupling,
            cutoff,
            temperature: Temperature::Zero,
        };
        bath.validate()?;
        Ok(bath)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(Error::invalid(
                "coupling",
                format!("must be >= 0, got {}", self.coupling),
            ));
        }
        if !(self.cutoff > 0.0 && self.cutoff.is_finite()) {
            return Err(Error::invalid("cutoff", format!("must be > 0, got {}", self.cutoff)));
        }
        if let Temperature::Thermal { kt } = self.temperature {
            if !(kt > 0.0 && kt.is_finite()) {
                return Err(Error::invalid(
                    "kT",
                    format!("must be > 0 (use the zero-temperature flag instead), got {kt}"),
                ));
            }
        }
        Ok(())
    }

    pub fn beta(&self) -> Option<f64> {
        match self.temperature {
            Temperature::Zero => None,
            Temperature::Thermal { kt } => Some(1.0 / kt),
        }
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_temperature(mut self, temperature: Temperature) -> Self {
        self.temperature = temperature;
        self
    }
}

/// Ohmic spectral density `G w exp(-w / wc)`.
pub fn spectral_density(bath: &BathParams, omega: f64) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(Error::invalid("omega", format!("must be >= 0, got {omega}")));
    }
    Ok(bath.coupling * omega * (-omega / bath.cutoff).exp())
}

fn coth(x: f64) -> f64 {
    if x < 0.5 * COTH_SERIES {
        1.0 / x + x / 3.0 - x * x * x / 45.0
    } else if x > 20.0 {
        1.0
    } else {
        1.0 / x.tanh()
    }
}

fn coth_complex(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 * COTH_SERIES {
        z.inv() + z / 3.0 - z * z * z / 45.0
    } else if z.re > 20.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z.tanh().inv()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValues {
    pub eta: f64,
    pub gamma: f64,
}

#[derive(Clone, Copy)]
enum Kernel {
    Eta,
    Gamma,
}

struct Layout {
    t: f64,
    omega_max: f64,
    /// `Some(W)` when the contour turn is used above `W`.
    turn: Option<f64>,
    breaks: Vec<f64>,
}

fn layout(cutoff: f64, t: f64) -> Layout {
    let omega_max = CUTOFF_MULTIPLE * cutoff;
    let half_period = PI / t;
    let turn_at = 2.0 * DIRECT_PERIODS * half_period;
    let (upper, turn) = if turn_at < omega_max {
        (turn_at, Some(turn_at))
    } else {
        (omega_max, None)
    };
    let step = half_period.min(cutoff);
    let panels = (upper / step).ceil().max(1.0) as usize;
    let mut breaks: Vec<f64> = (0..panels).map(|k| k as f64 * step).collect();
    breaks.push(upper);
    Layout {
        t,
        omega_max,
        turn,
        breaks,
    }
}

/// Unit-coupling kernel by quadrature.
fn unit_kernel(kind: Kernel, cutoff: f64, beta: Option<f64>, t: f64) -> std::result::Result<f64, QuadError> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let lay = layout(cutoff, t);
    let tiny = ZERO_FREQUENCY * cutoff;

    let direct = match kind {
        Kernel::Eta => integrate_with_breaks(
            |w| {
                if w < tiny {
                    -t
                } else {
                    -(-w / cutoff).exp() * (w * t).sin() / w
                }
            },
            &lay.breaks,
            ETA_TOL,
        )?,
        Kernel::Gamma => integrate_with_breaks(
            |w| {
                if w < tiny {
                    return beta.map_or(0.0, |b| t * t / (2.0 * b));
                }
                let s = (0.5 * w * t).sin();
                let thermal = beta.map_or(1.0, |b| coth(0.5 * b * w));
                (-w / cutoff).exp() * thermal * s * s / w
            },
            &lay.breaks,
            GAMMA_TOL,
        )?,
    };

    let Some(turn) = lay.turn else {
        return Ok(direct.value);
    };

    // int_W^inf a(w) e^{iwt} dw = i e^{iWt} / t * int_0^inf a(W + iu/t) e^{-u} du
    let amplitude = |z: Complex64| -> Complex64 {
        let base = (-z / cutoff).exp() / z;
        match (kind, beta) {
            (Kernel::Gamma, Some(b)) => base * coth_complex(0.5 * b * z),
            _ => base,
        }
    };
    let along = integrate_vec(
        |u, out: &mut [f64]| {
            let v = amplitude(Complex64::new(turn, u / lay.t)) * (-u).exp();
            out[0] = v.re;
            out[1] = v.im;
        },
        2,
        &[0.0, 1.0, 4.0, 12.0, 40.0],
        Tolerance::new(1e-16, 1e-12),
    )?;
    let contour = Complex64::new(0.0, 1.0)
        * Complex64::from_polar(1.0, turn * lay.t)
        * Complex64::new(along.values[0], along.values[1])
        / lay.t;

    match kind {
        Kernel::Eta => Ok(direct.value - contour.im),
        Kernel::Gamma => {
            let smooth = if turn < lay.omega_max {
                let mut breaks = vec![turn];
                let mut w = turn;
                while 2.0 * w < cutoff {
                    w *= 2.0;
                    breaks.push(w);
                }
                let mut w = cutoff.max(turn);
                while w + cutoff < lay.omega_max {
                    w += cutoff;
                    breaks.push(w);
                }
                breaks.push(lay.omega_max);
                breaks.dedup();
                integrate_with_breaks(
                    |w| (-w / cutoff).exp() * beta.map_or(1.0, |b| coth(0.5 * b * w)) / w,
                    &breaks,
                    GAMMA_TOL,
                )?
                .value
            } else {
                0.0
            };
            Ok(direct.value + 0.5 * smooth - 0.5 * contour.re)
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Phase kernel `eta(t)`; accurate to about 1e-12 absolute per unit coupling.
pub fn eta(bath: &BathParams, t: f64) -> Result<f64> {
    check_time(t)?;
    if bath.coupling == 0.0 {
        return Ok(0.0);
    }
    let unit = unit_kernel(Kernel::Eta, bath.cutoff, bath.beta(), t).map_err(|source| Error::Kernel { t, source })?;
    Ok(bath.coupling * unit)
}

/// Damping kernel `gamma(t)`; accurate to about 1e-10 relative.
pub fn gamma(bath: &BathParams, t: f64) -> Result<f64> {
    check_time(t)?;
    if bath.coupling == 0.0 {
        return Ok(0.0);
    }
    let unit = unit_kernel(Kernel::Gamma, bath.cutoff, bath.beta(), t).map_err(|source| Error::Kernel { t, source })?;
    Ok(bath.coupling * unit)
}

pub fn kernels(bath: &BathParams, t: f64) -> Result<KernelValues> {
    Ok(KernelValues {
        eta: eta(bath, t)?,
        gamma: gamma(bath, t)?,
    })
}

/// `eta` and `gamma` tabulated on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    times: Vec<f64>,
    eta: Vec<f64>,
    gamma: Vec<f64>,
    bath: BathParams,
}

pub fn kernel_table(bath: &BathParams, times: &[f64]) -> Result<KernelTable> {
    bath.validate()?;
    if let Some(&t) = times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::invalid("times", format!("must be finite and >= 0, got {t}")));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("times", "must be ordered"));
    }
    let mut eta_values = Vec::with_capacity(times.len());
    let mut gamma_values = Vec::with_capacity(times.len());
    for &t in times {
        eta_values.push(eta(bath, t)?);
        gamma_values.push(gamma(bath, t)?);
    }
    Ok(KernelTable {
        times: times.to_vec(),
        eta: eta_values,
        gamma: gamma_values,
        bath: *bath,
    })
}

impl KernelTable {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn bath(&self) -> &BathParams {
        &self.bath
    }

    /// Tabulated values when `t` is exactly a grid point.
    pub fn lookup(&self, t: f64) -> Option<KernelValues> {
        let idx = self.times.partition_point(|&s| s < t);
        (self.times.get(idx) == Some(&t)).then(|| KernelValues {
            eta: self.eta[idx],
            gamma: self.gamma[idx],
        })
    }

    /// CSV with columns `t,eta,gamma`; times are multiplied by `time_scale`.
    pub fn to_csv(&self, time_scale: f64) -> String {
        let mut out = String::from("t,eta,gamma\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e}",
                self.times[i] * time_scale,
                self.eta[i],
                self.gamma[i]
            );
        }
        out
    }
}

/// Where a dephasing map gets its kernel values from.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSource {
    /// Grid hits come from the table; anything else is integrated afresh.
    Table(KernelTable),
    OnDemand(BathParams),
}

impl KernelSource {
    pub fn bath(&self) -> &BathParams {
        match self {
            KernelSource::Table(table) => table.bath(),
            KernelSource::OnDemand(bath) => bath,
        }
    }

    pub fn at(&self, t: f64) -> Result<KernelValues> {
        if let KernelSource::Table(table) = self {
            if let Some(v) = table.lookup(t) {
                return Ok(v);
            }
        }
        kernels(self.bath(), t)
    }

    pub fn gamma_at(&self, t: f64) -> Result<f64> {
        if let KernelSource::Table(table) = self {
            if let Some(v) = table.lookup(t) {
                return Ok(v.gamma);
            }
        }
        gamma(self.bath(), t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectral_density_values() {
        let bath = BathParams::new(0.01, 10.0, 1.0).unwrap();
        assert_eq!(spectral_density(&bath, 0.0).unwrap(), 0.0);
        let peak = spectral_density(&bath, 10.0).unwrap();
        assert!((peak - 0.1 / std::f64::consts::E).abs() < 1e-15);
        assert!((peak - 0.03679).abs() < 1e-5);
        assert!(spectral_density(&bath, -1.0).is_err());
    }

    #[test]
    fn spectral_density_peaks_at_cutoff() {
        let bath = BathParams::new(1.0, 10.0, 1.0).unwrap();
        let peak = spectral_density(&bath, 10.0).unwrap();
        for i in 0..2000 {
            let w = i as f64 * 0.05;
            assert!(spectral_density(&bath, w).unwrap() <= peak);
        }
    }

    #[test]
    fn kernels_vanish_at_origin() {
        let bath = BathParams::new(0.3, 10.0, 2.0).unwrap();
        assert_eq!(eta(&bath, 0.0).unwrap(), 0.0);
        assert_eq!(gamma(&bath, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn eta_closed_form_at_unit_time() {
        let bath = BathParams::new(0.01, 10.0, 0.5).unwrap();
        let got = eta(&bath, 1.0).unwrap();
        assert!((got + 0.01 * 10f64.atan()).abs() < 1e-12);
        assert!((got + 0.014711).abs() < 1e-6);
    }

    #[test]
    fn eta_long_time_limit() {
        let bath = BathParams::new(0.01, 10.0, 0.5).unwrap();
        let got = eta(&bath, 1e5).unwrap();
        assert!((got + 0.01 * PI / 2.0).abs() < 1e-7);
    }

    #[test]
    fn gamma_zero_temperature_closed_form() {
        let bath = BathParams::zero_temperature(0.01, 10.0).unwrap();
        let got = gamma(&bath, 1.0).unwrap();
        let want = 0.01 / 4.0 * 101f64.ln();
        assert!((got - want).abs() < 1e-8 * want);
        assert!((got - 0.011543).abs() < 1e-5);
    }

    #[test]
    fn zero_coupling_gives_zero_kernels() {
        let bath = BathParams::new(0.0, 10.0, 1.0).unwrap();
        assert_eq!(kernels(&bath, 3.0).unwrap(), KernelValues { eta: 0.0, gamma: 0.0 });
    }

    #[test]
    fn invalid_inputs() {
        assert!(BathParams::new(-0.1, 10.0, 1.0).is_err());
        assert!(BathParams::new(0.1, 0.0, 1.0).is_err());
        assert!(BathParams::new(0.1, 10.0, 0.0).is_err());
        let bath = BathParams::new(0.1, 10.0, 1.0).unwrap();
        assert!(eta(&bath, -1.0).is_err());
        assert!(gamma(&bath, f64::NAN).is_err());
    }

    #[test]
    fn table_edge_cases() {
        let bath = BathParams::new(0.01, 10.0, 0.1).unwrap();
        assert!(kernel_table(&bath, &[]).unwrap().is_empty());
        let single = kernel_table(&bath, &[0.0]).unwrap();
        assert_eq!(single.lookup(0.0), Some(KernelValues { eta: 0.0, gamma: 0.0 }));
        assert!(kernel_table(&bath, &[1.0, 0.5]).is_err());
        assert!(kernel_table(&bath, &[-1.0]).is_err());
    }

    #[test]
    fn table_lookup_only_on_grid() {
        let bath = BathParams::new(0.01, 10.0, 0.1).unwrap();
        let table = kernel_table(&bath, &[0.5, 1.0, 2.0]).unwrap();
        assert!(table.lookup(1.0).is_some());
        assert!(table.lookup(1.5).is_none());
        let source = KernelSource::Table(table.clone());
        let off_grid = source.at(1.5).unwrap();
        assert_eq!(off_grid, kernels(&bath, 1.5).unwrap());
        assert_eq!(source.at(2.0).unwrap().gamma, table.gamma()[2]);
    }

    #[test]
    fn csv_layout() {
        let bath = BathParams::new(0.01, 10.0, 0.1).unwrap();
        let table = kernel_table(&bath, &[0.0, 1.0]).unwrap();
        let csv = table.to_csv(1.0);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,eta,gamma");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 3);
        let eta: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(eta, table.eta()[1]);
    }
}
