//! Initial Gaussian coherent state and the exact dephasing map.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bath::KernelSource;
use crate::error::{Error, Result};
use crate::spectrum::EnergySpectrum;

/// Density matrix in the energy eigenbasis; row and column `n` is level `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<Complex64>);

impl DensityMatrix {
    /// Wraps `matrix` after checking it is square, Hermitian and of unit trace.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let rho = Self(matrix);
        let herm = rho.hermiticity_residual();
        if herm > 1e-12 {
            return Err(Error::invalid(
                "density matrix",
                format!("not Hermitian (residual {herm:e})"),
            ));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > 1e-10 || trace.im.abs() > 1e-12 {
            return Err(Error::invalid("density matrix", format!("trace is {trace}, not 1")));
        }
        Ok(rho)
    }

    /// Pure state `|c><c|` from real amplitudes.
    pub fn pure(amplitudes: &[f64]) -> Result<Self> {
        let n = amplitudes.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            Complex64::new(amplitudes[i] * amplitudes[j], 0.0)
        }))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let p = 1.0 / dim as f64;
        Self(DMatrix::from_diagonal_element(dim, dim, Complex64::new(p, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.0[(n, m)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.0[(n, n)].re).collect()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// The state with every coherence removed.
    pub fn dephased(&self) -> Self {
        let n = self.dim();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.0[(i, i)]
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// Plain-text snapshot: a `dim N` line, then one row per line with
    /// whitespace-separated `re,im` pairs at 17 significant digits.
    pub fn to_text(&self) -> String {
        let n = self.dim();
        let mut out = format!("dim {n}\n");
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let z = self.0[(i, j)];
                    format!("{:.16e},{:.16e}", z.re, z.im)
                })
                .collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let parse_err = |line: usize, reason: &str| Error::Parse {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
        let dim: usize = header
            .trim()
            .strip_prefix("dim")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err(1, "expected `dim N` header"))?;
        let mut data = Vec::with_capacity(dim * dim);
        let mut rows = 0;
        for (idx, line) in lines {
            let before = data.len();
            for entry in line.split_whitespace() {
                let (re, im) = entry
                    .split_once(',')
                    .ok_or_else(|| parse_err(idx + 1, "entry is not `re,im`"))?;
                let re: f64 = re.parse().map_err(|_| parse_err(idx + 1, "bad real part"))?;
                let im: f64 = im.parse().map_err(|_| parse_err(idx + 1, "bad imaginary part"))?;
                data.push(Complex64::new(re, im));
            }
            if data.len() - before != dim {
                return Err(parse_err(idx + 1, "wrong number of entries in row"));
            }
            rows += 1;
        }
        if rows != dim {
            return Err(parse_err(rows + 1, "wrong number of rows"));
        }
        Ok(Self(DMatrix::from_row_slice(dim, dim, &data)))
    }
}

/// Gaussian weights `exp(-(n - mu)^2 / (4 sigma^2))` over levels `0..=max_level`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentStateSpec {
    pub mean: f64,
    pub spread: f64,
    /// Highest level of the index set; `None` takes every level of the spectrum.
    pub max_level: Option<usize>,
}

impl CoherentStateSpec {
    pub fn new(mean: f64, spread: f64) -> Self {
        Self {
            mean,
            spread,
            max_level: None,
        }
    }
}

impl Default for CoherentStateSpec {
    fn default() -> Self {
        Self::new(2.4, 0.5)
    }
}

/// Normalised populations `p_n` of the coherent state over its full index set.
pub fn coherent_populations(spec: &CoherentStateSpec, spectrum: &EnergySpectrum) -> Result<Vec<f64>> {
    if !(spec.spread > 0.0 && spec.spread.is_finite()) {
        return Err(Error::invalid(
            "sigma",
            format!("must be positive, got {}", spec.spread),
        ));
    }
    if !spec.mean.is_finite() {
        return Err(Error::invalid("mu", "must be finite"));
    }
    let top = match spec.max_level {
        Some(n) if n >= spectrum.len() => {
            return Err(Error::LevelOutOfRange {
                n,
                n_max: spectrum.n_max(),
            })
        }
        Some(n) => n,
        None => spectrum.n_max(),
    };
    let exponents: Vec<f64> = (0..=top)
        .map(|n| -(n as f64 - spec.mean).powi(2) / (2.0 * spec.spread * spec.spread))
        .collect();
    let peak = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = exponents.iter().map(|e| (e - peak).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Number of leading levels kept so that the dropped upper tail weighs less than `eps`.
pub fn truncated_dimension(populations: &[f64], eps: f64) -> Result<usize> {
    if !(eps >= 0.0) {
        return Err(Error::invalid("truncation", format!("must be >= 0, got {eps}")));
    }
    let mut tail = 0.0;
    let mut dim = populations.len();
    for (n, p) in populations.iter().enumerate().rev() {
        if tail + p >= eps {
            break;
        }
        tail += p;
        dim = n;
    }
    if dim == 0 {
        return Err(Error::EmptyBasis { eps });
    }
    Ok(dim)
}

/// Amplitudes `c_n = sqrt(p_n)` of the truncated, renormalised coherent state.
pub fn coherent_amplitudes(spec: &CoherentStateSpec, spectrum: &EnergySpectrum, trunc_eps: f64) -> Result<Vec<f64>> {
    let pops = coherent_populations(spec, spectrum)?;
    let dim = truncated_dimension(&pops, trunc_eps)?;
    let kept: f64 = pops[..dim].iter().sum();
    Ok(pops[..dim].iter().map(|p| (p / kept).sqrt()).collect())
}

pub fn coherent_state(spec: &CoherentStateSpec, spectrum: &EnergySpectrum, trunc_eps: f64) -> Result<DensityMatrix> {
    DensityMatrix::pure(&coherent_amplitudes(spec, spectrum, trunc_eps)?)
}

/// Elementwise factor `exp(-i w t) exp(i (E_n^2 - E_m^2) eta) exp(-w^2 gamma)`,
/// `w = E_n - E_m`, applied to a density matrix in the same eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingMap {
    spectrum: EnergySpectrum,
    kernels: KernelSource,
}

impl DephasingMap {
    pub fn new(spectrum: EnergySpectrum, kernels: KernelSource) -> Self {
        Self { spectrum, kernels }
    }

    pub fn spectrum(&self) -> &EnergySpectrum {
        &self.spectrum
    }

    pub fn kernels(&self) -> &KernelSource {
        &self.kernels
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim > self.spectrum.len() {
            return Err(Error::DimensionMismatch {
                expected: self.spectrum.len(),
                found: dim,
            });
        }
        Ok(())
    }

    /// Applies the map with explicit kernel values.
    pub fn apply(&self, rho0: &DensityMatrix, t: f64, eta: f64, gamma: f64) -> Result<DensityMatrix> {
        let dim = rho0.dim();
        self.check_dim(dim)?;
        let e = self.spectrum.levels();
        let mut out = rho0.0.clone();
        for n in 0..dim {
            for m in (n + 1)..dim {
                let gap = e[n] - e[m];
                let phase = -gap * t + (e[n] * e[n] - e[m] * e[m]) * eta;
                let factor = Complex64::from_polar((-gap * gap * gamma).exp(), phase);
                let z = factor * rho0.0[(n, m)];
                out[(n, m)] = z;
                out[(m, n)] = z.conj();
            }
        }
        Ok(DensityMatrix(out))
    }
}

pub fn evolve(rho0: &DensityMatrix, map: &DephasingMap, t: f64) -> Result<DensityMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("must be finite and >= 0, got {t}")));
    }
    map.check_dim(rho0.dim())?;
    let k = map.kernels.at(t)?;
    map.apply(rho0, t, k.eta, k.gamma)
}

pub fn evolve_series(rho0: &DensityMatrix, map: &DephasingMap, times: &[f64]) -> Result<Vec<DensityMatrix>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("times", "must be ordered"));
    }
    times.iter().map(|&t| evolve(rho0, map, t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathParams;
    use crate::spectrum::{morse_spectrum, OscillatorParams};

    fn default_spectrum() -> EnergySpectrum {
        morse_spectrum(&OscillatorParams::default()).unwrap()
    }

    #[test]
    fn coherent_state_is_pure() {
        let rho = coherent_state(&CoherentStateSpec::default(), &default_spectrum(), 1e-12).unwrap();
        let purity: f64 = rho.matrix().iter().map(|z| z.norm_sqr()).sum();
        assert!((purity - 1.0).abs() < 1e-12);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dominant_population_nearest_mean() {
        let rho = coherent_state(&CoherentStateSpec::default(), &default_spectrum(), 1e-12).unwrap();
        let pops = rho.populations();
        let argmax = (0..pops.len()).max_by(|&a, &b| pops[a].total_cmp(&pops[b])).unwrap();
        assert_eq!(argmax, 2);
    }

    #[test]
    fn truncation_drops_negligible_tail() {
        let spectrum = default_spectrum();
        let pops = coherent_populations(&CoherentStateSpec::default(), &spectrum).unwrap();
        assert_eq!(pops.len(), 81);
        let dim = truncated_dimension(&pops, 1e-12).unwrap();
        assert_eq!(dim, 7);
        let dropped: f64 = pops[dim..].iter().sum();
        assert!(dropped < 1e-12);
        assert!(dropped + pops[dim - 1] >= 1e-12);
        assert_eq!(truncated_dimension(&pops, 0.0).unwrap(), 81);
        assert!(matches!(truncated_dimension(&pops, 1.5), Err(Error::EmptyBasis { .. })));
    }

    #[test]
    fn narrow_spread_collapses_to_single_level() {
        let spec = CoherentStateSpec::new(3.0, 1e-3);
        let rho = coherent_state(&spec, &default_spectrum(), 1e-12).unwrap();
        assert_eq!(rho.dim(), 4);
        for n in 0..4 {
            for m in 0..4 {
                let want = if n == 3 && m == 3 { 1.0 } else { 0.0 };
                assert_eq!(rho.get(n, m), Complex64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn bad_state_specs() {
        let spectrum = default_spectrum();
        assert!(coherent_state(&CoherentStateSpec::new(2.4, 0.0), &spectrum, 1e-12).is_err());
        let spec = CoherentStateSpec {
            max_level: Some(200),
            ..CoherentStateSpec::default()
        };
        assert!(matches!(
            coherent_state(&spec, &spectrum, 1e-12),
            Err(Error::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn two_level_damping_halves_coherence() {
        let spectrum = EnergySpectrum::from_levels(vec![0.0, 1.0], 1.0).unwrap();
        let bath = BathParams::new(0.01, 10.0, 1.0).unwrap();
        let map = DephasingMap::new(spectrum, KernelSource::OnDemand(bath));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho0 = DensityMatrix::pure(&[s, s]).unwrap();
        let rho = map.apply(&rho0, 0.7, -0.01, 2f64.ln()).unwrap();
        assert!((rho.get(0, 1).norm() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn populations_untouched_bitwise() {
        let spectrum = default_spectrum();
        let rho0 = coherent_state(&CoherentStateSpec::default(), &spectrum, 1e-12).unwrap();
        let bath = BathParams::new(1.0, 10.0, 10.0).unwrap();
        let map = DephasingMap::new(spectrum, KernelSource::OnDemand(bath));
        for &t in &[0.0, 0.3, 5.0, 1e3] {
            let rho = evolve(&rho0, &map, t).unwrap();
            for n in 0..rho.dim() {
                assert_eq!(rho.get(n, n), rho0.get(n, n));
            }
            assert_eq!(rho.hermiticity_residual(), 0.0);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let spectrum = EnergySpectrum::from_levels(vec![0.0, 1.0], 1.0).unwrap();
        let bath = BathParams::new(0.01, 10.0, 1.0).unwrap();
        let map = DephasingMap::new(spectrum, KernelSource::OnDemand(bath));
        let rho0 = DensityMatrix::maximally_mixed(3);
        assert!(matches!(
            evolve(&rho0, &map, 1.0),
            Err(Error::DimensionMismatch { expected: 2, found: 3 })
        ));
    }

    #[test]
    fn zero_time_series_returns_initial_state() {
        let spectrum = default_spectrum();
        let rho0 = coherent_state(&CoherentStateSpec::default(), &spectrum, 1e-12).unwrap();
        let bath = BathParams::new(0.1, 10.0, 1.0).unwrap();
        let map = DephasingMap::new(spectrum, KernelSource::OnDemand(bath));
        let series = evolve_series(&rho0, &map, &[0.0]).unwrap();
        let diff = (series[0].matrix() - rho0.matrix())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(diff <= 1e-15);
        assert!(evolve_series(&rho0, &map, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn text_round_trip_and_errors() {
        let rho = coherent_state(&CoherentStateSpec::default(), &default_spectrum(), 1e-12).unwrap();
        let text = rho.to_text();
        assert!(text.starts_with("dim 7\n"));
        assert_eq!(DensityMatrix::from_text(&text).unwrap(), rho);
        assert!(DensityMatrix::from_text("dim 2\n1,0 0,0\n").is_err());
        assert!(DensityMatrix::from_text("dim 1\n1;0\n").is_err());
        assert!(DensityMatrix::from_text("").is_err());
    }

    #[test]
    fn constructor_validates() {
        let bad = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5, 0.0),
                Complex64::new(0.1, 0.2),
                Complex64::new(0.1, 0.2),
                Complex64::new(0.5, 0.0),
            ],
        );
        assert!(DensityMatrix::new(bad).is_err());
        let trace_two = DMatrix::from_diagonal_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(DensityMatrix::new(trace_two).is_err());
    }
}
