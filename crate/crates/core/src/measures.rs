//! Coherence diagnostics and decoherence times.

use std::fmt::Write as _;

use crate::bath::Temperature;
use crate::dynamics::{DensityMatrix, DephasingMap};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_vec, Tolerance};

/// Largest imaginary residue tolerated on a trace before it is discarded.
pub const IMAGINARY_RESIDUE: f64 = 1e-12;
/// Eigenvalues below this are treated as a positivity violation.
pub const NEGATIVE_EIGENVALUE: f64 = -1e-10;

fn same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// Survival probability `Tr[rho0 rho_t]`.
pub fn survival(rho0: &DensityMatrix, rho_t: &DensityMatrix) -> Result<f64> {
    same_dim(rho0, rho_t)?;
    let a = rho0.matrix();
    let b = rho_t.matrix();
    let n = rho0.dim();
    let mut tr = num_complex::Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            tr += a[(i, j)] * b[(j, i)];
        }
    }
    if tr.im.abs() > IMAGINARY_RESIDUE {
        return Err(Error::ImaginaryResidue { residue: tr.im });
    }
    Ok(tr.re)
}

/// Purity `Tr rho^2 = sum |rho_nm|^2`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.matrix().iter().map(|z| z.norm_sqr()).sum()
}

/// Eigenvalues of the Hermitian density matrix, ascending.
pub fn eigenvalues(rho: &DensityMatrix) -> Vec<f64> {
    let mut values: Vec<f64> = rho.matrix().clone().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Von Neumann entropy `-Tr rho ln rho` (natural log, `0 ln 0 = 0`).
pub fn vn_entropy(rho: &DensityMatrix) -> Result<f64> {
    let mut s = 0.0;
    for lambda in eigenvalues(rho) {
        if lambda < NEGATIVE_EIGENVALUE {
            return Err(Error::NotPositive { eigenvalue: lambda });
        }
        let p = lambda.clamp(0.0, 1.0);
        if p > 0.0 {
            s -= p * p.ln();
        }
    }
    Ok(s.max(0.0))
}

/// Relative entropy of coherence `S(rho_t) - S(rho0)` and 2-norm of coherence
/// `D(rho0) - D(rho_t)`.
pub fn coherence_measures(rho0: &DensityMatrix, rho_t: &DensityMatrix) -> Result<(f64, f64)> {
    same_dim(rho0, rho_t)?;
    let ce = vn_entropy(rho_t)? - vn_entropy(rho0)?;
    let c2 = purity(rho0) - purity(rho_t);
    Ok((ce, c2))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeasureSeries {
    pub times: Vec<f64>,
    pub survival: Vec<f64>,
    pub purity: Vec<f64>,
    pub entropy: Vec<f64>,
    pub relative_entropy: Vec<f64>,
    pub two_norm: Vec<f64>,
}

impl MeasureSeries {
    /// Measures for each evolved state; `times` are the labels written out.
    pub fn from_states(times: &[f64], rho0: &DensityMatrix, states: &[DensityMatrix]) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: states.len(),
            });
        }
        let s0 = vn_entropy(rho0)?;
        let d0 = purity(rho0);
        let mut series = MeasureSeries {
            times: times.to_vec(),
            ..Default::default()
        };
        for rho in states {
            let p = survival(rho0, rho)?;
            let d = purity(rho);
            let s = vn_entropy(rho)?;
            series.survival.push(p);
            series.purity.push(d);
            series.entropy.push(s);
            series.relative_entropy.push(s - s0);
            series.two_norm.push(d0 - d);
        }
        Ok(series)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// CSV with columns `t,P,D,S,Ce,C2`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,P,D,S,Ce,C2\n");
        for i in 0..self.len() {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i],
                self.survival[i],
                self.purity[i],
                self.entropy[i],
                self.relative_entropy[i],
                self.two_norm[i]
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauOptions {
    /// Off-diagonal elements with `|rho_mn(0)|` at or below this are skipped.
    pub magnitude_threshold: f64,
    /// A pair is converged once its integrand drops below this.
    pub tail_tol: f64,
    pub t_max: f64,
    /// Width of the first integration panel; later panels double.
    pub first_panel: f64,
    pub rel_tol: f64,
}

impl Default for TauOptions {
    fn default() -> Self {
        Self {
            magnitude_threshold: 1e-10,
            tail_tol: 1e-8,
            t_max: 1e6,
            first_panel: 1e-2,
            rel_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauEntry {
    pub m: usize,
    pub n: usize,
    pub tau: f64,
    pub converged: bool,
}

/// Per-element decoherence times `int_0^inf |rho_mn(t)| / |rho_mn(0)| dt`
/// and their minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct TauTable {
    /// One entry per included pair, `m < n`, in row-major order.
    pub entries: Vec<TauEntry>,
    pub tau_element: f64,
    pub element_pair: (usize, usize),
    pub t_max: f64,
}

impl TauTable {
    /// `tau_mn`, symmetric in its arguments.
    pub fn tau(&self, m: usize, n: usize) -> Option<f64> {
        let (m, n) = if m <= n { (m, n) } else { (n, m) };
        self.entries.iter().find(|e| e.m == m && e.n == n).map(|e| e.tau)
    }

    pub fn included_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.entries.iter().map(|e| (e.m, e.n))
    }

    pub fn element_converged(&self) -> bool {
        let (m, n) = self.element_pair;
        self.entries.iter().any(|e| e.m == m && e.n == n && e.converged)
    }

    pub fn all_converged(&self) -> bool {
        self.entries.iter().all(|e| e.converged)
    }

    /// Same table with every time multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|e| TauEntry {
                    tau: e.tau * scale,
                    ..*e
                })
                .collect(),
            tau_element: self.tau_element * scale,
            element_pair: self.element_pair,
            t_max: self.t_max * scale,
        }
    }

    /// CSV with columns `m,n,tau,converged` and a closing `tau_element` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,n,tau,converged\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{},{:.16e},{}", e.m, e.n, e.tau, e.converged);
        }
        let (m, n) = self.element_pair;
        let _ = writeln!(
            out,
            "tau_element,{m}-{n},{:.16e},{}",
            self.tau_element,
            self.element_converged()
        );
        out
    }
}

/// Decoherence time of every significant coherence of `rho0` under `map`.
///
/// Only the damping factor survives the modulus, so each integrand is
/// `exp(-(E_m - E_n)^2 gamma(t))`. All pairs share the `gamma` evaluations.
/// Integration runs over doubling panels until every integrand is below
/// `tail_tol` or `t_max` is reached; pairs stopped by the horizon are
/// flagged as unconverged.
pub fn decoherence_times(map: &DephasingMap, rho0: &DensityMatrix, opts: &TauOptions) -> Result<TauTable> {
    let bath = map.kernels().bath();
    if bath.coupling <= 0.0 {
        return Err(Error::invalid("coupling", "decoherence times diverge without coupling"));
    }
    if bath.temperature == Temperature::Zero {
        return Err(Error::invalid("kT", "decoherence times need a finite temperature"));
    }
    if !(opts.t_max > 0.0 && opts.first_panel > 0.0 && opts.tail_tol > 0.0) {
        return Err(Error::invalid(
            "tau options",
            "t_max, first_panel and tail_tol must be positive",
        ));
    }
    let dim = rho0.dim();
    if dim > map.spectrum().len() {
        return Err(Error::DimensionMismatch {
            expected: map.spectrum().len(),
            found: dim,
        });
    }
    let energies = map.spectrum().levels();

    let mut pairs = Vec::new();
    for m in 0..dim {
        for n in (m + 1)..dim {
            if rho0.get(m, n).norm() > opts.magnitude_threshold {
                pairs.push((m, n));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::NoCoherences {
            threshold: opts.magnitude_threshold,
        });
    }
    let rates: Vec<f64> = pairs
        .iter()
        .map(|&(m, n)| (energies[m] - energies[n]).powi(2))
        .collect();

    let mut totals = vec![0.0; pairs.len()];
    let mut converged = vec![false; pairs.len()];
    let mut active: Vec<usize> = (0..pairs.len()).collect();
    let tol = Tolerance::new(1e-14, opts.rel_tol);
    let mut failure = None;

    let mut a = 0.0;
    let mut width = opts.first_panel;
    while !active.is_empty() && a < opts.t_max {
        let b = (a + width).min(opts.t_max);
        let est = integrate_vec(
            |t, out: &mut [f64]| match map.kernels().gamma_at(t) {
                Ok(g) => {
                    for (slot, &p) in out.iter_mut().zip(&active) {
                        *slot = (-rates[p] * g).exp();
                    }
                }
                Err(e) => {
                    failure.get_or_insert(e);
                    out.fill(f64::NAN);
                }
            },
            active.len(),
            &[a, b],
            tol,
        );
        if let Some(e) = failure.take() {
            return Err(e);
        }
        let est = est?;
        for (k, &p) in active.iter().enumerate() {
            totals[p] += est.values[k];
        }
        let g_end = map.kernels().gamma_at(b)?;
        active.retain(|&p| {
            let done = (-rates[p] * g_end).exp() < opts.tail_tol;
            if done {
                converged[p] = true;
            }
            !done
        });
        a = b;
        if a >= 2.0 * opts.first_panel {
            width *= 2.0;
        }
    }

    let entries: Vec<TauEntry> = pairs
        .iter()
        .enumerate()
        .map(|(k, &(m, n))| TauEntry {
            m,
            n,
            tau: totals[k],
            converged: converged[k],
        })
        .collect();
    let best = entries
        .iter()
        .min_by(|x, y| x.tau.total_cmp(&y.tau))
        .copied()
        .expect("at least one pair");
    Ok(TauTable {
        tau_element: best.tau,
        element_pair: (best.m, best.n),
        t_max: opts.t_max,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{BathParams, KernelSource};
    use crate::dynamics::{coherent_state, CoherentStateSpec};
    use crate::spectrum::{morse_spectrum, EnergySpectrum, OscillatorParams};

    fn default_rho() -> DensityMatrix {
        let spectrum = morse_spectrum(&OscillatorParams::default()).unwrap();
        coherent_state(&CoherentStateSpec::default(), &spectrum, 1e-12).unwrap()
    }

    #[test]
    fn pure_state_values() {
        let rho = default_rho();
        assert!((survival(&rho, &rho).unwrap() - 1.0).abs() < 1e-12);
        assert!((purity(&rho) - 1.0).abs() < 1e-12);
        assert!(vn_entropy(&rho).unwrap().abs() < 1e-10);
        let (ce, c2) = coherence_measures(&rho, &rho).unwrap();
        assert_eq!((ce, c2), (0.0, 0.0));
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn maximally_mixed_values() {
        assert!((purity(&DensityMatrix::maximally_mixed(4)) - 0.25).abs() < 1e-15);
        let s = vn_entropy(&DensityMatrix::maximally_mixed(2)).unwrap();
        assert!((s - 2f64.ln()).abs() < 1e-14);
        assert!((s - 0.6931).abs() < 1e-4);
    }

    #[test]
    fn dephased_limits() {
        let rho = default_rho();
        let diag = rho.dephased();
        let p = rho.populations();
        let sum_sq: f64 = p.iter().map(|x| x * x).sum();
        let shannon: f64 = -p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()).sum::<f64>();
        assert!((survival(&rho, &diag).unwrap() - sum_sq).abs() < 1e-14);
        assert!((purity(&diag) - sum_sq).abs() < 1e-14);
        assert!((vn_entropy(&diag).unwrap() - shannon).abs() < 1e-12);
        let (ce, c2) = coherence_measures(&rho, &diag).unwrap();
        assert!((ce - shannon).abs() < 1e-10);
        assert!((c2 - (1.0 - sum_sq)).abs() < 1e-14);
    }

    #[test]
    fn mismatched_dimensions() {
        let a = DensityMatrix::maximally_mixed(2);
        let b = DensityMatrix::maximally_mixed(3);
        assert!(survival(&a, &b).is_err());
        assert!(coherence_measures(&a, &b).is_err());
    }

    #[test]
    fn negative_eigenvalue_rejected() {
        use nalgebra::DMatrix;
        use num_complex::Complex64;
        // Hermitian, unit trace, eigenvalues 0.5 +- 0.6
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5, 0.0),
                Complex64::new(0.6, 0.0),
                Complex64::new(0.6, 0.0),
                Complex64::new(0.5, 0.0),
            ],
        );
        let rho = DensityMatrix::new(m).unwrap();
        assert!(matches!(vn_entropy(&rho), Err(Error::NotPositive { .. })));
    }

    fn two_level_map(coupling: f64, kt: f64) -> DephasingMap {
        let spectrum = EnergySpectrum::from_levels(vec![0.0, 1.0], 1.0).unwrap();
        DephasingMap::new(
            spectrum,
            KernelSource::OnDemand(BathParams::new(coupling, 10.0, kt).unwrap()),
        )
    }

    #[test]
    fn tau_requires_coupling_and_temperature() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::pure(&[s, s]).unwrap();
        let opts = TauOptions::default();
        assert!(decoherence_times(&two_level_map(0.0, 1.0), &rho, &opts).is_err());
        let spectrum = EnergySpectrum::from_levels(vec![0.0, 1.0], 1.0).unwrap();
        let cold = DephasingMap::new(
            spectrum,
            KernelSource::OnDemand(BathParams::zero_temperature(0.1, 10.0).unwrap()),
        );
        assert!(decoherence_times(&cold, &rho, &opts).is_err());
    }

    #[test]
    fn tau_needs_coherences() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            decoherence_times(&two_level_map(0.1, 1.0), &rho, &TauOptions::default()),
            Err(Error::NoCoherences { .. })
        ));
    }

    #[test]
    fn diagonal_pairs_excluded_and_table_symmetric() {
        let rho = default_rho();
        let spectrum = morse_spectrum(&OscillatorParams::default()).unwrap();
        let map = DephasingMap::new(
            spectrum,
            KernelSource::OnDemand(BathParams::new(1.0, 10.0, 0.1).unwrap()),
        );
        let table = decoherence_times(&map, &rho, &TauOptions::default()).unwrap();
        assert!(table.included_pairs().all(|(m, n)| m < n));
        assert_eq!(table.entries.len(), 21);
        assert_eq!(table.tau(0, 3), table.tau(3, 0));
        assert!(table.entries.iter().all(|e| e.tau > 0.0));
        let min = table.entries.iter().map(|e| e.tau).fold(f64::INFINITY, f64::min);
        assert_eq!(table.tau_element, min);
        assert_eq!(table.element_pair, (0, 6));
        assert!(table.all_converged());
    }

    #[test]
    fn horizon_truncation_is_flagged() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::pure(&[s, s]).unwrap();
        let opts = TauOptions {
            t_max: 5.0,
            ..TauOptions::default()
        };
        let table = decoherence_times(&two_level_map(0.01, 0.01), &rho, &opts).unwrap();
        assert!(!table.entries[0].converged);
        assert!(table.tau_element <= 5.0);
        assert!(table.to_csv().lines().last().unwrap().ends_with("false"));
    }

    #[test]
    fn tau_csv_layout() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let rho = DensityMatrix::pure(&[s, s]).unwrap();
        let table = decoherence_times(&two_level_map(0.1, 1.0), &rho, &TauOptions::default()).unwrap();
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "m,n,tau,converged");
        assert!(lines[1].starts_with("0,1,"));
        assert!(lines[2].starts_with("tau_element,0-1,"));
    }
}
