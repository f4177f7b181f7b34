//! Exact pure-dephasing dynamics of a Morse oscillator coupled to an Ohmic
//! boson bath.
//!
//! The system-bath coupling commutes with the oscillator Hamiltonian, so level
//! populations never change and each coherence `rho_nm` is multiplied by a
//! closed-form factor built from two bath kernels, `eta(t)` and `gamma(t)`.
//! The crate computes those kernels by quadrature, applies the map to a
//! Gaussian coherent state, and evaluates the usual coherence measures and
//! per-element decoherence times for the Morse ladder and its harmonic limit.

// Negated float comparisons below are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod measures;
pub mod quadrature;
pub mod special;
pub mod spectrum;

pub use bath::{eta, gamma, kernel_table, spectral_density, BathParams, KernelSource, KernelTable, Temperature};
pub use dynamics::{coherent_state, evolve, evolve_series, CoherentStateSpec, DensityMatrix, DephasingMap};
pub use error::{Error, Result};
pub use measures::{
    coherence_measures, decoherence_times, purity, survival, vn_entropy, MeasureSeries, TauOptions, TauTable,
};
pub use spectrum::{
    harmonic_spectrum, morse_potential, morse_spectrum, morse_wavefunction, EnergySpectrum, Omega0Convention,
    OscillatorParams, SpectrumKind,
};
