//! Reproduction runs: configuration, parameter sweeps and plot-ready CSV.
//!
//! All harness times, both grid points and decoherence times, are expressed
//! as `w0 t`, with `w0` the natural frequency of the configured ladder.

mod config;
mod runs;

pub use config::{
    apply_override, BathSection, GridSection, OscillatorKind, OscillatorSection, OutputSection, RunConfig, Spacing,
    StateSection, SweepSection, SweepSpec, SweptParameter, TauSection,
};
pub use runs::{
    compute_measures, default_x_grid, model, run_compare, run_elements, run_kernels, run_measures, run_spectrum,
    run_tau_sweep, run_wavefunction_plot, tau_table, wavefunction_density, CompareReport, ElementSeries, MeasuresRun,
    Model, SpectrumReport, SweepCell, SweepReport, SweepRow, PLOTTED_ELEMENTS,
};
