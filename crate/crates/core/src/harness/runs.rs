use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::config::{OscillatorKind, RunConfig, SweepSpec, SweptParameter};
use crate::bath::{kernel_table, BathParams, KernelSource, KernelTable};
use crate::dynamics::{coherent_amplitudes, coherent_state, evolve_series, DensityMatrix, DephasingMap};
use crate::error::{Error, Result};
use crate::measures::{decoherence_times, MeasureSeries, TauTable};
use crate::spectrum::{
    harmonic_spectrum_with, morse_spectrum_with, morse_wavefunction, EnergySpectrum, OscillatorParams,
};

/// Number of `|rho_{m,1}|` columns written by the element run.
pub const PLOTTED_ELEMENTS: usize = 7;

/// Everything a run needs for one ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kind: OscillatorKind,
    pub params: OscillatorParams,
    pub spectrum: EnergySpectrum,
    pub bath: BathParams,
    pub rho0: DensityMatrix,
}

impl Model {
    pub fn omega0(&self) -> f64 {
        self.spectrum.omega0()
    }
}

/// Builds the ladder, bath and initial state. The harmonic ladder keeps as
/// many levels as the Morse ladder so that both share one index set.
pub fn model(config: &RunConfig, kind: OscillatorKind) -> Result<Model> {
    config.validate()?;
    let params = config.oscillator_params()?;
    let morse = morse_spectrum_with(&params, config.spectrum_options())?;
    let spectrum = match kind {
        OscillatorKind::Morse => morse,
        OscillatorKind::Harmonic => harmonic_spectrum_with(&params, morse.len(), config.oscillator.omega0)?,
    };
    let bath = config.bath_params(spectrum.omega0())?;
    let rho0 = coherent_state(&config.state_spec(), &spectrum, config.state.truncation)?;
    Ok(Model {
        kind,
        params,
        spectrum,
        bath,
        rho0,
    })
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(io(&path))?;
    Ok(path)
}

/// `|rho_{m,1}(t)|` for `m = 1..=7` in one-based labels, i.e. the coherence
/// of level `m - 1` with the ground state.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementSeries {
    pub times: Vec<f64>,
    /// Zero-based row index of each column.
    pub rows: Vec<usize>,
    /// One vector per time, one entry per column.
    pub values: Vec<Vec<f64>>,
}

impl ElementSeries {
    fn from_states(times: &[f64], states: &[DensityMatrix]) -> Self {
        let dim = states.first().map_or(0, DensityMatrix::dim);
        let rows: Vec<usize> = (0..dim.min(PLOTTED_ELEMENTS)).collect();
        let values = states
            .iter()
            .map(|rho| rows.iter().map(|&m| rho.get(m, 0).norm()).collect())
            .collect();
        Self {
            times: times.to_vec(),
            rows,
            values,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for m in &self.rows {
            let _ = write!(out, ",rho_{}_1", m + 1);
        }
        out.push('\n');
        for (t, row) in self.times.iter().zip(&self.values) {
            let _ = write!(out, "{t:.16e}");
            for v in row {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasuresRun {
    pub model: Model,
    /// Grid in units of `1 / w0`; the series are labelled with these.
    pub grid: Vec<f64>,
    pub kernels: KernelTable,
    pub states: Vec<DensityMatrix>,
    pub series: MeasureSeries,
    pub elements: ElementSeries,
}

pub fn compute_measures(config: &RunConfig, kind: OscillatorKind) -> Result<MeasuresRun> {
    let model = model(config, kind)?;
    let grid = config.grid.points();
    let omega0 = model.omega0();
    let times: Vec<f64> = grid.iter().map(|g| g / omega0).collect();
    let kernels = kernel_table(&model.bath, &times)?;
    let map = DephasingMap::new(model.spectrum.clone(), KernelSource::Table(kernels.clone()));
    let states = evolve_series(&model.rho0, &map, &times)?;
    let series = MeasureSeries::from_states(&grid, &model.rho0, &states)?;
    let elements = ElementSeries::from_states(&grid, &states);
    Ok(MeasuresRun {
        model,
        grid,
        kernels,
        states,
        series,
        elements,
    })
}

/// Writes `measures.csv` and `elements.csv` for the configured ladder.
pub fn run_measures(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let run = compute_measures(config, config.oscillator.kind)?;
    let dir = &config.output.dir;
    Ok(vec![
        write_output(dir, "measures.csv", &run.series.to_csv())?,
        write_output(dir, "elements.csv", &run.elements.to_csv())?,
    ])
}

/// Writes `elements.csv` for the configured ladder.
pub fn run_elements(config: &RunConfig) -> Result<PathBuf> {
    let run = compute_measures(config, config.oscillator.kind)?;
    write_output(&config.output.dir, "elements.csv", &run.elements.to_csv())
}

/// Writes `kernels.csv` on the configured grid.
pub fn run_kernels(config: &RunConfig) -> Result<PathBuf> {
    let params = config.oscillator_params()?;
    let omega0 = morse_spectrum_with(&params, config.spectrum_options())?.omega0();
    let bath = config.bath_params(omega0)?;
    let times: Vec<f64> = config.grid.points().iter().map(|g| g / omega0).collect();
    let table = kernel_table(&bath, &times)?;
    write_output(&config.output.dir, "kernels.csv", &table.to_csv(omega0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub morse: EnergySpectrum,
    pub harmonic: EnergySpectrum,
    pub path: PathBuf,
}

impl SpectrumReport {
    pub fn summary(&self) -> String {
        format!(
            "w0 = {:.10}\nlambda = {:.10}\nn_max = {}\nE_0 = {:.10}\nE_n_max = {:.10}\n",
            self.morse.omega0(),
            self.morse.lambda().unwrap_or(f64::NAN),
            self.morse.n_max(),
            self.morse.levels()[0],
            self.morse.levels()[self.morse.n_max()],
        )
    }
}

/// Writes `spectrum.csv` with both ladders over the Morse index set.
pub fn run_spectrum(config: &RunConfig) -> Result<SpectrumReport> {
    let params = config.oscillator_params()?;
    let morse = morse_spectrum_with(&params, config.spectrum_options())?;
    let harmonic = harmonic_spectrum_with(&params, morse.len(), config.oscillator.omega0)?;
    let mut csv = String::from("n,morse,harmonic\n");
    for (n, (e, h)) in morse.levels().iter().zip(harmonic.levels()).enumerate() {
        let _ = writeln!(csv, "{n},{e:.16e},{h:.16e}");
    }
    let path = write_output(&config.output.dir, "spectrum.csv", &csv)?;
    Ok(SpectrumReport { morse, harmonic, path })
}

/// Decoherence times with every time expressed as `w0 t`.
pub fn tau_table(config: &RunConfig, kind: OscillatorKind) -> Result<TauTable> {
    let model = model(config, kind)?;
    let omega0 = model.omega0();
    let map = DephasingMap::new(model.spectrum, KernelSource::OnDemand(model.bath));
    let table = decoherence_times(&map, &model.rho0, &config.tau_options(omega0))?;
    Ok(table.scaled(omega0))
}

/// One `(value, ladder)` cell of a sweep. Failures are kept per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub table: std::result::Result<TauTable, String>,
}

impl SweepCell {
    pub fn tau_element(&self) -> f64 {
        self.table.as_ref().map_or(f64::NAN, |t| t.tau_element)
    }

    fn note(&self, kind: OscillatorKind) -> Option<String> {
        match &self.table {
            Err(e) => Some(format!("{}: {e}", kind.name())),
            Ok(t) if !t.element_converged() => Some(format!("{}: not converged by t_max", kind.name())),
            Ok(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub morse: SweepCell,
    pub harmonic: SweepCell,
}

impl SweepRow {
    pub fn notes(&self) -> String {
        [
            self.morse.note(OscillatorKind::Morse),
            self.harmonic.note(OscillatorKind::Harmonic),
        ]
        .into_iter()
        .flatten()
        .collect::<Vec<_>>()
        .join("; ")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub parameter: SweptParameter,
    pub rows: Vec<SweepRow>,
    pub files: Vec<PathBuf>,
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

impl SweepReport {
    /// Columns `<parameter>,tau_element_morse,tau_element_harmonic,notes`.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "{},tau_element_morse,tau_element_harmonic,notes\n",
            self.parameter.name()
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{}",
                row.value,
                row.morse.tau_element(),
                row.harmonic.tau_element(),
                csv_field(&row.notes())
            );
        }
        out
    }

    /// Aligned text table of the same content.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:>10}  {:>14}  {:>14}  notes\n",
            self.parameter.name(),
            "tau_morse",
            "tau_harmonic"
        );
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:>10}  {:>14.6e}  {:>14.6e}  {}",
                row.value,
                row.morse.tau_element(),
                row.harmonic.tau_element(),
                row.notes()
            );
        }
        out
    }
}

fn run_cells(spec: &SweepSpec) -> Vec<SweepCell> {
    let jobs: Vec<(f64, OscillatorKind)> = spec
        .values
        .iter()
        .flat_map(|&v| [(v, OscillatorKind::Morse), (v, OscillatorKind::Harmonic)])
        .collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).max(1);
    let mut cells = Vec::with_capacity(jobs.len());
    for chunk in jobs.chunks(workers) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&(value, kind)| {
                    let config = spec.cell(value);
                    scope.spawn(move || tau_table(&config, kind).map_err(|e| e.to_string()))
                })
                .collect();
            for handle in handles {
                let table = handle.join().unwrap_or_else(|_| Err("worker panicked".to_string()));
                cells.push(SweepCell { table });
            }
        });
    }
    cells
}

/// Decoherence-time sweep over one bath parameter for both ladders.
///
/// Writes `tau_sweep.csv`, `tau_sweep.txt` and one `tau_<ladder>_<index>.csv`
/// per successful cell. A failing cell is reported in the notes column.
pub fn run_tau_sweep(config: &RunConfig) -> Result<SweepReport> {
    let spec = SweepSpec::from_config(config)?;
    let mut cells = run_cells(&spec).into_iter();
    let mut rows = Vec::with_capacity(spec.values.len());
    for &value in &spec.values {
        let morse = cells.next().expect("one cell per job");
        let harmonic = cells.next().expect("one cell per job");
        rows.push(SweepRow { value, morse, harmonic });
    }
    let dir = &config.output.dir;
    let mut report = SweepReport {
        parameter: spec.parameter,
        rows,
        files: Vec::new(),
    };
    let mut files = vec![
        write_output(dir, "tau_sweep.csv", &report.to_csv())?,
        write_output(dir, "tau_sweep.txt", &report.to_text())?,
    ];
    for (i, row) in report.rows.iter().enumerate() {
        for (kind, cell) in [
            (OscillatorKind::Morse, &row.morse),
            (OscillatorKind::Harmonic, &row.harmonic),
        ] {
            if let Ok(table) = &cell.table {
                files.push(write_output(
                    dir,
                    &format!("tau_{}_{i}.csv", kind.name()),
                    &table.to_csv(),
                )?);
            }
        }
    }
    report.files = files;
    Ok(report)
}

/// `x` from `x_e - 2.5/a` to `x_e + 6/a`, which brackets the low-lying
/// levels of the default well with room to spare.
pub fn default_x_grid(params: &OscillatorParams, count: usize) -> Vec<f64> {
    let lo = params.equilibrium - 2.5 / params.width;
    let hi = params.equilibrium + 6.0 / params.width;
    let last = (count.max(2) - 1) as f64;
    (0..count.max(2)).map(|i| lo + (hi - lo) * i as f64 / last).collect()
}

/// `|sum_n c_n psi_n(x)|^2` of the initial Morse coherent state.
pub fn wavefunction_density(config: &RunConfig, xs: &[f64]) -> Result<Vec<f64>> {
    let params = config.oscillator_params()?;
    let spectrum = morse_spectrum_with(&params, config.spectrum_options())?;
    let amps = coherent_amplitudes(&config.state_spec(), &spectrum, config.state.truncation)?;
    xs.iter()
        .map(|&x| {
            let mut psi = 0.0;
            for (n, c) in amps.iter().enumerate() {
                psi += c * morse_wavefunction(&params, n, x)?;
            }
            Ok(psi * psi)
        })
        .collect()
}

/// Writes `wavefunction.csv` with columns `x,density`.
pub fn run_wavefunction_plot(config: &RunConfig, xs: Option<&[f64]>) -> Result<PathBuf> {
    let default;
    let xs = match xs {
        Some(xs) => xs,
        None => {
            default = default_x_grid(&config.oscillator_params()?, 801);
            &default
        }
    };
    let density = wavefunction_density(config, xs)?;
    let mut csv = String::from("x,density\n");
    for (x, d) in xs.iter().zip(&density) {
        let _ = writeln!(csv, "{x:.16e},{d:.16e}");
    }
    write_output(&config.output.dir, "wavefunction.csv", &csv)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub morse: MeasuresRun,
    pub harmonic: MeasuresRun,
    pub tau_morse: std::result::Result<TauTable, String>,
    pub tau_harmonic: std::result::Result<TauTable, String>,
    pub files: Vec<PathBuf>,
}

/// Morse and harmonic measures on one grid, plus both `tau_element` values.
pub fn run_compare(config: &RunConfig) -> Result<CompareReport> {
    let morse = compute_measures(config, OscillatorKind::Morse)?;
    let harmonic = compute_measures(config, OscillatorKind::Harmonic)?;
    let tau_morse = tau_table(config, OscillatorKind::Morse).map_err(|e| e.to_string());
    let tau_harmonic = tau_table(config, OscillatorKind::Harmonic).map_err(|e| e.to_string());

    let mut csv = String::from(
        "t,P_morse,P_harmonic,D_morse,D_harmonic,S_morse,S_harmonic,Ce_morse,Ce_harmonic,C2_morse,C2_harmonic\n",
    );
    let (a, b) = (&morse.series, &harmonic.series);
    for i in 0..a.len() {
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            a.times[i],
            a.survival[i],
            b.survival[i],
            a.purity[i],
            b.purity[i],
            a.entropy[i],
            b.entropy[i],
            a.relative_entropy[i],
            b.relative_entropy[i],
            a.two_norm[i],
            b.two_norm[i]
        );
    }
    let mut tau_csv = String::from("ladder,tau_element,pair,converged,note\n");
    for (kind, tau) in [
        (OscillatorKind::Morse, &tau_morse),
        (OscillatorKind::Harmonic, &tau_harmonic),
    ] {
        let _ = match tau {
            Ok(t) => writeln!(
                tau_csv,
                "{},{:.16e},{}-{},{},",
                kind.name(),
                t.tau_element,
                t.element_pair.0,
                t.element_pair.1,
                t.element_converged()
            ),
            Err(e) => writeln!(tau_csv, "{},NaN,,false,{}", kind.name(), csv_field(e)),
        };
    }
    let dir = &config.output.dir;
    let files = vec![
        write_output(dir, "compare.csv", &csv)?,
        write_output(dir, "compare_tau.csv", &tau_csv)?,
    ];
    Ok(CompareReport {
        morse,
        harmonic,
        tau_morse,
        tau_harmonic,
        files,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(dir: &Path) -> RunConfig {
        let mut config = RunConfig::default();
        config.grid.count = 12;
        config.output.dir = dir.to_path_buf();
        config
    }

    #[test]
    fn harmonic_model_shares_index_set() {
        let config = RunConfig::default();
        let m = model(&config, OscillatorKind::Morse).unwrap();
        let h = model(&config, OscillatorKind::Harmonic).unwrap();
        assert_eq!(m.spectrum.len(), h.spectrum.len());
        assert_eq!(m.rho0, h.rho0);
        assert_eq!(m.bath, h.bath);
        assert!((m.bath.cutoff - 10.0 * m.omega0()).abs() < 1e-14);
    }

    #[test]
    fn element_columns() {
        let dir = tempfile::tempdir().unwrap();
        let config = small_config(dir.path());
        let run = compute_measures(&config, OscillatorKind::Morse).unwrap();
        let csv = run.elements.to_csv();
        let header = csv.lines().next().unwrap();
        assert_eq!(header, "t,rho_1_1,rho_2_1,rho_3_1,rho_4_1,rho_5_1,rho_6_1,rho_7_1");
        assert_eq!(csv.lines().count(), 13);
        let first = &run.elements.values[0];
        assert!((first[0] - run.model.rho0.get(0, 0).re).abs() < 1e-15);
    }

    #[test]
    fn sweep_reports_failing_cells() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = small_config(dir.path());
        config.sweep.parameter = SweptParameter::Coupling;
        config.sweep.values = vec![0.5];
        config.tau.t_max = 1e-1;
        let report = run_tau_sweep(&config).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.rows[0].notes().contains("not converged"));
        let csv = std::fs::read_to_string(dir.path().join("tau_sweep.csv")).unwrap();
        assert!(csv.starts_with("coupling,tau_element_morse,tau_element_harmonic,notes\n"));
    }
}
