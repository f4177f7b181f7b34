use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use morse_dephasing::harness::{self, RunConfig};

/// Pure-dephasing dynamics of a Morse oscillator coupled to an Ohmic bath.
///
/// Every run reads an optional TOML configuration, applies `--set`
/// overrides in order and writes CSV files into the output directory.
#[derive(Parser, Debug)]
#[command(name = "morse-dephasing", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set bath.kT=1.0`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; takes precedence over `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Morse and harmonic level ladders.
    Spectrum,
    /// Bath kernels eta(t) and gamma(t) on the time grid.
    Kernels,
    /// Survival, purity, entropy and coherence measures on the time grid.
    Measures,
    /// Coherences |rho_{m,1}(t)| of the first levels with the ground state.
    Elements,
    /// Decoherence-time sweep over `sweep.parameter` for both ladders.
    Tau,
    /// Position density of the initial coherent state.
    Wavefunction {
        /// Number of x points.
        #[arg(long, default_value_t = 801)]
        points: usize,
        #[arg(long, allow_hyphen_values = true)]
        x_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        x_max: Option<f64>,
    },
    /// Morse against harmonic measures and decoherence times.
    Compare,
    /// Print the resolved configuration as TOML.
    Config,
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut overrides = common.overrides.clone();
    if let Some(dir) = &common.out {
        let dir = dir.to_str().context("output directory is not valid UTF-8")?;
        overrides.push(format!("output.dir={}", toml_string(dir)));
    }
    Ok(RunConfig::load(common.config.as_deref(), &overrides)?)
}

fn toml_string(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn x_grid(config: &RunConfig, points: usize, x_min: Option<f64>, x_max: Option<f64>) -> Result<Vec<f64>> {
    if points < 2 {
        bail!("--points must be at least 2");
    }
    let default = harness::default_x_grid(&config.oscillator_params()?, 2);
    let lo = x_min.unwrap_or(default[0]);
    let hi = x_max.unwrap_or(default[1]);
    if lo.is_nan() || hi.is_nan() || hi <= lo {
        bail!("x range is empty: [{lo}, {hi}]");
    }
    let last = (points - 1) as f64;
    Ok((0..points).map(|i| lo + (hi - lo) * i as f64 / last).collect())
}

fn run(cli: Cli) -> Result<()> {
    let config = load(&cli.common)?;
    match cli.command {
        Command::Spectrum => {
            let report = harness::run_spectrum(&config)?;
            print!("{}", report.summary());
            print_paths(&[report.path]);
        }
        Command::Kernels => print_paths(&[harness::run_kernels(&config)?]),
        Command::Measures => print_paths(&harness::run_measures(&config)?),
        Command::Elements => print_paths(&[harness::run_elements(&config)?]),
        Command::Tau => {
            let report = harness::run_tau_sweep(&config)?;
            print!("{}", report.to_text());
            print_paths(&report.files);
        }
        Command::Wavefunction { points, x_min, x_max } => {
            let xs = x_grid(&config, points, x_min, x_max)?;
            print_paths(&[harness::run_wavefunction_plot(&config, Some(&xs))?]);
        }
        Command::Compare => {
            let report = harness::run_compare(&config)?;
            for (name, tau) in [("morse", &report.tau_morse), ("harmonic", &report.tau_harmonic)] {
                match tau {
                    Ok(t) => println!(
                        "{name:<9} tau_element = {:.6e} (pair {}-{})",
                        t.tau_element, t.element_pair.0, t.element_pair.1
                    ),
                    Err(e) => println!("{name:<9} tau_element unavailable: {e}"),
                }
            }
            print_paths(&report.files);
        }
        Command::Config => print!("{}", config.to_toml_string()?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
