use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use doublon_core::config::{self, ExperimentConfig};
use doublon_core::model::WaveguideParams;
use doublon_core::output::{Metadata, OutputDir};
use doublon_core::perturbation::{self, CalibrationOptions, PerturbationInputs};
use doublon_core::scenario::{self, Delta1Estimator, Scenario, ScenarioOptions};
use doublon_core::{Error, Result};

/// Two-excitation giant-atom / doublon simulator.
#[derive(Parser)]
#[command(name = "doublon", version)]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: `out/<command>`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Full-size chains (199 cavities) instead of the scaled defaults.
    #[arg(long, global = true)]
    full: bool,
    /// Accepted for scripting; every run is deterministic and uses no RNG.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Doublon band, group velocity and localization length.
    Dispersion {
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Eigenvalues, IPRs and a Matrix Market dump of the configured system.
    Spectrum,
    /// Bound state in the continuum of the configured system.
    Bic,
    /// Time evolution of the configured system.
    Evolve,
    /// Second-order couplings and the corrected decoherence-free condition.
    Perturb {
        /// Also run the numerical calibration scan.
        #[arg(long)]
        calibrate: bool,
    },
    /// Regenerate the data behind one figure panel.
    Reproduce {
        /// fig2a, fig2b, fig2cd, fig2ef, fig3a, fig3b, fig3cd, fig3ef or figS1.
        scenario: String,
        /// Chain size override.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        t_max: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Use the analytic second-order Δ₁ instead of the calibration scan.
        #[arg(long)]
        analytic: bool,
    },
}

#[derive(Serialize)]
struct Echo<'a, T: Serialize> {
    full: bool,
    seedless: bool,
    #[serde(flatten)]
    payload: &'a T,
}

fn load(cli: &Cli) -> Result<Option<ExperimentConfig>> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let cfg = config::validate_config(path)?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    Ok(Some(cfg))
}

fn require(cfg: Option<ExperimentConfig>, command: &str) -> Result<ExperimentConfig> {
    cfg.ok_or_else(|| Error::Config(vec![format!("`{command}` needs --config")]))
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>, default: &str) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.map(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out").join(default))
}

fn open<T: Serialize>(cli: &Cli, command: &str, dir: PathBuf, payload: &T) -> Result<OutputDir> {
    let echo = Echo {
        full: cli.full,
        seedless: cli.seedless,
        payload,
    };
    OutputDir::create(dir, Metadata::new(command, &echo)?)
}

fn scenario_options(cli: &Cli, cfg: Option<&ExperimentConfig>) -> ScenarioOptions {
    let mut opts = ScenarioOptions {
        full: cli.full,
        ..ScenarioOptions::default()
    };
    if let Some(c) = cfg {
        opts.thresholds = c.thresholds;
        opts.t_max = c.run.t_max;
        opts.samples = c.run.samples;
    }
    opts
}

fn run(cli: &Cli) -> Result<serde_json::Value> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Dispersion { points } => {
            let params = match &cfg {
                Some(c) => c.system.waveguide.clone(),
                None => WaveguideParams::new(2, scenario::J, scenario::U)?,
            };
            #[derive(Serialize)]
            struct P<'a> {
                waveguide: &'a WaveguideParams,
                points: usize,
            }
            let mut out = open(cli, "dispersion", out_dir(cli, cfg.as_ref(), "dispersion"), &P { waveguide: &params, points: *points })?;
            scenario::run_dispersion(&params, *points, &mut out)
        }
        Command::Spectrum => {
            let cfg = require(cfg, "spectrum")?;
            let mut out = open(cli, "spectrum", out_dir(cli, Some(&cfg), "spectrum"), &cfg)?;
            scenario::run_spectrum(&cfg, &mut out)
        }
        Command::Bic => {
            let cfg = require(cfg, "bic")?;
            let mut out = open(cli, "bic", out_dir(cli, Some(&cfg), "bic"), &cfg)?;
            scenario::run_bic(&cfg, &mut out)
        }
        Command::Evolve => {
            let cfg = require(cfg, "evolve")?;
            let mut out = open(cli, "evolve", out_dir(cli, Some(&cfg), "evolve"), &cfg)?;
            scenario::run_evolve(&cfg, &mut out)
        }
        Command::Perturb { calibrate } => match cfg {
            Some(mut cfg) => {
                cfg.run.calibrate |= *calibrate;
                let mut out = open(cli, "perturb", out_dir(cli, Some(&cfg), "perturb"), &cfg)?;
                scenario::run_perturbation(&cfg, &mut out)
            }
            None => {
                // figure parameters on the full-size momentum grid
                let inputs = PerturbationInputs::new(
                    199,
                    scenario::J,
                    scenario::U,
                    scenario::G_SINGLE_PHOTON,
                    scenario::DELTA2,
                    99,
                    101,
                )?;
                let calibration = calibrate.then(CalibrationOptions::default);
                #[derive(Serialize)]
                struct P<'a> {
                    inputs: &'a PerturbationInputs,
                    calibration: &'a Option<CalibrationOptions>,
                }
                let payload = P {
                    inputs: &inputs,
                    calibration: &calibration,
                };
                let mut out = open(cli, "perturb", out_dir(cli, None, "perturb"), &payload)?;
                let report = perturbation::report(&inputs, calibration.as_ref())?;
                out.json("perturbation.json", &report)?;
                Ok(serde_json::to_value(report)?)
            }
        },
        Command::Reproduce {
            scenario: name,
            n,
            t_max,
            samples,
            analytic,
        } => {
            let which = Scenario::from_name(name)?;
            let mut opts = scenario_options(cli, cfg.as_ref());
            opts.n = *n;
            if let Some(t) = t_max {
                opts.t_max = *t;
            }
            if let Some(s) = samples {
                opts.samples = *s;
            }
            if *analytic {
                opts.estimator = Delta1Estimator::Analytic;
            }
            #[derive(Serialize)]
            struct P<'a> {
                scenario: &'a str,
                options: &'a ScenarioOptions,
            }
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out").join(which.name()));
            let mut out = open(cli, "reproduce", dir, &P { scenario: which.name(), options: &opts })?;
            scenario::run_scenario(which, &opts, &mut out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            // a closed pipe (e.g. `| head`) is not an error worth reporting
            let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
