//! Named figure scenarios and the config-driven runs behind each CLI
//! subcommand.
//!
//! Figure parameters are fixed (`U = 10J`, `Δx = 2`, `g = 0.04J` for the
//! two-photon coupling, `g = 0.25J`, `Δ₂ = 5J` for the single-photon
//! coupling). Chain sizes default to 99 cavities for dynamics and 59 for
//! full spectra; `full` restores 199. Atoms sit at the chain centre `c`:
//! a single atom at `(c−1, c+1)`, braided atoms at `(c−1, c+1)` and
//! `(c, c+2)`.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::Serialize;
use serde_json::json;

use crate::basis::BasisIndex;
use crate::config::{ExperimentConfig, RunKind, SpectrumMode, Thresholds};
use crate::dynamics::{self, InitialPreset, Observables, PropagationMethod, PropagationOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::build_hamiltonian;
use crate::model::{self, AtomSpec, CouplingVariant, SystemConfig, WaveguideParams};
use crate::output::OutputDir;
use crate::perturbation::{self, Calibration, CalibrationOptions, PerturbationInputs};
use crate::spectral::{self, BoundStateProfile, EigenMode, SolverOptions};

pub const U: f64 = 10.0;
pub const J: f64 = 1.0;
pub const DELTA_X: usize = 2;
pub const G_TWO_PHOTON: f64 = 0.04;
pub const G_SINGLE_PHOTON: f64 = 0.25;
pub const DELTA2: f64 = 5.0;
/// Offset of the in-band detuned runs from the decoherence-free point.
pub const IN_BAND_SHIFT: f64 = 0.3;
/// Distance of the out-of-band runs above the doublon band.
pub const OUT_OF_BAND_MARGIN: f64 = 1.0;
/// Half-width added around the coupling points for the profile check.
pub const PROFILE_MARGIN: usize = 5;
/// Half-width added around the coupling points for the leakage check.
pub const LEAKAGE_MARGIN: usize = 10;
/// Eigenpairs requested around the target when the spectrum is too large
/// for dense diagonalization.
pub const WINDOW_COUNT: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Fig2a,
    Fig2b,
    Fig2cd,
    Fig2ef,
    Fig3a,
    Fig3b,
    Fig3cd,
    Fig3ef,
    FigS1,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::Fig2a,
        Scenario::Fig2b,
        Scenario::Fig2cd,
        Scenario::Fig2ef,
        Scenario::Fig3a,
        Scenario::Fig3b,
        Scenario::Fig3cd,
        Scenario::Fig3ef,
        Scenario::FigS1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Fig2a => "fig2a",
            Scenario::Fig2b => "fig2b",
            Scenario::Fig2cd => "fig2cd",
            Scenario::Fig2ef => "fig2ef",
            Scenario::Fig3a => "fig3a",
            Scenario::Fig3b => "fig3b",
            Scenario::Fig3cd => "fig3cd",
            Scenario::Fig3ef => "fig3ef",
            Scenario::FigS1 => "figS1",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Scenario::ALL
            .iter()
            .copied()
            .find(|s| s.name().eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::UnknownScenario(name.to_string()))
    }

    pub fn description(&self) -> &'static str {
        match self {
            Scenario::Fig2a => "bound-state profile, single atom, two-photon coupling",
            Scenario::Fig2b => "level-1 population of a single atom at, inside and above the doublon band",
            Scenario::Fig2cd => "braided atoms at the decoherence-free point: traces and doublon heatmap",
            Scenario::Fig2ef => "braided atoms detuned inside the doublon band",
            Scenario::Fig3a => "bound-state profile, single atom, single-photon coupling, corrected condition",
            Scenario::Fig3b => "level-2 population of a single atom for three values of delta2",
            Scenario::Fig3cd => "braided three-level atoms at the corrected condition",
            Scenario::Fig3ef => "braided three-level atoms detuned inside the doublon band",
            Scenario::FigS1 => "uncorrected condition: degraded bound state and decaying exchange",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::from_name(s)
    }
}

/// How `Δ₁` of the single-photon scenarios is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Delta1Estimator {
    /// Scan for the best long-time atomic population.
    Calibrated,
    /// Second-order shifts from the momentum sums.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOptions {
    pub full: bool,
    /// Overrides both chain sizes.
    pub n: Option<usize>,
    pub t_max: f64,
    pub samples: usize,
    pub estimator: Delta1Estimator,
    pub calibration: CalibrationOptions,
    pub thresholds: Thresholds,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            full: false,
            n: None,
            t_max: 400.0,
            samples: 401,
            estimator: Delta1Estimator::Calibrated,
            calibration: CalibrationOptions::default(),
            thresholds: Thresholds::default(),
        }
    }
}

impl ScenarioOptions {
    pub fn dynamics_n(&self) -> usize {
        self.n.unwrap_or(if self.full { 199 } else { 99 })
    }

    pub fn spectrum_n(&self) -> usize {
        self.n.unwrap_or(if self.full { 199 } else { 59 })
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        dynamics::sample_times(self.t_max, self.samples)
    }
}

fn centre(n: usize) -> Result<usize> {
    if n < 5 {
        return Err(crate::error::invalid("n", "figure layouts need at least 5 cavities"));
    }
    Ok((n + 1) / 2)
}

/// One atom at `(c−1, c+1)`.
pub fn single_layout(n: usize) -> Result<Vec<Vec<usize>>> {
    let c = centre(n)?;
    Ok(vec![vec![c - 1, c + 1]])
}

/// Braided atoms at `(c−1, c+1)` and `(c, c+2)`.
pub fn braided_layout(n: usize) -> Result<Vec<Vec<usize>>> {
    let c = centre(n)?;
    Ok(vec![vec![c - 1, c + 1], vec![c, c + 2]])
}

pub fn omega_df() -> f64 {
    model::doublon_dispersion(U, J, PI / DELTA_X as f64).expect("valid constants")
}

fn band_top() -> f64 {
    model::doublon_band(U, J).1
}

pub fn figure_system(
    n: usize,
    variant: CouplingVariant,
    layout: Vec<Vec<usize>>,
    delta1: f64,
    delta2: f64,
) -> Result<SystemConfig> {
    let g = match variant {
        CouplingVariant::TwoPhoton => G_TWO_PHOTON,
        CouplingVariant::SinglePhoton => G_SINGLE_PHOTON,
    };
    let atoms = layout
        .into_iter()
        .map(|p| AtomSpec::new(delta1, delta2, g, p))
        .collect();
    SystemConfig::new(WaveguideParams::new(n, J, U)?, atoms, variant)
}

/// `Δ₁` for the single-photon figures with every estimator's value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinglePhotonCondition {
    pub omega_df: f64,
    pub uncorrected: f64,
    pub analytic: f64,
    pub calibration: Option<Calibration>,
    pub used: f64,
    pub estimator: Delta1Estimator,
}

pub fn single_photon_condition(n: usize, opts: &ScenarioOptions) -> Result<SinglePhotonCondition> {
    let layout = single_layout(n)?;
    let (x1, x2) = (layout[0][0], layout[0][1]);
    let inputs = PerturbationInputs::new(n, J, U, G_SINGLE_PHOTON, DELTA2, x1, x2)?;
    let w = omega_df();
    let analytic = perturbation::corrected_df_condition(&inputs, w)?.delta1;
    let calibration = match opts.estimator {
        Delta1Estimator::Calibrated => Some(perturbation::calibrate_delta1(&inputs, w, &opts.calibration)?),
        Delta1Estimator::Analytic => None,
    };
    let used = calibration.as_ref().map_or(analytic, |c| c.delta1);
    Ok(SinglePhotonCondition {
        omega_df: w,
        uncorrected: w - DELTA2,
        analytic,
        calibration,
        used,
        estimator: opts.estimator,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BicReport {
    pub dim: usize,
    pub method: String,
    pub target: f64,
    pub eigenvalue: f64,
    pub ipr: f64,
    pub ipr_floor: f64,
    pub max_residual: f64,
    /// 1-based.
    pub peak_site: usize,
    pub off_diagonal_ratio: f64,
    /// `e^{−1/ς(k_DF)}` for a pure doublon.
    pub expected_ratio: f64,
    /// 1-based inclusive cavity window around the coupling points.
    pub window: (usize, usize),
    pub weight_outside: f64,
    pub pair_weight: f64,
}

fn coupling_span(config: &SystemConfig) -> (usize, usize) {
    let lo = config.atoms.iter().flat_map(|a| a.coupling_points.iter()).min().copied().unwrap_or(1);
    let hi = config.atoms.iter().flat_map(|a| a.coupling_points.iter()).max().copied().unwrap_or(1);
    (lo, hi)
}

fn window(config: &SystemConfig, margin: usize) -> (usize, usize) {
    let (lo, hi) = coupling_span(config);
    (lo.saturating_sub(margin).max(1), (hi + margin).min(config.n_cavities()))
}

/// Diagonalizes, picks the bound state nearest `target` and measures it.
pub fn analyze_bic(
    config: &SystemConfig,
    target: f64,
    thresholds: &Thresholds,
) -> Result<(BicReport, BoundStateProfile)> {
    let basis = BasisIndex::build(config)?;
    let h = build_hamiltonian(config, &basis)?;
    let (mode, method) = if basis.dim() <= thresholds.dense_cutoff {
        (EigenMode::Full, "dense")
    } else {
        (
            EigenMode::Window {
                target,
                count: WINDOW_COUNT,
            },
            "shift-invert",
        )
    };
    let solver = SolverOptions {
        dense_threshold: thresholds.dense_cutoff,
        tolerance: thresholds.tolerance,
        ..SolverOptions::default()
    };
    let result = spectral::eigensolve_with(&h, mode, &solver)?;
    let (_, profile) = spectral::find_bic(&result, &basis, target, thresholds.bic_floor)?;
    let peak = profile.peak_site();
    let (lo, hi) = window(config, PROFILE_MARGIN);
    let delta_x = config.atoms[0].coupling_points.windows(2).map(|w| w[1] - w[0]).next().unwrap_or(DELTA_X);
    let k = model::df_wavevector(delta_x, 0)?;
    let varsigma = model::localization_length(config.waveguide.u, config.waveguide.j, k)?;
    let report = BicReport {
        dim: basis.dim(),
        method: method.into(),
        target,
        eigenvalue: profile.eigenvalue,
        ipr: profile.ipr,
        ipr_floor: thresholds.bic_floor / basis.dim() as f64,
        max_residual: result.max_residual(),
        peak_site: peak + 1,
        off_diagonal_ratio: profile.off_diagonal_ratio(peak),
        expected_ratio: (-1.0 / varsigma).exp(),
        window: (lo, hi),
        weight_outside: profile.weight_outside(lo - 1, hi - 1),
        pair_weight: profile.pair_weight(),
    };
    Ok((report, profile))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsReport {
    pub dim: usize,
    pub method: PropagationMethod,
    pub krylov_steps: usize,
    pub t_max: f64,
    pub final_atomic: f64,
    /// Mean photon-free population over the second half of the run.
    pub tail_atomic: f64,
    /// 1-based inclusive window; leakage is `Σ P(n, t)` outside it.
    pub leakage_window: (usize, usize),
    pub max_leakage: f64,
    pub max_norm_error: f64,
    pub max_relative_energy_drift: f64,
    pub max_charge_error: f64,
}

pub fn run_dynamics(
    config: &SystemConfig,
    preset: &InitialPreset,
    times: &[f64],
    opts: &PropagationOptions,
) -> Result<(Observables, DynamicsReport)> {
    let basis = BasisIndex::build(config)?;
    let h = build_hamiltonian(config, &basis)?;
    let v0 = dynamics::initial_state(&basis, preset)?;
    let traj = dynamics::propagate_with(&h, &v0, times, opts)?;
    let obs = dynamics::observables(&basis, times, &traj.states)?;
    let e0 = v0.energy(&h);
    let drift = traj
        .states
        .iter()
        .map(|s| (s.energy(&h) - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let atomic = obs.series.channel("atomic").expect("atomic channel");
    let t_max = *times.last().unwrap_or(&0.0);
    let tail: Vec<f64> = times
        .iter()
        .zip(atomic)
        .filter(|(t, _)| **t >= 0.5 * t_max)
        .map(|(_, p)| *p)
        .collect();
    let (lo, hi) = window(config, LEAKAGE_MARGIN);
    let max_abs = |name: &str, reference: f64| {
        obs.series
            .channel(name)
            .expect("channel")
            .iter()
            .map(|x| (x - reference).abs())
            .fold(0.0, f64::max)
    };
    let report = DynamicsReport {
        dim: basis.dim(),
        method: traj.method,
        krylov_steps: traj.steps,
        t_max,
        final_atomic: *atomic.last().unwrap_or(&f64::NAN),
        tail_atomic: tail.iter().sum::<f64>() / tail.len().max(1) as f64,
        leakage_window: (lo, hi),
        max_leakage: obs.doublon_density.max_outside(lo - 1, hi - 1),
        max_norm_error: max_abs("norm", 1.0),
        max_relative_energy_drift: drift,
        max_charge_error: max_abs("charge", 2.0),
    };
    Ok((obs, report))
}

fn propagation_options(thresholds: &Thresholds) -> PropagationOptions {
    PropagationOptions {
        dense_threshold: thresholds.propagation_dense_cutoff,
        tolerance: thresholds.tolerance,
        ..PropagationOptions::default()
    }
}

pub fn write_bic(out: &mut OutputDir, prefix: &str, report: &BicReport, profile: &BoundStateProfile) -> Result<()> {
    out.csv(&format!("{prefix}_profile.csv"), |w| profile.write_csv(w))?;
    out.csv(&format!("{prefix}_diagonal.csv"), |w| {
        writeln!(w, "n,p_b")?;
        for (n, p) in profile.diagonal().iter().enumerate() {
            writeln!(w, "{},{p:.12e}", n + 1)?;
        }
        Ok(())
    })?;
    out.json(&format!("{prefix}.json"), report)
}

pub fn write_dynamics(out: &mut OutputDir, prefix: &str, obs: &Observables, report: &DynamicsReport) -> Result<()> {
    out.csv(&format!("{prefix}_traces.csv"), |w| obs.series.write_csv(w))?;
    out.csv(&format!("{prefix}_doublon_density.csv"), |w| obs.doublon_density.write_csv(w))?;
    out.csv(&format!("{prefix}_photon_density.csv"), |w| obs.photon_density.write_csv(w))?;
    out.json(&format!("{prefix}.json"), report)
}

/// Single-atom population traces for several parameter sets, one column each.
fn write_population_panel(
    out: &mut OutputDir,
    name: &str,
    channel: &str,
    runs: &[(String, Observables)],
) -> Result<()> {
    out.csv(name, |w| {
        write!(w, "t")?;
        for (label, _) in runs {
            write!(w, ",{label}")?;
        }
        writeln!(w)?;
        let times = &runs[0].1.series.times;
        for (i, t) in times.iter().enumerate() {
            write!(w, "{t:.6}")?;
            for (_, obs) in runs {
                write!(w, ",{:.12e}", obs.series.channel(channel).expect("channel")[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    })
}

/// Time for the fastest doublon to reach a chain end and return to the centre.
fn reflection_time(n: usize) -> f64 {
    let v_max = (0..=1000)
        .map(|i| model::doublon_group_velocity(U, J, PI * i as f64 / 1000.0).map_or(0.0, f64::abs))
        .fold(0.0, f64::max);
    n as f64 / v_max
}

fn note_reflections(out: &mut OutputDir, n: usize, t_max: f64) {
    let t = reflection_time(n);
    if t_max > t {
        out.meta_mut().note(format!(
            "radiation reflected at the chain ends returns to the centre after t = {t:.0}/J; later samples include it"
        ));
    }
}

/// Runs one scenario, writing its files into `out`. Returns the scalar
/// summary that is also written to `summary.json`.
pub fn run_scenario(scenario: Scenario, opts: &ScenarioOptions, out: &mut OutputDir) -> Result<serde_json::Value> {
    let w = omega_df();
    let th = &opts.thresholds;
    let prop = propagation_options(th);
    out.meta_mut().note(format!("scenario {}: {}", scenario.name(), scenario.description()));
    if !matches!(scenario, Scenario::Fig2a | Scenario::Fig3a) {
        note_reflections(out, opts.dynamics_n(), opts.t_max);
    }
    let summary = match scenario {
        Scenario::Fig2a => {
            let n = opts.spectrum_n();
            let cfg = figure_system(n, CouplingVariant::TwoPhoton, single_layout(n)?, w, 0.0)?;
            let (report, profile) = analyze_bic(&cfg, w, th)?;
            write_bic(out, "bic", &report, &profile)?;
            json!({ "delta1": w, "bic": report })
        }
        Scenario::Fig2b => {
            let n = opts.dynamics_n();
            let times = opts.times()?;
            let detunings = [("df", w), ("in_band", w + IN_BAND_SHIFT), ("out_of_band", band_top() + OUT_OF_BAND_MARGIN)];
            let mut runs = Vec::new();
            let mut reports = serde_json::Map::new();
            for (label, d1) in detunings {
                let cfg = figure_system(n, CouplingVariant::TwoPhoton, single_layout(n)?, d1, 0.0)?;
                let (obs, report) = run_dynamics(&cfg, &InitialPreset::Atom1Level1, &times, &prop)?;
                reports.insert(label.into(), json!({ "delta1": d1, "dynamics": report }));
                runs.push((label.to_string(), obs));
            }
            write_population_panel(out, "population.csv", "n1_1", &runs)?;
            out.meta_mut().note("detunings are not given for the orange/green curves; chosen as DF + 0.3J and band top + 1J");
            serde_json::Value::Object(reports)
        }
        Scenario::Fig2cd | Scenario::Fig2ef => {
            let n = opts.dynamics_n();
            let d1 = if scenario == Scenario::Fig2cd { w } else { w + IN_BAND_SHIFT };
            let cfg = figure_system(n, CouplingVariant::TwoPhoton, braided_layout(n)?, d1, 0.0)?;
            let (obs, report) = run_dynamics(&cfg, &InitialPreset::Atom1Level1, &opts.times()?, &prop)?;
            write_dynamics(out, "dfi", &obs, &report)?;
            json!({ "delta1": d1, "dynamics": report })
        }
        Scenario::Fig3a => {
            let cond = single_photon_condition(opts.spectrum_n(), opts)?;
            let n = opts.spectrum_n();
            let cfg = figure_system(n, CouplingVariant::SinglePhoton, single_layout(n)?, cond.used, DELTA2)?;
            let (report, profile) = analyze_bic(&cfg, w, th)?;
            write_bic(out, "bic", &report, &profile)?;
            json!({ "condition": cond, "bic": report })
        }
        Scenario::Fig3b => {
            let n = opts.dynamics_n();
            let cond = single_photon_condition(n, opts)?;
            let times = opts.times()?;
            let d1 = cond.used;
            let settings = [
                ("df", DELTA2),
                ("in_band", DELTA2 + IN_BAND_SHIFT),
                ("out_of_band", band_top() + OUT_OF_BAND_MARGIN - d1),
            ];
            let mut runs = Vec::new();
            let mut reports = serde_json::Map::new();
            for (label, d2) in settings {
                let cfg = figure_system(n, CouplingVariant::SinglePhoton, single_layout(n)?, d1, d2)?;
                let (obs, report) = run_dynamics(&cfg, &InitialPreset::Atom1Level2, &times, &prop)?;
                reports.insert(label.into(), json!({ "delta2": d2, "dynamics": report }));
                runs.push((label.to_string(), obs));
            }
            write_population_panel(out, "population.csv", "n2_1", &runs)?;
            out.meta_mut().note("delta2 values of the orange/green curves are not given; chosen as 5.3J and band top + 1J - delta1");
            json!({ "condition": cond, "runs": reports })
        }
        Scenario::Fig3cd | Scenario::Fig3ef => {
            let n = opts.dynamics_n();
            let cond = single_photon_condition(n, opts)?;
            let d2 = if scenario == Scenario::Fig3cd { DELTA2 } else { DELTA2 + IN_BAND_SHIFT };
            let cfg = figure_system(n, CouplingVariant::SinglePhoton, braided_layout(n)?, cond.used, d2)?;
            let (obs, report) = run_dynamics(&cfg, &InitialPreset::Atom1Level2, &opts.times()?, &prop)?;
            write_dynamics(out, "dfi", &obs, &report)?;
            json!({ "condition": cond, "delta2": d2, "dynamics": report })
        }
        Scenario::FigS1 => {
            let d1 = w - DELTA2;
            let ns = opts.spectrum_n();
            let cfg = figure_system(ns, CouplingVariant::SinglePhoton, single_layout(ns)?, d1, DELTA2)?;
            let (bic, profile) = analyze_bic(&cfg, w, th)?;
            write_bic(out, "bic", &bic, &profile)?;
            let nd = opts.dynamics_n();
            let cfg = figure_system(nd, CouplingVariant::SinglePhoton, braided_layout(nd)?, d1, DELTA2)?;
            let (obs, report) = run_dynamics(&cfg, &InitialPreset::Atom1Level2, &opts.times()?, &prop)?;
            write_dynamics(out, "dfi", &obs, &report)?;
            json!({ "delta1": d1, "bic": bic, "dynamics": report })
        }
    };
    out.json("summary.json", &summary)?;
    Ok(summary)
}

/// Doublon band analytics on a wavevector grid plus the decoherence-free
/// points for small separations.
pub fn run_dispersion(params: &WaveguideParams, points: usize, out: &mut OutputDir) -> Result<serde_json::Value> {
    params.validate()?;
    if points < 2 {
        return Err(crate::error::invalid("points", "need at least two grid points"));
    }
    let (u, j) = (params.u, params.j);
    out.csv("dispersion.csv", |w| {
        writeln!(w, "k,omega_d,group_velocity,localization_length")?;
        for i in 0..points {
            let k = -PI + 2.0 * PI * i as f64 / (points - 1) as f64;
            let omega = model::doublon_dispersion(u, j, k).map_err(std::io::Error::other)?;
            let v = model::doublon_group_velocity(u, j, k).map_err(std::io::Error::other)?;
            let s = if u > 0.0 {
                model::localization_length(u, j, k).map_err(std::io::Error::other)?
            } else {
                f64::NAN
            };
            writeln!(w, "{k:.12e},{omega:.12e},{v:.12e},{s:.12e}")?;
        }
        Ok(())
    })?;
    let mut df = Vec::new();
    for dx in 1..=4 {
        let k = model::df_wavevector(dx, 0)?;
        df.push(json!({
            "delta_x": dx,
            "k_df": k,
            "omega_df": model::doublon_dispersion(u, j, k)?,
        }));
    }
    let (lo, hi) = model::doublon_band(u, j);
    let summary = json!({
        "band": [lo, hi],
        "bands_separated": params.bands_separated(),
        "localization_length_half_pi": if u > 0.0 { Some(model::localization_length(u, j, PI / 2.0)?) } else { None },
        "decoherence_free": df,
    });
    out.json("dispersion.json", &summary)?;
    Ok(summary)
}

/// Eigenvalues and IPRs of the configured system, plus the Hamiltonian
/// dump.
pub fn run_spectrum(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<serde_json::Value> {
    let basis = BasisIndex::build(&cfg.system)?;
    let h = build_hamiltonian(&cfg.system, &basis)?;
    out.matrix_market("hamiltonian.mtx", &h)?;
    let mode = match cfg.run.mode {
        SpectrumMode::Full => EigenMode::Full,
        SpectrumMode::Window => EigenMode::Window {
            target: cfg.run.target,
            count: cfg.run.count,
        },
    };
    let solver = SolverOptions {
        dense_threshold: cfg.thresholds.dense_cutoff,
        tolerance: cfg.thresholds.tolerance,
        ..SolverOptions::default()
    };
    let result = spectral::eigensolve_with(&h, mode, &solver)?;
    out.csv("spectrum.csv", |w| {
        writeln!(w, "index,eigenvalue,ipr,residual,degenerate")?;
        for i in 0..result.len() {
            writeln!(
                w,
                "{i},{:.15e},{:.12e},{:.3e},{}",
                result.eigenvalues[i], result.ipr[i], result.residuals[i], result.degenerate[i] as u8
            )?;
        }
        Ok(())
    })?;
    let summary = json!({
        "dim": result.dim,
        "count": result.len(),
        "max_residual": result.max_residual(),
        "nnz": h.nnz(),
    });
    out.json("spectrum.json", &summary)?;
    Ok(summary)
}

pub fn run_bic(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<serde_json::Value> {
    let (report, profile) = analyze_bic(&cfg.system, cfg.run.target, &cfg.thresholds)?;
    write_bic(out, "bic", &report, &profile)?;
    Ok(serde_json::to_value(report)?)
}

pub fn run_evolve(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<serde_json::Value> {
    let times = dynamics::sample_times(cfg.run.t_max, cfg.run.samples)?;
    let preset = cfg.initial.preset()?;
    let (obs, report) = run_dynamics(&cfg.system, &preset, &times, &propagation_options(&cfg.thresholds))?;
    write_dynamics(out, "evolve", &obs, &report)?;
    Ok(serde_json::to_value(report)?)
}

/// Perturbative analytics for every atom of a single-photon system.
pub fn run_perturbation(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<serde_json::Value> {
    if cfg.system.coupling_variant != CouplingVariant::SinglePhoton {
        return Err(crate::error::invalid(
            "system.variant",
            "the perturbative treatment applies to single-photon coupling only",
        ));
    }
    let calibration = cfg.run.calibrate.then(CalibrationOptions::default);
    let mut reports = Vec::new();
    for a in 0..cfg.system.n_atoms() {
        let inputs = PerturbationInputs::from_system(&cfg.system, a)?;
        reports.push(perturbation::report(&inputs, calibration.as_ref())?);
    }
    out.json("perturbation.json", &reports)?;
    Ok(serde_json::to_value(reports)?)
}

/// Dispatches a config-driven run by its `run.kind`.
pub fn run_config(cfg: &ExperimentConfig, opts: &ScenarioOptions, out: &mut OutputDir) -> Result<serde_json::Value> {
    match cfg.run.kind {
        RunKind::Spectrum => run_spectrum(cfg, out),
        RunKind::Bic => run_bic(cfg, out),
        RunKind::Evolve => run_evolve(cfg, out),
        RunKind::Perturbation => run_perturbation(cfg, out),
        RunKind::Scenario => {
            let name = cfg.run.scenario.as_deref().unwrap_or_default();
            run_scenario(Scenario::from_name(name)?, opts, out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::from_name(s.name()).unwrap(), s);
        }
        assert!(matches!(Scenario::from_name("fig4"), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn layouts() {
        assert_eq!(braided_layout(199).unwrap(), vec![vec![99, 101], vec![100, 102]]);
        assert_eq!(single_layout(59).unwrap(), vec![vec![29, 31]]);
        assert_eq!(braided_layout(99).unwrap()[1], vec![50, 52]);
    }

    #[test]
    fn scaled_sizes() {
        let o = ScenarioOptions::default();
        assert_eq!((o.dynamics_n(), o.spectrum_n()), (99, 59));
        let f = ScenarioOptions { full: true, ..o };
        assert_eq!((f.dynamics_n(), f.spectrum_n()), (199, 199));
    }
}
