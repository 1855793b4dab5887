//! TOML experiment configuration.
//!
//! ```toml
//! [system]
//! variant = "single-photon"   # or "two-photon"
//! n = 59
//! j = 1.0                     # optional
//! u = 10.0
//!
//! [[system.atoms]]
//! delta1 = 5.338
//! delta2 = 5.0                # ignored (with a warning) for two-photon coupling
//! g = 0.25
//! points = [29, 31]           # 1-based cavities
//!
//! [run]
//! kind = "evolve"             # spectrum | bic | evolve | perturbation | scenario
//! t_max = 400.0
//! samples = 401
//! initial = "atom1-level2"    # or atom1-level1, or a list of custom terms
//! ```
//!
//! Every problem is reported with its field path and source line; all
//! defaults are filled in and echoed through [`ExperimentConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use toml::de::{DeTable, DeValue};

use crate::basis::BasisState;
use crate::dynamics::{InitialPreset, PROPAGATION_DENSE_THRESHOLD};
use crate::error::{Error, Result};
use crate::model::{AtomSpec, CouplingVariant, SystemConfig, WaveguideParams};
use crate::spectral::{BIC_FLOOR_FACTOR, DENSE_THRESHOLD};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: RawSystem,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    thresholds: RawThresholds,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    variant: CouplingVariant,
    n: usize,
    #[serde(default = "one")]
    j: f64,
    u: f64,
    atoms: Vec<RawAtom>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    delta1: f64,
    delta2: Option<f64>,
    g: f64,
    points: Vec<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    kind: Option<RunKind>,
    scenario: Option<String>,
    mode: Option<SpectrumMode>,
    target: Option<f64>,
    count: Option<usize>,
    t_max: Option<f64>,
    samples: Option<usize>,
    initial: Option<RawInitial>,
    calibrate: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawInitial {
    Preset(String),
    Custom(Vec<CustomTerm>),
}

/// One term of a custom initial state; indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomTerm {
    pub kind: String,
    pub indices: Vec<usize>,
    /// `[re, im]`.
    pub amplitude: [f64; 2],
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawThresholds {
    dense_cutoff: Option<usize>,
    propagation_dense_cutoff: Option<usize>,
    bic_floor: Option<f64>,
    tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    Spectrum,
    Bic,
    Evolve,
    Perturbation,
    Scenario,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMode {
    Full,
    Window,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub kind: RunKind,
    pub scenario: Option<String>,
    pub mode: SpectrumMode,
    /// Spectral target; defaults to the first atom's transition frequency.
    pub target: f64,
    pub count: usize,
    pub t_max: f64,
    pub samples: usize,
    pub calibrate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "preset", content = "terms")]
pub enum InitialSpec {
    Atom1Level1,
    Atom1Level2,
    Custom(Vec<CustomTerm>),
}

impl InitialSpec {
    pub fn preset(&self) -> Result<InitialPreset> {
        Ok(match self {
            InitialSpec::Atom1Level1 => InitialPreset::Atom1Level1,
            InitialSpec::Atom1Level2 => InitialPreset::Atom1Level2,
            InitialSpec::Custom(terms) => InitialPreset::Custom(
                terms
                    .iter()
                    .map(|t| Ok((t.state()?, Complex64::new(t.amplitude[0], t.amplitude[1]))))
                    .collect::<Result<_>>()?,
            ),
        })
    }
}

impl CustomTerm {
    /// Basis state with 0-based indices.
    pub fn state(&self) -> Result<BasisState> {
        let i = &self.indices;
        let bad = || Error::InvalidState(format!("{} {:?}", self.kind, self.indices));
        if i.contains(&0) {
            return Err(bad());
        }
        let z: Vec<usize> = i.iter().map(|x| x - 1).collect();
        Ok(match (self.kind.as_str(), z.as_slice()) {
            ("atom-double", [a]) => BasisState::AtomDouble(*a),
            ("atom-single", [a]) => BasisState::AtomSingle(*a),
            ("atom-pair", [a, b]) => BasisState::AtomPair(*a.min(b), *a.max(b)),
            ("atom-photon", [a, j]) => BasisState::AtomPhoton(*a, *j),
            ("photon-pair", [j, k]) => BasisState::PhotonPair(*j.min(k), *j.max(k)),
            _ => return Err(bad()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub dense_cutoff: usize,
    pub propagation_dense_cutoff: usize,
    pub bic_floor: f64,
    pub tolerance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            dense_cutoff: DENSE_THRESHOLD,
            propagation_dense_cutoff: PROPAGATION_DENSE_THRESHOLD,
            bic_floor: BIC_FLOOR_FACTOR,
            tolerance: 1e-10,
        }
    }
}

/// A validated configuration with every default made explicit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub run: RunSpec,
    pub initial: InitialSpec,
    pub thresholds: Thresholds,
    pub output_dir: PathBuf,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

/// Field path → 1-based source line.
struct Lines(BTreeMap<String, usize>);

impl Lines {
    fn build(src: &str) -> Self {
        let mut map = BTreeMap::new();
        if let Ok(root) = DeTable::parse(src) {
            walk_table(src, "", root.get_ref(), &mut map);
        }
        Lines(map)
    }

    /// Line of `path`, or of its closest recorded ancestor.
    fn of(&self, path: &str) -> Option<usize> {
        let mut p = path.to_string();
        loop {
            if let Some(l) = self.0.get(&p) {
                return Some(*l);
            }
            let cut = p.rfind(['.', '['])?;
            p.truncate(cut);
        }
    }

    fn anchor(&self, path: &str, msg: &str) -> String {
        match self.of(path) {
            Some(l) => format!("line {l}: {path}: {msg}"),
            None => format!("{path}: {msg}"),
        }
    }
}

fn line_at(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn walk_table(src: &str, prefix: &str, table: &DeTable<'_>, map: &mut BTreeMap<String, usize>) {
    for (k, v) in table.iter() {
        let path = if prefix.is_empty() {
            k.get_ref().to_string()
        } else {
            format!("{prefix}.{}", k.get_ref())
        };
        map.insert(path.clone(), line_at(src, k.span().start));
        walk_value(src, &path, v.get_ref(), map);
    }
}

fn walk_value(src: &str, path: &str, value: &DeValue<'_>, map: &mut BTreeMap<String, usize>) {
    match value {
        DeValue::Table(t) => walk_table(src, path, t, map),
        DeValue::Array(a) => {
            for (i, v) in a.iter().enumerate() {
                let p = format!("{path}[{i}]");
                map.insert(p.clone(), line_at(src, v.span().start));
                walk_value(src, &p, v.get_ref(), map);
            }
        }
        _ => {}
    }
}

/// Reads and validates a configuration file.
pub fn validate_config(path: &Path) -> Result<ExperimentConfig> {
    let src = std::fs::read_to_string(path)?;
    parse_config(&src)
}

pub fn parse_config(src: &str) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(src).map_err(|e| {
        let msg = e.message().trim().to_string();
        Error::Config(vec![match e.span() {
            Some(s) => format!("line {}: {msg}", line_at(src, s.start)),
            None => msg,
        }])
    })?;
    let lines = Lines::build(src);
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    let waveguide = WaveguideParams {
        n: raw.system.n,
        j: raw.system.j,
        u: raw.system.u,
    };
    if let Err(e) = waveguide.validate() {
        errors.push(remap(&lines, e));
    }
    if raw.system.atoms.is_empty() {
        errors.push(lines.anchor("system.atoms", "need at least one atom"));
    }
    let two_photon = raw.system.variant == CouplingVariant::TwoPhoton;
    let mut atoms = Vec::new();
    for (a, ra) in raw.system.atoms.iter().enumerate() {
        if two_photon && ra.delta2.is_some() {
            warnings.push(lines.anchor(
                &format!("system.atoms[{a}].delta2"),
                "ignored for two-photon coupling",
            ));
        }
        let atom = AtomSpec::new(ra.delta1, ra.delta2.unwrap_or(0.0), ra.g, ra.points.clone());
        let single = SystemConfig {
            waveguide: waveguide.clone(),
            atoms: vec![atom.clone()],
            coupling_variant: raw.system.variant,
        };
        if let Err(e) = single.validate_layout() {
            errors.push(remap_atom(&lines, a, e));
        }
        atoms.push(atom);
    }

    let run = &raw.run;
    let kind = run.kind.unwrap_or(RunKind::Evolve);
    if kind == RunKind::Scenario && run.scenario.is_none() {
        errors.push(lines.anchor("run.kind", "scenario runs need `run.scenario`"));
    }
    if let Some(s) = &run.scenario {
        if crate::scenario::Scenario::from_name(s).is_err() {
            errors.push(lines.anchor("run.scenario", &format!("unknown scenario `{s}`")));
        }
    }
    let t_max = run.t_max.unwrap_or(400.0);
    if !(t_max > 0.0 && t_max.is_finite()) {
        errors.push(lines.anchor("run.t_max", "must be positive"));
    }
    let samples = run.samples.unwrap_or(401);
    if samples < 2 {
        errors.push(lines.anchor("run.samples", "need at least two samples"));
    }
    let count = run.count.unwrap_or(10);
    if count == 0 {
        errors.push(lines.anchor("run.count", "must be positive"));
    }
    let initial = match &run.initial {
        None if two_photon => InitialSpec::Atom1Level1,
        None => InitialSpec::Atom1Level2,
        Some(RawInitial::Preset(p)) => match (p.as_str(), two_photon) {
            ("atom1-level1", true) => InitialSpec::Atom1Level1,
            ("atom1-level2", false) => InitialSpec::Atom1Level2,
            ("atom1-level1" | "atom1-level2", _) => {
                errors.push(lines.anchor(
                    "run.initial",
                    &format!("preset `{p}` is incompatible with {} coupling", raw.system.variant),
                ));
                InitialSpec::Atom1Level1
            }
            _ => {
                errors.push(lines.anchor("run.initial", &format!("unknown preset `{p}`")));
                InitialSpec::Atom1Level1
            }
        },
        Some(RawInitial::Custom(terms)) => {
            for (i, t) in terms.iter().enumerate() {
                if let Err(e) = t.state() {
                    errors.push(lines.anchor(&format!("run.initial[{i}]"), &e.to_string()));
                }
            }
            InitialSpec::Custom(terms.clone())
        }
    };

    let th = &raw.thresholds;
    let defaults = Thresholds::default();
    let thresholds = Thresholds {
        dense_cutoff: th.dense_cutoff.unwrap_or(defaults.dense_cutoff),
        propagation_dense_cutoff: th.propagation_dense_cutoff.unwrap_or(defaults.propagation_dense_cutoff),
        bic_floor: th.bic_floor.unwrap_or(defaults.bic_floor),
        tolerance: th.tolerance.unwrap_or(defaults.tolerance),
    };
    if !(thresholds.bic_floor > 0.0) {
        errors.push(lines.anchor("thresholds.bic_floor", "must be positive"));
    }
    if !(thresholds.tolerance > 0.0 && thresholds.tolerance < 1.0) {
        errors.push(lines.anchor("thresholds.tolerance", "must lie in (0, 1)"));
    }

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    let target = run.target.unwrap_or_else(|| {
        let a = &atoms[0];
        if two_photon {
            a.delta1
        } else {
            a.delta1 + a.delta2
        }
    });
    Ok(ExperimentConfig {
        system: SystemConfig {
            waveguide,
            atoms,
            coupling_variant: raw.system.variant,
        },
        run: RunSpec {
            kind,
            scenario: run.scenario.clone(),
            mode: run.mode.unwrap_or(SpectrumMode::Full),
            target,
            count,
            t_max,
            samples,
            calibrate: run.calibrate.unwrap_or(false),
        },
        initial,
        thresholds,
        output_dir: raw.output.dir.unwrap_or_else(|| PathBuf::from("out")),
        warnings,
    })
}

fn remap(lines: &Lines, e: Error) -> String {
    match e {
        Error::InvalidParameter { field, reason } => {
            let path = field.replace("waveguide.", "system.");
            lines.anchor(&path, &reason)
        }
        other => other.to_string(),
    }
}

fn remap_atom(lines: &Lines, atom: usize, e: Error) -> String {
    match e {
        Error::InvalidParameter { field, reason } => {
            let path = field
                .replacen("atoms[0]", &format!("system.atoms[{atom}]"), 1)
                .replace("coupling_points", "points")
                .replace("waveguide.", "system.");
            lines.anchor(&path, &reason)
        }
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[system]
variant = "single-photon"
n = 59
u = 10.0

[[system.atoms]]
delta1 = 5.338
delta2 = 5.0
g = 0.25
points = [29, 31]
"#;

    #[test]
    fn minimal_defaults_are_echoed() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.system.waveguide.j, 1.0);
        assert_eq!(c.run.kind, RunKind::Evolve);
        assert_eq!(c.initial, InitialSpec::Atom1Level2);
        assert_eq!(c.thresholds, Thresholds::default());
        assert!((c.run.target - 10.338).abs() < 1e-12);
        let echoed = serde_json::to_value(&c).unwrap();
        assert_eq!(echoed["thresholds"]["dense_cutoff"], 6000);
        assert_eq!(echoed["run"]["samples"], 401);
    }

    #[test]
    fn out_of_range_point_reports_path_and_line() {
        let src = MINIMAL.replace("n = 59", "n = 199").replace("[29, 31]", "[29, 250]");
        let Err(Error::Config(errs)) = parse_config(&src) else {
            panic!("accepted")
        };
        assert_eq!(errs.len(), 1);
        assert!(errs[0].contains("system.atoms[0].points[1]"), "{errs:?}");
        assert!(errs[0].starts_with("line 11:"), "{errs:?}");
    }

    #[test]
    fn several_errors_reported_together() {
        let src = format!("{}\n[run]\nsamples = 1\n", MINIMAL.replace("n = 59", "n = 1"));
        let Err(Error::Config(errs)) = parse_config(&src) else {
            panic!("accepted")
        };
        assert!(errs.iter().any(|e| e.contains("system.n")), "{errs:?}");
        assert!(errs.iter().any(|e| e.contains("run.samples")), "{errs:?}");
    }

    #[test]
    fn syntax_errors_are_line_anchored() {
        let src = MINIMAL.replace("u = 10.0", "u = ten");
        let Err(Error::Config(errs)) = parse_config(&src) else {
            panic!("accepted")
        };
        assert!(errs[0].starts_with("line 5:"), "{errs:?}");
        let src = MINIMAL.replace("g = 0.25", "g = 0.25\ncolour = 1");
        assert!(parse_config(&src).is_err());
    }

    #[test]
    fn two_photon_delta2_warns() {
        let src = MINIMAL.replace("single-photon", "two-photon");
        let c = parse_config(&src).unwrap();
        assert_eq!(c.warnings.len(), 1);
        assert!(c.warnings[0].contains("system.atoms[0].delta2"));
        assert_eq!(c.initial, InitialSpec::Atom1Level1);
    }

    #[test]
    fn custom_initial_state() {
        let src = format!(
            "{MINIMAL}\n[run]\ninitial = [{{ kind = \"photon-pair\", indices = [5, 5], amplitude = [1.0, 0.0] }}]\n"
        );
        let c = parse_config(&src).unwrap();
        let InitialPreset::Custom(terms) = c.initial.preset().unwrap() else {
            panic!()
        };
        assert_eq!(terms[0].0, BasisState::PhotonPair(4, 4));
        let bad = src.replace("photon-pair", "photon-trio");
        assert!(parse_config(&bad).is_err());
        let wrong = format!("{MINIMAL}\n[run]\ninitial = \"atom1-level1\"\n");
        assert!(parse_config(&wrong).is_err());
    }
}
