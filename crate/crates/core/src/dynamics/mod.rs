//! Unitary evolution inside the sector and the observables read off it.

mod krylov;

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisIndex, BasisState};
use crate::error::{Error, Result};
use crate::model::CouplingVariant;
use crate::par;
use crate::sparse::SparseSymMatrix;
use crate::spectral::full_eigen;

/// Dimension at or below which propagation diagonalizes `H` once.
pub const PROPAGATION_DENSE_THRESHOLD: usize = 2000;

const NORM_TOL: f64 = 1e-10;

/// Normalized complex amplitudes over a [`BasisIndex`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Wraps amplitudes that are already normalized.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        let norm = norm(&amps);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amps })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amps)
    }

    pub fn amplitude(&self, basis: &BasisIndex, state: BasisState) -> Result<Complex64> {
        Ok(self.amps[basis.index_of(state)?])
    }

    /// `max_i |a_i − b_i|`.
    pub fn max_deviation(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `‖a − b‖₂`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn energy(&self, h: &SparseSymMatrix) -> f64 {
        h.expectation(&self.amps)
    }
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPreset {
    /// First atom in `|1⟩`; two-photon coupling.
    Atom1Level1,
    /// First atom in `|2⟩`; single-photon coupling.
    Atom1Level2,
    /// Arbitrary superposition, normalized on construction.
    Custom(Vec<(BasisState, Complex64)>),
}

impl InitialPreset {
    pub fn name(&self) -> &'static str {
        match self {
            InitialPreset::Atom1Level1 => "atom1-level1",
            InitialPreset::Atom1Level2 => "atom1-level2",
            InitialPreset::Custom(_) => "custom",
        }
    }
}

pub fn initial_state(basis: &BasisIndex, preset: &InitialPreset) -> Result<StateVector> {
    let incompatible = || Error::IncompatiblePreset {
        preset: preset.name().into(),
        variant: basis.variant().to_string(),
    };
    let terms = match (preset, basis.variant()) {
        (InitialPreset::Atom1Level1, CouplingVariant::TwoPhoton) => {
            vec![(BasisState::AtomSingle(0), Complex64::new(1.0, 0.0))]
        }
        (InitialPreset::Atom1Level2, CouplingVariant::SinglePhoton) => {
            vec![(BasisState::AtomDouble(0), Complex64::new(1.0, 0.0))]
        }
        (InitialPreset::Custom(terms), _) => terms.clone(),
        _ => return Err(incompatible()),
    };
    let mut amps = vec![Complex64::default(); basis.dim()];
    for (state, a) in terms {
        amps[basis.index_of(state)?] += a;
    }
    let n = norm(&amps);
    if n == 0.0 || !n.is_finite() {
        return Err(Error::NotNormalized(n));
    }
    amps.iter_mut().for_each(|a| *a /= n);
    StateVector::new(amps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropagationMethod {
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    pub dense_threshold: usize,
    pub krylov_dim: usize,
    /// Per-step error bound of the Krylov stepper.
    pub tolerance: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            dense_threshold: PROPAGATION_DENSE_THRESHOLD,
            krylov_dim: 30,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub method: PropagationMethod,
    /// Krylov steps taken; zero for dense propagation.
    pub steps: usize,
}

fn check_times(times: &[f64]) -> Result<()> {
    let ascending = times.windows(2).all(|w| w[1] >= w[0]);
    if !ascending || times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidTimes);
    }
    Ok(())
}

/// `exp(−iHt) v0` at every requested time.
pub fn propagate(h: &SparseSymMatrix, v0: &StateVector, times: &[f64]) -> Result<Vec<StateVector>> {
    Ok(propagate_with(h, v0, times, &PropagationOptions::default())?.states)
}

pub fn propagate_with(
    h: &SparseSymMatrix,
    v0: &StateVector,
    times: &[f64],
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    check_times(times)?;
    if h.dim() != v0.dim() {
        return Err(Error::BasisMismatch {
            basis: v0.dim(),
            config: h.dim(),
        });
    }
    if h.dim() <= opts.dense_threshold {
        propagate_dense(h, v0, times)
    } else {
        propagate_krylov(h, v0, times, opts)
    }
}

pub fn propagate_dense(h: &SparseSymMatrix, v0: &StateVector, times: &[f64]) -> Result<Trajectory> {
    check_times(times)?;
    let (values, vectors) = full_eigen(h)?;
    let coeffs: Vec<Complex64> = par::map_slice(&vectors, |v| {
        v.iter().zip(&v0.amps).map(|(a, b)| b * a).sum()
    });
    let states = par::map_slice(times, |&t| {
        if t == 0.0 {
            return v0.clone();
        }
        let mut out = vec![Complex64::default(); v0.dim()];
        for ((lambda, c), v) in values.iter().zip(&coeffs).zip(&vectors) {
            let c = c * Complex64::from_polar(1.0, -lambda * t);
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
        StateVector { amps: out }
    });
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        method: PropagationMethod::Dense,
        steps: 0,
    })
}

pub fn propagate_krylov(
    h: &SparseSymMatrix,
    v0: &StateVector,
    times: &[f64],
    opts: &PropagationOptions,
) -> Result<Trajectory> {
    check_times(times)?;
    let mut stats = krylov::KrylovStats { steps: 0 };
    let mut v = v0.amps.clone();
    let mut t = 0.0;
    let mut states = Vec::with_capacity(times.len());
    for &target in times {
        krylov::advance(h, &mut v, t, target, opts.krylov_dim, opts.tolerance, &mut stats)?;
        t = target;
        states.push(StateVector { amps: v.clone() });
    }
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        method: PropagationMethod::Krylov,
        steps: stats.steps,
    })
}

/// Uniform sample times `0, dt, …, t_max`.
pub fn sample_times(t_max: f64, samples: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || samples < 2 {
        return Err(crate::error::invalid("times", "need t_max > 0 and at least two samples"));
    }
    let last = (samples - 1) as f64;
    Ok((0..samples).map(|i| t_max * i as f64 / last).collect())
}

/// Named real channels sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// `values[channel][sample]`.
    pub values: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.values[i].as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t")?;
        for n in &self.names {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for (i, t) in self.times.iter().enumerate() {
            write!(w, "{t:.6}")?;
            for ch in &self.values {
                write!(w, ",{:.12e}", ch[i])?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Per-cavity quantity on a time grid, row-major `times × n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityGrid {
    pub times: Vec<f64>,
    pub n: usize,
    pub values: Vec<f64>,
}

impl DensityGrid {
    pub fn row(&self, sample: usize) -> &[f64] {
        &self.values[sample * self.n..(sample + 1) * self.n]
    }

    /// Largest over time of the summed density outside cavities `lo..=hi`
    /// (0-based).
    pub fn max_outside(&self, lo: usize, hi: usize) -> f64 {
        (0..self.times.len())
            .map(|s| self.outside(s, lo, hi))
            .fold(0.0, f64::max)
    }

    pub fn outside(&self, sample: usize, lo: usize, hi: usize) -> f64 {
        self.row(sample)
            .iter()
            .enumerate()
            .filter(|(n, _)| *n < lo || *n > hi)
            .map(|(_, p)| p)
            .sum()
    }

    /// CSV grid: one row per time, one column per cavity (1-based header).
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "t")?;
        for n in 1..=self.n {
            write!(w, ",{n}")?;
        }
        writeln!(w)?;
        for (s, t) in self.times.iter().enumerate() {
            write!(w, "{t:.6}")?;
            for p in self.row(s) {
                write!(w, ",{p:.12e}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observables {
    pub series: TimeSeries,
    /// `P(n, t) = ⟨a_n†a_n†a_n a_n⟩`.
    pub doublon_density: DensityGrid,
    /// `⟨a_n†a_n⟩`.
    pub photon_density: DensityGrid,
}

struct Sample {
    n1: Vec<f64>,
    n2: Vec<f64>,
    atomic: f64,
    charge: f64,
    norm: f64,
    doublon: Vec<f64>,
    photon: Vec<f64>,
}

fn sample(basis: &BasisIndex, v: &StateVector) -> Sample {
    let na = basis.n_atoms();
    let n = basis.n_cavities();
    let mut s = Sample {
        n1: vec![0.0; na],
        n2: vec![0.0; na],
        atomic: 0.0,
        charge: 0.0,
        norm: 0.0,
        doublon: vec![0.0; n],
        photon: vec![0.0; n],
    };
    for (state, a) in basis.states().iter().zip(&v.amps) {
        let w = a.norm_sqr();
        s.norm += w;
        s.charge += basis.charge(*state) as f64 * w;
        if state.photons() == 0 {
            s.atomic += w;
        }
        match *state {
            BasisState::AtomDouble(a) => s.n2[a] += w,
            BasisState::AtomPair(a, b) => {
                s.n1[a] += w;
                s.n1[b] += w;
            }
            BasisState::AtomSingle(a) => s.n1[a] += w,
            BasisState::AtomPhoton(a, j) => {
                s.n1[a] += w;
                s.photon[j] += w;
            }
            BasisState::PhotonPair(j, k) if j == k => {
                s.doublon[j] += 2.0 * w;
                s.photon[j] += 2.0 * w;
            }
            BasisState::PhotonPair(j, k) => {
                s.photon[j] += w;
                s.photon[k] += w;
            }
        }
    }
    s
}

/// Channels: `n1_a` (and `n2_a` for single-photon coupling) per 1-based atom
/// `a`, `atomic` (weight with no photon in the waveguide), `photons`,
/// `charge` and `norm`; plus the doublon and photon density grids.
pub fn observables(basis: &BasisIndex, times: &[f64], states: &[StateVector]) -> Result<Observables> {
    if times.len() != states.len() {
        return Err(crate::error::invalid("times", "one sample time per state required"));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTimes);
    }
    if let Some(s) = states.iter().find(|s| s.dim() != basis.dim()) {
        return Err(Error::BasisMismatch {
            basis: basis.dim(),
            config: s.dim(),
        });
    }
    let samples = par::map_slice(states, |v| sample(basis, v));
    let na = basis.n_atoms();
    let n = basis.n_cavities();
    let with_n2 = basis.variant() == CouplingVariant::SinglePhoton;

    let mut names = Vec::new();
    let mut values = Vec::new();
    for a in 0..na {
        names.push(format!("n1_{}", a + 1));
        values.push(samples.iter().map(|s| s.n1[a]).collect());
    }
    if with_n2 {
        for a in 0..na {
            names.push(format!("n2_{}", a + 1));
            values.push(samples.iter().map(|s| s.n2[a]).collect());
        }
    }
    names.push("atomic".into());
    values.push(samples.iter().map(|s| s.atomic).collect());
    names.push("photons".into());
    values.push(samples.iter().map(|s| s.photon.iter().sum()).collect());
    names.push("charge".into());
    values.push(samples.iter().map(|s| s.charge).collect());
    names.push("norm".into());
    values.push(samples.iter().map(|s| s.norm.sqrt()).collect());

    let grid = |f: fn(&Sample) -> &Vec<f64>| DensityGrid {
        times: times.to_vec(),
        n,
        values: samples.iter().flat_map(|s| f(s).iter().copied()).collect(),
    };
    Ok(Observables {
        series: TimeSeries {
            times: times.to_vec(),
            names,
            values,
        },
        doublon_density: grid(|s| &s.doublon),
        photon_density: grid(|s| &s.photon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::build_hamiltonian;
    use crate::model::{AtomSpec, SystemConfig, WaveguideParams};

    fn system(n: usize, variant: CouplingVariant, g: f64) -> (BasisIndex, SparseSymMatrix) {
        let atoms = vec![
            AtomSpec::new(5.3, 5.0, g, vec![3, 5]),
            AtomSpec::new(5.3, 5.0, g, vec![4, 6]),
        ];
        let cfg = SystemConfig::new(WaveguideParams::new(n, 1.0, 10.0).unwrap(), atoms, variant).unwrap();
        let basis = BasisIndex::build(&cfg).unwrap();
        let h = build_hamiltonian(&cfg, &basis).unwrap();
        (basis, h)
    }

    #[test]
    fn presets() {
        let (b1, _) = system(8, CouplingVariant::SinglePhoton, 0.25);
        let v = initial_state(&b1, &InitialPreset::Atom1Level2).unwrap();
        assert_eq!(v.amplitude(&b1, BasisState::AtomDouble(0)).unwrap(), Complex64::new(1.0, 0.0));
        assert!(matches!(
            initial_state(&b1, &InitialPreset::Atom1Level1),
            Err(Error::IncompatiblePreset { .. })
        ));
        let (b2, _) = system(8, CouplingVariant::TwoPhoton, 0.04);
        let v = initial_state(&b2, &InitialPreset::Atom1Level1).unwrap();
        assert_eq!(v.amplitude(&b2, BasisState::AtomSingle(0)).unwrap().re, 1.0);
        assert!(initial_state(&b2, &InitialPreset::Atom1Level2).is_err());

        let custom = InitialPreset::Custom(vec![
            (BasisState::PhotonPair(1, 1), Complex64::new(1.0, 0.0)),
            (BasisState::PhotonPair(2, 4), Complex64::new(1.0, 0.0)),
        ]);
        let v = initial_state(&b2, &custom).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v.amplitude(&b2, BasisState::PhotonPair(1, 1)).unwrap().re - h).abs() < 1e-15);
        assert!((v.amplitude(&b2, BasisState::PhotonPair(2, 4)).unwrap().re - h).abs() < 1e-15);
    }

    #[test]
    fn initial_observables() {
        let (b, _) = system(8, CouplingVariant::SinglePhoton, 0.25);
        let v = initial_state(&b, &InitialPreset::Atom1Level2).unwrap();
        let obs = observables(&b, &[0.0], &[v]).unwrap();
        assert_eq!(obs.series.channel("n2_1").unwrap()[0], 1.0);
        assert_eq!(obs.series.channel("charge").unwrap()[0], 2.0);
        assert!(obs.doublon_density.row(0).iter().all(|p| *p == 0.0));

        let pair = InitialPreset::Custom(vec![(BasisState::PhotonPair(5, 5), Complex64::new(1.0, 0.0))]);
        let v = initial_state(&b, &pair).unwrap();
        let obs = observables(&b, &[0.0], &[v]).unwrap();
        for (n, p) in obs.doublon_density.row(0).iter().enumerate() {
            assert_eq!(*p, if n == 5 { 2.0 } else { 0.0 });
        }
        assert_eq!(obs.photon_density.row(0)[5], 2.0);
    }

    #[test]
    fn zero_time_is_identity() {
        let (b, h) = system(8, CouplingVariant::SinglePhoton, 0.25);
        let v = initial_state(&b, &InitialPreset::Atom1Level2).unwrap();
        for opts in [
            PropagationOptions::default(),
            PropagationOptions { dense_threshold: 0, ..Default::default() },
        ] {
            let out = propagate_with(&h, &v, &[0.0, 1.0], &opts).unwrap();
            assert_eq!(out.states[0], v);
        }
    }

    #[test]
    fn decoupled_atom_only_picks_up_phase() {
        let (b, h) = system(6, CouplingVariant::SinglePhoton, 0.0);
        let v = initial_state(&b, &InitialPreset::Atom1Level2).unwrap();
        let times = [0.5, 3.0, 17.0];
        let k = propagate_krylov(&h, &v, &times, &PropagationOptions::default()).unwrap();
        for (t, s) in times.iter().zip(&k.states) {
            let a = s.amplitude(&b, BasisState::AtomDouble(0)).unwrap();
            let expect = Complex64::from_polar(1.0, -10.3 * t);
            assert!((a - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn krylov_matches_dense() {
        for variant in [CouplingVariant::SinglePhoton, CouplingVariant::TwoPhoton] {
            let (b, h) = system(8, variant, 0.3);
            let preset = match variant {
                CouplingVariant::SinglePhoton => InitialPreset::Atom1Level2,
                CouplingVariant::TwoPhoton => InitialPreset::Atom1Level1,
            };
            let v = initial_state(&b, &preset).unwrap();
            let times = [0.0, 7.5, 50.0];
            let d = propagate_dense(&h, &v, &times).unwrap();
            let k = propagate_krylov(&h, &v, &times, &PropagationOptions::default()).unwrap();
            for (x, y) in d.states.iter().zip(&k.states) {
                assert!(x.distance(y) < 1e-9, "{variant}: {}", x.distance(y));
            }
            let obs = observables(&b, &times, &k.states).unwrap();
            for c in obs.series.channel("charge").unwrap() {
                assert!((c - 2.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_bad_times() {
        let (b, h) = system(6, CouplingVariant::TwoPhoton, 0.1);
        let v = initial_state(&b, &InitialPreset::Atom1Level1).unwrap();
        assert!(matches!(propagate(&h, &v, &[1.0, 0.5]), Err(Error::InvalidTimes)));
        assert!(matches!(propagate(&h, &v, &[-1.0]), Err(Error::InvalidTimes)));
    }
}
