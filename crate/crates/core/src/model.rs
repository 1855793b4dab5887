//! Physical parameters and closed-form doublon band analytics.
//!
//! Energies are in units of the hopping rate unless a caller passes a
//! different `j`; the formulas keep `j` explicit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Cavity array: `n` cavities, nearest-neighbour hopping `j`, on-site Kerr `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveguideParams {
    pub n: usize,
    pub j: f64,
    pub u: f64,
}

impl WaveguideParams {
    pub fn new(n: usize, j: f64, u: f64) -> Result<Self> {
        let params = Self { n, j, u };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(invalid("waveguide.n", format!("need at least 2 cavities, got {}", self.n)));
        }
        if !(self.j > 0.0 && self.j.is_finite()) {
            return Err(invalid("waveguide.j", format!("hopping must be positive, got {}", self.j)));
        }
        if !self.u.is_finite() {
            return Err(invalid("waveguide.u", "nonlinearity must be finite"));
        }
        Ok(())
    }

    /// True when the doublon band lies entirely above the two-photon scattering band.
    pub fn bands_separated(&self) -> bool {
        self.u >= 4.0 * self.j
    }
}

/// A ladder-type three-level giant atom.
///
/// `coupling_points` are 1-based cavity indices, strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomSpec {
    pub delta1: f64,
    pub delta2: f64,
    pub g: f64,
    pub coupling_points: Vec<usize>,
}

impl AtomSpec {
    pub fn new(delta1: f64, delta2: f64, g: f64, coupling_points: Vec<usize>) -> Self {
        Self {
            delta1,
            delta2,
            g,
            coupling_points,
        }
    }

    /// Coupling points as 0-based cavity indices.
    pub fn sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.coupling_points.iter().map(|&x| x - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingVariant {
    /// `g (σ⁽¹⁾⁺ a_x + σ⁽²⁾⁺ a_x + h.c.)`, three-level atoms.
    SinglePhoton,
    /// `g (σ⁽¹⁾⁺ a_x a_x + h.c.)`, atoms effectively two-level.
    TwoPhoton,
}

impl std::fmt::Display for CouplingVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CouplingVariant::SinglePhoton => f.write_str("single-photon"),
            CouplingVariant::TwoPhoton => f.write_str("two-photon"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub waveguide: WaveguideParams,
    pub atoms: Vec<AtomSpec>,
    pub coupling_variant: CouplingVariant,
}

impl SystemConfig {
    pub fn new(
        waveguide: WaveguideParams,
        atoms: Vec<AtomSpec>,
        coupling_variant: CouplingVariant,
    ) -> Result<Self> {
        let config = Self {
            waveguide,
            atoms,
            coupling_variant,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn n_cavities(&self) -> usize {
        self.waveguide.n
    }

    /// Full physical validation.
    pub fn validate(&self) -> Result<()> {
        self.waveguide.validate()?;
        self.validate_layout()
    }

    /// Checks that only concern the atom layout. Basis construction needs
    /// nothing more, which keeps single-cavity toy systems buildable.
    pub(crate) fn validate_layout(&self) -> Result<()> {
        if self.waveguide.n == 0 {
            return Err(invalid("waveguide.n", "need at least one cavity"));
        }
        if self.atoms.is_empty() {
            return Err(invalid("atoms", "need at least one atom"));
        }
        for (a, atom) in self.atoms.iter().enumerate() {
            let field = format!("atoms[{a}].coupling_points");
            if atom.coupling_points.is_empty() {
                return Err(invalid(&field, "need at least one coupling point"));
            }
            for (i, &x) in atom.coupling_points.iter().enumerate() {
                if x == 0 || x > self.waveguide.n {
                    return Err(invalid(
                        &format!("{field}[{i}]"),
                        format!("cavity {x} outside [1, {}]", self.waveguide.n),
                    ));
                }
            }
            if atom.coupling_points.windows(2).any(|w| w[0] >= w[1]) {
                return Err(invalid(&field, "coupling points must be strictly increasing"));
            }
            for (name, value) in [("delta1", atom.delta1), ("delta2", atom.delta2), ("g", atom.g)] {
                if !value.is_finite() {
                    return Err(invalid(&format!("atoms[{a}].{name}"), "must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Doublon dispersion `sign(U) √(U² + 16 J² cos²(k/2))`.
pub fn doublon_dispersion(u: f64, j: f64, k: f64) -> Result<f64> {
    if u == 0.0 {
        return Err(invalid("u", "doublon dispersion undefined for U = 0"));
    }
    if j <= 0.0 {
        return Err(invalid("j", "hopping must be positive"));
    }
    let c = (0.5 * k).cos();
    Ok(u.signum() * (u * u + 16.0 * j * j * c * c).sqrt())
}

/// Doublon group velocity `dω_D/dk = −4 J² sin k / ω_D(k)`.
pub fn doublon_group_velocity(u: f64, j: f64, k: f64) -> Result<f64> {
    let omega = doublon_dispersion(u, j, k)?;
    Ok(-4.0 * j * j * k.sin() / omega)
}

/// Doublon band edges `(|U|, √(U² + 16 J²))`.
pub fn doublon_band(u: f64, j: f64) -> (f64, f64) {
    (u.abs(), (u * u + 16.0 * j * j).sqrt())
}

/// Relative-coordinate localization length of a repulsive doublon.
///
/// Returns 0 at the zone edge, where the relative wavefunction collapses
/// onto a single site.
pub fn localization_length(u: f64, j: f64, k: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(invalid("u", "localization length needs U > 0"));
    }
    if j <= 0.0 {
        return Err(invalid("j", "hopping must be positive"));
    }
    if k.abs() > PI {
        return Err(invalid("k", format!("wavevector {k} outside [-π, π]")));
    }
    let c = (0.5 * k).cos();
    if c.abs() < 1e-300 {
        return Ok(0.0);
    }
    let ratio = ((u * u + 16.0 * j * j * c * c).sqrt() - u) / (4.0 * j * c);
    if ratio <= 0.0 {
        return Ok(0.0);
    }
    Ok(-1.0 / ratio.ln())
}

/// Decoherence-free wavevector `(2n+1)π/Δx`, folded into `(0, π]`.
pub fn df_wavevector(delta_x: usize, n: usize) -> Result<f64> {
    if delta_x == 0 {
        return Err(Error::NoDfMode { delta_x, n });
    }
    let raw = (2 * n + 1) as f64 * PI / delta_x as f64;
    let mut k = raw.rem_euclid(2.0 * PI);
    if k > PI {
        k = 2.0 * PI - k;
    }
    if k <= 1e-12 {
        return Err(Error::NoDfMode { delta_x, n });
    }
    Ok(k)
}

/// Doublon frequency at the `n`-th decoherence-free wavevector.
pub fn df_frequency(params: &WaveguideParams, delta_x: usize, n: usize) -> Result<f64> {
    let k = df_wavevector(delta_x, n)?;
    doublon_dispersion(params.u, params.j, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn dispersion_examples() {
        assert_abs_diff_eq!(doublon_dispersion(10.0, 1.0, PI / 2.0).unwrap(), 10.392, epsilon = 5e-4);
        assert_abs_diff_eq!(doublon_dispersion(10.0, 1.0, PI).unwrap(), 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(doublon_dispersion(10.0, 1.0, 0.0).unwrap(), 116f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(doublon_dispersion(-10.0, 1.0, PI).unwrap(), -10.0, epsilon = 1e-12);
        assert!(doublon_dispersion(0.0, 1.0, 0.3).is_err());
    }

    #[test]
    fn localization_examples() {
        assert_abs_diff_eq!(localization_length(10.0, 1.0, PI / 2.0).unwrap(), 0.506, epsilon = 1e-3);
        assert_eq!(localization_length(10.0, 1.0, PI).unwrap(), 0.0);
        assert_eq!(localization_length(10.0, 1.0, -PI).unwrap(), 0.0);
        let expected = -1.0 / (2f64.sqrt() - 1.0).ln();
        assert_abs_diff_eq!(localization_length(4.0, 1.0, 0.0).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 1.1346, epsilon = 1e-4);
        assert!(localization_length(-1.0, 1.0, 0.0).is_err());
        assert!(localization_length(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn df_wavevector_examples() {
        assert_abs_diff_eq!(df_wavevector(2, 0).unwrap(), PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(df_wavevector(1, 0).unwrap(), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(df_wavevector(4, 1).unwrap(), 0.75 * PI, epsilon = 1e-15);
        // 3π/2 reflects onto π/2
        assert_abs_diff_eq!(df_wavevector(2, 1).unwrap(), PI / 2.0, epsilon = 1e-15);
        assert!(matches!(df_wavevector(0, 0), Err(Error::NoDfMode { .. })));
    }

    #[test]
    fn df_frequency_examples() {
        let p = WaveguideParams::new(199, 1.0, 10.0).unwrap();
        assert_abs_diff_eq!(df_frequency(&p, 2, 0).unwrap(), 10.392, epsilon = 5e-4);
        assert_abs_diff_eq!(df_frequency(&p, 1, 0).unwrap(), 10.0, epsilon = 1e-12);
        let p = WaveguideParams::new(199, 1.0, 4.0).unwrap();
        assert_abs_diff_eq!(df_frequency(&p, 2, 0).unwrap(), 24f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn band_separation_threshold() {
        for (u, separated) in [(3.9, false), (4.0, true), (10.0, true)] {
            let p = WaveguideParams::new(10, 1.0, u).unwrap();
            assert_eq!(p.bands_separated(), separated);
            // doublon minimum (U) against free two-photon maximum (4J)
            let (lo, _) = doublon_band(u, 1.0);
            assert_eq!(lo >= 4.0, separated);
        }
    }

    #[test]
    fn group_velocity_matches_finite_difference() {
        for &k in &[0.3, 1.0, PI / 2.0, 2.5] {
            let h = 1e-6;
            let fd = (doublon_dispersion(10.0, 1.0, k + h).unwrap()
                - doublon_dispersion(10.0, 1.0, k - h).unwrap())
                / (2.0 * h);
            assert_abs_diff_eq!(doublon_group_velocity(10.0, 1.0, k).unwrap(), fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn rejects_bad_layouts() {
        let wg = WaveguideParams::new(10, 1.0, 10.0).unwrap();
        let bad = [vec![], vec![0], vec![11], vec![3, 3], vec![5, 2]];
        for points in bad {
            let cfg = SystemConfig {
                waveguide: wg.clone(),
                atoms: vec![AtomSpec::new(1.0, 1.0, 0.1, points)],
                coupling_variant: CouplingVariant::SinglePhoton,
            };
            assert!(cfg.validate().is_err());
        }
        assert!(WaveguideParams::new(1, 1.0, 1.0).is_err());
        assert!(WaveguideParams::new(5, 0.0, 1.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dispersion_even_and_bounded(u in 0.1f64..20.0, k in -PI..PI) {
                let w = doublon_dispersion(u, 1.0, k).unwrap();
                let w_neg = doublon_dispersion(u, 1.0, -k).unwrap();
                prop_assert!((w - w_neg).abs() < 1e-12);
                let (lo, hi) = doublon_band(u, 1.0);
                prop_assert!(w >= lo - 1e-12 && w <= hi + 1e-12);
            }

            #[test]
            fn dispersion_decreasing_in_abs_k(u in 0.1f64..20.0, a in 0.0..PI, b in 0.0..PI) {
                prop_assume!((a - b).abs() > 1e-6);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                prop_assert!(doublon_dispersion(u, 1.0, lo).unwrap() > doublon_dispersion(u, 1.0, hi).unwrap());
            }

            #[test]
            fn localization_decreasing_in_abs_k(u in 0.5f64..20.0, a in 0.0f64..3.1, b in 0.0f64..3.1) {
                prop_assume!((a - b).abs() > 1e-4);
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let s_lo = localization_length(u, 1.0, lo).unwrap();
                let s_hi = localization_length(u, 1.0, hi).unwrap();
                prop_assert!(s_lo > s_hi && s_hi > 0.0);
            }
        }
    }
}
