//! Two-excitation sector basis and its dense index map.
//!
//! Block ordering (single-photon coupling): every photon-free atomic state
//! first (`AtomDouble(n)` for each atom, then `AtomPair(n, m)` in
//! lexicographic order), then one block of `N` cavities per atom for
//! `AtomPhoton(n, j)`, then the photon pairs `(j, k)`, `j ≤ k`, row-major.
//! For two-photon coupling the atomic block is `AtomSingle(n)` and the photon
//! pairs follow directly.
//!
//! All indices in [`BasisState`] are 0-based.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{CouplingVariant, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisState {
    /// Atom `n` in `|2⟩`, no photons.
    AtomDouble(usize),
    /// Atoms `n < m` both in `|1⟩`, no photons.
    AtomPair(usize, usize),
    /// Atom `n` in `|1⟩` with one photon in cavity `j`.
    AtomPhoton(usize, usize),
    /// Two-photon coupling only: atom `n` in `|1⟩`, no photons.
    AtomSingle(usize),
    /// Normalized two-photon state in cavities `j ≤ k`; `(j, j)` is
    /// `(a_j†)²|vac⟩/√2`.
    PhotonPair(usize, usize),
}

impl BasisState {
    /// Number of photons in the waveguide.
    pub fn photons(&self) -> usize {
        match self {
            BasisState::AtomDouble(_) | BasisState::AtomPair(..) | BasisState::AtomSingle(_) => 0,
            BasisState::AtomPhoton(..) => 1,
            BasisState::PhotonPair(..) => 2,
        }
    }

    /// Sum of atomic level indices.
    pub fn atomic_level(&self) -> usize {
        match self {
            BasisState::AtomDouble(_) | BasisState::AtomPair(..) => 2,
            BasisState::AtomPhoton(..) | BasisState::AtomSingle(_) => 1,
            BasisState::PhotonPair(..) => 0,
        }
    }

    /// Photon-pair sites, if any.
    pub fn photon_pair(&self) -> Option<(usize, usize)> {
        match *self {
            BasisState::PhotonPair(j, k) => Some((j, k)),
            _ => None,
        }
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisState::AtomDouble(n) => write!(f, "AtomDouble({n})"),
            BasisState::AtomPair(n, m) => write!(f, "AtomPair({n},{m})"),
            BasisState::AtomPhoton(n, j) => write!(f, "AtomPhoton({n},{j})"),
            BasisState::AtomSingle(n) => write!(f, "AtomSingle({n})"),
            BasisState::PhotonPair(j, k) => write!(f, "PhotonPair({j},{k})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BasisIndex {
    variant: CouplingVariant,
    n_atoms: usize,
    n_cavities: usize,
    atom_block: usize,
    photon_offset: usize,
    dim: usize,
    states: Vec<BasisState>,
}

impl BasisIndex {
    pub fn build(config: &SystemConfig) -> Result<Self> {
        config.validate_layout()?;
        let na = config.n_atoms();
        let n = config.n_cavities();
        let mut states = Vec::new();
        match config.coupling_variant {
            CouplingVariant::SinglePhoton => {
                states.extend((0..na).map(BasisState::AtomDouble));
                for a in 0..na {
                    for b in a + 1..na {
                        states.push(BasisState::AtomPair(a, b));
                    }
                }
                for a in 0..na {
                    states.extend((0..n).map(|j| BasisState::AtomPhoton(a, j)));
                }
            }
            CouplingVariant::TwoPhoton => {
                states.extend((0..na).map(BasisState::AtomSingle));
            }
        }
        let atom_block = match config.coupling_variant {
            CouplingVariant::SinglePhoton => na * (na + 1) / 2,
            CouplingVariant::TwoPhoton => na,
        };
        let photon_offset = states.len();
        for j in 0..n {
            for k in j..n {
                states.push(BasisState::PhotonPair(j, k));
            }
        }
        Ok(Self {
            variant: config.coupling_variant,
            n_atoms: na,
            n_cavities: n,
            atom_block,
            photon_offset,
            dim: states.len(),
            states,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variant(&self) -> CouplingVariant {
        self.variant
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_cavities(&self) -> usize {
        self.n_cavities
    }

    /// Number of photon-free states at the start of the ordering.
    pub fn atom_block_len(&self) -> usize {
        self.atom_block
    }

    /// Index of `PhotonPair(0, 0)`.
    pub fn photon_offset(&self) -> usize {
        self.photon_offset
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn state_of(&self, index: usize) -> Option<BasisState> {
        self.states.get(index).copied()
    }

    pub fn index_of(&self, state: BasisState) -> Result<usize> {
        let na = self.n_atoms;
        let n = self.n_cavities;
        let bad = || Error::InvalidState(state.to_string());
        match (self.variant, state) {
            (CouplingVariant::SinglePhoton, BasisState::AtomDouble(a)) if a < na => Ok(a),
            (CouplingVariant::SinglePhoton, BasisState::AtomPair(a, b)) if a < b && b < na => {
                // pairs before row `a`: sum_{i<a} (na - 1 - i)
                let before = a * (2 * na - a - 1) / 2;
                Ok(na + before + (b - a - 1))
            }
            (CouplingVariant::SinglePhoton, BasisState::AtomPhoton(a, j)) if a < na && j < n => {
                Ok(self.atom_block + a * n + j)
            }
            (CouplingVariant::TwoPhoton, BasisState::AtomSingle(a)) if a < na => Ok(a),
            (_, BasisState::PhotonPair(j, k)) if j <= k && k < n => {
                Ok(self.photon_offset + pair_index(n, j, k))
            }
            _ => Err(bad()),
        }
    }

    /// Index of the photon pair on sites `j`, `k` in either order.
    pub fn pair_index(&self, j: usize, k: usize) -> usize {
        let (lo, hi) = if j <= k { (j, k) } else { (k, j) };
        self.photon_offset + pair_index(self.n_cavities, lo, hi)
    }

    /// Excitation charge of a state: `level + photons` for single-photon
    /// coupling, `2·level + photons` for two-photon coupling.
    pub fn charge(&self, state: BasisState) -> usize {
        match self.variant {
            CouplingVariant::SinglePhoton => state.atomic_level() + state.photons(),
            CouplingVariant::TwoPhoton => 2 * state.atomic_level() + state.photons(),
        }
    }

    pub fn check_matches(&self, config: &SystemConfig) -> Result<()> {
        let expected = expected_dim(config);
        if config.coupling_variant != self.variant
            || config.n_atoms() != self.n_atoms
            || config.n_cavities() != self.n_cavities
        {
            return Err(Error::BasisMismatch {
                basis: self.dim,
                config: expected,
            });
        }
        Ok(())
    }
}

/// `j·n − j(j−1)/2 + (k − j)`: offset of `(j, k)` among pairs with `j ≤ k`.
fn pair_index(n: usize, j: usize, k: usize) -> usize {
    j * n - j * (j.max(1) - 1) / 2 + (k - j)
}

/// Sector dimension implied by a configuration.
pub fn expected_dim(config: &SystemConfig) -> usize {
    let na = config.n_atoms();
    let n = config.n_cavities();
    let photons = n * (n + 1) / 2;
    match config.coupling_variant {
        CouplingVariant::SinglePhoton => na * (na + 1) / 2 + na * n + photons,
        CouplingVariant::TwoPhoton => na + photons,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AtomSpec, WaveguideParams};

    fn config(n: usize, na: usize, variant: CouplingVariant) -> SystemConfig {
        SystemConfig {
            waveguide: WaveguideParams { n, j: 1.0, u: 10.0 },
            atoms: (0..na).map(|a| AtomSpec::new(1.0, 1.0, 0.1, vec![1 + a % n])).collect(),
            coupling_variant: variant,
        }
    }

    #[test]
    fn dimensions() {
        let b = BasisIndex::build(&config(199, 2, CouplingVariant::SinglePhoton)).unwrap();
        assert_eq!(b.dim(), 20301);
        assert_eq!(b.dim(), 202 * 201 / 2);
        let b = BasisIndex::build(&config(1, 1, CouplingVariant::SinglePhoton)).unwrap();
        assert_eq!(b.dim(), 3);
        assert_eq!(
            b.states(),
            &[BasisState::AtomDouble(0), BasisState::AtomPhoton(0, 0), BasisState::PhotonPair(0, 0)]
        );
        let b = BasisIndex::build(&config(199, 1, CouplingVariant::TwoPhoton)).unwrap();
        assert_eq!(b.dim(), 19901);
    }

    #[test]
    fn block_offsets() {
        let cfg = config(7, 2, CouplingVariant::SinglePhoton);
        let b = BasisIndex::build(&cfg).unwrap();
        assert_eq!(b.index_of(BasisState::AtomDouble(0)).unwrap(), 0);
        assert_eq!(b.index_of(BasisState::AtomPair(0, 1)).unwrap(), 2);
        assert_eq!(b.index_of(BasisState::PhotonPair(0, 0)).unwrap(), 3 + 2 * 7);
        assert_eq!(b.index_of(BasisState::PhotonPair(6, 6)).unwrap(), b.dim() - 1);
        assert_eq!(b.pair_index(4, 2), b.index_of(BasisState::PhotonPair(2, 4)).unwrap());
        assert_eq!(b.atom_block_len(), 3);
        assert_eq!(expected_dim(&cfg), b.dim());
    }

    #[test]
    fn exhaustive_round_trip() {
        for variant in [CouplingVariant::SinglePhoton, CouplingVariant::TwoPhoton] {
            for na in 1..=4 {
                for n in [1, 2, 3, 10, 50] {
                    let b = BasisIndex::build(&config(n, na, variant)).unwrap();
                    assert_eq!(b.dim(), expected_dim(&config(n, na, variant)));
                    let mut seen = vec![false; b.dim()];
                    for (i, &s) in b.states().iter().enumerate() {
                        let idx = b.index_of(s).unwrap();
                        assert_eq!(idx, i, "{s}");
                        assert!(!seen[idx]);
                        seen[idx] = true;
                        assert_eq!(b.state_of(idx), Some(s));
                        assert_eq!(b.charge(s), 2, "{s}");
                    }
                    assert!(seen.iter().all(|&x| x));
                }
            }
        }
    }

    #[test]
    fn rejects_foreign_states() {
        let single = BasisIndex::build(&config(5, 2, CouplingVariant::SinglePhoton)).unwrap();
        let two = BasisIndex::build(&config(5, 2, CouplingVariant::TwoPhoton)).unwrap();
        assert!(single.index_of(BasisState::AtomSingle(0)).is_err());
        assert!(two.index_of(BasisState::AtomDouble(0)).is_err());
        assert!(single.index_of(BasisState::AtomPair(1, 0)).is_err());
        assert!(single.index_of(BasisState::AtomPhoton(2, 0)).is_err());
        assert!(single.index_of(BasisState::PhotonPair(3, 2)).is_err());
        assert!(single.index_of(BasisState::PhotonPair(0, 5)).is_err());
        assert!(single.state_of(single.dim()).is_none());
        assert!(single.check_matches(&config(5, 2, CouplingVariant::TwoPhoton)).is_err());
        assert!(single.check_matches(&config(5, 2, CouplingVariant::SinglePhoton)).is_ok());
    }
}
