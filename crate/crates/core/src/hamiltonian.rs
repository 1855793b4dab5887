//! Sector Hamiltonian assembly.
//!
//! Matrix elements are taken between normalized Fock states: moving a photon
//! from a site holding `n_from` photons onto one holding `n_to` carries
//! `√n_from · √(n_to + 1)`, and raising `|1⟩ → |2⟩` carries `√2`.

use std::f64::consts::SQRT_2;

pub use crate::sparse::{SparseSymMatrix, SymBuilder};

use crate::basis::{BasisIndex, BasisState};
use crate::error::Result;
use crate::model::SystemConfig;

/// Builds the two-excitation sector Hamiltonian on an open chain.
pub fn build_hamiltonian(config: &SystemConfig, basis: &BasisIndex) -> Result<SparseSymMatrix> {
    config.validate_layout()?;
    basis.check_matches(config)?;

    let n = config.n_cavities();
    let hop = config.waveguide.j;
    let u = config.waveguide.u;
    let mut h = SymBuilder::new(basis.dim());

    for (idx, &state) in basis.states().iter().enumerate() {
        match state {
            BasisState::AtomDouble(a) => {
                let atom = &config.atoms[a];
                h.add(idx, idx, atom.delta1 + atom.delta2);
                for x in atom.sites() {
                    let target = basis.index_of(BasisState::AtomPhoton(a, x))?;
                    h.add(idx, target, SQRT_2 * atom.g);
                }
            }
            BasisState::AtomPair(a, b) => {
                let (atom_a, atom_b) = (&config.atoms[a], &config.atoms[b]);
                h.add(idx, idx, atom_a.delta1 + atom_b.delta1);
                // either atom relaxes and emits at one of its own points
                for x in atom_a.sites() {
                    h.add(idx, basis.index_of(BasisState::AtomPhoton(b, x))?, atom_a.g);
                }
                for x in atom_b.sites() {
                    h.add(idx, basis.index_of(BasisState::AtomPhoton(a, x))?, atom_b.g);
                }
            }
            BasisState::AtomPhoton(a, j) => {
                let atom = &config.atoms[a];
                h.add(idx, idx, atom.delta1);
                if j + 1 < n {
                    h.add(idx, basis.index_of(BasisState::AtomPhoton(a, j + 1))?, -hop);
                }
                for x in atom.sites() {
                    let amp = if x == j { SQRT_2 } else { 1.0 };
                    h.add(idx, basis.pair_index(j, x), amp * atom.g);
                }
            }
            BasisState::AtomSingle(a) => {
                let atom = &config.atoms[a];
                h.add(idx, idx, atom.delta1);
                // g σ⁺ a_x a_x on (a_x†)²|vac⟩/√2 gives √2
                for x in atom.sites() {
                    h.add(idx, basis.pair_index(x, x), SQRT_2 * atom.g);
                }
            }
            BasisState::PhotonPair(j, k) => {
                if j == k {
                    h.add(idx, idx, u);
                }
                for (target, amp) in pair_hops(n, j, k) {
                    let t = basis.pair_index(target.0, target.1);
                    if t > idx {
                        h.add(idx, t, -hop * amp);
                    }
                }
            }
        }
    }

    Ok(h.finish())
}

/// Nearest-neighbour moves of one photon out of the pair `(j, k)`, with the
/// bosonic amplitude of each move.
fn pair_hops(n: usize, j: usize, k: usize) -> Vec<((usize, usize), f64)> {
    let occupancy = |site: usize| (site == j) as usize + (site == k) as usize;
    let mut moves = Vec::with_capacity(4);
    let sources: &[usize] = if j == k { &[j] } else { &[j, k] };
    for &from in sources {
        let other = if from == j { k } else { j };
        for to in [from.wrapping_sub(1), from + 1] {
            if to >= n {
                continue;
            }
            let n_from = occupancy(from) as f64;
            let n_to = occupancy(to) as f64;
            let amp = n_from.sqrt() * (n_to + 1.0).sqrt();
            let pair = if to <= other { (to, other) } else { (other, to) };
            moves.push((pair, amp));
        }
    }
    moves
}
