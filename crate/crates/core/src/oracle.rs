//! Brute-force reference Hamiltonian on the truncated tensor-product space.
//!
//! Every term is built as an explicit product of local ladder operators and
//! applied to product states; sector basis states are embedded by acting
//! with creation operators on the vacuum. Nothing here shares code with
//! [`crate::hamiltonian`], so the two can check each other.

use std::collections::BTreeMap;

use faer::Mat;

use crate::basis::{BasisIndex, BasisState};
use crate::error::{invalid, Error, Result};
use crate::model::{CouplingVariant, SystemConfig};
use crate::sparse::SparseSymMatrix;

const MAX_FULL_DIM: usize = 2_000_000;

/// Small dense operator on one local factor, row-major.
#[derive(Debug, Clone)]
struct LocalOp {
    dim: usize,
    m: Vec<f64>,
}

impl LocalOp {
    fn identity(dim: usize) -> Self {
        let mut m = vec![0.0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = 1.0;
        }
        Self { dim, m }
    }

    /// `|j⟩⟨j−1|·√j`: atomic raising on transition `j` or, with `j` running
    /// over all levels, the bosonic creation operator.
    fn raise(dim: usize, j: usize) -> Self {
        let mut op = Self {
            dim,
            m: vec![0.0; dim * dim],
        };
        if j < dim {
            op.m[j * dim + (j - 1)] = (j as f64).sqrt();
        }
        op
    }

    fn creation(dim: usize) -> Self {
        let mut op = Self {
            dim,
            m: vec![0.0; dim * dim],
        };
        for n in 1..dim {
            op.m[n * dim + (n - 1)] = (n as f64).sqrt();
        }
        op
    }

    fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                m[c * d + r] = self.m[r * d + c];
            }
        }
        Self { dim: d, m }
    }

    fn then(&self, left: &LocalOp) -> LocalOp {
        // returns left · self
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        for r in 0..d {
            for c in 0..d {
                m[r * d + c] = (0..d).map(|k| left.m[r * d + k] * self.m[k * d + c]).sum();
            }
        }
        LocalOp { dim: d, m }
    }
}

/// Product of operators, rightmost applied first.
fn product(ops: &[&LocalOp]) -> LocalOp {
    let mut acc = LocalOp::identity(ops[0].dim);
    for op in ops.iter().rev() {
        acc = acc.then(op);
    }
    acc
}

#[derive(Debug, Clone)]
struct Term {
    coeff: f64,
    factors: Vec<(usize, LocalOp)>,
}

/// Reference Hamiltonian together with the embedding of the sector basis.
#[derive(Debug, Clone)]
pub struct DenseOracle {
    pub full_dim: usize,
    /// Nonzero entries of the full truncated Hamiltonian.
    pub full_entries: BTreeMap<(usize, usize), f64>,
    /// Excitation charge of every product state.
    pub charges: Vec<usize>,
    /// Each sector basis state as a sparse full-space vector.
    pub embedding: Vec<Vec<(usize, f64)>>,
    /// `Pᵀ H P` on the sector basis.
    pub projected: Mat<f64>,
}

struct Space {
    dims: Vec<usize>,
    strides: Vec<usize>,
    full_dim: usize,
}

impl Space {
    fn new(dims: Vec<usize>) -> Result<Self> {
        let mut strides = vec![0; dims.len()];
        let mut full: usize = 1;
        for (i, &d) in dims.iter().enumerate().rev() {
            strides[i] = full;
            full = full.checked_mul(d).ok_or(Error::OracleTooLarge(usize::MAX))?;
            if full > MAX_FULL_DIM {
                return Err(Error::OracleTooLarge(full));
            }
        }
        Ok(Self {
            dims,
            strides,
            full_dim: full,
        })
    }

    fn local(&self, state: usize, site: usize) -> usize {
        (state / self.strides[site]) % self.dims[site]
    }

    fn apply(&self, term: &Term, state: usize) -> Vec<(usize, f64)> {
        let mut out = vec![(state, term.coeff)];
        for (site, op) in &term.factors {
            let mut next = Vec::new();
            for &(s, amp) in &out {
                let col = self.local(s, *site);
                for row in 0..op.dim {
                    let v = op.m[row * op.dim + col];
                    if v != 0.0 {
                        let t = s - col * self.strides[*site] + row * self.strides[*site];
                        next.push((t, amp * v));
                    }
                }
            }
            out = next;
        }
        out
    }

    fn apply_vec(&self, term: &Term, v: &BTreeMap<usize, f64>) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for (&s, &amp) in v {
            for (t, a) in self.apply(term, s) {
                *out.entry(t).or_insert(0.0) += amp * a;
            }
        }
        out
    }
}

/// Builds the reference Hamiltonian with at most `max_occupancy` photons
/// per cavity.
pub fn build_dense_oracle(config: &SystemConfig, max_occupancy: usize) -> Result<DenseOracle> {
    config.validate_layout()?;
    let n = config.n_cavities();
    let na = config.n_atoms();
    if n > 8 {
        return Err(invalid("waveguide.n", "oracle supports at most 8 cavities"));
    }
    if max_occupancy < 2 {
        return Err(invalid("max_occupancy", "need room for two photons per cavity"));
    }
    let atom_dim = match config.coupling_variant {
        CouplingVariant::SinglePhoton => 3,
        CouplingVariant::TwoPhoton => 2,
    };
    let cav_dim = max_occupancy + 1;
    let mut dims = vec![atom_dim; na];
    dims.extend(std::iter::repeat_n(cav_dim, n));
    let space = Space::new(dims)?;
    let atom_site = |a: usize| a;
    let cav_site = |j: usize| na + j;

    let s1p = LocalOp::raise(atom_dim, 1);
    let s1m = s1p.adjoint();
    let s2p = LocalOp::raise(atom_dim, 2);
    let s2m = s2p.adjoint();
    let ad = LocalOp::creation(cav_dim);
    let a = ad.adjoint();

    let mut terms = Vec::new();
    for (i, atom) in config.atoms.iter().enumerate() {
        let site = atom_site(i);
        terms.push(Term {
            coeff: atom.delta1,
            factors: vec![(site, product(&[&s1p, &s1m]))],
        });
        if config.coupling_variant == CouplingVariant::SinglePhoton {
            terms.push(Term {
                coeff: 0.5 * (atom.delta1 + atom.delta2),
                factors: vec![(site, product(&[&s2p, &s2m]))],
            });
        }
    }
    let u = config.waveguide.u;
    let hop = config.waveguide.j;
    for j in 0..n {
        terms.push(Term {
            coeff: 0.5 * u,
            factors: vec![(cav_site(j), product(&[&ad, &ad, &a, &a]))],
        });
    }
    for j in 0..n.saturating_sub(1) {
        terms.push(Term {
            coeff: -hop,
            factors: vec![(cav_site(j), ad.clone()), (cav_site(j + 1), a.clone())],
        });
        terms.push(Term {
            coeff: -hop,
            factors: vec![(cav_site(j + 1), ad.clone()), (cav_site(j), a.clone())],
        });
    }
    for (i, atom) in config.atoms.iter().enumerate() {
        let site = atom_site(i);
        for x in atom.sites() {
            let cav = cav_site(x);
            match config.coupling_variant {
                CouplingVariant::SinglePhoton => {
                    for (up, down) in [(&s1p, &s1m), (&s2p, &s2m)] {
                        terms.push(Term {
                            coeff: atom.g,
                            factors: vec![(site, up.clone()), (cav, a.clone())],
                        });
                        terms.push(Term {
                            coeff: atom.g,
                            factors: vec![(cav, ad.clone()), (site, down.clone())],
                        });
                    }
                }
                CouplingVariant::TwoPhoton => {
                    terms.push(Term {
                        coeff: atom.g,
                        factors: vec![(site, s1p.clone()), (cav, product(&[&a, &a]))],
                    });
                    terms.push(Term {
                        coeff: atom.g,
                        factors: vec![(cav, product(&[&ad, &ad])), (site, s1m.clone())],
                    });
                }
            }
        }
    }

    let mut full_entries = BTreeMap::new();
    for col in 0..space.full_dim {
        for term in &terms {
            for (row, v) in space.apply(term, col) {
                *full_entries.entry((row, col)).or_insert(0.0) += v;
            }
        }
    }
    full_entries.retain(|_, v| *v != 0.0);

    let atom_weight = match config.coupling_variant {
        CouplingVariant::SinglePhoton => 1,
        CouplingVariant::TwoPhoton => 2,
    };
    let charges = (0..space.full_dim)
        .map(|s| {
            let atoms: usize = (0..na).map(|i| space.local(s, atom_site(i))).sum();
            let photons: usize = (0..n).map(|j| space.local(s, cav_site(j))).sum();
            atom_weight * atoms + photons
        })
        .collect();

    let basis = BasisIndex::build(config)?;
    let raise_atom = |i: usize, op: &LocalOp| Term {
        coeff: 1.0,
        factors: vec![(atom_site(i), op.clone())],
    };
    let create = |j: usize| Term {
        coeff: 1.0,
        factors: vec![(cav_site(j), ad.clone())],
    };
    let mut embedding = Vec::with_capacity(basis.dim());
    for &state in basis.states() {
        let ops: Vec<Term> = match state {
            BasisState::AtomDouble(i) => {
                let mut t = raise_atom(i, &product(&[&s2p, &s1p]));
                t.coeff = 1.0 / 2f64.sqrt();
                vec![t]
            }
            BasisState::AtomPair(i, k) => vec![raise_atom(i, &s1p), raise_atom(k, &s1p)],
            BasisState::AtomPhoton(i, j) => vec![raise_atom(i, &s1p), create(j)],
            BasisState::AtomSingle(i) => vec![raise_atom(i, &s1p)],
            BasisState::PhotonPair(j, k) => vec![create(j), create(k)],
        };
        let mut v = BTreeMap::new();
        v.insert(0usize, 1.0);
        for op in ops.iter().rev() {
            v = space.apply_vec(op, &v);
        }
        let norm = v.values().map(|x| x * x).sum::<f64>().sqrt();
        embedding.push(v.into_iter().map(|(s, x)| (s, x / norm)).collect::<Vec<_>>());
    }

    // H P column by column, then Pᵀ (H P)
    let mut rows_by_state: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for (&(r, c), &v) in &full_entries {
        rows_by_state.entry(c).or_default().push((r, v));
    }
    let d = basis.dim();
    let mut projected = Mat::<f64>::zeros(d, d);
    let mut position: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for (i, vec) in embedding.iter().enumerate() {
        for &(s, x) in vec {
            position.entry(s).or_default().push((i, x));
        }
    }
    for (jdx, vec) in embedding.iter().enumerate() {
        let mut hv: BTreeMap<usize, f64> = BTreeMap::new();
        for &(s, x) in vec {
            if let Some(col) = rows_by_state.get(&s) {
                for &(r, v) in col {
                    *hv.entry(r).or_insert(0.0) += v * x;
                }
            }
        }
        for (s, y) in hv {
            if let Some(targets) = position.get(&s) {
                for &(idx, x) in targets {
                    projected[(idx, jdx)] += x * y;
                }
            }
        }
    }

    Ok(DenseOracle {
        full_dim: space.full_dim,
        full_entries,
        charges,
        embedding,
        projected,
    })
}

impl DenseOracle {
    /// Largest entry of `[H, Q]` with `Q` the excitation charge.
    pub fn charge_commutator_norm(&self) -> f64 {
        self.full_entries
            .iter()
            .map(|(&(r, c), &v)| (v * (self.charges[c] as f64 - self.charges[r] as f64)).abs())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise difference between the projected oracle and `h`.
    pub fn max_deviation(&self, h: &SparseSymMatrix) -> f64 {
        let d = self.projected.nrows();
        assert_eq!(d, h.dim());
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((self.projected[(i, j)] - h.get(i, j)).abs());
            }
        }
        worst
    }

    /// Largest deviation of the embedded sector vectors from orthonormality.
    pub fn embedding_orthonormality_error(&self) -> f64 {
        let maps: Vec<BTreeMap<usize, f64>> =
            self.embedding.iter().map(|v| v.iter().copied().collect()).collect();
        let mut worst: f64 = 0.0;
        for (i, a) in maps.iter().enumerate() {
            for (j, b) in maps.iter().enumerate() {
                let dot: f64 = a.iter().filter_map(|(s, x)| b.get(s).map(|y| x * y)).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - expect).abs());
            }
        }
        worst
    }
}
