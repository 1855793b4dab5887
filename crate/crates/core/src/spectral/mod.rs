//! Eigen-analysis of the sector Hamiltonian: full or shift-invert windowed
//! eigensolves, inverse participation ratios, and bound-state detection.

mod dense;
mod shift_invert;

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::basis::BasisIndex;
use crate::error::{Error, Result};
use crate::par;
use crate::sparse::SparseSymMatrix;

pub(crate) use dense::{full_eigen, small_eigen};

/// Largest dimension diagonalized densely by default.
pub const DENSE_THRESHOLD: usize = 6000;

/// Default BIC acceptance floor, in units of `1/D`.
pub const BIC_FLOOR_FACTOR: f64 = 10.0;

/// Eigenvalues closer than this are reported as one degenerate cluster.
pub const DEGENERACY_GAP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EigenMode {
    /// Every eigenpair by dense diagonalization.
    Full,
    /// `count` eigenpairs nearest `target` by shift-invert Lanczos.
    Window { target: f64, count: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub dense_threshold: usize,
    /// Residual tolerance relative to the matrix norm bound.
    pub tolerance: f64,
    /// Largest Lanczos basis before giving up.
    pub max_basis: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dense_threshold: DENSE_THRESHOLD,
            tolerance: 1e-10,
            max_basis: 1500,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    pub dim: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit vectors, one per eigenvalue, largest-magnitude entry positive.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    pub ipr: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Member of a cluster with gap below [`DEGENERACY_GAP`]; its vector is
    /// one arbitrary basis element of the cluster.
    pub degenerate: Vec<bool>,
}

impl SpectralResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// JSON summary without eigenvectors.
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}

pub fn eigensolve(h: &SparseSymMatrix, mode: EigenMode) -> Result<SpectralResult> {
    eigensolve_with(h, mode, &SolverOptions::default())
}

pub fn eigensolve_with(
    h: &SparseSymMatrix,
    mode: EigenMode,
    opts: &SolverOptions,
) -> Result<SpectralResult> {
    let (values, mut vectors, residuals) = match mode {
        EigenMode::Full => {
            if h.dim() > opts.dense_threshold {
                return Err(Error::DenseTooLarge {
                    dim: h.dim(),
                    threshold: opts.dense_threshold,
                });
            }
            let (values, vectors) = full_eigen(h)?;
            let residuals = par::map_range(values.len(), |i| residual(h, &vectors[i], values[i]));
            (values, vectors, residuals)
        }
        EigenMode::Window { target, count } => {
            let solve = shift_invert::window_eigen(h, target, count, opts.tolerance, opts.max_basis)?;
            let mut order: Vec<usize> = (0..solve.values.len()).collect();
            order.sort_by(|&a, &b| solve.values[a].total_cmp(&solve.values[b]));
            let values = order.iter().map(|&i| solve.values[i]).collect();
            let residuals = order.iter().map(|&i| solve.residuals[i]).collect();
            let mut vectors = solve.vectors;
            let vectors = order.iter().map(|&i| std::mem::take(&mut vectors[i])).collect();
            (values, vectors, residuals)
        }
    };
    for v in vectors.iter_mut() {
        fix_phase(v);
    }
    let ipr = par::map_slice(&vectors, |v| ipr_unchecked(v.iter().map(|x| x * x)));
    let degenerate = flag_clusters(&values);
    Ok(SpectralResult {
        dim: h.dim(),
        eigenvalues: values,
        eigenvectors: vectors,
        ipr,
        residuals,
        degenerate,
    })
}

fn residual(h: &SparseSymMatrix, v: &[f64], lambda: f64) -> f64 {
    let mut hv = vec![0.0; v.len()];
    h.apply(v, &mut hv);
    hv.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
}

/// Sign convention: the largest-magnitude entry (first on ties) is positive.
pub(crate) fn fix_phase(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn flag_clusters(values: &[f64]) -> Vec<bool> {
    let mut flags = vec![false; values.len()];
    for i in 1..values.len() {
        if values[i] - values[i - 1] < DEGENERACY_GAP {
            flags[i] = true;
            flags[i - 1] = true;
        }
    }
    flags
}

fn ipr_unchecked(probabilities: impl Iterator<Item = f64>) -> f64 {
    probabilities.map(|p| p * p).sum()
}

fn check_norm(norm_sq: f64) -> Result<()> {
    if (norm_sq.sqrt() - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm_sq.sqrt()));
    }
    Ok(())
}

/// Inverse participation ratio `Σ |ψ_n|⁴` of a unit vector.
pub fn ipr(v: &[f64]) -> Result<f64> {
    check_norm(v.iter().map(|x| x * x).sum())?;
    Ok(ipr_unchecked(v.iter().map(|x| x * x)))
}

pub fn ipr_complex(v: &[Complex64]) -> Result<f64> {
    check_norm(v.iter().map(|x| x.norm_sqr()).sum())?;
    Ok(ipr_unchecked(v.iter().map(|x| x.norm_sqr())))
}

/// Two-photon content of an eigenstate.
///
/// `P_b(m, n) = |⟨0,mn|ψ⟩|` with `|0,mn⟩ = a_m† a_n† |vac⟩`. That state has
/// norm √2 for `m = n`, so diagonal entries are √2 times the normalized-basis
/// amplitude, and `P_b(n, n±1)/P_b(n, n)` equals `e^{−1/ς}` for a pure
/// doublon.
#[derive(Debug, Clone, Serialize)]
pub struct BoundStateProfile {
    pub index: usize,
    pub eigenvalue: f64,
    pub ipr: f64,
    pub n: usize,
    /// Row-major `n × n`, symmetric.
    pub overlaps: Vec<f64>,
    /// `|amplitude|²` per normalized pair state, upper triangle stored
    /// symmetrically.
    #[serde(skip)]
    weights: Vec<f64>,
}

impl BoundStateProfile {
    pub fn from_vector(basis: &BasisIndex, v: &[f64], index: usize, eigenvalue: f64, ipr: f64) -> Self {
        let n = basis.n_cavities();
        let mut overlaps = vec![0.0; n * n];
        let mut weights = vec![0.0; n * n];
        for j in 0..n {
            for k in j..n {
                let amp = v[basis.pair_index(j, k)].abs();
                let p = if j == k { std::f64::consts::SQRT_2 * amp } else { amp };
                overlaps[j * n + k] = p;
                overlaps[k * n + j] = p;
                weights[j * n + k] = amp * amp;
                weights[k * n + j] = amp * amp;
            }
        }
        Self {
            index,
            eigenvalue,
            ipr,
            n,
            overlaps,
            weights,
        }
    }

    /// `P_b(m, n)` for 0-based cavities.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.overlaps[m * self.n + n]
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Cavity with the largest diagonal overlap.
    pub fn peak_site(&self) -> usize {
        let d = self.diagonal();
        (0..self.n).fold(0, |best, i| if d[i] > d[best] { i } else { best })
    }

    /// Mean of `P_b(n, n−1)` and `P_b(n, n+1)` over `P_b(n, n)`.
    pub fn off_diagonal_ratio(&self, site: usize) -> f64 {
        let mut neighbours = Vec::new();
        if site > 0 {
            neighbours.push(self.get(site, site - 1));
        }
        if site + 1 < self.n {
            neighbours.push(self.get(site, site + 1));
        }
        let mean = neighbours.iter().sum::<f64>() / neighbours.len() as f64;
        mean / self.get(site, site)
    }

    /// Total probability carried by photon pairs.
    pub fn pair_weight(&self) -> f64 {
        let mut total = 0.0;
        for j in 0..self.n {
            for k in j..self.n {
                total += self.weights[j * self.n + k];
            }
        }
        total
    }

    /// Fraction of the pair weight with at least one photon outside the
    /// 0-based cavity range `[lo, hi]`.
    pub fn weight_outside(&self, lo: usize, hi: usize) -> f64 {
        let mut outside = 0.0;
        for j in 0..self.n {
            for k in j..self.n {
                if j < lo || k > hi {
                    outside += self.weights[j * self.n + k];
                }
            }
        }
        outside / self.pair_weight()
    }

    /// `P_b` as a CSV grid, rows `m`, columns `n`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for m in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|n| format!("{:.12e}", self.get(m, n))).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Picks the bound state in the continuum among the two highest-IPR
/// eigenstates: the one whose eigenvalue is nearest `target`.
pub fn find_bic(
    result: &SpectralResult,
    basis: &BasisIndex,
    target: f64,
    floor_factor: f64,
) -> Result<(usize, BoundStateProfile)> {
    if result.eigenvectors.is_empty() {
        return Err(Error::MissingEigenvectors);
    }
    let floor = floor_factor / result.dim as f64;
    let mut order: Vec<usize> = (0..result.len()).collect();
    order.sort_by(|&a, &b| result.ipr[b].total_cmp(&result.ipr[a]).then(a.cmp(&b)));
    let candidates: Vec<usize> = order.iter().take(2).copied().filter(|&i| result.ipr[i] > floor).collect();
    let best = candidates
        .iter()
        .copied()
        .min_by(|&a, &b| {
            (result.eigenvalues[a] - target)
                .abs()
                .total_cmp(&(result.eigenvalues[b] - target).abs())
        })
        .ok_or(Error::BicNotFound {
            best_ipr: result.ipr[order[0]],
            floor,
        })?;
    let profile = BoundStateProfile::from_vector(
        basis,
        &result.eigenvectors[best],
        best,
        result.eigenvalues[best],
        result.ipr[best],
    );
    Ok((best, profile))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_hamiltonian, SymBuilder};
    use crate::model::{AtomSpec, CouplingVariant, SystemConfig, WaveguideParams};
    use approx::assert_abs_diff_eq;

    #[test]
    fn ipr_examples() {
        let mut delta = vec![0.0; 7];
        delta[3] = 1.0;
        assert_eq!(ipr(&delta).unwrap(), 1.0);
        let d = 16;
        let uniform = vec![1.0 / (d as f64).sqrt(); d];
        assert_abs_diff_eq!(ipr(&uniform).unwrap(), 1.0 / d as f64, epsilon = 1e-15);
        let v = [0.8f64.sqrt(), 0.2f64.sqrt(), 0.0, 0.0];
        assert_abs_diff_eq!(ipr(&v).unwrap(), 0.68, epsilon = 1e-14);
        assert!(matches!(ipr(&[1.0, 1.0]), Err(Error::NotNormalized(_))));
        let c = [Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        assert_abs_diff_eq!(ipr_complex(&c).unwrap(), 0.36f64.powi(2) + 0.64f64.powi(2), epsilon = 1e-15);
    }

    #[test]
    fn phase_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        fix_phase(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
    }

    #[test]
    fn clusters_flagged() {
        let mut b = SymBuilder::new(3);
        b.add(0, 0, 1.0);
        b.add(1, 1, 1.0);
        b.add(2, 2, 2.0);
        let r = eigensolve(&b.finish(), EigenMode::Full).unwrap();
        assert_eq!(r.degenerate, vec![true, true, false]);
    }

    #[test]
    fn dense_threshold_enforced() {
        let b = SymBuilder::new(10).finish();
        let opts = SolverOptions {
            dense_threshold: 5,
            ..Default::default()
        };
        assert!(matches!(
            eigensolve_with(&b, EigenMode::Full, &opts),
            Err(Error::DenseTooLarge { .. })
        ));
    }

    fn chain_config(g: f64) -> SystemConfig {
        SystemConfig {
            waveguide: WaveguideParams { n: 12, j: 1.0, u: 10.0 },
            atoms: vec![AtomSpec::new(5.3, 5.0, g, vec![5, 7])],
            coupling_variant: CouplingVariant::SinglePhoton,
        }
    }

    #[test]
    fn decoupled_atom_is_selected() {
        let cfg = chain_config(0.0);
        let basis = BasisIndex::build(&cfg).unwrap();
        let h = build_hamiltonian(&cfg, &basis).unwrap();
        let r = eigensolve(&h, EigenMode::Full).unwrap();
        assert!(r.eigenvalues.iter().any(|&e| (e - 10.3).abs() < 1e-12));
        let (i, profile) = find_bic(&r, &basis, 10.3, BIC_FLOOR_FACTOR).unwrap();
        assert_abs_diff_eq!(r.eigenvalues[i], 10.3, epsilon = 1e-12);
        assert_abs_diff_eq!(r.ipr[i], 1.0, epsilon = 1e-12);
        assert_eq!(profile.pair_weight(), 0.0);
    }

    #[test]
    fn full_mode_invariants() {
        let cfg = chain_config(0.25);
        let basis = BasisIndex::build(&cfg).unwrap();
        let h = build_hamiltonian(&cfg, &basis).unwrap();
        let r = eigensolve(&h, EigenMode::Full).unwrap();
        assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let scale = h.norm_bound();
        let floor = 1.0 / r.dim as f64;
        for (i, v) in r.eigenvectors.iter().enumerate() {
            let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((n - 1.0).abs() < 1e-10);
            assert!(r.residuals[i] <= 1e-8 * scale);
            assert!(r.ipr[i] >= floor - 1e-12 && r.ipr[i] <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn window_agrees_with_full() {
        let cfg = chain_config(0.25);
        let basis = BasisIndex::build(&cfg).unwrap();
        let h = build_hamiltonian(&cfg, &basis).unwrap();
        let full = eigensolve(&h, EigenMode::Full).unwrap();
        for target in [10.35, 0.3, -2.0] {
            let win = eigensolve(&h, EigenMode::Window { target, count: 6 }).unwrap();
            assert_eq!(win.len(), 6);
            let mut nearest: Vec<f64> = full.eigenvalues.clone();
            nearest.sort_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()));
            let mut nearest = nearest[..6].to_vec();
            nearest.sort_by(f64::total_cmp);
            for (a, b) in win.eigenvalues.iter().zip(&nearest) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn bic_requires_vectors_and_floor() {
        let cfg = chain_config(0.25);
        let basis = BasisIndex::build(&cfg).unwrap();
        let h = build_hamiltonian(&cfg, &basis).unwrap();
        let mut r = eigensolve(&h, EigenMode::Full).unwrap();
        assert!(matches!(
            find_bic(&r, &basis, 10.3, 1e9),
            Err(Error::BicNotFound { .. })
        ));
        r.eigenvectors.clear();
        assert!(matches!(
            find_bic(&r, &basis, 10.3, BIC_FLOOR_FACTOR),
            Err(Error::MissingEigenvectors)
        ));
    }
}
