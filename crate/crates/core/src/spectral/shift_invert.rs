//! Shift-invert Lanczos for eigenpairs nearest a target energy.
//!
//! `(H − σ)⁻¹` is applied through a sparse LU factorization; the Lanczos
//! basis is fully reorthogonalized, and candidate pairs are accepted on the
//! true residual `‖Hv − λv‖`.

use faer::sparse::{SparseColMat, Triplet};
use faer::prelude::Solve;
use faer::Mat;

use super::dense::small_eigen;
use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

pub(crate) struct WindowSolve {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

struct ShiftedSolver {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    dim: usize,
}

impl ShiftedSolver {
    fn new(h: &SparseSymMatrix, shift: f64) -> Result<Self> {
        let d = h.dim();
        let mut triplets = Vec::with_capacity(h.nnz() + d);
        for i in 0..d {
            let mut has_diag = false;
            for (c, v) in h.row(i) {
                let v = if c == i {
                    has_diag = true;
                    v - shift
                } else {
                    v
                };
                triplets.push(Triplet::new(i, c, v));
            }
            if !has_diag {
                triplets.push(Triplet::new(i, i, -shift));
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(d, d, &triplets)
            .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
        Ok(Self { lu, dim: d })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::<f64>::from_fn(self.dim, 1, |i, _| b[i]);
        self.lu.solve_in_place(rhs.as_mut());
        (0..self.dim).map(|i| rhs[(i, 0)]).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            for (x, y) in v.iter_mut().zip(q) {
                *x -= c * y;
            }
        }
    }
}

fn start_vector(d: usize, seed: usize) -> Vec<f64> {
    let s = 0.7 + 0.13 * seed as f64;
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * s).sin()).collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

/// `count` eigenpairs of `h` nearest `target`.
pub(crate) fn window_eigen(
    h: &SparseSymMatrix,
    target: f64,
    count: usize,
    tol: f64,
    max_basis: usize,
) -> Result<WindowSolve> {
    let d = h.dim();
    let count = count.min(d);
    if count == 0 {
        return Ok(WindowSolve {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
        });
    }
    let scale = h.norm_bound().max(1.0);

    // an exact hit on an eigenvalue makes H − σ singular
    let mut shift = target;
    let mut solver = None;
    for attempt in 0..4 {
        match ShiftedSolver::new(h, shift) {
            Ok(s) => {
                solver = Some(s);
                break;
            }
            Err(e) if attempt == 3 => return Err(e),
            Err(_) => shift += 1e-7 * scale * (attempt + 1) as f64,
        }
    }
    let solver = solver.expect("factorization succeeded");

    let cap = max_basis.min(d).max(count);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cap);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut v = start_vector(d, 0);
    let mut restarts = 0;
    let mut best_residual = f64::INFINITY;
    let check_every = 10;

    while basis.len() < cap {
        basis.push(v.clone());
        let mut w = solver.solve(&v);
        let a = dot(&w, &v);
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        let b = norm(&w);
        let m = basis.len();

        let at_check = m >= count && (m % check_every == 0 || m == cap || b < 1e-12);
        if at_check {
            if let Some(done) = try_converge(h, &basis, &alpha, &beta, b, shift, count, tol, scale)? {
                return Ok(done);
            } else if let Some(r) = last_residual(h, &basis, &alpha, &beta, shift, count)? {
                best_residual = best_residual.min(r);
            }
        }

        if b < 1e-12 {
            // invariant subspace; continue from a fresh direction
            restarts += 1;
            let mut fresh = start_vector(d, restarts);
            orthogonalize(&mut fresh, &basis);
            let n = norm(&fresh);
            if n < 1e-10 {
                break;
            }
            fresh.iter_mut().for_each(|x| *x /= n);
            beta.push(0.0);
            v = fresh;
        } else {
            beta.push(b);
            v = w.into_iter().map(|x| x / b).collect();
        }
    }
    if let Some(done) = try_converge(h, &basis, &alpha, &beta, 0.0, shift, count, tol, scale)? {
        return Ok(done);
    }
    Err(Error::NoConvergence {
        iterations: basis.len(),
        residual: best_residual,
    })
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> Vec<f64> {
    let m = alpha.len();
    let mut t = vec![0.0; m * m];
    for i in 0..m {
        t[i * m + i] = alpha[i];
        if i + 1 < m {
            t[i * m + i + 1] = beta[i];
            t[(i + 1) * m + i] = beta[i];
        }
    }
    t
}

/// Ritz pairs of the inverse operator ordered by decreasing `|θ|`.
fn ritz(alpha: &[f64], beta: &[f64]) -> Result<(Vec<f64>, Vec<f64>, Vec<usize>)> {
    let m = alpha.len();
    let (theta, s) = small_eigen(m, &tridiagonal(alpha, beta))?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| theta[b].abs().total_cmp(&theta[a].abs()));
    Ok((theta, s, order))
}

fn ritz_vector(basis: &[Vec<f64>], s: &[f64], m: usize, col: usize) -> Vec<f64> {
    let d = basis[0].len();
    let mut x = vec![0.0; d];
    for (k, q) in basis.iter().enumerate() {
        let c = s[k * m + col];
        if c != 0.0 {
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi += c * qi;
            }
        }
    }
    let n = norm(&x);
    x.iter_mut().for_each(|v| *v /= n);
    x
}

fn residual(h: &SparseSymMatrix, x: &[f64], lambda: f64) -> f64 {
    let mut hx = vec![0.0; x.len()];
    h.apply(x, &mut hx);
    hx.iter().zip(x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
}

#[allow(clippy::too_many_arguments)]
fn try_converge(
    h: &SparseSymMatrix,
    basis: &[Vec<f64>],
    alpha: &[f64],
    beta: &[f64],
    next_beta: f64,
    shift: f64,
    count: usize,
    tol: f64,
    scale: f64,
) -> Result<Option<WindowSolve>> {
    let m = alpha.len();
    if m < count {
        return Ok(None);
    }
    let (theta, s, order) = ritz(alpha, &beta[..m - 1])?;
    // cheap Lanczos estimate gates the explicit residual check
    for &i in order.iter().take(count) {
        if theta[i] == 0.0 {
            return Ok(None);
        }
        let lam_gap = 1.0 / theta[i].abs();
        let est = next_beta * s[(m - 1) * m + i].abs() * lam_gap * lam_gap;
        if est > tol * scale {
            return Ok(None);
        }
    }
    let mut values = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for &i in order.iter().take(count) {
        let lambda = shift + 1.0 / theta[i];
        let x = ritz_vector(basis, &s, m, i);
        let r = residual(h, &x, lambda);
        if r > tol * scale {
            return Ok(None);
        }
        values.push(lambda);
        vectors.push(x);
        residuals.push(r);
    }
    Ok(Some(WindowSolve {
        values,
        vectors,
        residuals,
    }))
}

fn last_residual(
    h: &SparseSymMatrix,
    basis: &[Vec<f64>],
    alpha: &[f64],
    beta: &[f64],
    shift: f64,
    count: usize,
) -> Result<Option<f64>> {
    let m = alpha.len();
    if m < count {
        return Ok(None);
    }
    let (theta, s, order) = ritz(alpha, &beta[..m - 1])?;
    let i = order[count - 1];
    let x = ritz_vector(basis, &s, m, i);
    Ok(Some(residual(h, &x, shift + 1.0 / theta[i])))
}
