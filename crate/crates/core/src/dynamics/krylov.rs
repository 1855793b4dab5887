//! Adaptive Lanczos propagation of `exp(−iHt)`.
//!
//! Each step builds an `m`-dimensional Krylov space from the current state,
//! diagonalizes the tridiagonal projection, and takes the largest step whose
//! a-posteriori error estimate `β_m |[e^{−iT dt} e₁]_m|` stays below the
//! tolerance. Sample times are hit exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;
use crate::spectral::small_eigen;

const BREAKDOWN: f64 = 1e-13;
const MIN_STEP: f64 = 1e-12;

pub(crate) struct KrylovStats {
    pub steps: usize,
}

struct Subspace {
    basis: Vec<Vec<Complex64>>,
    theta: Vec<f64>,
    /// Row-major `m × m` eigenvectors of `T`.
    s: Vec<f64>,
    /// `β_m`; zero when the space is invariant.
    next_beta: f64,
}

impl Subspace {
    fn dim(&self) -> usize {
        self.theta.len()
    }

    /// `e^{−iT dt} e₁` in the Lanczos basis.
    fn coefficients(&self, dt: f64) -> Vec<Complex64> {
        let m = self.dim();
        // e₁ in the eigenbasis is the first row of S
        let phases: Vec<Complex64> = (0..m)
            .map(|k| Complex64::from_polar(self.s[k], -self.theta[k] * dt))
            .collect();
        (0..m)
            .map(|row| {
                (0..m)
                    .map(|k| phases[k] * self.s[row * m + k])
                    .sum::<Complex64>()
            })
            .collect()
    }

    fn error(&self, dt: f64) -> f64 {
        if self.next_beta == 0.0 {
            return 0.0;
        }
        let c = self.coefficients(dt);
        self.next_beta * c[self.dim() - 1].norm()
    }
}

fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn cnorm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn lanczos(h: &SparseSymMatrix, v: &[Complex64], m_max: usize) -> Result<Subspace> {
    let d = v.len();
    let beta0 = cnorm(v);
    let mut basis: Vec<Vec<Complex64>> = vec![v.iter().map(|x| x / beta0).collect()];
    let mut alpha = Vec::with_capacity(m_max);
    let mut beta = Vec::with_capacity(m_max);
    let mut w = vec![Complex64::default(); d];
    let mut next_beta = 0.0;
    loop {
        let j = basis.len() - 1;
        h.apply_complex(&basis[j], &mut w);
        alpha.push(cdot(&basis[j], &w).re);
        for _ in 0..2 {
            for q in &basis {
                let c = cdot(q, &w);
                for (x, y) in w.iter_mut().zip(q) {
                    *x -= c * y;
                }
            }
        }
        let b = cnorm(&w);
        if b < BREAKDOWN {
            break;
        }
        if basis.len() == m_max {
            next_beta = b;
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    let m = alpha.len();
    let mut t = vec![0.0; m * m];
    for i in 0..m {
        t[i * m + i] = alpha[i];
        if i + 1 < m {
            t[i * m + i + 1] = beta[i];
            t[(i + 1) * m + i] = beta[i];
        }
    }
    let (theta, s) = small_eigen(m, &t)?;
    Ok(Subspace {
        basis,
        theta,
        s,
        next_beta,
    })
}

/// Propagates `v` in place from `t0` to `t1`.
pub(crate) fn advance(
    h: &SparseSymMatrix,
    v: &mut Vec<Complex64>,
    t0: f64,
    t1: f64,
    m_max: usize,
    tol: f64,
    stats: &mut KrylovStats,
) -> Result<()> {
    let mut t = t0;
    let m_max = m_max.min(v.len()).max(1);
    while t1 - t > 0.0 {
        let remaining = t1 - t;
        let space = lanczos(h, v, m_max)?;
        let dt = if space.error(remaining) <= tol {
            remaining
        } else {
            // largest acceptable step by bisection; the estimate grows with dt
            let (mut lo, mut hi) = (0.0, remaining);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                if space.error(mid) <= tol {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-6 * hi {
                    break;
                }
            }
            lo
        };
        if dt < MIN_STEP {
            return Err(Error::StepUnderflow { time: t, step: dt });
        }
        let beta0 = cnorm(v);
        let c = space.coefficients(dt);
        v.iter_mut().for_each(|x| *x = Complex64::default());
        for (q, ck) in space.basis.iter().zip(&c) {
            let ck = ck * beta0;
            for (x, y) in v.iter_mut().zip(q) {
                *x += ck * y;
            }
        }
        t = if dt == remaining { t1 } else { t + dt };
        stats.steps += 1;
    }
    Ok(())
}
