use faer::Side;

use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

/// All eigenpairs of `h`, ascending. Eigenvectors are returned as columns.
pub(crate) fn full_eigen(h: &SparseSymMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let dense = h.to_dense();
    let evd = dense
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let d = h.dim();
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..d).map(|i| s[i]).collect();
    let vectors: Vec<Vec<f64>> = (0..d).map(|c| (0..d).map(|r| u[(r, c)]).collect()).collect();
    Ok((values, vectors))
}

/// Eigenvalues of a small dense symmetric matrix given row-major, ascending,
/// with eigenvectors as columns of the returned row-major matrix.
pub(crate) fn small_eigen(m: usize, a: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mat = faer::Mat::<f64>::from_fn(m, m, |i, j| a[i * m + j]);
    let evd = mat
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let values = (0..m).map(|i| s[i]).collect();
    let mut vecs = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            vecs[i * m + j] = u[(i, j)];
        }
    }
    Ok((values, vecs))
}
