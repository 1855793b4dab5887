//! Real symmetric sparse matrix stored as its upper triangle, with a full
//! row-compressed copy for products.

use std::io::Write;

use faer::Mat;
use num_complex::Complex64;

use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    /// `(row, col, value)` with `row <= col`, sorted, no duplicates.
    upper: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Accumulates entries of a symmetric matrix; either triangle may be given.
#[derive(Debug, Clone)]
pub struct SymBuilder {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SymBuilder {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// Adds `value` at `(i, j)` and, implicitly, `(j, i)`. Repeated
    /// positions are summed.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        assert!(i < self.dim && j < self.dim, "entry ({i}, {j}) outside dimension {}", self.dim);
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.entries.push((r, c, value));
    }

    pub fn finish(mut self) -> SparseSymMatrix {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut upper: Vec<(usize, usize, f64)> = Vec::with_capacity(self.entries.len());
        for (r, c, v) in self.entries {
            match upper.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => upper.push((r, c, v)),
            }
        }
        upper.retain(|e| e.2 != 0.0);
        SparseSymMatrix::from_upper(self.dim, upper)
    }
}

impl SparseSymMatrix {
    fn from_upper(dim: usize, upper: Vec<(usize, usize, f64)>) -> Self {
        let mut counts = vec![0usize; dim];
        for &(r, c, _) in &upper {
            counts[r] += 1;
            if r != c {
                counts[c] += 1;
            }
        }
        let mut row_ptr = vec![0usize; dim + 1];
        for i in 0..dim {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        let nnz = row_ptr[dim];
        let mut cols = vec![0usize; nnz];
        let mut vals = vec![0.0; nnz];
        let mut fill = row_ptr.clone();
        // Lower-triangle entries of row c are (c, r) with r < c; visiting the
        // upper list in row order writes every row's columns in ascending order.
        for &(r, c, v) in &upper {
            if r != c {
                cols[fill[c]] = r;
                vals[fill[c]] = v;
                fill[c] += 1;
            }
        }
        for &(r, c, v) in &upper {
            cols[fill[r]] = c;
            vals[fill[r]] = v;
            fill[r] += 1;
        }
        let mut m = Self {
            dim,
            upper,
            row_ptr,
            cols,
            vals,
        };
        m.sort_rows();
        m
    }

    fn sort_rows(&mut self) {
        for i in 0..self.dim {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut row: Vec<(usize, f64)> = self.cols[range.clone()]
                .iter()
                .copied()
                .zip(self.vals[range.clone()].iter().copied())
                .collect();
            if row.windows(2).all(|w| w[0].0 < w[1].0) {
                continue;
            }
            row.sort_by_key(|e| e.0);
            for (slot, (c, v)) in range.zip(row) {
                self.cols[slot] = c;
                self.vals[slot] = v;
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored upper-triangle entries `(row, col, value)`, `row <= col`.
    pub fn upper_entries(&self) -> &[(usize, usize, f64)] {
        &self.upper
    }

    pub fn nnz_upper(&self) -> usize {
        self.upper.len()
    }

    /// Nonzeros of the full matrix.
    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.upper
            .binary_search_by(|e| (e.0, e.1).cmp(&(r, c)))
            .map(|p| self.upper[p].2)
            .unwrap_or(0.0)
    }

    /// Row `i` as `(column, value)` pairs in ascending column order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    #[inline]
    fn row_dot_real(&self, i: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for p in self.row_ptr[i]..self.row_ptr[i + 1] {
            acc += self.vals[p] * x[self.cols[p]];
        }
        acc
    }

    #[inline]
    fn row_dot_complex(&self, i: usize, x: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for p in self.row_ptr[i]..self.row_ptr[i + 1] {
            acc += x[self.cols[p]] * self.vals[p];
        }
        acc
    }

    /// `y = H x`. Rows are distributed over threads when the `parallel`
    /// feature is on; each row is summed in column order either way.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        par::fill_indexed(y, |i| self.row_dot_real(i, x));
    }

    pub fn apply_complex(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        par::fill_indexed(y, |i| self.row_dot_complex(i, x));
    }

    /// Single-threaded `y = H x`.
    pub fn apply_complex_sequential(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        par::fill_indexed_sequential(y, |i| self.row_dot_complex(i, x));
    }

    /// `⟨x|H|x⟩` for a complex vector.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut hx = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply_complex(x, &mut hx);
        x.iter().zip(&hx).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.upper {
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
        m
    }

    /// Writes the matrix in Matrix Market symmetric coordinate format
    /// (1-based, lower triangle).
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(w, "{} {} {}", self.dim, self.dim, self.upper.len())?;
        let mut lower: Vec<(usize, usize, f64)> = self.upper.iter().map(|&(r, c, v)| (c, r, v)).collect();
        lower.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        for (r, c, v) in lower {
            writeln!(w, "{} {} {:e}", r + 1, c + 1, v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseSymMatrix {
        let mut b = SymBuilder::new(4);
        b.add(0, 0, 2.0);
        b.add(1, 0, -1.0);
        b.add(0, 1, -0.5);
        b.add(2, 3, 3.0);
        b.add(3, 3, 1.0);
        b.add(1, 2, 0.0);
        b.finish()
    }

    #[test]
    fn builder_merges_and_symmetrizes() {
        let m = sample();
        assert_eq!(m.get(0, 1), -1.5);
        assert_eq!(m.get(1, 0), -1.5);
        assert_eq!(m.get(3, 2), 3.0);
        assert_eq!(m.get(1, 2), 0.0);
        assert_eq!(m.nnz_upper(), 4);
        assert_eq!(m.nnz(), 6);
        let d = m.to_dense();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(d[(i, j)], d[(j, i)]);
            }
        }
    }

    #[test]
    fn products_match_dense() {
        let m = sample();
        let d = m.to_dense();
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut y = [0.0; 4];
        m.apply(&x, &mut y);
        for i in 0..4 {
            let expect: f64 = (0..4).map(|j| d[(i, j)] * x[j]).sum();
            assert!((y[i] - expect).abs() < 1e-14);
        }
        let xc: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, -v)).collect();
        let mut a = vec![Complex64::default(); 4];
        let mut b = vec![Complex64::default(); 4];
        m.apply_complex(&xc, &mut a);
        m.apply_complex_sequential(&xc, &mut b);
        assert_eq!(a, b);
        assert!((a[0].re - y[0]).abs() < 1e-14);
        assert_eq!(m.norm_bound(), 4.0);
    }

    #[test]
    fn coordinate_dump() {
        let mut out = Vec::new();
        sample().write_coordinate(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "4 4 4");
        assert_eq!(lines[2], "1 1 2e0");
        assert_eq!(lines[3], "2 1 -1.5e0");
        assert_eq!(lines.len(), 6);
    }
}
