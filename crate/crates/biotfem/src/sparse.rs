//! Compressed-row sparse matrices and an accumulating builder.
//!
//! The builder keeps one ordered column map per row, so the finalized CSR
//! output is identical regardless of the order in which cells were
//! assembled.

use std::collections::BTreeMap;
use std::io::Write;

/// Compressed-row sparse matrix with sorted, duplicate-free column indices
/// per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            row_offsets: vec![0; nrows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for i in 0..self.nrows {
            let mut sum = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                sum += self.values[k] * x[self.col_indices[k]];
            }
            y[i] = sum;
        }
    }

    /// y += c * A x
    pub fn mul_vec_add(&self, c: f64, x: &[f64], y: &mut [f64]) {
        for i in 0..self.nrows {
            let mut sum = 0.0;
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                sum += self.values[k] * x[self.col_indices[k]];
            }
            y[i] += c * sum;
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_offsets = counts.clone();
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = counts;
        for i in 0..self.nrows {
            for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                let j = self.col_indices[k];
                let pos = next[j];
                col_indices[pos] = i;
                values[pos] = self.values[k];
                next[j] += 1;
            }
        }
        CsrMatrix { nrows: self.ncols, ncols: self.nrows, row_offsets, col_indices, values }
    }

    /// Maximum absolute difference between A and A^T.
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.nrows, self.ncols);
        let t = self.transpose();
        let mut max = 0.0f64;
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = t.row(i);
            let (mut a, mut b) = (0, 0);
            while a < ca.len() || b < cb.len() {
                if b >= cb.len() || (a < ca.len() && ca[a] < cb[b]) {
                    max = max.max(va[a].abs());
                    a += 1;
                } else if a >= ca.len() || cb[b] < ca[a] {
                    max = max.max(vb[b].abs());
                    b += 1;
                } else {
                    max = max.max((va[a] - vb[b]).abs());
                    a += 1;
                    b += 1;
                }
            }
        }
        max
    }

    /// In-place scaling by a constant.
    pub fn scale(&mut self, c: f64) {
        for v in &mut self.values {
            *v *= c;
        }
    }

    pub fn scaled(&self, c: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.scale(c);
        m
    }

    /// Extracts the submatrix with the given rows and columns (both index
    /// lists must be sorted).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (new, &old) in cols.iter().enumerate() {
            col_map[old] = new;
        }
        let mut b = CsrBuilder::new(rows.len(), cols.len());
        for (new_i, &old_i) in rows.iter().enumerate() {
            let (cs, vs) = self.row(old_i);
            for (&j, &v) in cs.iter().zip(vs) {
                if col_map[j] != usize::MAX {
                    b.add(new_i, col_map[j], v);
                }
            }
        }
        b.finish()
    }

    /// Writes the matrix in MatrixMarket coordinate format (1-based).
    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for i in 0..self.nrows {
            let (cs, vs) = self.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
            }
        }
        Ok(())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let (cs, vs) = self.row(i);
            if let Ok(k) = cs.binary_search(&i) {
                d[i] = vs[k];
            }
        }
        d
    }
}

/// Accumulating builder: entries with the same (row, col) are summed.
#[derive(Debug, Clone)]
pub struct CsrBuilder {
    nrows: usize,
    ncols: usize,
    rows: Vec<BTreeMap<usize, f64>>,
}

impl CsrBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        CsrBuilder { nrows, ncols, rows: vec![BTreeMap::new(); nrows] }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols);
        *self.rows[i].entry(j).or_insert(0.0) += v;
    }

    pub fn finish(self) -> CsrMatrix {
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        row_offsets.push(0);
        let nnz: usize = self.rows.iter().map(|r| r.len()).sum();
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for row in self.rows {
            for (j, v) in row {
                col_indices.push(j);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, row_offsets, col_indices, values }
    }
}

/// Sum of scaled matrices with identical dimensions (patterns may differ).
pub fn add_scaled(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
    assert!(!terms.is_empty());
    let (nrows, ncols) = (terms[0].1.nrows, terms[0].1.ncols);
    let mut b = CsrBuilder::new(nrows, ncols);
    for &(c, m) in terms {
        assert_eq!((m.nrows, m.ncols), (nrows, ncols));
        if c == 0.0 {
            continue;
        }
        for i in 0..nrows {
            let (cs, vs) = m.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                b.add(i, j, c * v);
            }
        }
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CsrMatrix {
        let mut b = CsrBuilder::new(3, 3);
        b.add(0, 0, 2.0);
        b.add(0, 1, -1.0);
        b.add(1, 0, -1.0);
        b.add(1, 1, 2.0);
        b.add(1, 2, -1.0);
        b.add(2, 1, -1.0);
        b.add(2, 2, 2.0);
        b.finish()
    }

    #[test]
    fn builder_accumulates_duplicates() {
        let mut b = CsrBuilder::new(2, 2);
        b.add(0, 0, 1.0);
        b.add(0, 0, 2.5);
        let m = b.finish();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.values[0], 3.5);
    }

    #[test]
    fn matvec_tridiagonal() {
        let m = sample();
        let mut y = vec![0.0; 3];
        m.mul_vec(&[1.0, 1.0, 1.0], &mut y);
        assert_eq!(y, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn transpose_and_symmetry() {
        let m = sample();
        assert_eq!(m.asymmetry(), 0.0);
        let mut b = CsrBuilder::new(2, 3);
        b.add(0, 2, 5.0);
        b.add(1, 0, 1.0);
        let r = b.finish();
        let t = r.transpose();
        assert_eq!(t.nrows, 3);
        assert_eq!(t.row(2), (&[0usize][..], &[5.0][..]));
    }

    #[test]
    fn submatrix_extraction() {
        let m = sample();
        let s = m.submatrix(&[0, 2], &[0, 2]);
        assert_eq!(s.nrows, 2);
        assert_eq!(s.diagonal(), vec![2.0, 2.0]);
        assert_eq!(s.nnz(), 2);
    }

    #[test]
    fn add_scaled_combines_patterns() {
        let a = CsrMatrix::identity(3);
        let m = sample();
        let s = add_scaled(&[(2.0, &a), (1.0, &m)]);
        assert_eq!(s.diagonal(), vec![4.0, 4.0, 4.0]);
    }

    #[test]
    fn matrix_market_roundtrip_text() {
        let m = sample();
        let mut buf = Vec::new();
        m.write_matrix_market(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("%%MatrixMarket"));
        assert!(text.contains("3 3 7"));
    }
}
