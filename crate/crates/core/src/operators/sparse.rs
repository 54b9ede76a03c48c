//! Minimal CSR sparse matrix: just what the discrete operators, iterative
//! solvers, and quadratic-form assembly need.

use crate::error::{Error, Result};
use crate::report::fmt_f64;
use std::io::Write;
use std::path::Path;

/// Compressed sparse row matrix. Column indices within a row keep insertion
/// order; `matvec` accumulates in storage order so that a matrix built from a
/// stencil enumeration reproduces the stencil application bit-for-bit.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

/// Incremental row-by-row builder.
pub struct CsrBuilder {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        CsrBuilder {
            nrows,
            ncols,
            row_ptr: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    /// Append one entry to the row currently being built.
    #[inline]
    pub fn push(&mut self, col: usize, val: f64) {
        debug_assert!(col < self.ncols);
        self.cols.push(col);
        self.vals.push(val);
    }

    /// Close the current row.
    #[inline]
    pub fn finish_row(&mut self) {
        self.row_ptr.push(self.cols.len());
    }

    pub fn build(self) -> CsrMatrix {
        assert_eq!(self.row_ptr.len(), self.nrows + 1, "row count mismatch");
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr,
            cols: self.cols,
            vals: self.vals,
        }
    }
}

impl CsrMatrix {
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    /// y = A x, accumulating each row in storage order.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            let mut acc = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                acc += v * x[c];
            }
            y[r] = acc;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                if c == r {
                    d[r] += v;
                }
            }
        }
        d
    }

    /// Transpose; output rows carry ascending column indices.
    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols];
        for &c in &self.cols {
            counts[c] += 1;
        }
        let mut row_ptr = vec![0usize; self.ncols + 1];
        for i in 0..self.ncols {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        let mut cols = vec![0usize; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        let mut next = row_ptr.clone();
        for r in 0..self.nrows {
            let (rc, rv) = self.row(r);
            for (&c, &v) in rc.iter().zip(rv) {
                let slot = next[c];
                cols[slot] = r;
                vals[slot] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            cols,
            vals,
        }
    }

    /// alpha * A + beta * B with duplicate columns merged.
    pub fn add(alpha: f64, a: &CsrMatrix, beta: f64, b: &CsrMatrix) -> Result<CsrMatrix> {
        if a.nrows != b.nrows || a.ncols != b.ncols {
            return Err(Error::ShapeMismatch(format!(
                "add of {}x{} and {}x{}",
                a.nrows, a.ncols, b.nrows, b.ncols
            )));
        }
        let mut builder = CsrBuilder::new(a.nrows, a.ncols);
        let mut accum: Vec<f64> = vec![0.0; a.ncols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..a.nrows {
            for (m, scale) in [(a, alpha), (b, beta)] {
                let (cols, vals) = m.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    if accum[c] == 0.0 && !touched.contains(&c) {
                        touched.push(c);
                    }
                    accum[c] += scale * v;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                builder.push(c, accum[c]);
                accum[c] = 0.0;
            }
            touched.clear();
            builder.finish_row();
        }
        Ok(builder.build())
    }

    /// Sparse product A * B.
    pub fn multiply(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::ShapeMismatch(format!(
                "product of {}x{} and {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut builder = CsrBuilder::new(self.nrows, other.ncols);
        let mut accum: Vec<f64> = vec![0.0; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&k, &v) in cols.iter().zip(vals) {
                let (bc, bv) = other.row(k);
                for (&c, &w) in bc.iter().zip(bv) {
                    if accum[c] == 0.0 && !touched.contains(&c) {
                        touched.push(c);
                    }
                    accum[c] += v * w;
                }
            }
            touched.sort_unstable();
            for &c in &touched {
                builder.push(c, accum[c]);
                accum[c] = 0.0;
            }
            touched.clear();
            builder.finish_row();
        }
        Ok(builder.build())
    }

    /// Submatrix on `keep` rows and columns (in the order given).
    pub fn restrict(&self, keep: &[usize]) -> CsrMatrix {
        let mut new_index = vec![usize::MAX; self.ncols.max(self.nrows)];
        for (new, &old) in keep.iter().enumerate() {
            new_index[old] = new;
        }
        let mut builder = CsrBuilder::new(keep.len(), keep.len());
        for &old_row in keep {
            let (cols, vals) = self.row(old_row);
            for (&c, &v) in cols.iter().zip(vals) {
                let nc = new_index[c];
                if nc != usize::MAX {
                    builder.push(nc, v);
                }
            }
            builder.finish_row();
        }
        builder.build()
    }

    /// Symmetric part (A + A^T) / 2.
    pub fn symmetric_part(&self) -> Result<CsrMatrix> {
        CsrMatrix::add(0.5, self, 0.5, &self.transpose())
    }

    /// Largest relative asymmetry max |A_ij - A_ji| / max |A_ij|.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let diff = CsrMatrix::add(1.0, self, -1.0, &t).expect("same shape");
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        diff.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                d[r][c] += v;
            }
        }
        d
    }

    /// Coordinate text export: header `%%EPL-COO rows cols nnz`, then one
    /// `i j value` line per entry.
    pub fn write_coo(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!("%%EPL-COO {} {} {}\n", self.nrows, self.ncols, self.nnz()));
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out.push_str(&format!("{} {} {}\n", r, c, fmt_f64(v)));
            }
        }
        let mut f = std::fs::File::create(path)?;
        f.write_all(out.as_bytes())?;
        Ok(())
    }
}
