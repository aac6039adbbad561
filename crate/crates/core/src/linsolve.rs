//! Compressed-row sparse matrices and a sparse LU direct solver.
//!
//! Assembly works on coordinate triplets; [`SparseMatrix::from_triplets`]
//! sorts them by row and column and sums duplicates. Factorization is
//! delegated to faer's sparse LU with partial pivoting.

use std::fmt::Write as _;
use std::path::Path;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct TripletList {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletList {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push((row, col, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends all entries of `m` scaled by `scale` at offset `(r0, c0)`.
    pub fn add_block(&mut self, r0: usize, c0: usize, m: &SparseMatrix, scale: f64) {
        for (i, j, v) in m.iter() {
            self.entries.push((r0 + i, c0 + j, scale * v));
        }
    }

    /// Same as [`add_block`](Self::add_block) with the transpose of `m`.
    pub fn add_block_transposed(&mut self, r0: usize, c0: usize, m: &SparseMatrix, scale: f64) {
        for (i, j, v) in m.iter() {
            self.entries.push((r0 + j, c0 + i, scale * v));
        }
    }

    pub fn finalize(self) -> Result<SparseMatrix> {
        SparseMatrix::from_triplets(self.nrows, self.ncols, self.entries)
    }
}

/// Row-compressed matrix with sorted, duplicate-free column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if let Some(&(row, col, _)) = entries.iter().find(|(i, j, _)| *i >= nrows || *j >= ncols) {
            return Err(Error::IndexOutOfRange {
                row,
                col,
                nrows,
                ncols,
            });
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            if last == Some((i, j)) {
                *values.last_mut().expect("entry exists") += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension");
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows, "transpose matvec dimension");
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let xi = x[i];
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let entries = self.iter().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, entries).expect("indices in range")
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.ncols != other.nrows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols: Vec<usize> = Vec::new();
        for i in 0..self.nrows {
            cols.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: other.ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &SparseMatrix, b: f64) -> Result<SparseMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::DimensionMismatch("matrix sum".into()));
        }
        let mut t = TripletList::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        t.add_block(0, 0, self, a);
        t.add_block(0, 0, other, b);
        t.finalize()
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    /// Dense copy of the principal submatrix on `indices`.
    pub fn dense_principal(&self, indices: &[usize]) -> Vec<Vec<f64>> {
        indices
            .iter()
            .map(|&i| indices.iter().map(|&j| self.get(i, j)).collect())
            .collect()
    }

    pub fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<_> = self.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::InvalidMesh(format!("sparse conversion failed: {e:?}")))
    }

    /// Matrix Market coordinate format (1-based indices).
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "%%MatrixMarket matrix coordinate real general");
        let _ = writeln!(out, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.iter() {
            let _ = writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v);
        }
        out
    }

    pub fn write_matrix_market(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_matrix_market())?;
        Ok(())
    }

    pub fn read_matrix_market(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.starts_with('%'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty Matrix Market file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse().map_err(|_| Error::Format(header.into())))
            .collect::<Result<_>>()?;
        if dims.len() != 3 {
            return Err(Error::Format(header.into()));
        }
        let mut entries = Vec::with_capacity(dims[2]);
        for line in lines.take(dims[2]) {
            let mut it = line.split_whitespace();
            let bad = || Error::Format(line.to_string());
            let i: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let j: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let v: f64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if i == 0 || j == 0 {
                return Err(bad());
            }
            entries.push((i - 1, j - 1, v));
        }
        Self::from_triplets(dims[0], dims[1], entries)
    }
}

pub fn finalize(nrows: usize, ncols: usize, triplets: Vec<(usize, usize, f64)>) -> Result<SparseMatrix> {
    SparseMatrix::from_triplets(nrows, ncols, triplets)
}

pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Reusable LU factorization of a square sparse matrix.
pub struct LuFactorization {
    matrix: SparseMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl std::fmt::Debug for LuFactorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuFactorization")
            .field("n", &self.matrix.nrows)
            .field("nnz", &self.matrix.nnz())
            .finish()
    }
}

impl LuFactorization {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::DimensionMismatch(format!(
                "cannot factor a {}x{} matrix",
                a.nrows, a.ncols
            )));
        }
        let csc = a.to_faer()?;
        let lu = csc.sp_lu().map_err(|e| match e {
            faer::sparse::linalg::LuError::SymbolicSingular { index } => {
                Error::Singular { pivot: index }
            }
            faer::sparse::linalg::LuError::Generic(g) => {
                Error::InvalidMesh(format!("sparse LU failed: {g:?}"))
            }
        })?;
        Ok(Self {
            matrix: a.clone(),
            lu,
        })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = faer::Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = self.lu.solve(&rhs);
        (0..b.len()).map(|i| x[i]).collect()
    }

    /// Solves `A x = b`, applying one step of iterative refinement when the
    /// first residual exceeds the tolerance.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.matrix.nrows {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for a system of size {}",
                b.len(),
                self.matrix.nrows
            )));
        }
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let mut x = self.raw_solve(b);
        if let Some(p) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular { pivot: p });
        }
        let mut res = residual(&self.matrix, &x, b);
        let mut rel = norm2(&res) / bnorm;
        if rel > SOLVE_TOLERANCE {
            let dx = self.raw_solve(&res);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            res = residual(&self.matrix, &x, b);
            rel = norm2(&res) / bnorm;
        }
        if !(rel <= SOLVE_TOLERANCE) {
            return Err(Error::InaccurateSolve { residual: rel });
        }
        Ok(x)
    }
}

impl LuFactorization {
    /// Solves `A^T x = b` with the same factorization.
    pub fn solve_transposed(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.matrix.nrows {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {} for a system of size {}",
                b.len(),
                self.matrix.nrows
            )));
        }
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let raw = |rhs: &[f64]| -> Vec<f64> {
            let col = faer::Col::<f64>::from_fn(rhs.len(), |i| rhs[i]);
            let x = self.lu.solve_transpose(&col);
            (0..rhs.len()).map(|i| x[i]).collect()
        };
        let res = |x: &[f64]| -> Vec<f64> {
            let ax = self.matrix.transpose_matvec(x);
            ax.iter().zip(b).map(|(a, bi)| bi - a).collect()
        };
        let mut x = raw(b);
        if let Some(p) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::Singular { pivot: p });
        }
        let mut r = res(&x);
        let mut rel = norm2(&r) / bnorm;
        if rel > SOLVE_TOLERANCE {
            let dx = raw(&r);
            for (xi, d) in x.iter_mut().zip(&dx) {
                *xi += d;
            }
            r = res(&x);
            rel = norm2(&r) / bnorm;
        }
        if !(rel <= SOLVE_TOLERANCE) {
            return Err(Error::InaccurateSolve { residual: rel });
        }
        Ok(x)
    }
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.matvec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn direct_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    LuFactorization::new(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn duplicates_are_summed() {
        let m = finalize(1, 1, vec![(0, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 3.0);
    }

    #[test]
    fn empty_triplets_give_zero_matrix() {
        let m = finalize(3, 4, vec![]).unwrap();
        assert_eq!(m.nnz(), 0);
        assert_eq!(m.matvec(&[1.0; 4]), vec![0.0; 3]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            finalize(2, 2, vec![(2, 0, 1.0)]),
            Err(Error::IndexOutOfRange { row: 2, .. })
        ));
    }

    #[test]
    fn identity_matvec() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let id = finalize(5, 5, (0..5).map(|i| (i, i, 1.0)).collect()).unwrap();
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = id.matvec(&x);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() <= 1e-15);
        }
        assert_eq!(id, SparseMatrix::identity(5));
    }

    #[test]
    fn rows_sorted_after_finalize() {
        let m = finalize(2, 3, vec![(1, 2, 1.0), (0, 1, 1.0), (1, 0, 2.0), (0, 0, 1.0)]).unwrap();
        for i in 0..2 {
            let cols: Vec<_> = m.row(i).map(|(j, _)| j).collect();
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn small_solves() {
        let id = SparseMatrix::identity(4);
        assert_eq!(direct_solve(&id, &[1.0, 2.0, 3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        let d = finalize(2, 2, vec![(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let x = direct_solve(&d, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn random_spd_system() {
        let n = 50;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut v: f64 = (0..n).map(|k| g[k][i] * g[k][j]).sum();
                if i == j {
                    v += 1.0;
                }
                t.push((i, j, v));
            }
        }
        let a = finalize(n, n, t).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = direct_solve(&a, &b).unwrap();
        let r = residual(&a, &x, &b);
        assert!(norm2(&r) / norm2(&b) <= 1e-10);
    }

    #[test]
    fn singular_matrix_reported() {
        let a = finalize(3, 3, vec![(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(
            direct_solve(&a, &[1.0, 1.0, 1.0]),
            Err(Error::Singular { .. }) | Err(Error::InaccurateSolve { .. })
        ));
    }

    #[test]
    fn product_and_transposed_solve() {
        let a = finalize(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]).unwrap();
        let b = finalize(3, 2, vec![(0, 1, 4.0), (2, 0, 5.0), (1, 0, -1.0)]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.get(0, 0), 10.0);
        assert_eq!(c.get(0, 1), 4.0);
        assert_eq!(c.get(1, 0), -3.0);
        let s = c.combine(1.0, &SparseMatrix::identity(2), 2.0).unwrap();
        assert_eq!(s.get(1, 1), 2.0);
        let m = finalize(2, 2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 1, 3.0)]).unwrap();
        let lu = LuFactorization::new(&m).unwrap();
        let x = lu.solve_transposed(&[2.0, 7.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn matrix_market_roundtrip() {
        let m = finalize(3, 2, vec![(0, 1, 0.1), (2, 0, -3.5e-7)]).unwrap();
        let back = SparseMatrix::read_matrix_market(&m.to_matrix_market()).unwrap();
        assert_eq!(back, m);
    }
}
