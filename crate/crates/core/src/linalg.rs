//! Dense matrices over a prime field.
//!
//! Everything here is exact. Pivot choice is deterministic (first nonzero entry
//! in scan order) so that repeated runs produce identical bases.

use std::fmt;
use std::ops::Range;

use rand::Rng;
use thiserror::Error;

use crate::ffield::{Fp, PrimeField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("shape mismatch: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("matrix is singular")]
    Singular,
    #[error("right-hand side is not in the column space")]
    NoSolution,
    #[error("matrices are over different fields")]
    FieldMismatch,
}

/// Row-major dense matrix of residues in `[0, p)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldMatrix {
    field: PrimeField,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

/// `row_transform · original · col_transform = result`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackedReduction {
    pub result: FieldMatrix,
    pub row_transform: FieldMatrix,
    pub col_transform: FieldMatrix,
    pub rank: usize,
}

impl fmt::Debug for FieldMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "FieldMatrix {}x{} mod {} [", self.rows, self.cols, self.field.modulus())?;
        for r in 0..self.rows {
            writeln!(f, "  {:?}", self.row(r))?;
        }
        write!(f, "]")
    }
}

impl FieldMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        FieldMatrix {
            field,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_fn(
        field: PrimeField,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> i64,
    ) -> Self {
        let mut m = Self::zeros(field, rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.data[r * cols + c] = field.reduce(f(r, c));
            }
        }
        m
    }

    /// Builds from integer rows; all rows must have the same length.
    pub fn from_rows<R: AsRef<[i64]>>(field: PrimeField, rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        Self::from_fn(field, rows.len(), cols, |r, c| rows[r].as_ref()[c])
    }

    /// Builds from residue columns, each of length `rows`.
    pub fn from_columns(field: PrimeField, rows: usize, columns: &[Vec<u32>]) -> Self {
        let mut m = Self::zeros(field, rows, columns.len());
        for (c, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (r, &v) in col.iter().enumerate() {
                m.set(r, c, v % field.modulus());
            }
        }
        m
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: u32) {
        self.data[r * self.cols + c] = v;
    }

    pub fn entry(&self, r: usize, c: usize) -> Fp {
        self.field.elem(self.get(r, c) as i64)
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<u32> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|r| (0..self.cols).all(|c| self.get(r, c) == (r == c) as u32))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.field, self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        let mut m = Self::zeros(self.field, rows.len(), cols.len());
        for (i, r) in rows.enumerate() {
            for (j, c) in cols.clone().enumerate() {
                m.set(i, j, self.get(r, c));
            }
        }
        m
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.field, rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                m.set(i, j, self.get(r, c));
            }
        }
        m
    }

    pub fn matmul(&self, other: &FieldMatrix) -> Result<FieldMatrix, LinalgError> {
        if self.field != other.field {
            return Err(LinalgError::FieldMismatch);
        }
        if self.cols != other.rows {
            return Err(LinalgError::ShapeMismatch {
                lhs: self.shape(),
                rhs: other.shape(),
            });
        }
        let p = self.field.modulus() as u64;
        let mut out = Self::zeros(self.field, self.rows, other.cols);
        let mut acc = vec![0u64; other.cols];
        for r in 0..self.rows {
            acc.iter_mut().for_each(|a| *a = 0);
            for k in 0..self.cols {
                let a = self.get(r, k) as u64;
                if a == 0 {
                    continue;
                }
                for (c, slot) in other.row(k).iter().enumerate() {
                    acc[c] = (acc[c] + a * *slot as u64) % p;
                }
            }
            for (c, &v) in acc.iter().enumerate() {
                out.set(r, c, v as u32);
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[u32]) -> Result<Vec<u32>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::ShapeMismatch {
                lhs: self.shape(),
                rhs: (v.len(), 1),
            });
        }
        let f = self.field;
        Ok((0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(0, |acc, (&a, &b)| f.mul_add(acc, a, b))
            })
            .collect())
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + a, r * self.cols + b);
        }
    }

    pub fn scale_row(&mut self, r: usize, k: u32) {
        let f = self.field;
        for c in 0..self.cols {
            let v = self.get(r, c);
            self.set(r, c, f.mul(v, k));
        }
    }

    pub fn scale_col(&mut self, c: usize, k: u32) {
        let f = self.field;
        for r in 0..self.rows {
            let v = self.get(r, c);
            self.set(r, c, f.mul(v, k));
        }
    }

    /// row `dst` += k · row `src`
    pub fn add_row_multiple(&mut self, dst: usize, src: usize, k: u32) {
        if k == 0 {
            return;
        }
        let f = self.field;
        for c in 0..self.cols {
            let s = self.get(src, c);
            if s != 0 {
                let d = self.get(dst, c);
                self.set(dst, c, f.mul_add(d, k, s));
            }
        }
    }

    /// column `dst` += k · column `src`
    pub fn add_col_multiple(&mut self, dst: usize, src: usize, k: u32) {
        if k == 0 {
            return;
        }
        let f = self.field;
        for r in 0..self.rows {
            let s = self.get(r, src);
            if s != 0 {
                let d = self.get(r, dst);
                self.set(r, dst, f.mul_add(d, k, s));
            }
        }
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (FieldMatrix, Vec<usize>) {
        let f = self.field;
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(pr) = (row..m.rows).find(|&r| m.get(r, col) != 0) else {
                continue;
            };
            m.swap_rows(row, pr);
            let inv = f.inv(m.get(row, col)).expect("nonzero pivot");
            m.scale_row(row, inv);
            for r in 0..m.rows {
                if r != row {
                    let v = m.get(r, col);
                    if v != 0 {
                        m.add_row_multiple(r, row, f.neg(v));
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Columns span the kernel; `m · K = 0` and `K` has `cols - rank` columns.
    pub fn kernel_basis(&self) -> FieldMatrix {
        let f = self.field;
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut k = Self::zeros(f, self.cols, free.len());
        for (j, &fc) in free.iter().enumerate() {
            k.set(fc, j, 1);
            for (i, &pc) in pivots.iter().enumerate() {
                k.set(pc, j, f.neg(r.get(i, fc)));
            }
        }
        k
    }

    /// Some `x` with `self · x = b`.
    pub fn solve(&self, b: &[u32]) -> Result<Vec<u32>, LinalgError> {
        if b.len() != self.rows {
            return Err(LinalgError::ShapeMismatch {
                lhs: self.shape(),
                rhs: (b.len(), 1),
            });
        }
        let mut aug = Self::zeros(self.field, self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, self.cols, b[r] % self.field.modulus());
        }
        let (red, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Err(LinalgError::NoSolution);
        }
        let mut x = vec![0; self.cols];
        for (i, &pc) in pivots.iter().enumerate() {
            x[pc] = red.get(i, self.cols);
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<FieldMatrix, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::ShapeMismatch {
                lhs: self.shape(),
                rhs: (self.cols, self.rows),
            });
        }
        let n = self.rows;
        let mut aug = Self::zeros(self.field, n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c));
            }
            aug.set(r, n + r, 1);
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || (n > 0 && pivots[n - 1] >= n) {
            return Err(LinalgError::Singular);
        }
        Ok(red.submatrix(0..n, n..2 * n))
    }

    /// `P · self · Q = [[I_r, 0], [0, 0]]` with the elementary operations recorded.
    pub fn smith_normal_form(&self) -> TrackedReduction {
        let f = self.field;
        let mut a = self.clone();
        let mut p = Self::identity(f, self.rows);
        let mut q = Self::identity(f, self.cols);
        let mut t = 0;
        while t < a.rows.min(a.cols) {
            let pivot = (t..a.rows)
                .flat_map(|r| (t..a.cols).map(move |c| (r, c)))
                .find(|&(r, c)| a.get(r, c) != 0);
            let Some((pr, pc)) = pivot else { break };
            a.swap_rows(t, pr);
            p.swap_rows(t, pr);
            a.swap_cols(t, pc);
            q.swap_cols(t, pc);
            let inv = f.inv(a.get(t, t)).expect("nonzero pivot");
            a.scale_row(t, inv);
            p.scale_row(t, inv);
            for r in 0..a.rows {
                let v = a.get(r, t);
                if r != t && v != 0 {
                    a.add_row_multiple(r, t, f.neg(v));
                    p.add_row_multiple(r, t, f.neg(v));
                }
            }
            for c in t + 1..a.cols {
                let v = a.get(t, c);
                if v != 0 {
                    a.add_col_multiple(c, t, f.neg(v));
                    q.add_col_multiple(c, t, f.neg(v));
                }
            }
            t += 1;
        }
        TrackedReduction {
            result: a,
            row_transform: p,
            col_transform: q,
            rank: t,
        }
    }

    /// Block-diagonal matrix `diag(self, other)`.
    pub fn block_diag(&self, other: &FieldMatrix) -> FieldMatrix {
        let mut m = Self::zeros(self.field, self.rows + other.rows, self.cols + other.cols);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m.set(r, c, self.get(r, c));
            }
        }
        for r in 0..other.rows {
            for c in 0..other.cols {
                m.set(self.rows + r, self.cols + c, other.get(r, c));
            }
        }
        m
    }

    pub fn random<R: Rng + ?Sized>(field: PrimeField, rows: usize, cols: usize, rng: &mut R) -> Self {
        let p = field.modulus();
        let mut m = Self::zeros(field, rows, cols);
        m.data.iter_mut().for_each(|v| *v = rng.gen_range(0..p));
        m
    }

    pub fn random_invertible<R: Rng + ?Sized>(field: PrimeField, n: usize, rng: &mut R) -> Self {
        loop {
            let m = Self::random(field, n, n, rng);
            if m.rank() == n {
                return m;
            }
        }
    }

    /// Uniformly conjugated `[[I_k, 0], [0, 0]]`, so the rank is exactly `k`.
    pub fn random_with_rank<R: Rng + ?Sized>(
        field: PrimeField,
        rows: usize,
        cols: usize,
        k: usize,
        rng: &mut R,
    ) -> Self {
        let k = k.min(rows).min(cols);
        let mut d = Self::zeros(field, rows, cols);
        for i in 0..k {
            d.set(i, i, 1);
        }
        let p = Self::random_invertible(field, rows, rng);
        let q = Self::random_invertible(field, cols, rng);
        p.matmul(&d).unwrap().matmul(&q).unwrap()
    }
}
