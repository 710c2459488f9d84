//! Minimal dense column-major matrix.

use std::ops::{Index, IndexMut};

use crate::scalar::{dot, norm2, Real};

/// Dense matrix stored column-major: entry `(i, j)` lives at `data[i + j * rows]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Wraps column-major storage. Panics if the length disagrees with the shape.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "column-major buffer has wrong length");
        Self { rows, cols, data }
    }

    /// Builds a matrix from row slices. All rows must have equal length.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let nr = rows.len();
        let nc = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(nr, nc);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            assert_eq!(row.len(), nc, "ragged rows");
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    /// Builds a matrix from column slices. All columns must have equal length.
    pub fn from_cols<C: AsRef<[T]>>(cols: &[C]) -> Self {
        let nc = cols.len();
        let nr = cols.first().map_or(0, |c| c.as_ref().len());
        let mut data = Vec::with_capacity(nr * nc);
        for c in cols {
            let c = c.as_ref();
            assert_eq!(c.len(), nr, "ragged columns");
            data.extend_from_slice(c);
        }
        Self::from_col_major(nr, nc, data)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    /// Mutable access to two distinct columns at once.
    pub fn col_pair_mut(&mut self, a: usize, b: usize) -> (&mut [T], &mut [T]) {
        assert!(a != b && a < self.cols && b < self.cols);
        let r = self.rows;
        if a < b {
            let (lo, hi) = self.data.split_at_mut(b * r);
            (&mut lo[a * r..(a + 1) * r], &mut hi[..r])
        } else {
            let (lo, hi) = self.data.split_at_mut(a * r);
            (&mut hi[..r], &mut lo[b * r..(b + 1) * r])
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions disagree");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let oc = out.col_mut(j);
            for (k, &b) in rhs.col(j).iter().enumerate() {
                if b == T::zero() {
                    continue;
                }
                for (o, a) in oc.iter_mut().zip(self.col(k)) {
                    *o += *a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · rhs` without forming the transpose.
    pub fn tr_matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "row counts disagree");
        Self::from_fn(self.cols, rhs.cols, |i, j| dot(self.col(i), rhs.col(j)))
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len(), "vector length disagrees with columns");
        let mut out = vec![T::zero(); self.rows];
        for (j, &xj) in x.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.col(j)) {
                *o += *a * xj;
            }
        }
        out
    }

    /// `selfᵀ · x`.
    pub fn tr_matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.rows, x.len(), "vector length disagrees with rows");
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }

    /// Matrix made of the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self::from_fn(indices.len(), self.cols, |i, j| self[(indices[i], j)])
    }

    pub fn select_cols(&self, indices: &[usize]) -> Self {
        let cols: Vec<&[T]> = indices.iter().map(|&j| self.col(j)).collect();
        Self::from_cols(&cols)
    }

    /// Leading `k` columns.
    pub fn leading_cols(&self, k: usize) -> Self {
        assert!(k <= self.cols);
        Self::from_col_major(self.rows, k, self.data[..k * self.rows].to_vec())
    }

    pub fn scale_cols(&mut self, factors: &[T]) {
        assert_eq!(factors.len(), self.cols);
        for (j, &f) in factors.iter().enumerate() {
            self.col_mut(j).iter_mut().for_each(|v| *v *= f);
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape());
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect();
        Self::from_col_major(self.rows, self.cols, data)
    }

    pub fn frobenius_norm(&self) -> T {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn col_norm(&self, j: usize) -> T {
        norm2(self.col(j))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// First non-finite entry, as `(row, col)`.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|k| (k % self.rows.max(1), k / self.rows.max(1)))
    }

    /// Max-norm of `selfᵀ self − I`.
    pub fn orthonormality_defect(&self) -> T {
        let g = self.tr_matmul(self);
        let mut worst = T::zero();
        for j in 0..g.cols {
            for i in 0..g.rows {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Converts every entry into another scalar type.
    pub fn cast<U: Real>(&self) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i + j * self.rows]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i + j * self.rows]
    }
}
