//! Half-vectorisation of symmetric matrices.
//!
//! Ordering is the column-major lower triangle:
//! `(b11, b21, ..., bn1, b22, ..., bn2, ..., bnn)`.

use nalgebra::{DMatrix, DVector};

/// Index maps between lower-triangular `(i, j)` pairs (`i >= j`, 0-based)
/// and positions in the half-vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VechIndex {
    n: usize,
}

impl VechIndex {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Half-vector length `n(n+1)/2`.
    pub fn len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Position of entry `(i, j)`. The pair is reordered so that `i >= j`,
    /// which makes the map valid for either triangle of a symmetric matrix.
    pub fn pos(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(i < self.n);
        j * self.n - j * j.saturating_sub(1) / 2 + (i - j)
    }

    /// Inverse of [`pos`](Self::pos), returning `(i, j)` with `i >= j`.
    pub fn pair(&self, pos: usize) -> (usize, usize) {
        debug_assert!(pos < self.len());
        let mut start = 0;
        for j in 0..self.n {
            let col_len = self.n - j;
            if pos < start + col_len {
                return (j + pos - start, j);
            }
            start += col_len;
        }
        unreachable!("vech position {pos} out of range")
    }

    /// All `(i, j)` pairs in vech order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |j| (j..self.n).map(move |i| (i, j)))
    }
}

/// `vech(A)`: stacks the lower triangle of `a` column by column.
pub fn vech(a: &DMatrix<f64>) -> DVector<f64> {
    let idx = VechIndex::new(a.nrows());
    DVector::from_iterator(idx.len(), idx.pairs().map(|(i, j)| a[(i, j)]))
}

/// Rebuilds the symmetric matrix whose half-vector is `v`.
///
/// The result is exactly symmetric: both triangles read the same entry.
pub fn unvech(v: &DVector<f64>) -> DMatrix<f64> {
    let n = dim_from_len(v.len()).expect("length is not a triangular number");
    let idx = VechIndex::new(n);
    DMatrix::from_fn(n, n, |i, j| v[idx.pos(i, j)])
}

/// Solves `n(n+1)/2 = len` for `n`.
pub fn dim_from_len(len: usize) -> Option<usize> {
    let mut n = 0;
    while n * (n + 1) / 2 < len {
        n += 1;
    }
    (n * (n + 1) / 2 == len).then_some(n)
}

/// Duplication matrix `D` (n² × m) with `D vech(A) = vec(A)` for symmetric `A`.
pub fn duplication_matrix(n: usize) -> DMatrix<f64> {
    let idx = VechIndex::new(n);
    let mut d = DMatrix::zeros(n * n, idx.len());
    for j in 0..n {
        for i in 0..n {
            d[(j * n + i, idx.pos(i, j))] = 1.0;
        }
    }
    d
}

/// Elimination matrix `L` (m × n²) with `L vec(A) = vech(A)` for any `A`.
pub fn elimination_matrix(n: usize) -> DMatrix<f64> {
    let idx = VechIndex::new(n);
    let mut l = DMatrix::zeros(idx.len(), n * n);
    for (p, (i, j)) in idx.pairs().enumerate() {
        l[(p, j * n + i)] = 1.0;
    }
    l
}

/// Column-stacking `vec(A)`.
pub fn vec(a: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(a.as_slice())
}
