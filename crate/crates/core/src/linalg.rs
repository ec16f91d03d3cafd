//! Dense storage plus a sparse symmetric LDLᵀ factorization.
//!
//! The factorization eliminates in minimum-degree order, so trees and
//! cycles factor with no (respectively constant) fill. Selected inversion
//! then recovers the diagonal of the inverse on the filled pattern, which
//! is all a trace needs. No square roots are taken, so the same code runs
//! over rationals.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        DenseMatrix {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Symmetric matrix assembled entry by entry; off-diagonal entries are
/// mirrored automatically.
#[derive(Clone, Debug)]
pub struct SymmetricSparse<T> {
    diag: Vec<T>,
    off: Vec<BTreeMap<usize, T>>,
}

impl<T: Scalar> SymmetricSparse<T> {
    pub fn new(n: usize) -> Self {
        SymmetricSparse {
            diag: vec![T::zero(); n],
            off: vec![BTreeMap::new(); n],
        }
    }

    pub fn from_dense(m: &DenseMatrix<T>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let mut s = Self::new(m.nrows());
        for i in 0..m.nrows() {
            s.diag[i] = m[(i, i)];
            for j in 0..i {
                if m[(i, j)] != T::zero() {
                    s.add_off_diagonal(i, j, m[(i, j)]);
                }
            }
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn add_diagonal(&mut self, i: usize, v: T) {
        self.diag[i] = self.diag[i] + v;
    }

    pub fn add_off_diagonal(&mut self, i: usize, j: usize, v: T) {
        assert_ne!(i, j, "use add_diagonal for diagonal entries");
        let e = self.off[i].entry(j).or_insert(T::zero());
        *e = *e + v;
        let e = self.off[j].entry(i).or_insert(T::zero());
        *e = *e + v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.dim())
            .map(|i| {
                self.off[i]
                    .iter()
                    .fold(self.diag[i] * x[i], |acc, (&j, &a)| acc + a * x[j])
            })
            .collect()
    }

    /// Factors the matrix, failing if it is not positive definite.
    pub fn factor(self) -> Result<SparseLdlt<T>> {
        SparseLdlt::new(self)
    }
}

/// `P A Pᵀ = L D Lᵀ` with unit lower-triangular `L`, stored column by column
/// in elimination order.
#[derive(Clone, Debug)]
pub struct SparseLdlt<T> {
    order: Vec<usize>,
    position: Vec<usize>,
    pivots: Vec<T>,
    columns: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> SparseLdlt<T> {
    fn new(mut a: SymmetricSparse<T>) -> Result<Self> {
        let n = a.dim();
        let scale = a.diag.iter().fold(T::zero(), |acc, &d| acc.max_of(d.abs()));
        let floor = T::pivot_floor(scale);
        let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (a.off[i].len(), i)).collect();
        let mut order = Vec::with_capacity(n);
        let mut position = vec![usize::MAX; n];
        let mut pivots = Vec::with_capacity(n);
        let mut columns = Vec::with_capacity(n);

        while let Some((_, p)) = queue.pop_first() {
            let d = a.diag[p];
            if !(d > floor) {
                return Err(Error::NotPositiveDefinite {
                    row: p,
                    pivot: d.to_string(),
                });
            }
            let row = std::mem::take(&mut a.off[p]);
            let nbrs: Vec<(usize, T)> = row.into_iter().collect();
            for &(j, _) in &nbrs {
                queue.remove(&(a.off[j].len(), j));
                a.off[j].remove(&p);
            }
            for (x, &(j, aj)) in nbrs.iter().enumerate() {
                a.diag[j] = a.diag[j] - aj * aj / d;
                for &(k, ak) in &nbrs[x + 1..] {
                    // keep the entry even if it cancels: later steps rely on
                    // the filled pattern being closed
                    let delta = aj * ak / d;
                    let e = a.off[j].entry(k).or_insert(T::zero());
                    *e = *e - delta;
                    let e = a.off[k].entry(j).or_insert(T::zero());
                    *e = *e - delta;
                }
            }
            for &(j, _) in &nbrs {
                queue.insert((a.off[j].len(), j));
            }
            position[p] = order.len();
            order.push(p);
            pivots.push(d);
            columns.push(nbrs.into_iter().map(|(j, aj)| (j, aj / d)).collect());
        }
        Ok(SparseLdlt {
            order,
            position,
            pivots,
            columns,
        })
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    /// Number of stored off-diagonal factor entries.
    pub fn factor_nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert_eq!(b.len(), self.dim());
        for (step, &p) in self.order.iter().enumerate() {
            let bp = b[p];
            for &(j, l) in &self.columns[step] {
                b[j] = b[j] - l * bp;
            }
        }
        for (step, &p) in self.order.iter().enumerate() {
            b[p] = b[p] / self.pivots[step];
        }
        for (step, &p) in self.order.iter().enumerate().rev() {
            let acc = self.columns[step]
                .iter()
                .fold(b[p], |acc, &(j, l)| acc - l * b[j]);
            b[p] = acc;
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Column `i` of the inverse.
    pub fn inverse_column(&self, i: usize) -> Vec<T> {
        let mut e = vec![T::zero(); self.dim()];
        e[i] = T::one();
        self.solve_in_place(&mut e);
        e
    }

    /// Diagonal of `A⁻¹` by selected inversion on the filled pattern.
    pub fn inverse_diagonal(&self) -> Vec<T> {
        let n = self.dim();
        let mut diag = vec![T::zero(); n];
        let mut upper: Vec<HashMap<usize, T>> = vec![HashMap::new(); n];
        for step in (0..n).rev() {
            let a = self.order[step];
            let col = &self.columns[step];
            let lookup = |j: usize, k: usize, diag: &[T], upper: &[HashMap<usize, T>]| -> T {
                if j == k {
                    diag[j]
                } else {
                    let (lo, hi) = if self.position[j] < self.position[k] {
                        (j, k)
                    } else {
                        (k, j)
                    };
                    upper[lo][&hi]
                }
            };
            let mut row = HashMap::with_capacity(col.len());
            let mut zaa = T::one() / self.pivots[step];
            for &(j, lj) in col {
                let zaj = col.iter().fold(T::zero(), |acc, &(k, lk)| {
                    acc - lk * lookup(j, k, &diag, &upper)
                });
                zaa = zaa - lj * zaj;
                row.insert(j, zaj);
            }
            diag[a] = zaa;
            upper[a] = row;
        }
        diag
    }

    pub fn trace_of_inverse(&self) -> T {
        self.inverse_diagonal()
            .into_iter()
            .fold(T::zero(), |acc, v| acc + v)
    }
}
