use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense real symmetric matrix stored row-major. Writes go through [`SymMatrix::set`],
/// which fills both triangles, so the stored array is exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> SymMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![T::zero(); n * n] }
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    /// Builds from the upper-triangle entry function `f(i, j)`, `i <= j`.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Packed upper triangle, row by row: `a00 a01 .. a0n a11 a12 ..`.
    pub fn from_packed_upper(n: usize, packed: &[T]) -> Result<Self> {
        let expected = n * (n + 1) / 2;
        if packed.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: packed.len() });
        }
        let mut it = packed.iter();
        Ok(Self::from_upper_fn(n, |_, _| *it.next().expect("length checked")))
    }

    /// Full row-major array; symmetry is checked exactly.
    pub fn from_row_major(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: data.len() });
        }
        for i in 0..n {
            for j in 0..i {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> T {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `max |h_ij|`.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Gershgorin discs `[h_ii - R_i, h_ii + R_i]`.
    pub fn gershgorin(&self) -> Vec<(T, T)> {
        (0..self.n)
            .map(|i| {
                let radius: T = self
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, v)| v.abs())
                    .sum();
                let c = self.get(i, i);
                (c - radius, c + radius)
            })
            .collect()
    }

    /// Principal submatrix on the given index set.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_upper_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }
}
