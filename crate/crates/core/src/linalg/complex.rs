use num_complex::Complex;

use super::eigen::symmetric_eigen;
use super::matrix::SymMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense complex square matrix, row-major. Used for direct resolvent solves.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex::new(T::zero(), T::zero()); n * n] }
    }

    /// `H - z I`.
    pub fn shifted(h: &SymMatrix<T>, z: Complex<T>) -> Self {
        let n = h.dim();
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.data[i * n + j] = Complex::new(h.get(i, j), T::zero());
            }
            m.data[i * n + i] -= z;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    /// Solves `M X = B` for the listed right-hand side columns by Gaussian elimination
    /// with partial pivoting. Returns the solution columns.
    pub fn solve_columns(&self, rhs: &[Vec<Complex<T>>]) -> Result<Vec<Vec<Complex<T>>>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b: Vec<Vec<Complex<T>>> = rhs.to_vec();
        for col in &b {
            if col.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: col.len() });
            }
        }
        for k in 0..n {
            let mut piv = k;
            let mut best = a[k * n + k].norm();
            for i in k + 1..n {
                let v = a[i * n + k].norm();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == T::zero() {
                return Err(Error::Singular);
            }
            if piv != k {
                for j in 0..n {
                    a.swap(k * n + j, piv * n + j);
                }
                for col in b.iter_mut() {
                    col.swap(k, piv);
                }
            }
            let inv = a[k * n + k].inv();
            for i in k + 1..n {
                let factor = a[i * n + k] * inv;
                if factor == Complex::new(T::zero(), T::zero()) {
                    continue;
                }
                for j in k + 1..n {
                    let akj = a[k * n + j];
                    a[i * n + j] -= factor * akj;
                }
                for col in b.iter_mut() {
                    let bk = col[k];
                    col[i] -= factor * bk;
                }
            }
        }
        for col in b.iter_mut() {
            for i in (0..n).rev() {
                let mut acc = col[i];
                for j in i + 1..n {
                    acc -= a[i * n + j] * col[j];
                }
                col[i] = acc / a[i * n + i];
            }
        }
        Ok(b)
    }

    pub fn inverse(&self) -> Result<Self> {
        let n = self.n;
        let zero = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        let rhs: Vec<Vec<Complex<T>>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { one } else { zero }).collect())
            .collect();
        let cols = self.solve_columns(&rhs)?;
        let mut inv = Self::zeros(n);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..n {
                inv.data[i * n + j] = col[i];
            }
        }
        Ok(inv)
    }
}

/// Largest singular value, from the top eigenvalue of the real symmetric embedding
/// `[[Re P, -Im P], [Im P, Re P]]` of `P = M^* M`.
pub fn complex_operator_norm<T: Real>(m: &ComplexMatrix<T>) -> Result<T> {
    let n = m.dim();
    let mut p = vec![Complex::new(T::zero(), T::zero()); n * n];
    for i in 0..n {
        for j in i..n {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..n {
                acc += m.get(k, i).conj() * m.get(k, j);
            }
            p[i * n + j] = acc;
            p[j * n + i] = acc.conj();
        }
    }
    let emb = SymMatrix::from_upper_fn(2 * n, |a, b| {
        let (i, bi) = (a % n, a / n);
        let (j, bj) = (b % n, b / n);
        let v = p[i * n + j];
        match (bi, bj) {
            (0, 0) | (1, 1) => v.re,
            (0, 1) => -v.im,
            _ => v.im,
        }
    });
    let es = symmetric_eigen(&emb, false)?;
    let top = *es.values().last().expect("nonempty");
    Ok(top.max(T::zero()).sqrt())
}
