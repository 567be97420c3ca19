//! Exact O(N log N) spectral routines for hierarchical operators.
//!
//! On a ball of radius `s` the level-`s` term of `sum_s p_s E_s` is the rank-one matrix
//! `sigma_s 1 1^T` with `sigma_s = p_s n^{-s}`. Adding the levels one at a time from the
//! diagonal potential upward, every step is a rank-one update of a block-diagonal
//! matrix. Sherman-Morrison then gives the resolvent, and Haynsworth inertia additivity
//! gives the number of eigenvalues below a real shift, with O(N) work per level.

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::geom::CouplingSequence;
use crate::scalar::Real;

/// Level weights of `sum_{s<=trunc} p_s E_s` on the ball `B(0, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HierStructure<T> {
    n: usize,
    k: usize,
    sigma: Vec<T>,
}

impl<T: Real> HierStructure<T> {
    pub fn new(n: usize, k: usize, trunc: usize, coup: &CouplingSequence<T>) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("branching n={n} must be at least 2")));
        }
        if trunc > k {
            return Err(invalid(format!("truncation {trunc} exceeds volume radius {k}")));
        }
        if trunc > coup.k_max() {
            return Err(invalid(format!(
                "truncation {trunc} exceeds coupling length {}",
                coup.k_max()
            )));
        }
        let sigma = (1..=trunc).map(|s| coup.level_weight(s, n)).collect();
        Ok(Self { n, k, sigma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn trunc(&self) -> usize {
        self.sigma.len()
    }

    pub fn volume(&self) -> usize {
        self.n.pow(self.k as u32)
    }

    /// Side of the decoupled diagonal blocks, `n^trunc`.
    pub fn block_size(&self) -> usize {
        self.n.pow(self.trunc() as u32)
    }

    pub fn block_count(&self) -> usize {
        self.volume() / self.block_size()
    }

    fn check(&self, omega: &[T]) -> Result<()> {
        if omega.len() != self.volume() {
            return Err(Error::DimensionMismatch { expected: self.volume(), got: omega.len() });
        }
        Ok(())
    }

    /// Number of eigenvalues below `x` in each radius-`trunc` block.
    ///
    /// An eigenvalue exactly at `x` may land on either side.
    pub fn block_counts_below(&self, omega: &[T], x: T) -> Result<Vec<usize>> {
        self.check(omega)?;
        let pivmin = T::min_positive_value().sqrt();
        let mut s: Vec<T> = Vec::with_capacity(omega.len());
        let mut neg: Vec<usize> = Vec::with_capacity(omega.len());
        for &w in omega {
            let mut a = w - x;
            if a.abs() < pivmin {
                a = -pivmin;
            }
            s.push(a.recip());
            neg.push(usize::from(a < T::zero()));
        }
        let n = self.n;
        for &sigma in &self.sigma {
            let groups = s.len() / n;
            for g in 0..groups {
                let sa: T = s[g * n..(g + 1) * n].iter().copied().sum();
                let na: usize = neg[g * n..(g + 1) * n].iter().sum();
                // Inertia of the bordered block: the Schur complement is -(1 + sigma S) / sigma.
                let mut q = T::one() + sigma * sa;
                if q.abs() < pivmin {
                    q = pivmin;
                }
                s[g] = sa / q;
                neg[g] = if q < T::zero() { na - 1 } else { na };
            }
            s.truncate(groups);
            neg.truncate(groups);
        }
        Ok(neg)
    }

    /// Number of eigenvalues below `x`.
    pub fn count_below(&self, omega: &[T], x: T) -> Result<usize> {
        Ok(self.block_counts_below(omega, x)?.into_iter().sum())
    }

    /// Interval containing the whole spectrum: `[min omega, max omega + lambda_trunc]`.
    pub fn spectral_bracket(&self, omega: &[T]) -> (T, T) {
        let lo = omega.iter().copied().fold(T::infinity(), T::min);
        let hi = omega.iter().copied().fold(T::neg_infinity(), T::max);
        let shift: T = self
            .sigma
            .iter()
            .enumerate()
            .map(|(i, &s)| s * T::from_usize_lossy(self.n.pow(i as u32 + 1)))
            .sum();
        let pad = T::lit(4.0) * T::epsilon() * (lo.abs() + hi.abs() + T::one());
        (lo - pad, hi + shift + pad)
    }

    /// The eigenvalue with 0-based index `i` in nondecreasing order, by bisection.
    pub fn eigenvalue(&self, omega: &[T], i: usize) -> Result<T> {
        self.check(omega)?;
        if i >= omega.len() {
            return Err(invalid(format!("eigenvalue index {i} out of range")));
        }
        let (lo, hi) = self.spectral_bracket(omega);
        self.bisect(omega, i, lo, hi)
    }

    fn bisect(&self, omega: &[T], i: usize, lo: T, hi: T) -> Result<T> {
        super::bisect_eigenvalue(|x| self.count_below(omega, x), i, lo, hi)
    }

    /// Eigenvalues in `[lo, hi)`, sorted, together with the number of eigenvalues below `lo`.
    pub fn eigenvalues_in(&self, omega: &[T], lo: T, hi: T) -> Result<(usize, Vec<T>)> {
        self.check(omega)?;
        if !(lo < hi) {
            return Err(invalid("empty eigenvalue window"));
        }
        let below = self.count_below(omega, lo)?;
        let upto = self.count_below(omega, hi)?;
        let values = (below..upto)
            .map(|i| self.bisect(omega, i, lo, hi))
            .collect::<Result<Vec<T>>>()?;
        Ok((below, values))
    }

    /// Full spectrum by bisection, nondecreasing.
    pub fn all_eigenvalues(&self, omega: &[T]) -> Result<Vec<T>> {
        self.check(omega)?;
        let (lo, hi) = self.spectral_bracket(omega);
        (0..omega.len()).map(|i| self.bisect(omega, i, lo, hi)).collect()
    }

    /// Resolvent `(H - z)^{-1}` in factored form. With `keep_levels` the per-level
    /// vectors needed for off-diagonal entries are retained.
    pub fn resolvent(&self, omega: &[T], z: Complex<T>, keep_levels: bool) -> Result<HierResolvent<T>> {
        self.check(omega)?;
        if z.im == T::zero() {
            return Err(invalid("resolvent needs Im z != 0"));
        }
        let one = Complex::new(T::one(), T::zero());
        let mut diag: Vec<Complex<T>> =
            omega.iter().map(|&w| (Complex::new(w, T::zero()) - z).inv()).collect();
        let mut g = diag.clone();
        let mut s = diag.clone();
        let mut factors = Vec::with_capacity(self.sigma.len());
        let mut history = Vec::new();
        let n = self.n;
        for (level, &sigma) in self.sigma.iter().enumerate() {
            if keep_levels {
                history.push(g.clone());
            }
            let size = n.pow(level as u32 + 1);
            let groups = s.len() / n;
            let mut f_level = Vec::with_capacity(groups);
            for b in 0..groups {
                let sa: Complex<T> = s[b * n..(b + 1) * n].iter().copied().sum();
                let denom = one + sa * sigma;
                let f = Complex::new(sigma, T::zero()) / denom;
                let inv = denom.inv();
                for x in b * size..(b + 1) * size {
                    diag[x] -= f * g[x] * g[x];
                    g[x] *= inv;
                }
                s[b] = sa * inv;
                f_level.push(f);
            }
            s.truncate(groups);
            factors.push(f_level);
        }
        Ok(HierResolvent { n, diag, block_traces: None, factors, history })
    }
}

/// Factored resolvent of a hierarchical operator at one spectral parameter.
#[derive(Debug, Clone)]
pub struct HierResolvent<T> {
    n: usize,
    diag: Vec<Complex<T>>,
    block_traces: Option<Vec<Complex<T>>>,
    factors: Vec<Vec<Complex<T>>>,
    history: Vec<Vec<Complex<T>>>,
}

impl<T: Real> HierResolvent<T> {
    pub fn diag(&self) -> &[Complex<T>] {
        &self.diag
    }

    pub fn trace(&self) -> Complex<T> {
        self.diag.iter().copied().sum()
    }

    fn block_size(&self) -> usize {
        self.n.pow(self.factors.len() as u32)
    }

    /// Traces over the decoupled radius-`trunc` blocks.
    pub fn block_traces(&mut self) -> &[Complex<T>] {
        let size = self.block_size();
        let diag = &self.diag;
        self.block_traces
            .get_or_insert_with(|| diag.chunks(size).map(|c| c.iter().copied().sum()).collect())
    }

    /// Matrix entry `<delta_x, (H - z)^{-1} delta_y>`.
    pub fn entry(&self, x: usize, y: usize) -> Result<Complex<T>> {
        if x == y {
            return self
                .diag
                .get(x)
                .copied()
                .ok_or_else(|| invalid(format!("site {x} outside the volume")));
        }
        if x.max(y) >= self.diag.len() {
            return Err(invalid(format!("site {} outside the volume", x.max(y))));
        }
        if self.history.len() != self.factors.len() {
            return Err(invalid("off-diagonal entries need the per-level vectors"));
        }
        let d = crate::geom::hier_distance(x, y, self.n);
        let mut acc = Complex::new(T::zero(), T::zero());
        for s in d..=self.factors.len() {
            let ball = x / self.n.pow(s as u32);
            let g = &self.history[s - 1];
            acc -= self.factors[s - 1][ball] * g[x] * g[y];
        }
        Ok(acc)
    }

    /// `sum_{x,y in block} (Im G(x,y))^2` for the radius-`trunc` block with index `b`.
    pub fn block_im_frobenius_sq(&self, b: usize) -> Result<T> {
        let size = self.block_size();
        let start = b * size;
        if start + size > self.diag.len() {
            return Err(invalid(format!("block {b} outside the volume")));
        }
        let mut acc = T::zero();
        for x in start..start + size {
            acc += self.diag[x].im * self.diag[x].im;
            for y in x + 1..start + size {
                let v = self.entry(x, y)?.im;
                acc += T::lit(2.0) * v * v;
            }
        }
        Ok(acc)
    }
}
