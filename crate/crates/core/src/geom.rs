//! Ultrametric index space `{0, 1, 2, ...}` and hierarchical coupling sequences.
//!
//! Sites are machine integers. With branching `n`, the distance between two sites is
//! the smallest `r` such that both fall into the same block of `n^r` consecutive
//! integers, so the closed ball `B(x, r)` is that block.

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Largest number of sites any finite volume may have.
pub const MAX_SITES: usize = 1 << 13;

/// Branching number and maximal ball radius of a finite hierarchical volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HierGeometry {
    n: usize,
    k_max: usize,
}

impl HierGeometry {
    pub fn new(n: usize, k_max: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("branching n={n} must be at least 2")));
        }
        if k_max < 1 {
            return Err(invalid("maximal radius must be at least 1"));
        }
        match checked_pow(n, k_max) {
            Some(size) if size <= MAX_SITES => Ok(Self { n, k_max }),
            _ => Err(invalid(format!(
                "volume n^k = {n}^{k_max} exceeds the cap of {MAX_SITES} sites"
            ))),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// Number of sites in a ball of radius `r`.
    pub fn ball_size(&self, r: usize) -> usize {
        self.n.pow(r as u32)
    }

    /// Number of sites in the largest ball `B(0, k_max)`.
    pub fn volume(&self) -> usize {
        self.ball_size(self.k_max)
    }

    pub fn distance(&self, x: usize, y: usize) -> usize {
        hier_distance(x, y, self.n)
    }

    /// Partition of `B(0, k)` into the balls of radius `r`, as index ranges.
    pub fn partition(&self, k: usize, r: usize) -> Vec<std::ops::Range<usize>> {
        assert!(r <= k && k <= self.k_max, "need r <= k <= k_max");
        let size = self.ball_size(r);
        (0..self.ball_size(k - r))
            .map(|j| j * size..(j + 1) * size)
            .collect()
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    u32::try_from(exp).ok().and_then(|e| base.checked_pow(e))
}

/// Smallest `r` with `x / n^r == y / n^r`.
pub fn hier_distance(x: usize, y: usize, n: usize) -> usize {
    debug_assert!(n >= 2);
    let (mut qx, mut qy) = (x, y);
    let mut r = 0;
    while qx != qy {
        qx /= n;
        qy /= n;
        r += 1;
    }
    r
}

/// Members of the closed ball `B(center, r)` in increasing order.
pub fn ball_members(center: usize, r: usize, n: usize) -> Vec<usize> {
    let size = n.pow(r as u32);
    let start = (center / size) * size;
    (start..start + size).collect()
}

/// `2 ln n / ln rho`.
pub fn spectral_dimension(n: usize, rho: f64) -> Result<f64> {
    if n < 2 {
        return Err(invalid(format!("branching n={n} must be at least 2")));
    }
    if !(rho > 1.0) {
        return Err(invalid(format!("decay base rho={rho} must exceed 1")));
    }
    Ok(2.0 * (n as f64).ln() / rho.ln())
}

/// Coupling weights `p_1, ..., p_kmax` of the hierarchical Laplacian with the derived
/// partial sums `lambda_r` and tails `sum_{s>r} p_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSequence<T> {
    rho: T,
    p: Vec<T>,
    lambda: Vec<T>,
    tail: Vec<T>,
    c1: T,
    c2: T,
}

impl<T: Real> CouplingSequence<T> {
    /// Geometric family `p_r = (rho - 1) rho^{-r}`, normalized to total mass one.
    pub fn geometric(rho: T, k_max: usize) -> Result<Self> {
        if !(rho > T::one()) {
            return Err(invalid(format!("decay base rho={rho} must exceed 1")));
        }
        if k_max < 1 {
            return Err(invalid("coupling length must be at least 1"));
        }
        let c = rho - T::one();
        let mut p = Vec::with_capacity(k_max);
        let mut lambda = Vec::with_capacity(k_max + 1);
        let mut tail = Vec::with_capacity(k_max + 1);
        lambda.push(T::zero());
        tail.push(T::one());
        for r in 1..=k_max {
            let decay = rho.powi(-(r as i32));
            p.push(c * decay);
            lambda.push(T::one() - decay);
            tail.push(decay);
        }
        Ok(Self { rho, p, lambda, tail, c1: c, c2: c })
    }

    /// User-supplied weights, validated against `c1 rho^{-r} <= p_r <= c2 rho^{-r}`.
    /// Unlisted weights `p_{kmax+1}, ...` carry the remaining mass `1 - lambda_kmax`.
    pub fn explicit(p: Vec<T>, rho: T, c1: T, c2: T) -> Result<Self> {
        if !(rho > T::one()) {
            return Err(invalid(format!("decay base rho={rho} must exceed 1")));
        }
        if p.is_empty() {
            return Err(invalid("coupling list is empty"));
        }
        if !(c1 > T::zero() && c2 >= c1) {
            return Err(invalid("bound constants need 0 < C1 <= C2"));
        }
        let mut lambda = vec![T::zero()];
        for (i, &pr) in p.iter().enumerate() {
            let r = (i + 1) as i32;
            let scale = rho.powi(-r);
            if !(pr > T::zero()) {
                return Err(invalid(format!("p_{r} = {pr} is not positive")));
            }
            let slack = T::lit(1e-12) * scale;
            if pr < c1 * scale - slack || pr > c2 * scale + slack {
                return Err(invalid(format!(
                    "p_{r} = {pr} violates C1/rho^r <= p_r <= C2/rho^r"
                )));
            }
            let next = lambda[i] + pr;
            lambda.push(next);
        }
        let total = *lambda.last().expect("nonempty");
        if !(total < T::one()) {
            return Err(invalid(format!(
                "partial sum {total} must stay below 1 so the unlisted tail is positive"
            )));
        }
        let tail = lambda.iter().map(|&l| T::one() - l).collect();
        Ok(Self { rho, p, lambda, tail, c1, c2 })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn k_max(&self) -> usize {
        self.p.len()
    }

    /// `p_r` for `1 <= r <= k_max`.
    pub fn p(&self, r: usize) -> T {
        assert!(r >= 1 && r <= self.k_max(), "p_r defined for 1 <= r <= k_max");
        self.p[r - 1]
    }

    pub fn weights(&self) -> &[T] {
        &self.p
    }

    /// `lambda_r = p_1 + ... + p_r` for `0 <= r <= k_max`.
    pub fn lambda(&self, r: usize) -> T {
        self.lambda[r]
    }

    /// `sum_{s > r} p_s`, including the mass beyond `k_max`.
    pub fn tail(&self, r: usize) -> T {
        self.tail[r]
    }

    /// `sum_{s = r+1}^{k} p_s`.
    pub fn partial(&self, r: usize, k: usize) -> T {
        assert!(r <= k && k <= self.k_max());
        self.p[r..k].iter().copied().sum()
    }

    pub fn bounds(&self) -> (T, T) {
        (self.c1, self.c2)
    }

    /// Strength `p_s n^{-s}` of the all-ones block added at level `s`.
    pub fn level_weight(&self, s: usize, n: usize) -> T {
        self.p(s) / T::from_usize_lossy(n).powi(s as i32)
    }
}

impl CouplingSequence<f64> {
    pub fn spectral_dimension(&self, n: usize) -> Result<f64> {
        spectral_dimension(n, self.rho)
    }
}
