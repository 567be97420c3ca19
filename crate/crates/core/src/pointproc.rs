//! Finite point measures on the real line, Poisson processes and triangular arrays.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use crate::error::{invalid, Error, Result};

/// Half-open interval `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(invalid(format!("interval [{lo}, {hi}) must be finite and nonempty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t < self.hi
    }
}

/// Pairwise disjoint intervals `A_1, ..., A_m`, kept in the order given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalFamily {
    intervals: Vec<Interval>,
}

impl IntervalFamily {
    pub fn new(bounds: &[(f64, f64)]) -> Result<Self> {
        let intervals = bounds
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        let mut sorted = intervals.clone();
        sorted.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for w in sorted.windows(2) {
            if w[1].lo < w[0].hi {
                return Err(invalid(format!(
                    "windows [{}, {}) and [{}, {}) overlap; disjoint windows are required",
                    w[0].lo, w[0].hi, w[1].lo, w[1].hi
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.intervals.iter().map(Interval::length).collect()
    }

    /// Smallest interval containing every member.
    pub fn hull(&self) -> Option<Interval> {
        let lo = self.intervals.iter().map(|i| i.lo).fold(f64::INFINITY, f64::min);
        let hi = self.intervals.iter().map(|i| i.hi).fold(f64::NEG_INFINITY, f64::max);
        (lo < hi).then_some(Interval { lo, hi })
    }
}

/// Finite sum of unit point masses, atoms sorted nondecreasingly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointMeasure {
    atoms: Vec<f64>,
}

impl PointMeasure {
    pub fn new(mut atoms: Vec<f64>) -> Result<Self> {
        if atoms.iter().any(|a| a.is_nan()) {
            return Err(invalid("point measure atoms must not be NaN"));
        }
        atoms.sort_by(f64::total_cmp);
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn total(&self) -> usize {
        self.atoms.len()
    }

    /// Number of atoms in `[lo, hi)`.
    pub fn count(&self, a: &Interval) -> usize {
        let start = self.atoms.partition_point(|&t| t < a.lo);
        let end = self.atoms.partition_point(|&t| t < a.hi);
        end.saturating_sub(start)
    }

    pub fn counts(&self, family: &IntervalFamily) -> Vec<usize> {
        family.intervals().iter().map(|a| self.count(a)).collect()
    }
}

/// Atoms `scale * (e_i - e)`.
pub fn rescale_spectrum(values: &[f64], e: f64, scale: f64) -> Result<PointMeasure> {
    if !(scale > 0.0) {
        return Err(invalid(format!("rescaling factor {scale} must be positive")));
    }
    PointMeasure::new(values.iter().map(|&v| scale * (v - e)).collect())
}

/// Weight functions for the pair functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFn {
    Indicator(Interval),
    /// `t -> Im (t - z)^{-1}`.
    PoissonKernel(Complex<f64>),
}

impl WeightFn {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Self::Indicator(a) => f64::from(u8::from(a.contains(t))),
            Self::PoissonKernel(z) => (Complex::new(t, 0.0) - z).inv().im,
        }
    }
}

/// `sum_{i != j} f(t_i) f(t_j) = (sum f)^2 - sum f^2`.
pub fn pair_functional(pm: &PointMeasure, f: &WeightFn) -> Result<f64> {
    if let WeightFn::PoissonKernel(z) = f {
        if !(z.im > 0.0) {
            return Err(invalid(format!("Poisson kernel needs Im z > 0, got {}", z.im)));
        }
    }
    if let WeightFn::Indicator(a) = f {
        let c = pm.count(a) as f64;
        return Ok(c * (c - 1.0).max(0.0));
    }
    let (mut s1, mut s2) = (0.0, 0.0);
    for &t in pm.atoms() {
        let v = f.eval(t);
        s1 += v;
        s2 += v * v;
    }
    Ok((s1 * s1 - s2).max(0.0))
}

pub fn poisson_pmf(lambda: f64, r: u64) -> f64 {
    if lambda == 0.0 {
        return if r == 0 { 1.0 } else { 0.0 };
    }
    (r as f64 * lambda.ln() - lambda - ln_factorial(r)).exp()
}

/// Poisson process with intensity `lambda * Lebesgue` restricted to `window`.
pub fn sample_poisson_process<R: Rng + ?Sized>(
    lambda: f64,
    window: &Interval,
    rng: &mut R,
) -> Result<PointMeasure> {
    if !(lambda >= 0.0) {
        return Err(invalid(format!("intensity {lambda} must be nonnegative")));
    }
    let mean = lambda * window.length();
    if mean == 0.0 {
        return Ok(PointMeasure::default());
    }
    let count = Poisson::new(mean).map_err(|e| invalid(e.to_string()))?.sample(rng) as usize;
    let atoms = (0..count).map(|_| rng.random_range(window.lo..window.hi)).collect();
    PointMeasure::new(atoms)
}

/// Superposition of `n_k` independent processes, each holding one uniform atom in
/// `window` with probability `lambda * |window| / n_k` and no atom otherwise.
pub fn grigelionis_toy_array<R: Rng + ?Sized>(
    n_k: usize,
    lambda: f64,
    window: &Interval,
    rng: &mut R,
) -> Result<PointMeasure> {
    let mass = lambda * window.length();
    if !(lambda >= 0.0) || (n_k as f64) < mass || n_k == 0 {
        return Err(invalid(format!(
            "row width n_k={n_k} must be at least lambda*|A| = {mass}"
        )));
    }
    let q = mass / n_k as f64;
    let mut atoms = Vec::new();
    for _ in 0..n_k {
        if rng.random::<f64>() < q {
            atoms.push(rng.random_range(window.lo..window.hi));
        }
    }
    PointMeasure::new(atoms)
}

/// Count vectors `[xi(A_1), ..., xi(A_m)]` over Monte Carlo realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct CountEnsemble {
    windows: IntervalFamily,
    samples: Vec<Vec<usize>>,
}

impl CountEnsemble {
    pub fn new(windows: IntervalFamily, samples: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(bad) = samples.iter().find(|s| s.len() != windows.len()) {
            return Err(Error::DimensionMismatch { expected: windows.len(), got: bad.len() });
        }
        Ok(Self { windows, samples })
    }

    pub fn windows(&self) -> &IntervalFamily {
        &self.windows
    }

    pub fn samples(&self) -> &[Vec<usize>] {
        &self.samples
    }

    pub fn realizations(&self) -> usize {
        self.samples.len()
    }

    pub fn component(&self, s: usize) -> Vec<usize> {
        self.samples.iter().map(|v| v[s]).collect()
    }

    /// Sup-norm distance between the joint pmf of components `a`, `b` and the product
    /// of their marginals.
    pub fn independence_distance(&self, a: usize, b: usize) -> Result<f64> {
        let r = self.realizations();
        if r == 0 {
            return Err(Error::InsufficientData("empty count ensemble".into()));
        }
        let ma = self.samples.iter().map(|v| v[a]).max().unwrap_or(0) + 1;
        let mb = self.samples.iter().map(|v| v[b]).max().unwrap_or(0) + 1;
        let mut joint = vec![0usize; ma * mb];
        let mut pa = vec![0usize; ma];
        let mut pb = vec![0usize; mb];
        for v in &self.samples {
            joint[v[a] * mb + v[b]] += 1;
            pa[v[a]] += 1;
            pb[v[b]] += 1;
        }
        let rf = r as f64;
        let mut sup: f64 = 0.0;
        for i in 0..ma {
            for j in 0..mb {
                let p = joint[i * mb + j] as f64 / rf;
                let q = (pa[i] as f64 / rf) * (pb[j] as f64 / rf);
                sup = sup.max((p - q).abs());
            }
        }
        Ok(sup)
    }
}

/// `(1/R) sum_samples exp(i t . counts)`.
pub fn empirical_char_function(ce: &CountEnsemble, t: &[f64]) -> Result<Complex<f64>> {
    if ce.realizations() == 0 {
        return Err(Error::InsufficientData("empty count ensemble".into()));
    }
    if t.len() != ce.windows().len() {
        return Err(Error::DimensionMismatch { expected: ce.windows().len(), got: t.len() });
    }
    let sum: Complex<f64> = ce
        .samples()
        .iter()
        .map(|v| {
            let phase: f64 = v.iter().zip(t).map(|(&c, &ts)| c as f64 * ts).sum();
            Complex::from_polar(1.0, phase)
        })
        .sum();
    Ok(sum / ce.realizations() as f64)
}

/// `prod_s exp(lambda_s (e^{i t_s} - 1))`.
pub fn poisson_char_function(lambdas: &[f64], t: &[f64]) -> Complex<f64> {
    let exponent: Complex<f64> = lambdas
        .iter()
        .zip(t)
        .map(|(&l, &ts)| (Complex::from_polar(1.0, ts) - 1.0) * l)
        .sum();
    exponent.exp()
}

/// Total variation distance between the empirical law of `counts` and Poisson(`lambda`).
pub fn total_variation_poisson(counts: &[usize], lambda: f64) -> f64 {
    let r = counts.len() as f64;
    let top = counts.iter().copied().max().unwrap_or(0);
    let mut freq = vec![0usize; top + 1];
    for &c in counts {
        freq[c] += 1;
    }
    let mut covered = 0.0;
    let mut tv = 0.0;
    for (k, &f) in freq.iter().enumerate() {
        let p = poisson_pmf(lambda, k as u64);
        covered += p;
        tv += (f as f64 / r - p).abs();
    }
    0.5 * (tv + (1.0 - covered).max(0.0))
}
