//! Goodness-of-fit tests and small estimation helpers.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};
use crate::pointproc::{poisson_pmf, CountEnsemble};

/// Smallest expected count allowed in a chi-square bin.
pub const MIN_EXPECTED: f64 = 5.0;
/// Smallest ensemble accepted by [`chi_square_poisson`].
pub const MIN_REALIZATIONS: usize = 200;
/// Smallest sample accepted by [`ks_exponential`].
pub const MIN_GAPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
    /// Degrees of freedom for chi-square, sample size for KS.
    pub size: usize,
}

/// Pearson chi-square of component `s` of `ce` against Poisson(`lambda`).
///
/// Consecutive counts are pooled until every bin expects at least [`MIN_EXPECTED`]
/// observations; the last bin holds the whole upper tail.
pub fn chi_square_poisson(ce: &CountEnsemble, s: usize, lambda: f64) -> Result<TestOutcome> {
    if s >= ce.windows().len() {
        return Err(invalid(format!("window index {s} out of range")));
    }
    if !(lambda >= 0.0) {
        return Err(invalid(format!("intensity {lambda} must be nonnegative")));
    }
    let r = ce.realizations();
    if r < MIN_REALIZATIONS {
        return Err(Error::InsufficientData(format!(
            "{r} realizations, chi-square needs {MIN_REALIZATIONS}"
        )));
    }
    let counts = ce.component(s);
    if lambda == 0.0 {
        let clean = counts.iter().all(|&c| c == 0);
        return Ok(TestOutcome {
            statistic: if clean { 0.0 } else { f64::INFINITY },
            p_value: if clean { 1.0 } else { 0.0 },
            size: 0,
        });
    }
    let rf = r as f64;
    let top = counts.iter().copied().max().unwrap_or(0);
    let mut freq = vec![0usize; top + 1];
    for &c in &counts {
        freq[c] += 1;
    }
    // (first count in bin, expected)
    let mut edges: Vec<(usize, f64)> = Vec::new();
    let mut start = 0usize;
    let mut acc = 0.0;
    let mut cdf = 0.0;
    let mut k = 0usize;
    loop {
        let p = poisson_pmf(lambda, k as u64);
        acc += rf * p;
        cdf += p;
        k += 1;
        let tail = rf * (1.0 - cdf).max(0.0);
        if acc >= MIN_EXPECTED {
            edges.push((start, acc));
            start = k;
            acc = 0.0;
        }
        if tail < MIN_EXPECTED {
            break;
        }
    }
    let tail = rf * (1.0 - cdf).max(0.0) + acc;
    match edges.last_mut() {
        Some(last) if tail < MIN_EXPECTED => last.1 += tail,
        _ => edges.push((start, tail)),
    }
    if edges.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "only {} bin(s) after pooling for intensity {lambda}",
            edges.len()
        )));
    }
    let mut stat = 0.0;
    for (i, &(lo, expected)) in edges.iter().enumerate() {
        let hi = edges.get(i + 1).map_or(usize::MAX, |e| e.0);
        let observed: usize = freq
            .iter()
            .enumerate()
            .filter(|&(c, _)| c >= lo && c < hi)
            .map(|(_, &f)| f)
            .sum();
        stat += (observed as f64 - expected).powi(2) / expected;
    }
    let dof = edges.len() - 1;
    let p_value = ChiSquared::new(dof as f64)
        .map_err(|e| invalid(e.to_string()))?
        .sf(stat);
    Ok(TestOutcome { statistic: stat, p_value, size: dof })
}

/// One-sample Kolmogorov-Smirnov test of `gaps` against Exp(`rate`).
pub fn ks_exponential(gaps: &[f64], rate: f64) -> Result<TestOutcome> {
    if gaps.len() < MIN_GAPS {
        return Err(Error::InsufficientData(format!(
            "{} gaps, KS needs {MIN_GAPS}",
            gaps.len()
        )));
    }
    if let Some(g) = gaps.iter().find(|g| !(**g > 0.0)) {
        return Err(invalid(format!("gap {g} is not positive")));
    }
    if !(rate > 0.0) {
        return Err(invalid(format!("rate {rate} must be positive")));
    }
    let mut x = gaps.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &g) in x.iter().enumerate() {
        let f = 1.0 - (-rate * g).exp();
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let sn = n.sqrt();
    let p_value = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
    Ok(TestOutcome { statistic: d, p_value, size: x.len() })
}

/// Survival function of the Kolmogorov distribution.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 1.18 {
        // Jacobi theta form, fast for small arguments.
        let c = std::f64::consts::PI.powi(2) / (8.0 * t * t);
        let s: f64 = (1..=20)
            .map(|j| {
                let m = (2 * j - 1) as f64;
                (-m * m * c).exp()
            })
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / t * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|j| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (j * j) as f64 * t * t).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Sample mean and its standard error.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Least-squares line `y = intercept + slope x` with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData("linear fit needs at least 3 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("linear fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept, r_squared })
}
