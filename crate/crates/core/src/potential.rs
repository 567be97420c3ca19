//! Single-site distributions of the random potential.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Cauchy, Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StatrsNormal};

use crate::error::{invalid, Result};

/// Law of the i.i.d. potential values `omega(x)`; every variant has a bounded density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialDistribution {
    Uniform { a: f64, b: f64 },
    Cauchy { u: f64, v: f64 },
    Gaussian { m: f64, s: f64 },
}

impl PotentialDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Uniform { a, b } if !(a < b) => {
                Err(invalid(format!("uniform({a},{b}) needs a < b")))
            }
            Self::Cauchy { v, .. } if !(v > 0.0) => {
                Err(invalid(format!("cauchy scale v={v} must be positive")))
            }
            Self::Gaussian { s, .. } if !(s > 0.0) => {
                Err(invalid(format!("gaussian width s={s} must be positive")))
            }
            _ => Ok(()),
        }
    }

    pub fn density(&self, t: f64) -> f64 {
        match *self {
            Self::Uniform { a, b } => {
                if (a..=b).contains(&t) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Self::Cauchy { u, v } => v / (PI * ((u - t).powi(2) + v * v)),
            Self::Gaussian { m, s } => {
                (-(t - m).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * PI).sqrt())
            }
        }
    }

    /// `sup_t gamma(t)`, exact for every family.
    pub fn density_sup(&self) -> f64 {
        match *self {
            Self::Uniform { a, b } => 1.0 / (b - a),
            Self::Cauchy { v, .. } => 1.0 / (PI * v),
            Self::Gaussian { s, .. } => 1.0 / (s * (2.0 * PI).sqrt()),
        }
    }

    /// Closed support interval; unbounded ends are infinite.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Uniform { a, b } => (a, b),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match *self {
            Self::Uniform { a, b } => ((t - a) / (b - a)).clamp(0.0, 1.0),
            Self::Cauchy { u, v } => 0.5 + ((t - u) / v).atan() / PI,
            Self::Gaussian { m, s } => StatrsNormal::new(m, s).expect("validated").cdf(t),
        }
    }

    /// Probability mass of `[lo, hi)`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        (self.cdf(hi) - self.cdf(lo)).max(0.0)
    }

    /// Interval holding all but a negligible part of the mass, for histogram ranges.
    pub fn bulk_range(&self) -> (f64, f64) {
        match *self {
            Self::Uniform { a, b } => (a, b),
            Self::Cauchy { u, v } => (u - 10.0 * v, u + 10.0 * v),
            Self::Gaussian { m, s } => (m - 6.0 * s, m + 6.0 * s),
        }
    }

    /// `(1/pi) int gamma(t) eps / ((t - c)^2 + eps^2) dt`, the density smoothed by a
    /// Poisson kernel of width `eps`.
    pub fn poisson_smoothed(&self, c: f64, eps: f64) -> f64 {
        match *self {
            Self::Uniform { a, b } => (((b - c) / eps).atan() - ((a - c) / eps).atan()) / (PI * (b - a)),
            Self::Cauchy { u, v } => Self::Cauchy { u, v: v + eps }.density(c),
            Self::Gaussian { .. } => {
                // t = c + eps tan(theta) turns the kernel into d(theta) / pi.
                let m = 4000;
                let h = PI / m as f64;
                let f = |i: usize| {
                    let th = -PI / 2.0 + i as f64 * h;
                    if i == 0 || i == m {
                        0.0
                    } else {
                        self.density(c + eps * th.tan())
                    }
                };
                let mut acc = f(0) + f(m);
                for i in 1..m {
                    acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
                }
                acc * h / (3.0 * PI)
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Uniform { a, b } => Uniform::new(a, b).expect("validated").sample(rng),
            Self::Cauchy { u, v } => Cauchy::new(u, v).expect("validated").sample(rng),
            Self::Gaussian { m, s } => Normal::new(m, s).expect("validated").sample(rng),
        }
    }

    pub fn sample_vec<R: Rng + ?Sized>(&self, len: usize, rng: &mut R) -> Vec<f64> {
        (0..len).map(|_| self.sample(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn density_sup_is_exact() {
        let u = PotentialDistribution::Uniform { a: 0.0, b: 2.0 };
        assert_eq!(u.density_sup(), 0.5);
        let c = PotentialDistribution::Cauchy { u: 0.3, v: 2.0 };
        assert!((c.density_sup() - c.density(0.3)).abs() < 1e-15);
        assert!((c.density_sup() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        let g = PotentialDistribution::Gaussian { m: 1.0, s: 0.5 };
        assert!((g.density_sup() - g.density(1.0)).abs() < 1e-15);
    }

    #[test]
    fn cauchy_density_formula() {
        let c = PotentialDistribution::Cauchy { u: 0.0, v: 1.0 };
        assert!((c.density(1.0) - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!((c.mass(-1.0, 1.0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PotentialDistribution::Uniform { a: 1.0, b: 1.0 }.validate().is_err());
        assert!(PotentialDistribution::Cauchy { u: 0.0, v: 0.0 }.validate().is_err());
        assert!(PotentialDistribution::Gaussian { m: 0.0, s: -1.0 }.validate().is_err());
    }

    #[test]
    fn uniform_samples_stay_in_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = PotentialDistribution::Uniform { a: -0.5, b: 0.5 };
        let xs = d.sample_vec(10_000, &mut rng);
        assert!(xs.iter().all(|x| (-0.5..0.5).contains(x)));
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 4.0 * (1.0 / 12.0f64 / 1e4).sqrt());
    }

    #[test]
    fn serde_tagged_layout() {
        let d: PotentialDistribution =
            serde_json::from_str(r#"{"kind":"cauchy","u":0.0,"v":1.0}"#).unwrap();
        assert_eq!(d, PotentialDistribution::Cauchy { u: 0.0, v: 1.0 });
    }

    #[test]
    fn poisson_smoothing_matches_quadrature() {
        for pot in [
            PotentialDistribution::Uniform { a: 0.0, b: 1.0 },
            PotentialDistribution::Cauchy { u: 0.0, v: 1.0 },
            PotentialDistribution::Gaussian { m: 0.2, s: 0.7 },
        ] {
            for (c, eps) in [(0.5, 0.3), (0.1, 0.05), (2.0, 1.0)] {
                let (lo, hi, m) = (-400.0, 400.0, 800_000);
                let h = (hi - lo) / m as f64;
                let q: f64 = (0..m)
                    .map(|i| {
                        let t = lo + (i as f64 + 0.5) * h;
                        pot.density(t) * eps / ((t - c).powi(2) + eps * eps)
                    })
                    .sum::<f64>()
                    * h
                    / PI;
                let tol = if matches!(pot, PotentialDistribution::Cauchy { .. }) { 2e-3 } else { 1e-4 };
                assert!((pot.poisson_smoothed(c, eps) - q).abs() < tol, "{pot:?} {c} {eps}");
            }
        }
        let u = PotentialDistribution::Uniform { a: 0.0, b: 1.0 };
        assert!((u.poisson_smoothed(0.5, 1e-6) - 1.0).abs() < 1e-5);
    }
}
