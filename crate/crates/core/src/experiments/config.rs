use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geom::{spectral_dimension, CouplingSequence, MAX_SITES};
use crate::pointproc::IntervalFamily;
use crate::potential::PotentialDistribution;

/// Experiments known to the driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Dos,
    Eta,
    Wegner,
    Minami,
    Decoupling,
    Hypotheses,
    Poisson,
    Lattice,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 8] = [
        Self::Dos,
        Self::Eta,
        Self::Wegner,
        Self::Minami,
        Self::Decoupling,
        Self::Hypotheses,
        Self::Poisson,
        Self::Lattice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Dos => "dos",
            Self::Eta => "eta",
            Self::Wegner => "wegner",
            Self::Minami => "minami",
            Self::Decoupling => "decoupling",
            Self::Hypotheses => "hypotheses",
            Self::Poisson => "poisson",
            Self::Lattice => "lattice",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::Dos => "density of states: strong-law convergence of the normalized trace resolvent",
            Self::Eta => "density of states at the probe energy, histogram estimate plus smoothing scan",
            Self::Wegner => "mean window counts against the bounded-density bound",
            Self::Minami => "mean 2x2 determinant of imaginary resolvent entries",
            Self::Decoupling => "full versus block-decoupled rescaled process, same potential",
            Self::Hypotheses => "sparseness, intensity and no-double-point conditions on the blocks",
            Self::Poisson => "Poisson statistics of rescaled eigenvalues near the probe energy",
            Self::Lattice => "lattice Anderson model: fractional-moment decay, walls, Poisson statistics",
        }
    }

    fn needs_decoupling(self) -> bool {
        matches!(self, Self::Decoupling | Self::Hypotheses)
    }

    fn needs_poisson_regime(self) -> bool {
        matches!(self, Self::Decoupling | Self::Hypotheses | Self::Poisson)
    }

    fn hierarchical_only(self) -> bool {
        matches!(self, Self::Dos | Self::Decoupling | Self::Hypotheses)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Hierarchical {
        n: usize,
        rho: f64,
        k: usize,
        /// Highest coupling level kept; 0 gives the diagonal model. Defaults to `k`.
        #[serde(default)]
        trunc: Option<usize>,
        /// Explicit weights `p_1, p_2, ...` instead of the geometric family.
        #[serde(default)]
        p: Option<Vec<f64>>,
        #[serde(default)]
        c1: Option<f64>,
        #[serde(default)]
        c2: Option<f64>,
    },
    Lattice {
        dims: usize,
        side: usize,
        sigma: f64,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default)]
        beta: Option<f64>,
        #[serde(default = "default_s")]
        s: f64,
        #[serde(default = "default_fm_distance")]
        fm_max_distance: usize,
        #[serde(default = "default_fm_z")]
        fm_z: [f64; 2],
    },
}

fn default_alpha() -> f64 {
    0.5
}
fn default_s() -> f64 {
    0.5
}
fn default_fm_distance() -> usize {
    48
}
fn default_fm_z() -> [f64; 2] {
    [0.5, 0.01]
}
fn default_energy() -> f64 {
    0.5
}
fn default_windows() -> Vec<[f64; 2]> {
    vec![[-1.0, 1.0]]
}
fn default_realizations() -> usize {
    2000
}
fn default_z_list() -> Vec<[f64; 2]> {
    vec![[0.5, 0.1], [0.5, 0.01]]
}
fn default_eps() -> Vec<f64> {
    vec![0.1, 0.03, 0.01]
}
fn default_half_width() -> f64 {
    0.05
}
fn default_eta_realizations() -> usize {
    400
}
fn default_repeats() -> usize {
    20
}
fn default_min_passes() -> usize {
    18
}
fn default_level() -> f64 {
    0.01
}
fn default_decouple_z() -> [f64; 2] {
    [0.0, 1.0]
}
fn default_char_t() -> Vec<f64> {
    vec![PI / 4.0, PI / 2.0, PI]
}

/// Full description of one run. Field names accept the short aliases `e`, `c`, `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelSpec,
    /// Defaults to uniform on `[0, 1]` (hierarchical) or `[-1/2, 1/2]` (lattice).
    #[serde(default)]
    pub potential: Option<PotentialDistribution>,
    #[serde(default = "default_energy", alias = "e")]
    pub energy: f64,
    #[serde(default, alias = "c")]
    pub decouple_exponent: Option<f64>,
    /// Disjoint windows whose joint counts are tested.
    #[serde(default = "default_windows")]
    pub windows: Vec<[f64; 2]>,
    /// Further windows tested one at a time; may overlap the family above.
    #[serde(default)]
    pub marginal_windows: Vec<[f64; 2]>,
    #[serde(default = "default_realizations", alias = "R")]
    pub realizations: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_z_list")]
    pub z_list: Vec<[f64; 2]>,
    #[serde(default = "default_eps")]
    pub epsilon_scan: Vec<f64>,
    #[serde(default = "default_half_width")]
    pub eta_half_width: f64,
    #[serde(default = "default_eta_realizations")]
    pub eta_realizations: usize,
    /// Radius of the reference volume; defaults to the largest with `n^k <= 4096`.
    #[serde(default)]
    pub k_ref: Option<usize>,
    #[serde(default = "default_repeats")]
    pub seed_repeats: usize,
    #[serde(default = "default_min_passes")]
    pub min_passes: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    /// Unscaled spectral parameter of the Poisson kernel, `z_k = e + z / |B_k|`.
    #[serde(default = "default_decouple_z")]
    pub decouple_z: [f64; 2],
    #[serde(default = "default_char_t")]
    pub char_t: Vec<f64>,
    #[serde(default)]
    pub experiments: Option<Vec<ExperimentKind>>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Copy with every defaulted field filled in.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.potential = Some(self.potential());
        out.experiments = Some(self.experiment_list());
        if let ModelSpec::Hierarchical { n, k, trunc, .. } = &mut out.model {
            trunc.get_or_insert(*k);
            out.k_ref.get_or_insert(default_k_ref(*n));
        }
        out
    }

    pub fn potential(&self) -> PotentialDistribution {
        self.potential.unwrap_or(match self.model {
            ModelSpec::Hierarchical { .. } => PotentialDistribution::Uniform { a: 0.0, b: 1.0 },
            ModelSpec::Lattice { .. } => PotentialDistribution::Uniform { a: -0.5, b: 0.5 },
        })
    }

    pub fn experiment_list(&self) -> Vec<ExperimentKind> {
        self.experiments.clone().unwrap_or_else(|| match self.model {
            ModelSpec::Hierarchical { .. } => ExperimentKind::ALL
                .iter()
                .copied()
                .filter(|k| *k != ExperimentKind::Lattice)
                .collect(),
            ModelSpec::Lattice { .. } => vec![ExperimentKind::Lattice],
        })
    }

    pub fn is_hierarchical(&self) -> bool {
        matches!(self.model, ModelSpec::Hierarchical { .. })
    }

    /// Number of sites of the configured volume.
    pub fn volume(&self) -> usize {
        match self.model {
            ModelSpec::Hierarchical { n, k, .. } => n.saturating_pow(k as u32),
            ModelSpec::Lattice { dims, side, .. } => side.saturating_pow(dims as u32),
        }
    }

    pub fn truncation(&self) -> Option<usize> {
        match self.model {
            ModelSpec::Hierarchical { k, trunc, .. } => Some(trunc.unwrap_or(k)),
            ModelSpec::Lattice { .. } => None,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.truncation() == Some(0)
    }

    pub fn spectral_dimension(&self) -> Option<f64> {
        match self.model {
            ModelSpec::Hierarchical { n, rho, .. } => spectral_dimension(n, rho).ok(),
            ModelSpec::Lattice { dims, .. } => Some(dims as f64),
        }
    }

    /// `r_k = round(c k)`.
    pub fn decoupling_radius(&self) -> Option<usize> {
        match (self.model.clone(), self.decouple_exponent) {
            (ModelSpec::Hierarchical { k, .. }, Some(c)) => Some((c * k as f64).round() as usize),
            _ => None,
        }
    }

    pub fn reference_radius(&self) -> Option<usize> {
        match self.model {
            ModelSpec::Hierarchical { n, .. } => Some(self.k_ref.unwrap_or(default_k_ref(n))),
            ModelSpec::Lattice { .. } => None,
        }
    }

    /// Coupling sequence long enough for both the configured and the reference volume.
    pub fn couplings(&self) -> Result<CouplingSequence<f64>> {
        match &self.model {
            ModelSpec::Hierarchical { rho, k, p, c1, c2, n, .. } => {
                let len = (*k).max(self.k_ref.unwrap_or(default_k_ref(*n)));
                match p {
                    None => CouplingSequence::geometric(*rho, len),
                    Some(p) => {
                        if p.len() < len {
                            return Err(invalid(format!(
                                "explicit couplings list {} weights, the run needs {len}",
                                p.len()
                            )));
                        }
                        let (c1, c2) = match (c1, c2) {
                            (Some(a), Some(b)) => (*a, *b),
                            _ => return Err(invalid("explicit couplings need c1 and c2")),
                        };
                        CouplingSequence::explicit(p.clone(), *rho, c1, c2)
                    }
                }
            }
            ModelSpec::Lattice { .. } => Err(invalid("lattice models have no couplings")),
        }
    }

    pub fn window_family(&self) -> Result<IntervalFamily> {
        IntervalFamily::new(&self.windows.iter().map(|w| (w[0], w[1])).collect::<Vec<_>>())
    }

    /// Every tested window: the disjoint family first, then the marginal ones.
    pub fn all_windows(&self) -> Vec<[f64; 2]> {
        self.windows.iter().chain(&self.marginal_windows).copied().collect()
    }

    pub fn z_values(&self) -> Vec<Complex<f64>> {
        self.z_list.iter().map(|z| Complex::new(z[0], z[1])).collect()
    }

    /// Checks every constraint the enabled experiments rely on.
    pub fn validate(&self) -> Result<()> {
        self.potential().validate()?;
        let exps = self.experiment_list();
        if self.realizations == 0 {
            return Err(invalid("realizations must be positive"));
        }
        if !self.energy.is_finite() {
            return Err(invalid("probe energy must be finite"));
        }
        self.window_family()?;
        for w in &self.marginal_windows {
            crate::pointproc::Interval::new(w[0], w[1])?;
        }
        if let Some(z) = self.z_list.iter().find(|z| !(z[1] > 0.0)) {
            return Err(invalid(format!("probe z = {} + {}i needs Im z > 0", z[0], z[1])));
        }
        if !(self.decouple_z[1] > 0.0) {
            return Err(invalid("decoupling z needs Im z > 0"));
        }
        if self.epsilon_scan.iter().any(|e| !(*e > 0.0))
            || self.epsilon_scan.windows(2).any(|w| !(w[1] < w[0]))
        {
            return Err(invalid("epsilon_scan must be positive and strictly decreasing"));
        }
        if !(self.eta_half_width > 0.0) {
            return Err(invalid("eta_half_width must be positive"));
        }
        if self.eta_realizations < 2 {
            return Err(invalid("eta_realizations must be at least 2"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(invalid("significance level must lie in (0, 1)"));
        }
        if self.seed_repeats == 0 || self.min_passes > self.seed_repeats {
            return Err(invalid("need 1 <= seed_repeats and min_passes <= seed_repeats"));
        }
        match &self.model {
            ModelSpec::Hierarchical { n, rho, k, trunc, .. } => {
                let (n, k) = (*n, *k);
                if n < 2 || k < 1 {
                    return Err(invalid("hierarchical model needs n >= 2 and k >= 1"));
                }
                let d = spectral_dimension(n, *rho)?;
                let k_ref = self.reference_radius().unwrap_or(k);
                for (label, radius) in [("k", k), ("k_ref", k_ref)] {
                    let fits = u32::try_from(radius)
                        .ok()
                        .and_then(|r| n.checked_pow(r))
                        .is_some_and(|v| v <= MAX_SITES);
                    if !fits {
                        return Err(invalid(format!(
                            "{label}={radius} gives more than {MAX_SITES} sites for n={n}"
                        )));
                    }
                }
                let trunc = trunc.unwrap_or(k);
                if trunc > k {
                    return Err(invalid(format!("trunc={trunc} exceeds k={k}")));
                }
                self.couplings()?;
                if exps.contains(&ExperimentKind::Lattice) {
                    return Err(invalid("the lattice experiment needs a lattice model"));
                }
                if trunc != 0 && exps.iter().any(|e| e.needs_poisson_regime()) && d >= 1.0 {
                    return Err(invalid(format!(
                        "d={d:.4} violates d<1 (Poisson regime needs rho > n^2)"
                    )));
                }
                if exps.iter().any(|e| e.needs_decoupling()) {
                    let c = self
                        .decouple_exponent
                        .ok_or_else(|| invalid("decoupling experiments need decouple_exponent c"))?;
                    if trunc != 0 && !(d < c && c < 1.0) {
                        return Err(invalid(format!("c={c} with d={d:.3} violates d<c<1")));
                    }
                    if trunc == 0 && !(c > 0.0 && c < 1.0) {
                        return Err(invalid(format!("c={c} must lie in (0, 1)")));
                    }
                    let r = (c * k as f64).round() as usize;
                    if r < 1 || r >= k {
                        return Err(invalid(format!("r_k = round(c k) = {r} must satisfy 1 <= r_k < k")));
                    }
                }
                if exps.contains(&ExperimentKind::Minami) && n.pow(k as u32) < 2 {
                    return Err(invalid("Minami check needs at least 2 sites"));
                }
            }
            ModelSpec::Lattice { dims, side, sigma, alpha, beta, s, fm_max_distance, fm_z } => {
                if !(1..=2).contains(dims) {
                    return Err(invalid(format!("lattice dimension {dims} must be 1 or 2")));
                }
                if *side < 2 {
                    return Err(invalid("lattice side must be at least 2"));
                }
                if side.saturating_pow(*dims as u32) > MAX_SITES {
                    return Err(invalid(format!("lattice box exceeds {MAX_SITES} sites")));
                }
                if !(*sigma >= 0.0) {
                    return Err(invalid("disorder sigma must be nonnegative"));
                }
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(invalid(format!("alpha={alpha} must lie in (0, 1)")));
                }
                if !(*s > 0.0 && *s < 1.0) {
                    return Err(invalid(format!("s={s} must lie in (0, 1)")));
                }
                if beta.is_some_and(|b| !(b > 0.0)) {
                    return Err(invalid("beta must be positive"));
                }
                if *fm_max_distance < 3 || *fm_max_distance >= *side {
                    return Err(invalid("fm_max_distance must be at least 3 and below the side"));
                }
                if !(fm_z[1] > 0.0) {
                    return Err(invalid("fm_z needs Im z > 0"));
                }
                if let Some(e) = exps.iter().find(|e| e.hierarchical_only()) {
                    return Err(invalid(format!("experiment {} needs a hierarchical model", e.name())));
                }
            }
        }
        Ok(())
    }
}

/// Largest `k` with `n^k <= 4096`.
pub fn default_k_ref(n: usize) -> usize {
    let mut k = 0;
    while n.saturating_pow(k as u32 + 1) <= 4096 {
        k += 1;
    }
    k.max(1)
}
