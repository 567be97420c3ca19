//! Monte Carlo experiments over ensembles of random Hamiltonians.
//!
//! Realization `j` of an experiment draws its potential from the stream keyed by
//! `(master seed, experiment tag, j)`, and results are merged in index order, so every
//! number is independent of the worker count.

mod config;
mod hier;
mod lattice;
mod poisson;
mod report;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{default_k_ref, ExperimentKind, ModelConfig, ModelSpec};
pub use hier::{
    check_hypotheses, check_minami, check_wegner, estimate_eta, run_decoupled_comparison, run_dos,
    EtaEstimate, FatouPoint,
};
pub use lattice::run_lattice_appendix;
pub use poisson::run_poisson_acceptance;
pub use report::{Artifacts, CheckRecord, CountTable, EnsembleReport, Series, Status};

use crate::error::{invalid, Result};
use crate::geom::HierGeometry;
use crate::linalg::{symmetric_eigen, tridiagonal_count_below, EigenSystem};
use crate::operator::{
    assemble_hierarchical, assemble_lattice, bisect_eigenvalue, chain_green_column,
    chain_green_diag, Hamiltonian, HierStructure,
};
use crate::potential::PotentialDistribution;
use crate::seed::stream_key;

pub fn run_experiment(kind: ExperimentKind, cfg: &ModelConfig) -> Result<EnsembleReport> {
    cfg.validate()?;
    match kind {
        ExperimentKind::Dos => run_dos(cfg),
        ExperimentKind::Eta => Ok(estimate_eta(cfg, cfg.energy)?.into_report(cfg)),
        ExperimentKind::Wegner => check_wegner(cfg),
        ExperimentKind::Minami => check_minami(cfg),
        ExperimentKind::Decoupling => run_decoupled_comparison(cfg),
        ExperimentKind::Hypotheses => check_hypotheses(cfg),
        ExperimentKind::Poisson => run_poisson_acceptance(cfg),
        ExperimentKind::Lattice => run_lattice_appendix(cfg),
    }
}

/// Spectral model of one finite volume, before the potential is drawn.
#[derive(Debug, Clone)]
pub(crate) enum Model {
    Hier(HierStructure<f64>),
    Chain { len: usize, sigma: f64 },
    Grid { side: usize, sigma: f64 },
}

impl Model {
    /// Configured volume, or the hierarchical ball of radius `k` with truncation `trunc`.
    pub(crate) fn from_config(cfg: &ModelConfig, radius: Option<(usize, usize)>) -> Result<Self> {
        match cfg.model {
            ModelSpec::Hierarchical { n, k, .. } => {
                let (k, trunc) = radius.unwrap_or((k, cfg.truncation().unwrap_or(k)));
                Ok(Self::Hier(HierStructure::new(n, k, trunc, &cfg.couplings()?)?))
            }
            ModelSpec::Lattice { dims: 1, side, sigma, .. } => Ok(Self::Chain { len: side, sigma }),
            ModelSpec::Lattice { side, sigma, .. } => Ok(Self::Grid { side, sigma }),
        }
    }

    pub(crate) fn volume(&self) -> usize {
        match self {
            Self::Hier(h) => h.volume(),
            Self::Chain { len, .. } => *len,
            Self::Grid { side, .. } => side * side,
        }
    }

    pub(crate) fn realize(&self, omega: Vec<f64>) -> Result<Realized<'_>> {
        let inner = match self {
            Self::Hier(h) if h.trunc() == 0 => {
                let mut v = omega.clone();
                v.sort_by(f64::total_cmp);
                Inner::Sorted(v)
            }
            Self::Hier(_) => Inner::Hier,
            Self::Chain { len, sigma } => Inner::Chain {
                diag: omega.iter().map(|w| sigma * w).collect(),
                off: vec![1.0; len.saturating_sub(1)],
            },
            Self::Grid { side, sigma } => {
                let h = assemble_lattice(2, *side, *sigma, &omega)?;
                Inner::Dense(symmetric_eigen(h.matrix(), true)?)
            }
        };
        Ok(Realized { model: self, omega, inner })
    }
}

enum Inner {
    Hier,
    /// Diagonal model: the spectrum is the sorted potential.
    Sorted(Vec<f64>),
    Chain { diag: Vec<f64>, off: Vec<f64> },
    Dense(EigenSystem<f64>),
}

/// A model with its potential drawn.
pub(crate) struct Realized<'a> {
    model: &'a Model,
    omega: Vec<f64>,
    inner: Inner,
}

impl Realized<'_> {
    pub(crate) fn volume(&self) -> usize {
        self.omega.len()
    }

    pub(crate) fn count_below(&self, x: f64) -> Result<usize> {
        match (&self.inner, self.model) {
            (Inner::Hier, Model::Hier(h)) => h.count_below(&self.omega, x),
            (Inner::Chain { diag, off }, _) => Ok(tridiagonal_count_below(diag, off, x)),
            (Inner::Dense(es), _) => Ok(es.values().partition_point(|&v| v < x)),
            (Inner::Sorted(v), _) => Ok(v.partition_point(|&t| t < x)),
            _ => unreachable!("realization built from its own model"),
        }
    }

    /// Eigenvalue counts per decoupled block (a single block unless hierarchical).
    pub(crate) fn block_counts_below(&self, x: f64) -> Result<Vec<usize>> {
        match (&self.inner, self.model) {
            (Inner::Hier | Inner::Sorted(_), Model::Hier(h)) => h.block_counts_below(&self.omega, x),
            _ => Ok(vec![self.count_below(x)?]),
        }
    }

    fn bracket(&self) -> (f64, f64) {
        match (&self.inner, self.model) {
            (Inner::Hier, Model::Hier(h)) => h.spectral_bracket(&self.omega),
            (Inner::Chain { diag, .. }, _) => {
                let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo - 2.0 - 1e-9, hi + 2.0 + 1e-9)
            }
            (Inner::Dense(es), _) => {
                let v = es.values();
                (v[0] - 1e-9, v[v.len() - 1] + 1e-9)
            }
            (Inner::Sorted(v), _) => (v[0], v[v.len() - 1]),
            _ => unreachable!("realization built from its own model"),
        }
    }

    fn eigenvalue_between(&self, i: usize, lo: f64, hi: f64) -> Result<f64> {
        match &self.inner {
            Inner::Dense(es) => Ok(es.values()[i]),
            Inner::Sorted(v) => Ok(v[i]),
            _ => bisect_eigenvalue(|x| self.count_below(x), i, lo, hi),
        }
    }

    /// Sorted eigenvalues in `[lo, hi)` and the number of eigenvalues below `lo`.
    pub(crate) fn eigenvalues_in(&self, lo: f64, hi: f64) -> Result<(usize, Vec<f64>)> {
        let below = self.count_below(lo)?;
        let upto = self.count_below(hi)?;
        let vals = (below..upto)
            .map(|i| self.eigenvalue_between(i, lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Ok((below, vals))
    }

    /// Smallest eigenvalue `>= x`, if any.
    pub(crate) fn next_at_or_above(&self, x: f64) -> Result<Option<f64>> {
        let idx = self.count_below(x)?;
        if idx >= self.volume() {
            return Ok(None);
        }
        let (_, hi) = self.bracket();
        self.eigenvalue_between(idx, x, hi.max(x + 1e-12)).map(Some)
    }

    pub(crate) fn all_eigenvalues(&self) -> Result<Vec<f64>> {
        match (&self.inner, self.model) {
            (Inner::Dense(es), _) => Ok(es.values().to_vec()),
            (Inner::Sorted(v), _) => Ok(v.clone()),
            (Inner::Chain { diag, off }, _) => {
                Ok(crate::linalg::tridiagonal_eigen(diag, off, false)?.into_values())
            }
            _ => {
                let (lo, hi) = self.bracket();
                (0..self.volume()).map(|i| self.eigenvalue_between(i, lo, hi)).collect()
            }
        }
    }

    /// Traces of `(H - z)^{-1}` over the decoupled blocks.
    pub(crate) fn block_traces(&self, z: Complex<f64>) -> Result<Vec<Complex<f64>>> {
        match (&self.inner, self.model) {
            (Inner::Hier | Inner::Sorted(_), Model::Hier(h)) => {
                let mut r = h.resolvent(&self.omega, z, false)?;
                Ok(r.block_traces().to_vec())
            }
            (Inner::Chain { diag, off }, _) => {
                Ok(vec![chain_green_diag(diag, off, z)?.into_iter().sum()])
            }
            (Inner::Dense(es), _) => {
                Ok(vec![es.values().iter().map(|&e| (Complex::new(e, 0.0) - z).inv()).sum()])
            }
            _ => unreachable!("realization built from its own model"),
        }
    }

    pub(crate) fn trace_resolvent(&self, z: Complex<f64>) -> Result<Complex<f64>> {
        Ok(self.block_traces(z)?.into_iter().sum())
    }

    /// `(G(x,x), G(y,y), G(x,y))` at `z` for each pair.
    pub(crate) fn green_pairs(
        &self,
        z: Complex<f64>,
        pairs: &[(usize, usize)],
    ) -> Result<Vec<[Complex<f64>; 3]>> {
        match (&self.inner, self.model) {
            (Inner::Hier | Inner::Sorted(_), Model::Hier(h)) => {
                let r = h.resolvent(&self.omega, z, true)?;
                pairs
                    .iter()
                    .map(|&(x, y)| Ok([r.entry(x, x)?, r.entry(y, y)?, r.entry(x, y)?]))
                    .collect()
            }
            (Inner::Chain { diag, .. }, _) => pairs
                .iter()
                .map(|&(x, y)| {
                    let cx = chain_green_column(diag, x, z)?;
                    let cy = chain_green_column(diag, y, z)?;
                    Ok([cx[x], cy[y], cx[y]])
                })
                .collect(),
            (Inner::Dense(es), _) => pairs
                .iter()
                .map(|&(x, y)| {
                    let mut out = [Complex::new(0.0, 0.0); 3];
                    for (j, &e) in es.values().iter().enumerate() {
                        let pole = (Complex::new(e, 0.0) - z).inv();
                        let (vx, vy) = (es.component(x, j)?, es.component(y, j)?);
                        out[0] += pole * (vx * vx);
                        out[1] += pole * (vy * vy);
                        out[2] += pole * (vx * vy);
                    }
                    Ok(out)
                })
                .collect(),
            _ => unreachable!("realization built from its own model"),
        }
    }

    /// Block traces and `||Im G_block||_F^2` at `z`, for the pair functional.
    pub(crate) fn block_pair_terms(&self, z: Complex<f64>) -> Result<Vec<(Complex<f64>, f64)>> {
        match (&self.inner, self.model) {
            (Inner::Hier | Inner::Sorted(_), Model::Hier(h)) => {
                let mut r = h.resolvent(&self.omega, z, true)?;
                let traces = r.block_traces().to_vec();
                traces
                    .into_iter()
                    .enumerate()
                    .map(|(b, t)| Ok((t, r.block_im_frobenius_sq(b)?)))
                    .collect()
            }
            _ => Err(invalid("block pair terms are defined for hierarchical models")),
        }
    }
}

/// Draw of the potential for realization `j` under `tag`, with its stream key.
pub(crate) fn draw(
    pot: &PotentialDistribution,
    len: usize,
    master: u64,
    tag: &str,
    j: u64,
) -> (u64, Vec<f64>) {
    let key = stream_key(master, tag, j, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    (key, pot.sample_vec(len, &mut rng))
}

/// Runs `f(j)` for `j < count` in parallel and returns results in index order.
pub(crate) fn par_collect<T: Send>(
    count: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    (0..count).into_par_iter().map(f).collect()
}

/// Full spectra of the first `count` realizations of the configured model.
pub fn sample_spectra(cfg: &ModelConfig, count: usize) -> Result<Vec<(u64, Vec<f64>)>> {
    cfg.validate()?;
    let model = Model::from_config(cfg, None)?;
    let pot = cfg.potential();
    par_collect(count, |j| {
        let (key, omega) = draw(&pot, model.volume(), cfg.master_seed, "spectra", j as u64);
        Ok((key, model.realize(omega)?.all_eigenvalues()?))
    })
}

/// Hamiltonian of realization 0 of the configured model, for inspection.
pub fn sample_hamiltonian(cfg: &ModelConfig) -> Result<Hamiltonian<f64>> {
    cfg.validate()?;
    let pot = cfg.potential();
    match &cfg.model {
        ModelSpec::Hierarchical { n, k, .. } => {
            let geom = HierGeometry::new(*n, *k)?;
            let (_, omega) = draw(&pot, geom.volume(), cfg.master_seed, "matrix", 0);
            assemble_hierarchical(&geom, &cfg.couplings()?, cfg.truncation().unwrap_or(*k), &omega, *k)
        }
        ModelSpec::Lattice { dims, side, sigma, .. } => {
            let (_, omega) = draw(&pot, side.pow(*dims as u32), cfg.master_seed, "matrix", 0);
            assemble_lattice(*dims, *side, *sigma, &omega)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::CouplingSequence;

    fn hier_cfg(k: usize, trunc: usize) -> ModelConfig {
        ModelConfig::from_json(&format!(
            r#"{{"model":{{"kind":"hierarchical","n":2,"rho":8,"k":{k},"trunc":{trunc}}},"experiments":["wegner"]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn realized_models_agree_with_dense_spectra() {
        let cfg = hier_cfg(6, 6);
        let model = Model::from_config(&cfg, None).unwrap();
        let (_, omega) = draw(&cfg.potential(), 64, 1, "t", 0);
        let geom = HierGeometry::new(2, 6).unwrap();
        let coup = CouplingSequence::geometric(8.0, 12).unwrap();
        let dense = assemble_hierarchical(&geom, &coup, 6, &omega, 6).unwrap().eigen(false).unwrap();
        let r = model.realize(omega).unwrap();
        let (below, inside) = r.eigenvalues_in(0.4, 0.9).unwrap();
        let want: Vec<f64> = dense.values().iter().copied().filter(|v| (0.4..0.9).contains(v)).collect();
        assert_eq!(below + inside.len(), dense.values().iter().filter(|&&v| v < 0.9).count());
        for (a, b) in inside.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
        let next = r.next_at_or_above(0.9).unwrap().unwrap();
        let want_next = dense.values().iter().copied().find(|&v| v >= 0.9).unwrap();
        assert!((next - want_next).abs() < 1e-10);
    }

    #[test]
    fn chain_and_grid_models_agree_with_dense() {
        for (dims, side) in [(1usize, 40usize), (2, 6)] {
            let cfg = ModelConfig::from_json(&format!(
                r#"{{"model":{{"kind":"lattice","dims":{dims},"side":{side},"sigma":3,"fm_max_distance":4}}}}"#
            ))
            .unwrap();
            let model = Model::from_config(&cfg, None).unwrap();
            let vol = model.volume();
            let (_, omega) = draw(&cfg.potential(), vol, 2, "t", 0);
            let h = assemble_lattice(dims, side, 3.0, &omega).unwrap();
            let es = h.eigen(false).unwrap();
            let r = model.realize(omega).unwrap();
            let all = r.all_eigenvalues().unwrap();
            for (a, b) in all.iter().zip(es.values()) {
                assert!((a - b).abs() < 1e-9);
            }
            let z = Complex::new(0.2, 0.3);
            let tr: Complex<f64> = es.values().iter().map(|&e| (Complex::new(e, 0.0) - z).inv()).sum();
            assert!((r.trace_resolvent(z).unwrap() - tr).norm() < 1e-9);
            let g = r.green_pairs(z, &[(0, 1)]).unwrap()[0];
            let inv = crate::linalg::ComplexMatrix::shifted(h.matrix(), z).inverse().unwrap();
            assert!((g[2] - inv.get(0, 1)).norm() < 1e-9);
        }
    }
}
