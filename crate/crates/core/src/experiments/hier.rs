//! Density of states, Wegner and Minami bounds, decoupling and the block hypotheses.

use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{draw, par_collect, CheckRecord, EnsembleReport, Model, ModelConfig, ModelSpec, Realized, Series, Status};
use crate::error::{invalid, Result};
use crate::geom::CouplingSequence;
use crate::operator::{finite_free_green, HierStructure};
use crate::potential::PotentialDistribution;
use crate::stats::{linear_fit, mean_se};

/// Reference volume for averaged quantities: `(model, radius)`, radius `None` on lattices.
pub(crate) fn reference_model(cfg: &ModelConfig) -> Result<(Model, Option<usize>)> {
    match cfg.model {
        ModelSpec::Hierarchical { k, .. } => {
            let k_ref = cfg.reference_radius().unwrap_or(k);
            let trunc = cfg.truncation().unwrap_or(k);
            let t = if trunc == k { k_ref } else { trunc.min(k_ref) };
            Ok((Model::from_config(cfg, Some((k_ref, t)))?, Some(k_ref)))
        }
        ModelSpec::Lattice { .. } => Ok((Model::from_config(cfg, None)?, None)),
    }
}

fn hier_params(cfg: &ModelConfig, what: &str) -> Result<(usize, usize, usize)> {
    match cfg.model {
        ModelSpec::Hierarchical { n, k, .. } => Ok((n, k, cfg.truncation().unwrap_or(k))),
        ModelSpec::Lattice { .. } => Err(invalid(format!("{what} needs a hierarchical model"))),
    }
}

/// `(lambda_r, mass)` of the averaged spectral measure of `sum_{s<=t} p_s E_s` at a site.
fn free_masses(coup: &CouplingSequence<f64>, n: usize, t: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let mut out: Vec<(f64, f64)> =
        (0..t).map(|r| (coup.lambda(r), nf.powi(-(r as i32)) * (1.0 - 1.0 / nf))).collect();
    out.push((coup.lambda(t), nf.powi(-(t as i32))));
    out
}

/// Mean of the window count estimator `mu([e - delta, e + delta)) / (2 delta)` for a
/// Cauchy(`u`, `v`) potential, where the averaged measure is the free measure shifted
/// by the potential law.
pub(crate) fn lloyd_window_density(
    coup: &CouplingSequence<f64>,
    n: usize,
    t: usize,
    (u, v): (f64, f64),
    e: f64,
    delta: f64,
) -> f64 {
    let pot = PotentialDistribution::Cauchy { u, v };
    free_masses(coup, n, t)
        .into_iter()
        .map(|(l, m)| m * pot.mass(e - delta - l, e + delta - l))
        .sum::<f64>()
        / (2.0 * delta)
}

/// `E <delta_0, (H - z)^{-1} delta_0>` for a Cauchy(`u`, `v`) potential.
pub(crate) fn lloyd_green(
    coup: &CouplingSequence<f64>,
    n: usize,
    t: usize,
    (u, v): (f64, f64),
    z: Complex<f64>,
) -> Result<Complex<f64>> {
    finite_free_green(coup, n, t, Complex::new(z.re - u, z.im + v))
}

fn window_count(real: &Realized, lo: f64, hi: f64) -> Result<usize> {
    Ok(real.count_below(hi)? - real.count_below(lo)?)
}

fn fmt_z(z: Complex<f64>) -> String {
    format!("{}{:+}i", z.re, z.im)
}

fn fmt_window(w: [f64; 2]) -> String {
    format!("[{}, {})", w[0], w[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FatouPoint {
    pub epsilon: f64,
    /// `(1/pi) E Im (1/N) tr (H - e - i epsilon)^{-1}`.
    pub value: f64,
    pub se: f64,
}

/// Density of states at one energy, from window counts at the reference volume.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaEstimate {
    pub energy: f64,
    pub half_width: f64,
    pub volume: usize,
    pub radius: Option<usize>,
    pub realizations: usize,
    pub eta_hat: f64,
    pub se: f64,
    pub fatou: Vec<FatouPoint>,
    /// Change between the last two scan values.
    pub fatou_change: f64,
    pub stable: bool,
    /// Exact mean of the estimator, where an oracle exists, with its SE multiple.
    pub exact: Option<(f64, f64)>,
    pub master_seed: u64,
}

impl EtaEstimate {
    pub fn regular(&self) -> bool {
        self.eta_hat > 0.0 && self.stable && self.se <= 0.05 * self.eta_hat
    }

    pub fn records(&self) -> Vec<CheckRecord> {
        let seeds = vec![self.master_seed];
        let mut out = Vec::new();
        let est = CheckRecord::new(
            "eta histogram",
            "averaged density of states at e from window counts",
            self.eta_hat,
            self.exact.map_or(self.eta_hat, |x| x.0),
        )
        .se(self.se)
        .seeds(seeds.clone())
        .note(format!(
            "half-width {}, {} sites, {} realizations",
            self.half_width, self.volume, self.realizations
        ));
        out.push(match self.exact {
            Some((_, slack)) => est.within(slack),
            None => est,
        });
        if let Some(last) = self.fatou.last() {
            out.push(
                CheckRecord::new(
                    "fatou scan",
                    "smeared trace resolvent (1/pi) E Im G(e + i eps) stabilizes as eps decreases",
                    last.value,
                    self.eta_hat,
                )
                .se(last.se)
                .seeds(seeds.clone())
                .note(format!("change over the last two eps values: {:.3e}", self.fatou_change)),
            );
        }
        let status = if self.regular() { Status::Pass } else { Status::Inconclusive };
        let why = if self.eta_hat <= 0.0 {
            "eta <= 0"
        } else if !self.stable {
            "smoothing scan not stable"
        } else if self.se > 0.05 * self.eta_hat {
            "relative standard error above 5%"
        } else {
            "eta > 0, stable scan, relative SE <= 5%"
        };
        out.push(
            CheckRecord::new(
                "energy regular",
                "Poisson statistics need eta(e) > 0 at a regular point",
                self.eta_hat,
                0.0,
            )
            .se(self.se)
            .status(status)
            .seeds(seeds)
            .note(why),
        );
        out
    }

    pub fn into_report(self, _cfg: &ModelConfig) -> EnsembleReport {
        let mut rep = EnsembleReport::new("eta", self.realizations);
        rep.records = self.records();
        let mut s = Series::new("fatou scan", &["epsilon", "value", "se"]);
        for p in &self.fatou {
            s.push(vec![p.epsilon, p.value, p.se]);
        }
        rep.series.push(s);
        rep
    }
}

pub fn estimate_eta(cfg: &ModelConfig, e: f64) -> Result<EtaEstimate> {
    let (model, radius) = reference_model(cfg)?;
    let pot = cfg.potential();
    let big_n = model.volume();
    let nf = big_n as f64;
    let delta = cfg.eta_half_width;
    let eps = &cfg.epsilon_scan;
    let rows = par_collect(cfg.eta_realizations, |j| {
        let (_, omega) = draw(&pot, big_n, cfg.master_seed, "reference", j as u64);
        let real = model.realize(omega)?;
        let c = window_count(&real, e - delta, e + delta)? as f64;
        let scan = eps
            .iter()
            .map(|&ep| Ok(real.trace_resolvent(Complex::new(e, ep))?.im / (PI * nf)))
            .collect::<Result<Vec<f64>>>()?;
        Ok((c / (nf * 2.0 * delta), scan))
    })?;
    let (eta_hat, se) = mean_se(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    let fatou: Vec<FatouPoint> = eps
        .iter()
        .enumerate()
        .map(|(i, &ep)| {
            let (value, se) = mean_se(&rows.iter().map(|r| r.1[i]).collect::<Vec<_>>());
            FatouPoint { epsilon: ep, value, se }
        })
        .collect();
    let (fatou_change, stable) = match fatou.as_slice() {
        [.., a, b] => {
            let d = (b.value - a.value).abs();
            (d, d <= (0.1 * b.value.abs()).max(3.0 * a.se.hypot(b.se)))
        }
        _ => (0.0, true),
    };
    let exact = match (&model, pot) {
        (Model::Hier(h), _) if h.trunc() == 0 => Some((pot.mass(e - delta, e + delta) / (2.0 * delta), 4.0)),
        (Model::Hier(h), PotentialDistribution::Cauchy { u, v }) => {
            Some((lloyd_window_density(&cfg.couplings()?, h.n(), h.trunc(), (u, v), e, delta), 3.0))
        }
        _ => None,
    };
    Ok(EtaEstimate {
        energy: e,
        half_width: delta,
        volume: big_n,
        radius,
        realizations: cfg.eta_realizations,
        eta_hat,
        se,
        fatou,
        fatou_change,
        stable,
        exact,
        master_seed: cfg.master_seed,
    })
}

pub fn run_dos(cfg: &ModelConfig) -> Result<EnsembleReport> {
    let (n, k, trunc) = hier_params(cfg, "density of states")?;
    let coup = cfg.couplings()?;
    let pot = cfg.potential();
    let seeds = vec![cfg.master_seed];
    let mut probes = cfg.z_values();
    let anchor = Complex::new(0.5, 1.0);
    if !probes.contains(&anchor) {
        probes.push(anchor);
    }
    let (ref_model, _) = reference_model(cfg)?;
    let Model::Hier(ref_h) = &ref_model else { unreachable!("hierarchical reference") };
    let (k_ref, t_ref) = (ref_h.k(), ref_h.trunc());
    let ref_n = ref_model.volume();
    let cauchy = match pot {
        PotentialDistribution::Cauchy { u, v } => Some((u, v)),
        _ => None,
    };
    let delta = cfg.eta_half_width;
    let grid: Vec<f64> = [-1.0, -0.5, 0.0, 0.5, 1.0].iter().map(|d| cfg.energy + d).collect();
    let rows = par_collect(cfg.eta_realizations, |j| {
        let (_, omega) = draw(&pot, ref_n, cfg.master_seed, "reference", j as u64);
        let real = ref_model.realize(omega)?;
        let traces = probes
            .iter()
            .map(|&z| Ok(real.trace_resolvent(z)? / ref_n as f64))
            .collect::<Result<Vec<_>>>()?;
        let counts = if cauchy.is_some() {
            grid.iter()
                .map(|&g| window_count(&real, g - delta, g + delta))
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        Ok((traces, counts))
    })?;
    let mut rep = EnsembleReport::new("dos", cfg.realizations);

    let stream_n = n.pow(k as u32);
    let (_, stream) = draw(&pot, stream_n, cfg.master_seed, "dos-stream", 0);
    for (zi, &z) in probes.iter().enumerate() {
        let re: Vec<f64> = rows.iter().map(|r| r.0[zi].re).collect();
        let im: Vec<f64> = rows.iter().map(|r| r.0[zi].im).collect();
        let (mre, sre) = mean_se(&re);
        let (mim, sim) = mean_se(&im);
        let reference = Complex::new(mre, mim);
        let budget = if trunc == k { coup.tail(t_ref) / (z.im * z.im) } else { 0.0 };
        rep.push(
            CheckRecord::new(
                format!("reference tail z={}", fmt_z(z)),
                "truncation error of the reference volume, |Im z|^-2 tail(k_ref)",
                budget,
                0.01,
            )
            .status(if budget <= 0.01 { Status::Pass } else { Status::Inconclusive })
            .seeds(seeds.clone())
            .note(format!("k_ref={k_ref}, reference SE {:.2e}", sre.hypot(sim))),
        );
        let mut series = Series::new(format!("dos deviation z={}", fmt_z(z)), &["k", "abs_deviation"]);
        for kk in 1..=k {
            let t = if trunc == k { kk } else { trunc.min(kk) };
            let h = Model::Hier(HierStructure::new(n, kk, t, &coup)?);
            let len = n.pow(kk as u32);
            let real = h.realize(stream[..len].to_vec())?;
            let d = real.trace_resolvent(z)? / len as f64 - reference;
            series.push(vec![kk as f64, d.norm()]);
        }
        let ks = series.column("k").unwrap_or_default();
        let ds = series.column("abs_deviation").unwrap_or_default();
        let last = *ds.last().unwrap_or(&f64::NAN);
        let decided = z.im >= 0.5;
        rep.push(
            CheckRecord::new(
                format!("dos deviation z={}", fmt_z(z)),
                "normalized trace resolvent converges to its ensemble average",
                last,
                0.05,
            )
            .se(sre.hypot(sim))
            .status(match (decided, last <= 0.05) {
                (false, _) => Status::Info,
                (true, true) => Status::Pass,
                (true, false) => Status::Fail,
            })
            .seeds(seeds.clone())
            .note(format!("single potential stream, k=1..{k}")),
        );
        let logs: Vec<(f64, f64)> = ks
            .iter()
            .zip(&ds)
            .filter(|(kk, d)| **kk >= 2.0 && **d > 0.0)
            .map(|(kk, d)| (*kk, d.ln()))
            .collect();
        if let Ok(fit) = linear_fit(
            &logs.iter().map(|p| p.0).collect::<Vec<_>>(),
            &logs.iter().map(|p| p.1).collect::<Vec<_>>(),
        ) {
            rep.push(
                CheckRecord::new(
                    format!("dos trend z={}", fmt_z(z)),
                    "slope of ln |D_k| against k; negative means decreasing",
                    fit.slope,
                    0.0,
                )
                .seeds(seeds.clone())
                .note(format!("r_squared {:.3}", fit.r_squared)),
            );
        }
        rep.series.push(series);
        if let Some(uv) = cauchy {
            let exact = lloyd_green(&coup, n, t_ref, uv, z)?;
            rep.push(
                CheckRecord::new(
                    format!("lloyd resolvent z={}", fmt_z(z)),
                    "averaged diagonal resolvent for a Cauchy potential equals the shifted free one",
                    mim,
                    exact.im,
                )
                .se(sim)
                .within(3.0)
                .seeds(seeds.clone()),
            );
        }
    }
    if let Some(uv) = cauchy {
        for (gi, &g) in grid.iter().enumerate() {
            let vals: Vec<f64> =
                rows.iter().map(|r| r.1[gi] as f64 / (ref_n as f64 * 2.0 * delta)).collect();
            let (m, s) = mean_se(&vals);
            rep.push(
                CheckRecord::new(
                    format!("lloyd density e={g}"),
                    "averaged density of states for a Cauchy potential",
                    m,
                    lloyd_window_density(&coup, n, t_ref, uv, g, delta),
                )
                .se(s)
                .within(3.0)
                .seeds(seeds.clone()),
            );
        }
    }

    // Histogram of the normalized counting measure at the configured volume.
    let model = Model::from_config(cfg, None)?;
    let big_n = model.volume();
    let bins = 60;
    let (lo, hi) = match (pot.support(), trunc) {
        ((a, b), 0) if a.is_finite() && b.is_finite() => (a, b),
        _ => {
            let (a, b) = pot.bulk_range();
            (a, b + coup.lambda(trunc))
        }
    };
    let width = (hi - lo) / bins as f64;
    let hist_r = cfg.realizations.min(20);
    let cum = par_collect(hist_r, |j| {
        let (_, omega) = draw(&pot, big_n, cfg.master_seed, "dos-hist", j as u64);
        let real = model.realize(omega)?;
        (0..=bins).map(|b| real.count_below(lo + b as f64 * width)).collect::<Result<Vec<_>>>()
    })?;
    let total = (big_n * hist_r) as f64;
    let mut hist = Vec::with_capacity(bins);
    let mut worst: f64 = 0.0;
    for b in 0..bins {
        let c: usize = cum.iter().map(|v| v[b + 1] - v[b]).sum();
        let (a, bb) = (lo + b as f64 * width, lo + (b + 1) as f64 * width);
        hist.push(((a + bb) / 2.0, c as f64 / (total * width)));
        let p = pot.mass(a, bb);
        if p > 0.0 && p < 1.0 {
            worst = worst.max((c as f64 - total * p).abs() / (total * p * (1.0 - p)).sqrt());
        }
    }
    let inside: f64 = hist.iter().map(|h| h.1 * width).sum();
    if trunc == 0 {
        rep.push(
            CheckRecord::new(
                "dos histogram",
                "diagonal model: counting measure histogram matches the potential density",
                worst,
                4.0,
            )
            .status(if worst <= 4.0 { Status::Pass } else { Status::Fail })
            .seeds(seeds.clone())
            .note(format!("largest bin deviation in binomial SE, {bins} bins, {hist_r} realizations")),
        );
    } else {
        rep.push(
            CheckRecord::new("dos histogram mass", "fraction of eigenvalues inside the histogram range", inside, 1.0)
                .seeds(seeds)
                .note(format!("{bins} bins on [{lo}, {hi}), {hist_r} realizations")),
        );
    }
    rep.artifacts.dos_histogram = Some(hist);
    Ok(rep)
}

pub fn check_wegner(cfg: &ModelConfig) -> Result<EnsembleReport> {
    let model = Model::from_config(cfg, None)?;
    let pot = cfg.potential();
    let big_n = model.volume();
    let nf = big_n as f64;
    let e = cfg.energy;
    let windows = cfg.all_windows();
    let rows = par_collect(cfg.realizations, |j| {
        let (_, omega) = draw(&pot, big_n, cfg.master_seed, "wegner", j as u64);
        let real = model.realize(omega)?;
        windows
            .iter()
            .map(|w| window_count(&real, e + w[0] / nf, e + w[1] / nf))
            .collect::<Result<Vec<_>>>()
    })?;
    let sup = pot.density_sup();
    let mut rep = EnsembleReport::new("wegner", cfg.realizations);
    for (s, &w) in windows.iter().enumerate() {
        let (m, se) = mean_se(&rows.iter().map(|r| r[s] as f64).collect::<Vec<_>>());
        rep.push(
            CheckRecord::new(
                format!("wegner A={}", fmt_window(w)),
                "mean rescaled count is at most sup(gamma) times the window length",
                m,
                sup * (w[1] - w[0]),
            )
            .se(se)
            .at_most(3.0)
            .seeds(vec![cfg.master_seed]),
        );
        if cfg.is_degenerate() {
            rep.push(
                CheckRecord::new(
                    format!("wegner exact A={}", fmt_window(w)),
                    "diagonal model: mean count is N times the potential mass of the window",
                    m,
                    nf * pot.mass(e + w[0] / nf, e + w[1] / nf),
                )
                .se(se)
                .within(4.0)
                .seeds(vec![cfg.master_seed]),
            );
        }
    }
    Ok(rep)
}

/// Site pairs for the Minami check.
fn minami_pairs(cfg: &ModelConfig) -> Vec<(usize, usize, usize)> {
    match cfg.model {
        ModelSpec::Hierarchical { n, k, .. } => (1..=k).map(|d| (0, n.pow(d as u32 - 1), d)).collect(),
        ModelSpec::Lattice { dims, side, .. } => {
            let c = side.saturating_sub(9) / 2;
            let row = if dims == 2 { (side / 2) * side } else { 0 };
            [1, 2, 4, 8]
                .into_iter()
                .filter(|d| c + d < side)
                .map(|d| (row + c, row + c + d, d))
                .collect()
        }
    }
}

pub fn check_minami(cfg: &ModelConfig) -> Result<EnsembleReport> {
    let model = Model::from_config(cfg, None)?;
    if model.volume() < 2 {
        return Err(invalid("Minami check needs at least 2 sites"));
    }
    let pot = cfg.potential();
    let big_n = model.volume();
    let probes = cfg.z_values();
    let pairs = minami_pairs(cfg);
    let sites: Vec<(usize, usize)> = pairs.iter().map(|p| (p.0, p.1)).collect();
    let rows = par_collect(cfg.realizations, |j| {
        let (_, omega) = draw(&pot, big_n, cfg.master_seed, "minami", j as u64);
        let real = model.realize(omega)?;
        probes
            .iter()
            .map(|&z| {
                Ok(real
                    .green_pairs(z, &sites)?
                    .into_iter()
                    .map(|[gx, gy, gxy]| gx.im * gy.im - gxy.im * gxy.im)
                    .collect::<Vec<f64>>())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let sup = pot.density_sup();
    let bound = PI * PI * sup * sup;
    let mut rep = EnsembleReport::new("minami", cfg.realizations);
    for (zi, &z) in probes.iter().enumerate() {
        for (pi, &(x, y, d)) in pairs.iter().enumerate() {
            let (m, se) = mean_se(&rows.iter().map(|r| r[zi][pi]).collect::<Vec<_>>());
            rep.push(
                CheckRecord::new(
                    format!("minami z={} d={d}", fmt_z(z)),
                    "mean 2x2 determinant of Im G at x != y is at most (pi sup gamma)^2",
                    m,
                    bound,
                )
                .se(se)
                .at_most(3.0)
                .seeds(vec![cfg.master_seed])
                .note(format!("sites {x}, {y}")),
            );
            if cfg.is_degenerate() && pi == 0 {
                let a = PI * pot.poisson_smoothed(z.re, z.im);
                rep.push(
                    CheckRecord::new(
                        format!("minami exact z={}", fmt_z(z)),
                        "diagonal model: the determinant is a product of independent Im G factors",
                        m,
                        a * a,
                    )
                    .se(se)
                    .within(4.0)
                    .seeds(vec![cfg.master_seed]),
                );
            }
        }
    }
    if let (ModelSpec::Hierarchical { n, k, .. }, Some(r)) = (&cfg.model, cfg.decoupling_radius()) {
        let b = bound * (*n as f64).powi(r as i32 - *k as i32);
        rep.push(
            CheckRecord::new(
                "minami block bound",
                "sum over blocks of the mean pair functional, pi^2 sup(gamma)^2 n^(r_k - k)",
                b,
                b,
            )
            .seeds(vec![cfg.master_seed])
            .note(format!("r_k={r}; measured by the hypotheses experiment")),
        );
    }
    Ok(rep)
}

fn decoupling_setup(cfg: &ModelConfig, what: &str) -> Result<(usize, usize, usize, usize)> {
    let (n, k, trunc) = hier_params(cfg, what)?;
    let r = cfg
        .decoupling_radius()
        .ok_or_else(|| invalid(format!("{what} needs decouple_exponent c")))?;
    if r < 1 || r >= k {
        return Err(invalid(format!("r_k = {r} must satisfy 1 <= r_k < k = {k}")));
    }
    Ok((n, k, trunc, r))
}

fn char_fn(counts: &[usize], t: f64) -> Complex<f64> {
    counts.iter().map(|&c| Complex::from_polar(1.0, t * c as f64)).sum::<Complex<f64>>() / counts.len() as f64
}

pub fn run_decoupled_comparison(cfg: &ModelConfig) -> Result<EnsembleReport> {
    let (n, k, trunc, r) = decoupling_setup(cfg, "decoupling comparison")?;
    let coup = cfg.couplings()?;
    let full = Model::from_config(cfg, None)?;
    let block = Model::Hier(HierStructure::new(n, k, trunc.min(r), &coup)?);
    let pot = cfg.potential();
    let big_n = full.volume();
    let nf = big_n as f64;
    let e = cfg.energy;
    let dz = Complex::new(cfg.decouple_z[0], cfg.decouple_z[1]);
    let zk = Complex::new(e, 0.0) + dz / nf;
    let windows = cfg.windows.clone();
    let rows = par_collect(cfg.realizations, |j| {
        let (_, omega) = draw(&pot, big_n, cfg.master_seed, "decoupling", j as u64);
        let a = full.realize(omega.clone())?;
        let b = block.realize(omega)?;
        let diff = (a.trace_resolvent(zk)?.im - b.trace_resolvent(zk)?.im).abs() / nf;
        let mut ca = Vec::with_capacity(windows.len());
        let mut cb = Vec::with_capacity(windows.len());
        for w in &windows {
            ca.push(window_count(&a, e + w[0] / nf, e + w[1] / nf)?);
            cb.push(window_count(&b, e + w[0] / nf, e + w[1] / nf)?);
        }
        Ok((diff, ca, cb))
    })?;
    let bound = coup.tail(r) / (zk.im * zk.im);
    let diffs: Vec<f64> = rows.iter().map(|x| x.0).collect();
    let worst = diffs.iter().copied().fold(0.0, f64::max);
    let (mean, se) = mean_se(&diffs);
    let seeds = vec![cfg.master_seed];
    let mut rep = EnsembleReport::new("decoupling", cfg.realizations);
    let note = if trunc <= r {
        format!("r_k={r}; truncation {trunc} <= r_k, the two operators coincide")
    } else {
        format!("r_k={r}, z_k = e + z/|B_k| with z={}", fmt_z(dz))
    };
    rep.push(
        CheckRecord::new(
            "decoupling max difference",
            "|int g_z dxi - int g_z dxi~| <= |Im z_k|^-2 tail(r_k) for every realization",
            worst,
            bound,
        )
        .status(if worst <= bound { Status::Pass } else { Status::Fail })
        .seeds(seeds.clone())
        .note(note),
    );
    rep.push(
        CheckRecord::new(
            "decoupling mean difference",
            "mean difference well below the bound (at most a tenth of it)",
            mean,
            0.1 * bound,
        )
        .se(se)
        .status(if mean <= 0.1 * bound { Status::Pass } else { Status::Fail })
        .seeds(seeds.clone()),
    );
    let tol = 0.05 + 4.0 / (cfg.realizations as f64).sqrt();
    let mut gap: f64 = 0.0;
    let mut table = Series::new("char function gap", &["window", "t", "abs_gap"]);
    for (s, _) in windows.iter().enumerate() {
        let a: Vec<usize> = rows.iter().map(|x| x.1[s]).collect();
        let b: Vec<usize> = rows.iter().map(|x| x.2[s]).collect();
        for &t in &cfg.char_t {
            let g = (char_fn(&a, t) - char_fn(&b, t)).norm();
            gap = gap.max(g);
            table.push(vec![s as f64, t, g]);
        }
    }
    rep.push(
        CheckRecord::new(
            "char function gap",
            "characteristic functions of full and decoupled window counts agree",
            gap,
            tol,
        )
        .status(if gap <= tol { Status::Pass } else { Status::Fail })
        .seeds(seeds),
    );
    rep.series.push(table);
    Ok(rep)
}

/// Sums consecutive entries in groups of `size`.
fn group_sum<T: Copy + std::iter::Sum<T>>(v: &[T], size: usize) -> Vec<T> {
    v.chunks(size).map(|c| c.iter().copied().sum()).collect()
}

pub fn check_hypotheses(cfg: &ModelConfig) -> Result<EnsembleReport> {
    let (n, k, trunc, r) = decoupling_setup(cfg, "hypotheses check")?;
    let coup = cfg.couplings()?;
    let t = trunc.min(r);
    let h = HierStructure::new(n, k, t, &coup)?;
    let group = n.pow((r - t) as u32);
    let model = Model::Hier(h);
    let pot = cfg.potential();
    let big_n = model.volume();
    let nf = big_n as f64;
    let e = cfg.energy;
    let dz = Complex::new(cfg.decouple_z[0], cfg.decouple_z[1]);
    let zk = Complex::new(e, 0.0) + dz / nf;
    let windows = cfg.all_windows();
    let rows = par_collect(cfg.realizations, |j| {
        let (_, omega) = draw(&pot, big_n, cfg.master_seed, "hypotheses", j as u64);
        let real = model.realize(omega)?;
        let mut blocks = Vec::with_capacity(windows.len());
        for w in &windows {
            let lo = group_sum(&real.block_counts_below(e + w[0] / nf)?, group);
            let hi = group_sum(&real.block_counts_below(e + w[1] / nf)?, group);
            blocks.push(hi.iter().zip(&lo).map(|(a, b)| a - b).collect::<Vec<usize>>());
        }
        let terms = real.block_pair_terms(zk)?;
        let tr = group_sum(&terms.iter().map(|x| x.0.im).collect::<Vec<_>>(), group);
        let fr = group_sum(&terms.iter().map(|x| x.1).collect::<Vec<_>>(), group);
        let pair: f64 = tr.iter().zip(&fr).map(|(a, b)| a * a - b).sum::<f64>() / (nf * nf);
        Ok((blocks, pair))
    })?;
    let sup = pot.density_sup();
    let rf = cfg.realizations as f64;
    let seeds = vec![cfg.master_seed];
    let scale = (n as f64).powi(r as i32 - k as i32);
    let mut rep = EnsembleReport::new("hypotheses", cfg.realizations);
    for (s, &w) in windows.iter().enumerate() {
        let len = w[1] - w[0];
        let totals: Vec<f64> = rows.iter().map(|x| x.0[s].iter().sum::<usize>() as f64).collect();
        let (m, se) = mean_se(&totals);
        rep.push(
            CheckRecord::new(
                format!("h0 A={}", fmt_window(w)),
                "summed mean block counts at most sup(gamma) times the window length",
                m,
                sup * len,
            )
            .se(se)
            .at_most(3.0)
            .seeds(seeds.clone()),
        );
        let nb = rows.first().map_or(0, |x| x.0[s].len());
        let p = (0..nb)
            .map(|b| rows.iter().filter(|x| x.0[s][b] >= 1).count() as f64 / rf)
            .fold(0.0, f64::max);
        rep.push(
            CheckRecord::new(
                format!("h1 A={}", fmt_window(w)),
                "largest block hit probability at most n^(r_k - k) sup(gamma) |A|",
                p,
                scale * sup * len,
            )
            .se((p * (1.0 - p) / rf).sqrt())
            .at_most(3.0)
            .seeds(seeds.clone())
            .note(format!("{nb} blocks of radius {r}")),
        );
    }

    let eta = super::estimate_eta(cfg, e)?;
    let target = if cfg.is_degenerate() { pot.density(e) } else { eta.eta_hat };
    let target_se = if cfg.is_degenerate() { 0.0 } else { eta.se };
    let c = cfg.decouple_exponent.unwrap_or(0.0);
    let mut series = Series::new("h2 block trace", &["k", "r_k", "value", "se"]);
    let mut last = (f64::NAN, f64::NAN);
    for kk in (k.saturating_sub(3)).max(2)..=k {
        let rr = (c * kk as f64).round() as usize;
        if rr < 1 || rr >= kk {
            continue;
        }
        let tt = if trunc == k { rr } else { trunc.min(rr) };
        let m = Model::Hier(HierStructure::new(n, kk, tt, &coup)?);
        let len = m.volume();
        let z = Complex::new(e, 0.0) + dz / len as f64;
        let vals = par_collect(cfg.realizations, |j| {
            let (_, omega) = draw(&pot, len, cfg.master_seed, &format!("h2-{kk}"), j as u64);
            Ok(m.realize(omega)?.trace_resolvent(z)?.im / len as f64)
        })?;
        let (mv, sv) = mean_se(&vals);
        series.push(vec![kk as f64, rr as f64, mv, sv]);
        last = (mv, sv);
    }
    rep.push(
        CheckRecord::new(
            "h2",
            "block trace resolvent at z_k tends to pi eta(e)",
            last.0,
            PI * target,
        )
        .se(last.1.hypot(PI * target_se))
        .within(3.0)
        .seeds(seeds.clone())
        .note(if cfg.is_degenerate() { "target pi gamma(e)" } else { "target pi eta_hat(e)" }),
    );
    if cfg.is_degenerate() {
        rep.push(
            CheckRecord::new(
                "h2 exact",
                "diagonal model: mean equals the Poisson-smoothed potential density at z_k",
                last.0,
                PI * pot.poisson_smoothed(zk.re, zk.im),
            )
            .se(last.1)
            .within(3.0)
            .seeds(seeds.clone()),
        );
    }
    rep.series.push(series);

    let (pm, pse) = mean_se(&rows.iter().map(|x| x.1).collect::<Vec<_>>());
    rep.push(
        CheckRecord::new(
            "h3",
            "summed mean block pair functional at most pi^2 sup(gamma)^2 n^(r_k - k)",
            pm,
            PI * PI * sup * sup * scale,
        )
        .se(pse)
        .at_most(3.0)
        .seeds(seeds.clone()),
    );
    rep.push(
        CheckRecord::new(
            "h3 n^-r_k",
            "the same sum against pi^2 sup(gamma)^2 n^(-r_k)",
            pm,
            PI * PI * sup * sup * (n as f64).powi(-(r as i32)),
        )
        .se(pse)
        .seeds(seeds)
        .note("the blockwise Minami bound summed over n^(k - r_k) blocks gives n^(r_k - k), not n^(-r_k)"),
    );
    Ok(rep)
}
