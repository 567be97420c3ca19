//! Poisson statistics of the rescaled eigenvalue process, repeated over seed repetitions.

use num_complex::Complex;

use super::{draw, estimate_eta, par_collect, CheckRecord, CountTable, EnsembleReport, Model, ModelConfig, Series, Status};
use crate::error::{Error, Result};
use crate::pointproc::{
    empirical_char_function, poisson_char_function, CountEnsemble, IntervalFamily,
};
use crate::seed::repetition_seed;
use crate::stats::{chi_square_poisson, ks_exponential};

/// Largest sup-distance between joint and product pmfs accepted as independence.
pub const INDEPENDENCE_TOLERANCE: f64 = 0.03;

pub fn run_poisson_acceptance(cfg: &ModelConfig) -> Result<EnsembleReport> {
    let model = Model::from_config(cfg, None)?;
    let eta = estimate_eta(cfg, cfg.energy)?;
    let mut rep = EnsembleReport::new("poisson", cfg.realizations);
    rep.records.extend(eta.records());
    let (intensity, regular, source) = if cfg.is_degenerate() {
        let g = cfg.potential().density(cfg.energy);
        (g, g > 0.0, "exact potential density gamma(e)")
    } else {
        (eta.eta_hat, eta.regular(), "histogram estimate eta_hat(e)")
    };
    poisson_pipeline(cfg, &model, intensity, source, regular, "poisson", &mut rep)?;
    Ok(rep)
}

/// Turns passing decision records from index `from` on into inconclusive ones.
pub(crate) fn downgrade(rep: &mut EnsembleReport, from: usize, why: &str) {
    for r in &mut rep.records[from..] {
        if r.status == Status::Pass {
            r.status = Status::Inconclusive;
            let note = match r.note.take() {
                Some(n) => format!("{n}; {why}"),
                None => why.to_string(),
            };
            r.note = Some(note);
        }
    }
}

struct Repetition {
    chi: Vec<Option<f64>>,
    ks: Option<f64>,
    independence: Option<f64>,
    char_dev: f64,
}

/// Chi-square per window, KS on successor gaps, pairwise independence and the
/// characteristic function, each passing if it passes in `min_passes` repetitions.
pub(crate) fn poisson_pipeline(
    cfg: &ModelConfig,
    model: &Model,
    intensity: f64,
    source: &str,
    regular: bool,
    tag: &str,
    rep: &mut EnsembleReport,
) -> Result<()> {
    let first = rep.records.len();
    let big_n = model.volume();
    let nf = big_n as f64;
    let e = cfg.energy;
    let pot = cfg.potential();
    let windows = cfg.all_windows();
    let m = cfg.windows.len();
    let hull = cfg.window_family()?.hull().expect("validated nonempty family");
    let family = cfg.window_family()?;
    let rf = cfg.realizations as f64;
    let char_tol = 3.0 / rf.sqrt();
    let lambdas: Vec<f64> = windows.iter().map(|w| intensity * (w[1] - w[0])).collect();
    let mut cols: Vec<String> = vec!["repetition".into()];
    cols.extend((1..=windows.len()).map(|s| format!("chi_p_{s}")));
    cols.extend(["ks_p", "independence", "char_dev"].map(String::from));
    let mut series = Series::new("poisson p-values", &cols.iter().map(String::as_str).collect::<Vec<_>>());
    let mut outcomes = Vec::with_capacity(cfg.seed_repeats);
    let mut rep_seeds = Vec::with_capacity(cfg.seed_repeats);
    for i in 0..cfg.seed_repeats {
        let master = repetition_seed(cfg.master_seed, i as u64);
        rep_seeds.push(master);
        let rows = par_collect(cfg.realizations, |j| {
            let (key, omega) = draw(&pot, big_n, master, tag, j as u64);
            let real = model.realize(omega)?;
            let counts = windows
                .iter()
                .map(|w| Ok(real.count_below(e + w[1] / nf)? - real.count_below(e + w[0] / nf)?))
                .collect::<Result<Vec<usize>>>()?;
            let top = e + hull.hi / nf;
            let (_, vals) = real.eigenvalues_in(e + hull.lo / nf, top)?;
            let mut gaps = Vec::with_capacity(vals.len());
            for (idx, &v) in vals.iter().enumerate() {
                let next = match vals.get(idx + 1) {
                    Some(&w) => Some(w),
                    None => real.next_at_or_above(top)?,
                };
                if let Some(w) = next {
                    let g = nf * (w - v);
                    if g > 0.0 {
                        gaps.push((g, nf * (v - e)));
                    }
                }
            }
            Ok((key, counts, gaps))
        })?;
        let chi = (0..windows.len())
            .map(|s| {
                let one = IntervalFamily::new(&[(windows[s][0], windows[s][1])])?;
                let ce = CountEnsemble::new(one, rows.iter().map(|r| vec![r.1[s]]).collect())?;
                match chi_square_poisson(&ce, 0, lambdas[s]) {
                    Ok(t) => Ok(Some(t.p_value)),
                    Err(Error::InsufficientData(_)) => Ok(None),
                    Err(err) => Err(err),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let gaps: Vec<f64> = rows.iter().flat_map(|r| r.2.iter().map(|g| g.0)).collect();
        let ks = if intensity > 0.0 {
            match ks_exponential(&gaps, intensity) {
                Ok(t) => Some(t.p_value),
                Err(Error::InsufficientData(_)) => None,
                Err(err) => return Err(err),
            }
        } else {
            None
        };
        let joint = CountEnsemble::new(family.clone(), rows.iter().map(|r| r.1[..m].to_vec()).collect())?;
        let mut independence = None;
        for a in 0..m {
            for b in a + 1..m {
                let d = joint.independence_distance(a, b)?;
                independence = Some(independence.map_or(d, |x: f64| x.max(d)));
            }
        }
        let mut char_dev: f64 = 0.0;
        for (s, w) in windows.iter().enumerate() {
            let one = IntervalFamily::new(&[(w[0], w[1])])?;
            let ce = CountEnsemble::new(one, rows.iter().map(|r| vec![r.1[s]]).collect())?;
            for &t in &cfg.char_t {
                let d = empirical_char_function(&ce, &[t])? - poisson_char_function(&[lambdas[s]], &[t]);
                char_dev = char_dev.max(d.norm());
            }
        }
        if m > 1 {
            for shift in 0..cfg.char_t.len() {
                let t: Vec<f64> = (0..m).map(|s| cfg.char_t[(shift + s) % cfg.char_t.len()]).collect();
                let d: Complex<f64> =
                    empirical_char_function(&joint, &t)? - poisson_char_function(&lambdas[..m], &t);
                char_dev = char_dev.max(d.norm());
            }
        }
        let mut row = vec![i as f64];
        row.extend(chi.iter().map(|p| p.unwrap_or(f64::NAN)));
        row.push(ks.unwrap_or(f64::NAN));
        row.push(independence.unwrap_or(0.0));
        row.push(char_dev);
        series.push(row);
        if i == 0 {
            rep.artifacts.counts = Some(CountTable {
                windows: windows.clone(),
                rows: rows.iter().map(|r| (r.0, r.1.clone())).collect(),
            });
            rep.artifacts.gaps = Some(rows.iter().flat_map(|r| r.2.iter().copied()).collect());
        }
        outcomes.push(Repetition { chi, ks, independence, char_dev });
    }

    let need = cfg.min_passes;
    let reps = cfg.seed_repeats;
    let tally = |pass: &dyn Fn(&Repetition) -> Option<bool>| -> (usize, bool) {
        let decided: Vec<bool> = outcomes.iter().filter_map(pass).collect();
        (decided.iter().filter(|&&b| b).count(), decided.len() == outcomes.len())
    };
    let verdict = |passes: usize, complete: bool| {
        if !complete {
            Status::Inconclusive
        } else if passes >= need {
            Status::Pass
        } else {
            Status::Fail
        }
    };
    rep.push(
        CheckRecord::new(
            "poisson intensity",
            "intensity of the limiting Poisson process",
            intensity,
            intensity,
        )
        .seeds(vec![cfg.master_seed])
        .note(source),
    );
    for (s, w) in windows.iter().enumerate() {
        let (passes, complete) = tally(&|r: &Repetition| r.chi[s].map(|p| p >= cfg.level));
        let worst = outcomes.iter().filter_map(|r| r.chi[s]).fold(f64::INFINITY, f64::min);
        rep.push(
            CheckRecord::new(
                format!("chi-square A=[{}, {})", w[0], w[1]),
                "window counts are Poisson(intensity |A|)",
                passes as f64,
                need as f64,
            )
            .status(verdict(passes, complete))
            .seeds(rep_seeds.clone())
            .note(format!(
                "passes at level {} out of {reps} repetitions; smallest p {worst:.3e}",
                cfg.level
            )),
        );
    }
    let (passes, complete) = tally(&|r: &Repetition| r.ks.map(|p| p >= cfg.level));
    rep.push(
        CheckRecord::new(
            "ks gaps",
            "gaps to the next eigenvalue are exponential with rate equal to the intensity",
            passes as f64,
            need as f64,
        )
        .status(verdict(passes, complete))
        .seeds(rep_seeds.clone())
        .note(format!("gaps from atoms in [{}, {})", hull.lo, hull.hi)),
    );
    if m > 1 {
        let (passes, complete) =
            tally(&|r: &Repetition| r.independence.map(|d| d <= INDEPENDENCE_TOLERANCE));
        let worst = outcomes.iter().filter_map(|r| r.independence).fold(0.0, f64::max);
        rep.push(
            CheckRecord::new(
                "independence",
                "counts in disjoint windows are independent: joint pmf within 0.03 of the product",
                passes as f64,
                need as f64,
            )
            .status(verdict(passes, complete))
            .seeds(rep_seeds.clone())
            .note(format!("largest sup-distance {worst:.4}")),
        );
    }
    let (passes, _) = tally(&|r: &Repetition| Some(r.char_dev <= char_tol));
    let worst = outcomes.iter().map(|r| r.char_dev).fold(0.0, f64::max);
    rep.push(
        CheckRecord::new(
            "char function",
            "empirical characteristic function within 3/sqrt(R) of the Poisson one",
            passes as f64,
            need as f64,
        )
        .status(verdict(passes, true))
        .seeds(rep_seeds)
        .note(format!("largest deviation {worst:.4}, tolerance {char_tol:.4}")),
    );
    rep.series.push(series);
    if !regular {
        downgrade(rep, first, "energy not regular");
        rep.push(
            CheckRecord::new(
                "energy not regular",
                "Poisson statistics are only claimed where eta(e) > 0 and the smoothing scan is stable",
                intensity,
                0.0,
            )
            .status(Status::Inconclusive)
            .seeds(vec![cfg.master_seed]),
        );
    }
    Ok(())
}
