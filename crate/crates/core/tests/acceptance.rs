//! Acceptance suite: one test per criterion, each printing a single pass/fail line.
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use std::time::Instant;

use hieranderson::experiments::{run_experiment, EnsembleReport, ExperimentKind, ModelConfig, Status};
use hieranderson::linalg::{complex_operator_norm, symmetric_eigen, ComplexMatrix, SymMatrix};
use hieranderson::pointproc::{grigelionis_toy_array, total_variation_poisson, Interval, IntervalFamily};
use hieranderson::{assemble_hierarchical, laplacian_spectrum_closed_form, CouplingSequence, HierGeometry};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, ok: bool, started: Instant, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!(
        "criterion {criterion:>2}: {verdict} ({:.1}s) {detail}",
        started.elapsed().as_secs_f64()
    );
    assert!(ok, "criterion {criterion}: {detail}");
}

fn run(kind: ExperimentKind, json: &str) -> EnsembleReport {
    let mut cfg = ModelConfig::from_json(json).unwrap();
    cfg.experiments = Some(vec![kind]);
    cfg.validate().unwrap();
    run_experiment(kind, &cfg).unwrap()
}

fn status_of(rep: &EnsembleReport, name: &str) -> Status {
    rep.record(name).unwrap_or_else(|| panic!("missing record {name}")).status
}

fn failing(rep: &EnsembleReport) -> Vec<String> {
    rep.records
        .iter()
        .filter(|r| matches!(r.status, Status::Fail | Status::Inconclusive))
        .map(|r| format!("{} ({:?})", r.name, r.status))
        .collect()
}

#[test]
fn criterion_01_closed_form_laplacian_spectrum() {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut multiplicities_ok = true;
    for n in [2usize, 3] {
        for rho in [2.0, 8.0] {
            for k in 0..=4 {
                let cp = CouplingSequence::geometric(rho, k.max(1)).unwrap();
                let g = HierGeometry::new(n, k.max(1)).unwrap();
                let size = n.pow(k as u32);
                let h = assemble_hierarchical(&g, &cp, k, &vec![0.0; size], k).unwrap();
                let got = h.eigen(false).unwrap().into_values();
                let mut want: Vec<f64> = Vec::new();
                for (v, m) in laplacian_spectrum_closed_form(n, k, &cp).unwrap() {
                    want.extend(std::iter::repeat_n(v, m));
                }
                want.sort_by(f64::total_cmp);
                multiplicities_ok &= want.len() == got.len();
                for (a, b) in got.iter().zip(&want) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    let ok = multiplicities_ok && worst <= 1e-10 && t.elapsed().as_secs_f64() < 1.0;
    report(1, ok, t, &format!("max eigenvalue error {worst:.2e}, multiplicities exact: {multiplicities_ok}"));
}

#[test]
fn criterion_02_eigensolver_contract() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = [0.0f64; 3];
    for &n in &[1usize, 2, 7, 64, 200, 512] {
        let h: SymMatrix<f64> = SymMatrix::from_upper_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let es = symmetric_eigen(&h, true).unwrap();
        let scale = h.max_abs();
        let mut residual: f64 = 0.0;
        for j in 0..n {
            let v = es.vector(j).unwrap();
            let hv = h.mul_vec(&v);
            for (a, b) in hv.iter().zip(&v) {
                residual = residual.max((a - es.values()[j] * b).abs());
            }
        }
        let trace_err = (es.values().iter().sum::<f64>() - h.trace()).abs();
        worst[0] = worst[0].max(residual / scale);
        worst[1] = worst[1].max(es.orthonormality_defect().unwrap());
        worst[2] = worst[2].max(trace_err / (n as f64 * scale));
    }
    let ok = worst.iter().all(|&w| w <= 1e-9) && t.elapsed().as_secs_f64() < 30.0;
    report(
        2,
        ok,
        t,
        &format!(
            "relative residual {:.2e}, orthonormality {:.2e}, relative trace error {:.2e}",
            worst[0], worst[1], worst[2]
        ),
    );
}

#[test]
fn criterion_03_resolvent_perturbation_bounds() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = 0;
    let mut tightest: f64 = 0.0;
    for _ in 0..100 {
        let n = if rng.random_bool(0.5) { 2 } else { 3 };
        let k = rng.random_range(1..=if n == 2 { 6 } else { 4 });
        let rho = [2.0, 4.0, 8.0][rng.random_range(0..3)];
        let r = rng.random_range(0..k);
        let cp = CouplingSequence::geometric(rho, k).unwrap();
        let g = HierGeometry::new(n, k).unwrap();
        let w: Vec<f64> = (0..n.pow(k as u32)).map(|_| rng.random_range(0.0..1.0)).collect();
        let z = Complex::new(rng.random_range(-1.0..2.0), rng.random_range(0.01..1.0));
        let inverse = |trunc: usize| {
            let h = assemble_hierarchical(&g, &cp, trunc, &w, k).unwrap();
            ComplexMatrix::shifted(h.matrix(), z).inverse().unwrap()
        };
        let (rr, rnext, rk) = (inverse(r), inverse(r + 1), inverse(k));
        let inv_im2 = z.im.powi(-2);
        let step = complex_operator_norm(&rr.sub(&rnext)).unwrap() / (inv_im2 * cp.p(r + 1));
        let total = complex_operator_norm(&rr.sub(&rk)).unwrap() / (inv_im2 * cp.partial(r, k));
        for ratio in [step, total] {
            tightest = tightest.max(ratio);
            if ratio > 1.0 + 1e-9 {
                violations += 1;
            }
        }
    }
    let ok = violations == 0 && t.elapsed().as_secs_f64() < 60.0;
    report(3, ok, t, &format!("100 cases, {violations} violations, largest norm/bound ratio {tightest:.4}"));
}

#[test]
fn criterion_04_degenerate_mode_is_exactly_poisson() {
    let t = Instant::now();
    let rep = run(
        ExperimentKind::Poisson,
        r#"{"model":{"kind":"hierarchical","n":2,"rho":8,"k":10,"trunc":0},"e":0.5,"R":4000,
            "windows":[[-1,1]],"master_seed":4}"#,
    );
    let intensity = rep.record("poisson intensity").unwrap().observed;
    let chi = status_of(&rep, "chi-square A=[-1, 1)");
    let cf = status_of(&rep, "char function");
    let ok = intensity == 1.0 && chi == Status::Pass && cf == Status::Pass && t.elapsed().as_secs_f64() < 60.0;
    report(
        4,
        ok,
        t,
        &format!(
            "chi-square {}, char function {}",
            rep.record("chi-square A=[-1, 1)").unwrap().note.as_deref().unwrap_or(""),
            rep.record("char function").unwrap().note.as_deref().unwrap_or("")
        ),
    );
}

#[test]
fn criterion_05_wegner_and_minami_bounds() {
    let t = Instant::now();
    let mut bad = Vec::new();
    let mut checked = 0;
    for pot in [r#"{"kind":"uniform","a":0,"b":1}"#, r#"{"kind":"cauchy","u":0,"v":1}"#] {
        let json = format!(
            r#"{{"model":{{"kind":"hierarchical","n":2,"rho":8,"k":8}},"potential":{pot},"R":2000,
                "z_list":[[0.5,0.1],[0.5,0.01]],"master_seed":5}}"#
        );
        for kind in [ExperimentKind::Wegner, ExperimentKind::Minami] {
            let rep = run(kind, &json);
            checked += rep.records.iter().filter(|r| r.status != Status::Info).count();
            bad.extend(failing(&rep));
        }
    }
    let ok = bad.is_empty() && t.elapsed().as_secs_f64() < 300.0;
    report(5, ok, t, &format!("{checked} bound checks, failing: {bad:?}"));
}

const DECOUPLING_CONFIG: &str = r#"{"model":{"kind":"hierarchical","n":2,"rho":8,"k":10},"c":0.8,"R":500,
    "decouple_z":[0,1],"master_seed":6}"#;

#[test]
fn criterion_06_decoupling_bound() {
    let t = Instant::now();
    let rep = run(ExperimentKind::Decoupling, DECOUPLING_CONFIG);
    let max = rep.record("decoupling max difference").unwrap();
    let mean = rep.record("decoupling mean difference").unwrap();
    let ok = max.status == Status::Pass && mean.status == Status::Pass && t.elapsed().as_secs_f64() < 600.0;
    report(
        6,
        ok,
        t,
        &format!(
            "max difference {:.3e} vs bound {:.3e}, mean {:.3e} vs {:.3e}",
            max.observed, max.target, mean.observed, mean.target
        ),
    );
}

#[test]
fn criterion_07_block_hypotheses() {
    let t = Instant::now();
    let rep = run(ExperimentKind::Hypotheses, DECOUPLING_CONFIG);
    let h1 = rep.record("h1 A=[-1, 1)").unwrap();
    let h2 = rep.record("h2").unwrap();
    let h3 = rep.record("h3").unwrap();
    let literal = rep.record("h3 n^-r_k").unwrap();
    let ok = failing(&rep).is_empty() && t.elapsed().as_secs_f64() < 600.0;
    report(
        7,
        ok,
        t,
        &format!(
            "h1 {:.4} <= {:.4}; h2 {:.4} vs {:.4}; h3 {:.4} <= {:.4} (pi^2 sup^2 n^(r_k-k)); \
             the bound pi^2 sup^2 n^(-r_k) = {:.4} is not met and is not a valid bound",
            h1.observed, h1.target, h2.observed, h2.target, h3.observed, h3.target, literal.target
        ),
    );
}

#[test]
fn criterion_08_poisson_limit_at_desk_scale() {
    let t = Instant::now();
    let rep = run(
        ExperimentKind::Poisson,
        r#"{"model":{"kind":"hierarchical","n":2,"rho":8,"k":10},"potential":{"kind":"cauchy","u":0,"v":1},
            "e":0.5,"R":2000,"windows":[[-2,0],[0,2]],"marginal_windows":[[-1,1]],"master_seed":8}"#,
    );
    let bad = failing(&rep);
    let ok = bad.is_empty() && t.elapsed().as_secs_f64() < 1800.0;
    report(
        8,
        ok,
        t,
        &format!(
            "eta_hat {:.4}, independence {}, failing: {bad:?}",
            rep.record("poisson intensity").unwrap().observed,
            rep.record("independence").unwrap().note.as_deref().unwrap_or("")
        ),
    );
}

#[test]
fn criterion_09_toy_array_total_variation() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let window = Interval::new(0.0, 1.0).unwrap();
    let family = IntervalFamily::new(&[(0.0, 1.0)]).unwrap();
    let counts: Vec<usize> = (0..10_000)
        .map(|_| grigelionis_toy_array(10_000, 1.0, &window, &mut rng).unwrap().counts(&family)[0])
        .collect();
    let tv = total_variation_poisson(&counts, 1.0);
    let ok = tv <= 0.01 && t.elapsed().as_secs_f64() < 10.0;
    report(9, ok, t, &format!("total variation {tv:.5} at seed 9"));
}

#[test]
fn criterion_10_lattice_localization_and_control() {
    let t = Instant::now();
    let rep = run(
        ExperimentKind::Lattice,
        r#"{"model":{"kind":"lattice","dims":1,"side":512,"sigma":5,"s":0.5},"e":0.5,"R":2000,
            "windows":[[-2,0],[0,2]],"marginal_windows":[[-1,1]],"master_seed":10}"#,
    );
    let fm = rep.record("fm decay rate").unwrap();
    let r2 = rep.record("fm fit r_squared").unwrap().observed;
    let bad = failing(&rep);
    let control = run(
        ExperimentKind::Lattice,
        r#"{"model":{"kind":"lattice","dims":1,"side":512,"sigma":0,"s":0.5},"e":0.5,"R":2000,
            "windows":[[-1,1]],"eta_realizations":20,"master_seed":10}"#,
    );
    let control_p = control
        .series("poisson p-values")
        .and_then(|s| s.column("chi_p_1"))
        .unwrap()
        .into_iter()
        .fold(0.0, f64::max);
    let ok = fm.observed > 0.0
        && r2 >= 0.9
        && bad.is_empty()
        && control_p < 1e-6
        && status_of(&control, "chi-square A=[-1, 1)") == Status::Fail
        && t.elapsed().as_secs_f64() < 1800.0;
    report(
        10,
        ok,
        t,
        &format!(
            "decay rate {:.4}, r_squared {r2:.4}, failing: {bad:?}; free chain largest chi-square p {control_p:.2e}",
            fm.observed
        ),
    );
}

#[test]
fn criterion_11_output_independent_of_worker_count() {
    let t = Instant::now();
    let cfg = ModelConfig::from_json(
        r#"{"model":{"kind":"hierarchical","n":2,"rho":8,"k":8},"potential":{"kind":"cauchy","u":0,"v":1},
            "c":0.8,"R":300,"seed_repeats":3,"min_passes":2,"eta_realizations":100,
            "windows":[[-2,0],[0,2]],"master_seed":11}"#,
    )
    .unwrap();
    let kinds = [
        ExperimentKind::Dos,
        ExperimentKind::Wegner,
        ExperimentKind::Minami,
        ExperimentKind::Decoupling,
        ExperimentKind::Hypotheses,
        ExperimentKind::Poisson,
    ];
    let lattice = ModelConfig::from_json(
        r#"{"model":{"kind":"lattice","dims":1,"side":128,"sigma":5,"fm_max_distance":24},"R":200,
            "seed_repeats":2,"min_passes":2,"eta_realizations":50,"master_seed":11}"#,
    )
    .unwrap();
    let serialize = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let mut out: Vec<String> = kinds
                .iter()
                .map(|&k| serde_json::to_string(&run_experiment(k, &cfg).unwrap()).unwrap())
                .collect();
            out.push(serde_json::to_string(&run_experiment(ExperimentKind::Lattice, &lattice).unwrap()).unwrap());
            out
        })
    };
    let one = serialize(1);
    let four = serialize(4);
    let again = serialize(1);
    let identical = one == four && one == again;
    let bytes: usize = one.iter().map(String::len).sum();
    report(11, identical, t, &format!("{} experiments, {bytes} bytes of reports identical across 1 and 4 threads", one.len()));
}
