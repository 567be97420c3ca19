//! Command-line driver: validates a JSON run configuration, runs the enabled
//! experiments on a fixed-size worker pool and writes reports and plot-ready data.

use std::fs;
use std::io::{self, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hieranderson::experiments::{
    run_experiment, sample_hamiltonian, sample_spectra, CheckRecord, EnsembleReport, ExperimentKind,
    ModelConfig, Status,
};
use serde::Serialize;

const ARTIFACT_VERSION: &str = "1";
const SPECTRA_REALIZATIONS: usize = 20;

#[derive(Parser)]
#[command(name = "hieranderson", version, about = "Eigenvalue statistics of hierarchical and lattice Anderson models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration and print it with every default filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the enabled experiments.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `master_seed` from the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write full spectra of the first realizations to spectra.csv.
        #[arg(long)]
        emit_spectra: bool,
        /// Also write the Hamiltonian of realization 0 to matrix.csv.
        #[arg(long)]
        emit_matrix: bool,
    },
    /// List the available experiments.
    ListExperiments,
}

#[derive(Serialize)]
struct ManifestEcho {
    config_path: String,
    config: ModelConfig,
    experiments: Vec<ExperimentKind>,
    workers: usize,
    output_dir: String,
    master_seed: u64,
    spectral_dimension: Option<f64>,
    decoupling_radius: Option<usize>,
    artifact_version: &'static str,
}

#[derive(Serialize)]
struct Results<'a> {
    manifest_echo: &'a ManifestEcho,
    reports: &'a [EnsembleReport],
    version: &'static str,
    timestamp: u64,
}

/// JSON floats with 17 significant digits; non-finite values become `null`.
struct RoundTripFormatter;

impl serde_json::ser::Formatter for RoundTripFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        if v.is_finite() {
            write!(w, "{v:.16e}")
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(v))
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RoundTripFormatter);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(buf)
}

fn load_config(path: &Path) -> Result<ModelConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = ModelConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    cfg.validate().with_context(|| format!("validating {}", path.display()))?;
    Ok(cfg.resolved())
}

fn echo(cfg: &ModelConfig, path: &Path, workers: usize, out: &Path) -> ManifestEcho {
    ManifestEcho {
        config_path: path.display().to_string(),
        config: cfg.clone(),
        experiments: cfg.experiment_list(),
        workers,
        output_dir: out.display().to_string(),
        master_seed: cfg.master_seed,
        spectral_dimension: cfg.spectral_dimension(),
        decoupling_radius: cfg.decoupling_radius(),
        artifact_version: ARTIFACT_VERSION,
    }
}

fn panic_report(kind: ExperimentKind, seed: u64, payload: &(dyn std::any::Any + Send)) -> EnsembleReport {
    let msg = payload
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "worker panicked".into());
    let mut rep = EnsembleReport::new(kind.name(), 0);
    rep.push(
        CheckRecord::new("worker panic", "experiment ran to completion", 0.0, 1.0)
            .status(Status::Fail)
            .seeds(vec![seed])
            .note(msg),
    );
    rep
}

fn write_artifacts(out: &Path, reports: &[EnsembleReport]) -> Result<()> {
    if let Some(table) = reports.iter().find_map(|r| r.artifacts.counts.as_ref()) {
        let mut s = String::from("# rescaled windows:");
        for (i, w) in table.windows.iter().enumerate() {
            s.push_str(&format!(" window_{}=[{}, {})", i + 1, w[0], w[1]));
        }
        s.push_str("\n# seed");
        for i in 0..table.windows.len() {
            s.push_str(&format!(",window_{}", i + 1));
        }
        s.push('\n');
        for (seed, counts) in &table.rows {
            s.push_str(&seed.to_string());
            for c in counts {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
        fs::write(out.join("counts.csv"), s)?;
    }
    if let Some(hist) = reports.iter().find_map(|r| r.artifacts.dos_histogram.as_ref()) {
        let mut s = String::from("# energy density\n");
        for (x, y) in hist {
            s.push_str(&format!("{x:.16e} {y:.16e}\n"));
        }
        fs::write(out.join("dos_histogram.dat"), s)?;
    }
    if let Some(gaps) = reports.iter().find_map(|r| r.artifacts.gaps.as_ref()) {
        let mut s = String::from("# gap position (rescaled units, first seed repetition)\n");
        for (g, x) in gaps {
            s.push_str(&format!("{g:.16e} {x:.16e}\n"));
        }
        fs::write(out.join("gaps.dat"), s)?;
    }
    Ok(())
}

fn write_spectra(out: &Path, cfg: &ModelConfig) -> Result<()> {
    let spectra = sample_spectra(cfg, cfg.realizations.min(SPECTRA_REALIZATIONS))?;
    let n = spectra.first().map_or(0, |s| s.1.len());
    let mut s = String::from("# seed");
    for i in 0..n {
        s.push_str(&format!(",eigenvalue_{}", i + 1));
    }
    s.push('\n');
    for (seed, vals) in spectra {
        s.push_str(&seed.to_string());
        for v in vals {
            s.push_str(&format!(",{v:.16e}"));
        }
        s.push('\n');
    }
    fs::write(out.join("spectra.csv"), s)?;
    Ok(())
}

fn write_matrix(out: &Path, cfg: &ModelConfig) -> Result<()> {
    let h = sample_hamiltonian(cfg)?;
    let n = h.dim();
    let mut s = format!("# row-major Hamiltonian of realization 0, {n} x {n}\n");
    for i in 0..n {
        let row: Vec<String> = h.matrix().row(i).iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    fs::write(out.join("matrix.csv"), s)?;
    Ok(())
}

fn exit_status(reports: &[EnsembleReport]) -> u8 {
    match reports.iter().map(EnsembleReport::status).max() {
        Some(Status::Fail) => 2,
        Some(Status::Inconclusive) => 3,
        _ => 0,
    }
}

fn run(
    config: &Path,
    seed: Option<u64>,
    workers: Option<usize>,
    out: &Path,
    emit_spectra: bool,
    emit_matrix: bool,
) -> Result<u8> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let workers = workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let manifest = echo(&cfg, config, workers, out);
    let mut reports = Vec::new();
    for kind in cfg.experiment_list() {
        eprintln!("running {}", kind.name());
        let outcome = pool.install(|| catch_unwind(AssertUnwindSafe(|| run_experiment(kind, &cfg))));
        let rep = match outcome {
            Ok(r) => r.with_context(|| format!("experiment {}", kind.name()))?,
            Err(payload) => panic_report(kind, cfg.master_seed, payload.as_ref()),
        };
        eprintln!("  {} -> {:?}", kind.name(), rep.status());
        reports.push(rep);
    }
    pool.install(|| -> Result<()> {
        if emit_spectra {
            write_spectra(out, &cfg)?;
        }
        if emit_matrix {
            write_matrix(out, &cfg)?;
        }
        Ok(())
    })?;
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let results = Results { manifest_echo: &manifest, reports: &reports, version: env!("CARGO_PKG_VERSION"), timestamp };
    fs::write(out.join("results.json"), to_json(&results)?)?;
    write_artifacts(out, &reports)?;
    Ok(exit_status(&reports))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<12} {}", k.name(), k.description());
            }
            Ok(0)
        }
        Command::Validate { config } => load_config(&config).and_then(|cfg| {
            let m = echo(&cfg, &config, 1, Path::new("-"));
            if let Some(d) = cfg.spectral_dimension() {
                eprintln!("d = {d:.4}");
            }
            println!("{}", serde_json::to_string_pretty(&m)?);
            Ok(0)
        }),
        Command::Run { config, seed, workers, out, emit_spectra, emit_matrix } => {
            run(&config, seed, workers, &out, emit_spectra, emit_matrix)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
