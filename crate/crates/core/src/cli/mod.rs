//! Command-line front end: `extract`, `metrics`, `bench` and `synth`.
//!
//! Exit status is 0 on success, 2 for unusable input and 3 when the solver
//! fails.

pub mod bench;
pub mod io;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigFile, SolverConfig};
use crate::error::Error;
use crate::metrics::{estimate_hr, snr_db};
use crate::pipeline::{extract, ExtractionResult, OuterDiagnostics};
use crate::signal::RgbSignal;
use crate::synth::{generate_patches, pca_aggregate, SynthScenario};
use bench::{Method, Recording};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Name accepted in place of a scenario file.
pub const DESK_STANDARD: &str = "desk-standard";
const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
/// Largest relative length difference tolerated between paired signals.
const MAX_LENGTH_MISMATCH: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => EXIT_INPUT,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Divergence(_)
            | Error::NonFinite(_)
            | Error::Infeasible { .. }
            | Error::ZeroRow(_)
            | Error::SymmetryViolation(_) => CliError::Solver(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "rppg", version, about = "Pulse extraction from RGB traces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract the pulse from one RGB trace or a directory of patch traces.
    Extract(ExtractArgs),
    /// Compare a pulse signal against a reference PPG.
    Metrics(MetricsArgs),
    /// Run methods on synthetic or recorded data and tabulate metrics.
    Bench(BenchArgs),
    /// Write a synthetic recording as patch CSVs plus ground truth.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Aggregate {
    Pca,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// CSV with columns frame_index,R,G,B, or a directory of such files.
    pub input: PathBuf,
    /// Solver configuration (TOML); missing keys take the defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 30.0)]
    pub sample_rate: f64,
    /// Fuse the per-patch signals of a directory input.
    #[arg(long, value_enum)]
    pub aggregate: Option<Aggregate>,
    /// Output CSV (frame_index,rppg); diagnostics go to <output>.diagnostics.json.
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// CSV with columns frame_index,rppg.
    pub rppg: PathBuf,
    /// CSV with columns frame_index,ppg.
    pub ground_truth: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    pub sample_rate: f64,
    /// Largest heart-rate error counted as a success, in bpm.
    #[arg(long, default_value_t = 5.0)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Scenario file (TOML) or "desk-standard".
    #[arg(default_value = DESK_STANDARD)]
    pub scenario: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "proposed,green")]
    pub methods: Vec<Method>,
    /// Report CSV; the summary and per-method signals are written beside it.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Synthetic patches per recording (default 4 with a PCA method, else 1).
    #[arg(long)]
    pub patches: Option<usize>,
    /// Solver configuration (TOML) for the proposed method.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Evaluate recordings under this directory instead of synthetic data.
    /// Each recording holds patch CSVs and ground_truth.csv.
    #[arg(long, conflicts_with_all = ["seed", "patches"])]
    pub dataset: Option<PathBuf>,
    /// Sample rate of dataset recordings.
    #[arg(long, default_value_t = 30.0)]
    pub sample_rate: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scenario file (TOML) or "desk-standard".
    #[arg(default_value = DESK_STANDARD)]
    pub scenario: String,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of patches sharing the pulse, each with its own gain and noise.
    #[arg(long, default_value_t = 1)]
    pub patches: usize,
    /// Output directory.
    #[arg(long, short)]
    pub output: PathBuf,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Extract(a) => cmd_extract(&a),
        Command::Metrics(a) => cmd_metrics(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Synth(a) => cmd_synth(&a),
    }
}

fn load_config(path: Option<&Path>, sample_rate_hz: f64) -> Result<SolverConfig, CliError> {
    let file = match path {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    Ok(file.resolve(sample_rate_hz)?)
}

fn load_scenario(name: &str, seed: Option<u64>) -> Result<SynthScenario, CliError> {
    let mut s = if name == DESK_STANDARD {
        SynthScenario::desk_standard()
    } else {
        SynthScenario::load(Path::new(name))?
    };
    if let Some(seed) = seed {
        s.seed = seed;
    }
    s.validate()?;
    Ok(s)
}

fn file_label(path: &Path) -> String {
    path.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

#[derive(Serialize)]
struct PatchDiagnostics<'a> {
    patch: String,
    initial_objective: f64,
    objective_trace: &'a [f64],
    /// Separation vector of every window, one row each.
    w: Vec<[f64; 3]>,
    iterations: &'a [OuterDiagnostics],
}

#[derive(Serialize)]
struct ExtractDiagnostics<'a> {
    config: &'a SolverConfig,
    aggregate: Option<&'static str>,
    patches: Vec<PatchDiagnostics<'a>>,
}

fn patch_diagnostics(label: String, r: &ExtractionResult) -> PatchDiagnostics<'_> {
    PatchDiagnostics {
        patch: label,
        initial_objective: r.initial_objective,
        objective_trace: &r.objective_trace,
        w: r.w.rows().into_iter().map(|row| [row[0], row[1], row[2]]).collect(),
        iterations: &r.diagnostics,
    }
}

fn cmd_extract(a: &ExtractArgs) -> Result<(), CliError> {
    let cfg = load_config(a.config.as_deref(), a.sample_rate)?;
    let files = if a.input.is_dir() {
        let files = patch_files(&a.input)?;
        if files.is_empty() {
            return Err(CliError::Input(format!("{}: no CSV files", a.input.display())));
        }
        if files.len() > 1 && a.aggregate.is_none() {
            return Err(CliError::Input(format!(
                "{}: {} patch files need --aggregate pca",
                a.input.display(),
                files.len()
            )));
        }
        files
    } else {
        vec![a.input.clone()]
    };
    if a.aggregate.is_some() && files.len() < 2 {
        return Err(CliError::Input("--aggregate pca needs a directory with at least 2 patch files".into()));
    }

    let signals: Vec<RgbSignal> = files
        .iter()
        .map(|f| io::read_rgb(f, a.sample_rate))
        .collect::<Result<_, _>>()?;
    info!("extracting {} patch(es) with tau {}", signals.len(), cfg.tau);
    let results: Vec<ExtractionResult> = signals
        .par_iter()
        .map(|x| extract(x, &cfg))
        .collect::<Result<_, _>>()?;

    let pulse = if results.len() == 1 {
        results[0].y_full.clone()
    } else {
        let per_patch: Vec<Vec<f64>> = results.iter().map(|r| r.y_full.clone()).collect();
        pca_aggregate(&per_patch)?
    };
    io::write_columns(&a.output, &["rppg"], &[&pulse])?;

    let diagnostics = ExtractDiagnostics {
        config: &cfg,
        aggregate: a.aggregate.map(|_| "pca"),
        patches: files
            .iter()
            .zip(&results)
            .map(|(f, r)| patch_diagnostics(file_label(f), r))
            .collect(),
    };
    let json = serde_json::to_string_pretty(&diagnostics).map_err(|e| CliError::Io(e.to_string()))?;
    io::write_text(&io::sibling(&a.output, ".diagnostics.json"), &json)?;
    Ok(())
}

/// Truncates two paired signals to a common length, refusing mismatches
/// above one percent.
fn pair_lengths(a: &mut Vec<f64>, b: &mut Vec<f64>, what: &str) -> Result<(), CliError> {
    let (la, lb) = (a.len(), b.len());
    let longer = la.max(lb) as f64;
    if (la as f64 - lb as f64).abs() > MAX_LENGTH_MISMATCH * longer {
        return Err(CliError::Input(format!(
            "{what}: lengths {la} and {lb} differ by more than 1% (resampling is not supported)"
        )));
    }
    let n = la.min(lb);
    a.truncate(n);
    b.truncate(n);
    Ok(())
}

fn cmd_metrics(a: &MetricsArgs) -> Result<(), CliError> {
    let mut rppg = io::read_series(&a.rppg, "rppg")?;
    let mut gt = io::read_series(&a.ground_truth, "ppg")?;
    pair_lengths(&mut rppg, &mut gt, "rppg vs ground truth")?;
    let fs = a.sample_rate;
    let gt_hr = estimate_hr(&gt, fs)?;
    if !gt_hr.valid {
        return Err(CliError::Input("no heart rate found in the ground truth".into()));
    }
    let est = estimate_hr(&rppg, fs)?;
    let snr = snr_db(&rppg, gt_hr.bpm / 60.0, fs)?;
    let err = (est.bpm_or_nan() - gt_hr.bpm).abs();
    let success = est.valid && err <= a.threshold;

    let mut out = String::new();
    let _ = writeln!(out, "snr_db,hr_est_bpm,hr_gt_bpm,abs_error_bpm,success");
    let _ = writeln!(
        out,
        "{:.6},{:.6},{:.6},{:.6},{}",
        snr,
        est.bpm_or_nan(),
        gt_hr.bpm,
        err,
        success
    );
    print!("{out}");
    Ok(())
}

/// CSV files of `dir` other than the ground truth, in file-name order.
fn patch_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    Ok(io::csv_files(dir)?
        .into_iter()
        .filter(|f| f.file_name().is_none_or(|n| n != GROUND_TRUTH_FILE))
        .collect())
}

fn read_recording(dir: &Path, sample_rate_hz: f64) -> Result<Recording, CliError> {
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    let mut ground_truth = io::read_series(&gt_path, "ppg")?;
    let mut patches = Vec::new();
    for f in patch_files(dir)? {
        patches.push((file_label(&f), io::read_rgb(&f, sample_rate_hz)?));
    }
    if patches.is_empty() {
        return Err(CliError::Input(format!("{}: no patch files", dir.display())));
    }
    let name = file_label(dir);
    let n = patches[0].1.len();
    if let Some((label, _)) = patches.iter().find(|(_, p)| p.len() != n) {
        return Err(CliError::Input(format!("{name}: patch {label} length differs from the others")));
    }
    let mut probe = vec![0.0; n];
    pair_lengths(&mut probe, &mut ground_truth, &format!("recording {name}"))?;
    let n = ground_truth.len();
    let patches = patches
        .into_iter()
        .map(|(label, p)| {
            let trimmed = p.samples().slice(ndarray::s![..n, ..]).to_owned();
            Ok((label, RgbSignal::new(trimmed, sample_rate_hz)?))
        })
        .collect::<Result<_, CliError>>()?;
    Ok(Recording {
        name,
        patches,
        ground_truth,
    })
}

/// A directory holding ground_truth.csv is one recording; otherwise each
/// subdirectory (sorted by name) is.
fn read_dataset(dir: &Path, sample_rate_hz: f64) -> Result<Vec<Recording>, CliError> {
    if dir.join(GROUND_TRUTH_FILE).is_file() {
        return Ok(vec![read_recording(dir, sample_rate_hz)?]);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut subdirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(GROUND_TRUTH_FILE).is_file())
        .collect();
    subdirs.sort();
    if subdirs.is_empty() {
        return Err(CliError::Input(format!(
            "{}: no recordings (directories with {GROUND_TRUTH_FILE})",
            dir.display()
        )));
    }
    subdirs.iter().map(|d| read_recording(d, sample_rate_hz)).collect()
}

fn synthetic_recording(s: &SynthScenario, patches: usize) -> Result<Recording, CliError> {
    let (signals, rec) = generate_patches(s, patches)?;
    Ok(Recording {
        name: "synthetic".into(),
        patches: signals
            .into_iter()
            .enumerate()
            .map(|(i, x)| (format!("patch_{i:02}"), x))
            .collect(),
        ground_truth: rec.pulse,
    })
}

fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    let mut methods = Vec::new();
    for m in &a.methods {
        if !methods.contains(m) {
            methods.push(*m);
        }
    }
    let (recordings, header, fs) = match &a.dataset {
        Some(dir) => (
            read_dataset(dir, a.sample_rate)?,
            format!("dataset: {}", dir.display()),
            a.sample_rate,
        ),
        None => {
            let s = load_scenario(&a.scenario, a.seed)?;
            let default_patches = if methods.iter().any(|m| m.uses_pca()) { 4 } else { 1 };
            let patches = a.patches.unwrap_or(default_patches);
            let header = format!("scenario: {}, seed {}, {patches} patch(es)", a.scenario, s.seed);
            (vec![synthetic_recording(&s, patches)?], header, s.sample_rate_hz)
        }
    };
    let cfg = load_config(a.config.as_deref(), fs)?;
    info!("benchmarking {} recording(s)", recordings.len());
    let reports = bench::evaluate(&recordings, &methods, &cfg, cfg.sr_threshold_bpm)?;

    io::write_text(&a.output, &bench::report_csv(&reports))?;
    io::write_text(
        &io::with_stem_suffix(&a.output, "", "txt"),
        &bench::summary_text(&reports, &header, cfg.sr_threshold_bpm),
    )?;
    bench::write_signals(&a.output, &reports, &recordings)?;
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    if a.patches == 0 {
        return Err(CliError::Input("--patches must be positive".into()));
    }
    let s = load_scenario(&a.scenario, a.seed)?;
    let (patches, rec) = generate_patches(&s, a.patches)?;
    for (i, x) in patches.iter().enumerate() {
        io::write_rgb(&a.output.join(format!("patch_{i:02}.csv")), x)?;
    }
    io::write_columns(
        &a.output.join(GROUND_TRUTH_FILE),
        &["ppg", "hr_bpm"],
        &[&rec.pulse, &rec.hr_bpm],
    )?;
    io::write_text(&a.output.join("scenario.toml"), &s.to_toml())?;
    Ok(())
}
