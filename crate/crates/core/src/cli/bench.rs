//! Method comparison over recordings with ground truth.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use rayon::prelude::*;

use super::io;
use super::CliError;
use crate::config::SolverConfig;
use crate::metrics::{abs_pearson, estimate_hr, mae_bpm_with_exclusions, snr_db, success_rate};
use crate::pipeline::extract;
use crate::signal::RgbSignal;
use crate::synth::{green_baseline, pca_aggregate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Method {
    #[value(name = "proposed")]
    Proposed,
    #[value(name = "green")]
    Green,
    #[value(name = "proposed+pca")]
    ProposedPca,
    #[value(name = "green+pca")]
    GreenPca,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Green => "green",
            Method::ProposedPca => "proposed+pca",
            Method::GreenPca => "green+pca",
        }
    }

    pub fn uses_pca(self) -> bool {
        matches!(self, Method::ProposedPca | Method::GreenPca)
    }

    fn file_tag(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Green => "green",
            Method::ProposedPca => "proposed_pca",
            Method::GreenPca => "green_pca",
        }
    }
}

/// Per-patch RGB traces of one recording and its reference pulse.
#[derive(Debug, Clone)]
pub struct Recording {
    pub name: String,
    pub patches: Vec<(String, RgbSignal)>,
    pub ground_truth: Vec<f64>,
}

impl Recording {
    fn sample_rate_hz(&self) -> f64 {
        self.patches[0].1.sample_rate_hz()
    }
}

/// One evaluated signal: a single patch, or a PCA fusion of all patches.
#[derive(Debug, Clone)]
pub struct Unit {
    pub recording: String,
    pub label: String,
    pub signal: Vec<f64>,
    pub snr_db: f64,
    pub hr_bpm: f64,
    pub gt_hr_bpm: f64,
    pub abs_r: f64,
}

#[derive(Debug, Clone)]
pub struct MethodReport {
    pub method: Method,
    pub snr_db: f64,
    pub mae_bpm: f64,
    pub excluded: usize,
    pub sr_percent: f64,
    pub abs_r: f64,
    pub units: Vec<Unit>,
}

fn score(recording: &Recording, gt_hr: f64, label: String, signal: Vec<f64>) -> Result<Unit, CliError> {
    let fs = recording.sample_rate_hz();
    let snr = snr_db(&signal, gt_hr / 60.0, fs)?;
    let hr = estimate_hr(&signal, fs)?.bpm_or_nan();
    // A flat output carries no pulse at all.
    let abs_r = abs_pearson(&signal, &recording.ground_truth).unwrap_or(0.0);
    Ok(Unit {
        recording: recording.name.clone(),
        label,
        signal,
        snr_db: snr,
        hr_bpm: hr,
        gt_hr_bpm: gt_hr,
        abs_r,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Runs every method on every recording and aggregates the metrics.
///
/// Single-patch methods contribute one unit per patch; PCA methods one unit
/// per recording. Extractions run in parallel; results keep input order.
pub fn evaluate(
    recordings: &[Recording],
    methods: &[Method],
    cfg: &SolverConfig,
    sr_threshold_bpm: f64,
) -> Result<Vec<MethodReport>, CliError> {
    let gt_hr: Vec<f64> = recordings
        .iter()
        .map(|r| {
            let est = estimate_hr(&r.ground_truth, r.sample_rate_hz())?;
            if est.valid {
                Ok(est.bpm)
            } else {
                Err(CliError::Input(format!(
                    "recording {}: no heart rate found in the ground truth",
                    r.name
                )))
            }
        })
        .collect::<Result<_, _>>()?;
    if methods.iter().any(|m| m.uses_pca()) {
        if let Some(r) = recordings.iter().find(|r| r.patches.len() < 2) {
            return Err(CliError::Input(format!(
                "recording {}: PCA aggregation needs at least 2 patches",
                r.name
            )));
        }
    }

    let jobs: Vec<(usize, usize)> = recordings
        .iter()
        .enumerate()
        .flat_map(|(i, r)| (0..r.patches.len()).map(move |p| (i, p)))
        .collect();
    let run = |f: &(dyn Fn(&RgbSignal) -> Result<Vec<f64>, CliError> + Sync)| -> Result<Vec<Vec<Vec<f64>>>, CliError> {
        let flat: Vec<Vec<f64>> = jobs
            .par_iter()
            .map(|&(i, p)| f(&recordings[i].patches[p].1))
            .collect::<Result<_, _>>()?;
        let mut it = flat.into_iter();
        Ok(recordings
            .iter()
            .map(|r| it.by_ref().take(r.patches.len()).collect())
            .collect())
    };
    let wants = |a: Method, b: Method| methods.contains(&a) || methods.contains(&b);
    let proposed = if wants(Method::Proposed, Method::ProposedPca) {
        Some(run(&|x| Ok(extract(x, cfg)?.y_full))?)
    } else {
        None
    };
    let green = if wants(Method::Green, Method::GreenPca) {
        Some(run(&|x| Ok(green_baseline(x, cfg.passband_hz)?))?)
    } else {
        None
    };

    let mut reports = Vec::with_capacity(methods.len());
    for &method in methods {
        let per_patch = match method {
            Method::Proposed | Method::ProposedPca => proposed.as_ref(),
            Method::Green | Method::GreenPca => green.as_ref(),
        }
        .expect("signals computed for every requested method");
        let mut units = Vec::new();
        for ((rec, signals), &hr) in recordings.iter().zip(per_patch).zip(&gt_hr) {
            if method.uses_pca() {
                units.push(score(rec, hr, "pca".into(), pca_aggregate(signals)?)?);
            } else {
                for ((label, _), s) in rec.patches.iter().zip(signals) {
                    units.push(score(rec, hr, label.clone(), s.clone())?);
                }
            }
        }
        let est: Vec<f64> = units.iter().map(|u| u.hr_bpm).collect();
        let gt: Vec<f64> = units.iter().map(|u| u.gt_hr_bpm).collect();
        let (mae, excluded) = mae_bpm_with_exclusions(&est, &gt)?;
        reports.push(MethodReport {
            method,
            snr_db: mean(units.iter().map(|u| u.snr_db)),
            mae_bpm: mae,
            excluded,
            sr_percent: success_rate(&est, &gt, sr_threshold_bpm)?,
            abs_r: mean(units.iter().map(|u| u.abs_r)),
            units,
        });
    }
    Ok(reports)
}

fn fmt_metric(v: f64) -> String {
    format!("{v:.6}")
}

/// Metric table as CSV: `method,snr_db,mae_bpm,sr_percent,abs_r`.
pub fn report_csv(reports: &[MethodReport]) -> String {
    let mut out = String::from("method,snr_db,mae_bpm,sr_percent,abs_r\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.method.name(),
            fmt_metric(r.snr_db),
            fmt_metric(r.mae_bpm),
            fmt_metric(r.sr_percent),
            fmt_metric(r.abs_r)
        );
    }
    out
}

/// Human-readable summary with per-unit detail.
pub fn summary_text(reports: &[MethodReport], header: &str, sr_threshold_bpm: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{header}");
    let _ = writeln!(out, "success threshold: {sr_threshold_bpm} bpm");
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<14} {:>9} {:>9} {:>8} {:>7} {:>6} {:>9}",
        "method", "SNR dB", "MAE bpm", "SR %", "|r|", "units", "excluded"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<14} {:>9.3} {:>9.3} {:>8.1} {:>7.3} {:>6} {:>9}",
            r.method.name(),
            r.snr_db,
            r.mae_bpm,
            r.sr_percent,
            r.abs_r,
            r.units.len(),
            r.excluded
        );
    }
    for r in reports {
        let _ = writeln!(out);
        let _ = writeln!(out, "[{}]", r.method.name());
        for u in &r.units {
            let _ = writeln!(
                out,
                "  {}/{}: SNR {:.3} dB, HR {:.2} bpm (reference {:.2}), |r| {:.3}",
                u.recording, u.label, u.snr_db, u.hr_bpm, u.gt_hr_bpm, u.abs_r
            );
        }
    }
    out
}

/// Writes one plot-ready CSV per method and recording next to `report`:
/// the reference pulse followed by every unit's signal.
pub fn write_signals(report: &Path, reports: &[MethodReport], recordings: &[Recording]) -> Result<(), CliError> {
    for r in reports {
        for rec in recordings {
            let units: Vec<&Unit> = r.units.iter().filter(|u| u.recording == rec.name).collect();
            let mut names = vec!["ground_truth".to_string()];
            names.extend(units.iter().map(|u| u.label.clone()));
            let mut cols: Vec<&[f64]> = vec![&rec.ground_truth];
            cols.extend(units.iter().map(|u| u.signal.as_slice()));
            let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let path = io::with_stem_suffix(report, &format!("_{}_{}", r.method.file_tag(), rec.name), "csv");
            io::write_columns(&path, &name_refs, &cols)?;
        }
    }
    Ok(())
}
