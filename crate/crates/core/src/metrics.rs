//! Evaluation metrics: spectral SNR against a reference heart rate, heart rate
//! from peak intervals, MAE, success rate and correlation.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

/// Settings of the spectral SNR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrSettings {
    /// Half-width of the band around the fundamental and its second harmonic.
    pub half_width_hz: f64,
    /// Frequency range over which power is counted at all.
    pub range_hz: (f64, f64),
}

impl Default for SnrSettings {
    fn default() -> Self {
        Self {
            half_width_hz: 0.1,
            range_hz: (0.5, 4.0),
        }
    }
}

/// One-sided periodogram `|X_k|^2` for `k = 0..=N/2` with bin frequencies.
pub fn periodogram(signal: &[f64], sample_rate_hz: f64) -> (Vec<f64>, Vec<f64>) {
    let n = signal.len();
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if n > 0 {
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    }
    let half = n / 2;
    let freqs = (0..=half).map(|k| k as f64 * sample_rate_hz / n as f64).collect();
    let power = buf.iter().take(half + 1).map(|c| c.norm_sqr()).collect();
    (freqs, power)
}

/// Frequency of the strongest periodogram bin inside `band_hz`.
pub fn dominant_frequency_hz(signal: &[f64], sample_rate_hz: f64, band_hz: (f64, f64)) -> Option<f64> {
    let (freqs, power) = periodogram(signal, sample_rate_hz);
    freqs
        .iter()
        .zip(&power)
        .filter(|(f, _)| **f >= band_hz.0 && **f <= band_hz.1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(f, _)| *f)
}

/// Bins of the periodogram that count as signal and as noise.
pub fn snr_masks(
    n: usize,
    gt_fundamental_hz: f64,
    sample_rate_hz: f64,
    settings: &SnrSettings,
) -> (Vec<bool>, Vec<bool>) {
    let (lo, hi) = settings.range_hz;
    let mut signal = Vec::new();
    let mut noise = Vec::new();
    for k in 0..=n / 2 {
        let f = k as f64 * sample_rate_hz / n as f64;
        let in_range = f >= lo && f <= hi;
        let near = (f - gt_fundamental_hz).abs() <= settings.half_width_hz
            || (f - 2.0 * gt_fundamental_hz).abs() <= settings.half_width_hz;
        signal.push(in_range && near);
        noise.push(in_range && !near);
    }
    (signal, noise)
}

/// SNR in dB with default settings (0.1 Hz half-width, 0.5–4 Hz range).
pub fn snr_db(signal: &[f64], gt_fundamental_hz: f64, sample_rate_hz: f64) -> Result<f64> {
    snr_db_with(signal, gt_fundamental_hz, sample_rate_hz, &SnrSettings::default())
}

/// Ratio of periodogram power near the reference fundamental and second
/// harmonic to the remaining power, both within `settings.range_hz`.
pub fn snr_db_with(
    signal: &[f64],
    gt_fundamental_hz: f64,
    sample_rate_hz: f64,
    settings: &SnrSettings,
) -> Result<f64> {
    let (lo, hi) = settings.range_hz;
    if !(gt_fundamental_hz >= lo && gt_fundamental_hz <= hi) {
        return Err(Error::InvalidInput(format!(
            "reference fundamental {gt_fundamental_hz} Hz outside [{lo}, {hi}] Hz"
        )));
    }
    if !(sample_rate_hz > 0.0) || (signal.len() as f64) < 2.0 * sample_rate_hz {
        return Err(Error::InvalidInput(format!(
            "SNR needs at least 2 s of signal, got {} samples at {sample_rate_hz} Hz",
            signal.len()
        )));
    }
    let (_, power) = periodogram(signal, sample_rate_hz);
    let (sig_mask, noise_mask) = snr_masks(signal.len(), gt_fundamental_hz, sample_rate_hz, settings);
    if !sig_mask.iter().any(|&m| m) {
        return Err(Error::EmptyMask);
    }
    let sum = |mask: &[bool]| -> f64 {
        power.iter().zip(mask).filter(|(_, &m)| m).map(|(p, _)| p).sum()
    };
    let p_in = sum(&sig_mask);
    let p_out = sum(&noise_mask);
    let floor = 1e-12 * (p_in + p_out);
    let p_out = p_out.max(floor);
    if p_in == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(10.0 * (p_in / p_out).log10())
}

/// Heart-rate estimate from peak-to-peak intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HrEstimate {
    pub bpm: f64,
    /// Detected maxima of the signal.
    pub peak_indices: Vec<usize>,
    pub mean_interval_s: f64,
    pub valid: bool,
}

impl HrEstimate {
    fn invalid(peaks: Vec<usize>) -> Self {
        Self {
            bpm: f64::NAN,
            peak_indices: peaks,
            mean_interval_s: f64::NAN,
            valid: false,
        }
    }

    /// `bpm` when valid, `NaN` otherwise.
    pub fn bpm_or_nan(&self) -> f64 {
        if self.valid {
            self.bpm
        } else {
            f64::NAN
        }
    }
}

/// Minimum relative prominence of an accepted peak, in units of the signal's
/// standard deviation.
pub const PEAK_PROMINENCE: f64 = 0.3;
/// Highest heart rate resolvable by the peak spacing rule.
pub const MAX_BPM: f64 = 240.0;

fn local_maxima(x: &[f64]) -> Vec<usize> {
    let n = x.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            // Walk across a plateau.
            let mut ahead = i + 1;
            while ahead < n - 1 && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                peaks.push((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        i += 1;
    }
    peaks
}

fn prominence(x: &[f64], p: usize) -> f64 {
    let h = x[p];
    let mut left_min = h;
    for j in (0..p).rev() {
        if x[j] > h {
            break;
        }
        left_min = left_min.min(x[j]);
    }
    let mut right_min = h;
    for &v in &x[p + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Peaks with prominence at least `min_prominence`, thinned so that no two
/// kept peaks are closer than `min_distance` samples (taller peaks win).
pub fn find_peaks(x: &[f64], min_prominence: f64, min_distance: f64) -> Vec<usize> {
    let candidates: Vec<usize> = local_maxima(x)
        .into_iter()
        .filter(|&p| prominence(x, p) >= min_prominence)
        .collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| x[candidates[b]].total_cmp(&x[candidates[a]]).then(a.cmp(&b)));
    let mut keep = vec![true; candidates.len()];
    for &i in &order {
        if !keep[i] {
            continue;
        }
        let p = candidates[i] as f64;
        for (j, &q) in candidates.iter().enumerate() {
            if j != i && keep[j] && (q as f64 - p).abs() < min_distance {
                keep[j] = false;
            }
        }
    }
    candidates
        .into_iter()
        .zip(keep)
        .filter_map(|(p, k)| k.then_some(p))
        .collect()
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Heart rate from the mean spacing of the signal's maxima and minima.
///
/// Maxima and minima are detected independently (minimum spacing
/// `sample_rate / 4` samples, prominence at least 0.3 standard deviations).
/// Each set with at least three members contributes its successive intervals;
/// the pooled mean interval gives the rate. The result is unchanged by a sign
/// flip or positive rescaling of the signal.
pub fn estimate_hr(signal: &[f64], sample_rate_hz: f64) -> Result<HrEstimate> {
    if !(sample_rate_hz > 0.0) || (signal.len() as f64) < 5.0 * sample_rate_hz {
        return Err(Error::InvalidInput(format!(
            "heart-rate estimation needs at least 5 s of signal, got {} samples at {sample_rate_hz} Hz",
            signal.len()
        )));
    }
    if signal.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("heart-rate input"));
    }
    let sd = std_dev(signal);
    if sd == 0.0 {
        return Ok(HrEstimate::invalid(Vec::new()));
    }
    let min_distance = sample_rate_hz * 60.0 / MAX_BPM;
    let min_prom = PEAK_PROMINENCE * sd;
    let peaks = find_peaks(signal, min_prom, min_distance);
    let negated: Vec<f64> = signal.iter().map(|v| -v).collect();
    let troughs = find_peaks(&negated, min_prom, min_distance);

    let mut span = 0usize;
    let mut count = 0usize;
    for set in [&peaks, &troughs] {
        if set.len() >= 3 {
            span += set[set.len() - 1] - set[0];
            count += set.len() - 1;
        }
    }
    if count == 0 {
        return Ok(HrEstimate::invalid(peaks));
    }
    let mean_interval_s = span as f64 / count as f64 / sample_rate_hz;
    let bpm = 60.0 / mean_interval_s;
    if !(bpm > 0.0 && bpm < 300.0) {
        return Ok(HrEstimate::invalid(peaks));
    }
    Ok(HrEstimate {
        bpm,
        peak_indices: peaks,
        mean_interval_s,
        valid: true,
    })
}

/// Heart rate over sliding windows of `window_s` seconds advanced by `stride_s`.
pub fn sliding_hr(
    signal: &[f64],
    sample_rate_hz: f64,
    window_s: f64,
    stride_s: f64,
) -> Result<Vec<HrEstimate>> {
    let win = (window_s * sample_rate_hz).round() as usize;
    let stride = ((stride_s * sample_rate_hz).round() as usize).max(1);
    if win == 0 || win > signal.len() {
        return Err(Error::InvalidInput(format!(
            "sliding window of {win} samples does not fit a signal of {}",
            signal.len()
        )));
    }
    (0..=signal.len() - win)
        .step_by(stride)
        .map(|start| estimate_hr(&signal[start..start + win], sample_rate_hz))
        .collect()
}

fn check_pairs(estimates: &[f64], ground_truth: &[f64]) -> Result<()> {
    if estimates.is_empty() {
        return Err(Error::EmptyInput);
    }
    if estimates.len() != ground_truth.len() {
        return Err(Error::DimensionMismatch {
            context: "heart-rate pairs",
            expected: ground_truth.len(),
            actual: estimates.len(),
        });
    }
    Ok(())
}

/// Mean absolute error over pairs with a finite estimate, and the number of
/// pairs excluded because the estimate was invalid (`NaN`).
pub fn mae_bpm_with_exclusions(estimates: &[f64], ground_truth: &[f64]) -> Result<(f64, usize)> {
    check_pairs(estimates, ground_truth)?;
    let errors: Vec<f64> = estimates
        .iter()
        .zip(ground_truth)
        .filter(|(e, _)| e.is_finite())
        .map(|(e, g)| (e - g).abs())
        .collect();
    let excluded = estimates.len() - errors.len();
    if errors.is_empty() {
        return Ok((f64::NAN, excluded));
    }
    Ok((errors.iter().sum::<f64>() / errors.len() as f64, excluded))
}

pub fn mae_bpm(estimates: &[f64], ground_truth: &[f64]) -> Result<f64> {
    mae_bpm_with_exclusions(estimates, ground_truth).map(|(m, _)| m)
}

/// Percentage of pairs within `threshold_bpm`; invalid (`NaN`) estimates fail.
pub fn success_rate(estimates: &[f64], ground_truth: &[f64], threshold_bpm: f64) -> Result<f64> {
    check_pairs(estimates, ground_truth)?;
    if !(threshold_bpm > 0.0) {
        return Err(Error::InvalidInput(format!(
            "success threshold must be positive, got {threshold_bpm}"
        )));
    }
    let hits = estimates
        .iter()
        .zip(ground_truth)
        .filter(|(e, g)| (*e - *g).abs() <= threshold_bpm)
        .count();
    Ok(100.0 * hits as f64 / estimates.len() as f64)
}

/// `|corr(a, b)|`.
pub fn abs_pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "abs_pearson",
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa * sbb).sqrt()).abs().min(1.0))
}
