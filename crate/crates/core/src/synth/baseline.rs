//! Reference methods: band-passed green channel and PCA fusion of patches.

use nalgebra::{DMatrix, SymmetricEigen};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::pipeline::GREEN;
use crate::signal::RgbSignal;

/// Ideal band-pass: zero every full-length DFT bin whose frequency lies
/// outside the closed band, then invert.
pub fn ideal_bandpass(signal: &[f64], sample_rate_hz: f64, band_hz: (f64, f64)) -> Result<Vec<f64>> {
    let (lo, hi) = band_hz;
    let nyquist = sample_rate_hz / 2.0;
    if !(lo > 0.0 && hi > lo && hi < nyquist) {
        return Err(Error::InvalidInput(format!(
            "band [{lo}, {hi}] Hz must lie inside (0, {nyquist}) Hz"
        )));
    }
    let n = signal.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = signal.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        let f = k.min(n - k) as f64 * sample_rate_hz / n as f64;
        if f < lo || f > hi {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    Ok(buf.iter().map(|c| c.re / n as f64).collect())
}

/// Mean-removed green channel passed through [`ideal_bandpass`].
pub fn green_baseline(x: &RgbSignal, band_hz: (f64, f64)) -> Result<Vec<f64>> {
    if x.channels() != 3 {
        return Err(Error::InvalidInput(format!(
            "expected 3 colour channels, got {}",
            x.channels()
        )));
    }
    let g = x.channel(GREEN);
    let mean = g.sum() / g.len() as f64;
    let centred: Vec<f64> = g.iter().map(|v| v - mean).collect();
    ideal_bandpass(&centred, x.sample_rate_hz(), band_hz)
}

/// Zero-mean, unit-variance copy of `x`.
pub fn standardize(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    if !(sd > 0.0) {
        return Err(Error::ZeroVariance);
    }
    Ok(x.iter().map(|v| (v - mean) / sd).collect())
}

/// First principal component of standardised per-patch signals.
///
/// Returns the projection of the standardised signals onto the leading
/// eigenvector of their covariance. The sign makes the output correlate
/// nonnegatively with the mean of the standardised inputs, falling back to
/// the first input when that mean vanishes.
pub fn pca_aggregate(signals: &[Vec<f64>]) -> Result<Vec<f64>> {
    if signals.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "PCA aggregation needs at least 2 signals, got {}",
            signals.len()
        )));
    }
    let len = signals[0].len();
    if len < 2 {
        return Err(Error::EmptyInput);
    }
    if let Some(bad) = signals.iter().find(|s| s.len() != len) {
        return Err(Error::DimensionMismatch {
            context: "pca_aggregate",
            expected: len,
            actual: bad.len(),
        });
    }
    let z: Vec<Vec<f64>> = signals.iter().map(|s| standardize(s)).collect::<Result<_>>()?;
    let p = z.len();
    let cov = DMatrix::from_fn(p, p, |i, j| {
        z[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum::<f64>() / len as f64
    });
    let eig = SymmetricEigen::new(cov);
    let lead = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty spectrum");
    let v = eig.eigenvectors.column(lead);
    let mut scores: Vec<f64> = (0..len)
        .map(|t| (0..p).map(|i| v[i] * z[i][t]).sum())
        .collect();

    let mean: Vec<f64> = (0..len).map(|t| z.iter().map(|s| s[t]).sum::<f64>() / p as f64).collect();
    let mut align: f64 = scores.iter().zip(&mean).map(|(a, b)| a * b).sum();
    if align.abs() <= 1e-12 * len as f64 {
        align = scores.iter().zip(&z[0]).map(|(a, b)| a * b).sum();
    }
    if align < 0.0 {
        for s in &mut scores {
            *s = -*s;
        }
    }
    Ok(scores)
}
