//! Input traces and the sliding-window layout built on top of them.

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// Spatially averaged colour trace of one skin patch: `L` frames by `C` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbSignal {
    samples: Array2<f64>,
    sample_rate_hz: f64,
}

impl RgbSignal {
    pub fn new(samples: Array2<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.nrows() == 0 || samples.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("RGB samples"));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    /// Builds a signal from per-frame `[r, g, b]` triples.
    pub fn from_rows(rows: &[[f64; 3]], sample_rate_hz: f64) -> Result<Self> {
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        let samples = Array2::from_shape_vec((rows.len(), 3), flat)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::new(samples, sample_rate_hz)
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.samples.ncols()
    }

    pub fn channel(&self, c: usize) -> ArrayView1<'_, f64> {
        self.samples.column(c)
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }
}

/// Stride-one sliding window layout over a signal of length `L`.
///
/// Window `t` covers samples `t..t + window_size`, so there are
/// `L - window_size + 1` windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPlan {
    window_size: usize,
    signal_length: usize,
    window_count: usize,
    overlap_counts: Vec<usize>,
}

impl WindowPlan {
    pub fn new(signal_length: usize, window_size: usize) -> Result<Self> {
        if window_size == 0 {
            return Err(Error::InvalidConfig("window size must be positive".into()));
        }
        if signal_length < window_size {
            return Err(Error::SignalTooShort {
                len: signal_length,
                window: window_size,
            });
        }
        let window_count = signal_length - window_size + 1;
        let overlap_counts = (0..signal_length)
            .map(|i| {
                (i + 1)
                    .min(window_size)
                    .min(window_count)
                    .min(signal_length - i)
            })
            .collect();
        Ok(Self {
            window_size,
            signal_length,
            window_count,
            overlap_counts,
        })
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    pub fn window_count(&self) -> usize {
        self.window_count
    }

    /// Length of the stacked-window vector, `window_size * window_count`.
    pub fn stacked_len(&self) -> usize {
        self.window_size * self.window_count
    }

    /// Number of windows covering each sample.
    pub fn overlap_counts(&self) -> &[usize] {
        &self.overlap_counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlap_counts_match_brute_force() {
        for len in 1..30 {
            for tau in 1..=len {
                let plan = WindowPlan::new(len, tau).unwrap();
                assert_eq!(plan.window_count(), len - tau + 1);
                let mut brute = vec![0usize; len];
                for t in 0..plan.window_count() {
                    for j in 0..tau {
                        brute[t + j] += 1;
                    }
                }
                assert_eq!(plan.overlap_counts(), brute.as_slice());
                assert!(plan.overlap_counts().iter().all(|&c| c >= 1 && c <= tau));
            }
        }
    }

    #[test]
    fn short_signal_rejected() {
        assert!(matches!(
            WindowPlan::new(100, 150),
            Err(Error::SignalTooShort { len: 100, window: 150 })
        ));
    }

    #[test]
    fn default_sized_plan() {
        let plan = WindowPlan::new(450, 150).unwrap();
        assert_eq!(plan.window_count(), 301);
        assert_eq!(plan.stacked_len(), 150 * 301);
    }

    #[test]
    fn rgb_rejects_bad_input() {
        assert!(RgbSignal::from_rows(&[[0.0, f64::NAN, 0.0]], 30.0).is_err());
        assert!(RgbSignal::from_rows(&[[0.0, 1.0, 0.0]], 0.0).is_err());
        assert!(RgbSignal::from_rows(&[], 30.0).is_err());
        let x = RgbSignal::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], 30.0).unwrap();
        assert_eq!(x.len(), 2);
        assert_eq!(x.channel(1).to_vec(), vec![2.0, 5.0]);
    }
}
