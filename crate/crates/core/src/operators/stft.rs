//! Per-window unitary DFT over stacked windows.
//!
//! The forward map takes `T` stacked windows of length `tau` to a `tau x T`
//! grid of coefficients. Row `f` of the grid (bin `f` across every window)
//! is the group on which the block-sparse penalty acts.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Tolerance on conjugate symmetry, relative to `max(1, max |coefficient|)`.
pub const SYMMETRY_TOL: f64 = 1e-6;

/// Complex time-frequency coefficients, stored window-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeFreqBlocks {
    tau: usize,
    windows: usize,
    data: Vec<Complex64>,
}

impl TimeFreqBlocks {
    pub fn zeros(tau: usize, windows: usize) -> Self {
        Self {
            tau,
            windows,
            data: vec![Complex64::new(0.0, 0.0); tau * windows],
        }
    }

    /// Wraps window-major coefficients: entry `t * tau + f` is bin `f` of window `t`.
    pub fn from_window_major(tau: usize, data: Vec<Complex64>) -> Result<Self> {
        if tau == 0 || data.len() % tau != 0 {
            return Err(Error::DimensionMismatch {
                context: "TimeFreqBlocks::from_window_major",
                expected: tau,
                actual: data.len(),
            });
        }
        Ok(Self {
            tau,
            windows: data.len() / tau,
            data,
        })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn window_count(&self) -> usize {
        self.windows
    }

    pub fn get(&self, f: usize, t: usize) -> Complex64 {
        self.data[t * self.tau + f]
    }

    pub fn set(&mut self, f: usize, t: usize, v: Complex64) {
        self.data[t * self.tau + f] = v;
    }

    pub fn window(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.tau..(t + 1) * self.tau]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Frequency block `f`: bin `f` of every window.
    pub fn block(&self, f: usize) -> impl Iterator<Item = Complex64> + '_ {
        self.data.iter().skip(f).step_by(self.tau).copied()
    }

    /// Euclidean norm of every frequency block.
    pub fn block_norms(&self) -> Vec<f64> {
        let mut sq = vec![0.0; self.tau];
        for win in self.data.chunks_exact(self.tau) {
            for (s, c) in sq.iter_mut().zip(win) {
                *s += c.norm_sqr();
            }
        }
        sq.into_iter().map(f64::sqrt).collect()
    }

    /// `sum_f alpha_f ||block_f||`.
    pub fn weighted_l21(&self, alpha: &[f64]) -> f64 {
        self.block_norms()
            .iter()
            .zip(alpha)
            .map(|(n, a)| a * n)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real inner product `Re sum a * conj(b)`.
    pub fn real_inner(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// Largest `|X[f, t] - conj(X[(tau - f) mod tau, t])|`.
    pub fn conjugate_symmetry_deviation(&self) -> f64 {
        let tau = self.tau;
        self.data
            .chunks_exact(tau)
            .flat_map(|win| (0..tau).map(move |f| (win[f] - win[(tau - f) % tau].conj()).norm()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Elementwise `self + scale * other`.
    pub fn add_scaled(&self, scale: f64, other: &Self) -> Self {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b * scale)
            .collect();
        Self {
            tau: self.tau,
            windows: self.windows,
            data,
        }
    }

    /// Dense `tau x T` matrix view of the coefficients.
    pub fn to_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.tau).map(|f| self.block(f).collect()).collect()
    }
}

/// Reusable FFT plans for one window length.
#[derive(Clone)]
pub struct WindowDft {
    tau: usize,
    scale: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for WindowDft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WindowDft").field("tau", &self.tau).finish()
    }
}

impl WindowDft {
    pub fn new(tau: usize) -> Result<Self> {
        if tau == 0 {
            return Err(Error::InvalidConfig("window size must be positive".into()));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            tau,
            scale: 1.0 / (tau as f64).sqrt(),
            forward: planner.plan_fft_forward(tau),
            inverse: planner.plan_fft_inverse(tau),
        })
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn forward(&self, y_windows: &[f64]) -> Result<TimeFreqBlocks> {
        if y_windows.len() % self.tau != 0 {
            return Err(Error::DimensionMismatch {
                context: "stft_forward",
                expected: self.tau,
                actual: y_windows.len(),
            });
        }
        let mut data: Vec<Complex64> = y_windows
            .iter()
            .map(|&v| Complex64::new(v * self.scale, 0.0))
            .collect();
        if !data.is_empty() {
            self.forward.process(&mut data);
        }
        TimeFreqBlocks::from_window_major(self.tau, data)
    }

    /// Inverse unitary DFT of every window. Returns the real part and the
    /// largest imaginary magnitude that was discarded.
    pub fn adjoint_with_leakage(&self, b: &TimeFreqBlocks) -> Result<(Vec<f64>, f64)> {
        if b.tau() != self.tau {
            return Err(Error::DimensionMismatch {
                context: "stft_adjoint",
                expected: self.tau,
                actual: b.tau(),
            });
        }
        let deviation = b.conjugate_symmetry_deviation();
        if deviation > SYMMETRY_TOL * b.max_abs().max(1.0) {
            return Err(Error::SymmetryViolation(deviation));
        }
        let mut data = b.as_slice().to_vec();
        if !data.is_empty() {
            self.inverse.process(&mut data);
        }
        let mut leak = 0.0f64;
        let out = data
            .into_iter()
            .map(|c| {
                leak = leak.max((c.im * self.scale).abs());
                c.re * self.scale
            })
            .collect();
        Ok((out, leak))
    }

    pub fn adjoint(&self, b: &TimeFreqBlocks) -> Result<Vec<f64>> {
        self.adjoint_with_leakage(b).map(|(v, _)| v)
    }
}

pub fn stft_forward(y_windows: &[f64], tau: usize) -> Result<TimeFreqBlocks> {
    WindowDft::new(tau)?.forward(y_windows)
}

pub fn stft_adjoint(b: &TimeFreqBlocks) -> Result<Vec<f64>> {
    WindowDft::new(b.tau())?.adjoint(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_dft(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|f| {
                x.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        let ang = -2.0 * PI * (f * j) as f64 / n as f64;
                        Complex64::new(ang.cos(), ang.sin()) * v
                    })
                    .sum::<Complex64>()
                    / (n as f64).sqrt()
            })
            .collect()
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        (0..n)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn constant_window_only_dc() {
        let tau = 12;
        let b = stft_forward(&[3.0; 24], tau).unwrap();
        for t in 0..2 {
            assert!((b.get(0, t) - Complex64::new(3.0 * (tau as f64).sqrt(), 0.0)).norm() < 1e-12);
            for f in 1..tau {
                assert!(b.get(f, t).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn matches_naive_dft() {
        let tau = 9;
        let x = pseudo_random(tau * 4, 7);
        let b = stft_forward(&x, tau).unwrap();
        for t in 0..4 {
            let oracle = naive_dft(&x[t * tau..(t + 1) * tau]);
            for f in 0..tau {
                assert!((b.get(f, t) - oracle[f]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn parseval_and_round_trip() {
        let tau = 150;
        let x = pseudo_random(tau * 5, 3);
        let b = stft_forward(&x, tau).unwrap();
        let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((b.norm() - xn).abs() < 1e-10);
        assert!(b.conjugate_symmetry_deviation() < 1e-10);
        let back = stft_adjoint(&b).unwrap();
        for (a, c) in x.iter().zip(&back) {
            assert!((a - c).abs() < 1e-10);
        }
    }

    #[test]
    fn pure_dc_block_gives_constant_windows() {
        let tau = 8;
        let mut b = TimeFreqBlocks::zeros(tau, 3);
        for t in 0..3 {
            b.set(0, t, Complex64::new(t as f64 + 1.0, 0.0));
        }
        let y = stft_adjoint(&b).unwrap();
        for t in 0..3 {
            let expected = (t as f64 + 1.0) / (tau as f64).sqrt();
            assert!(y[t * tau..(t + 1) * tau].iter().all(|v| (v - expected).abs() < 1e-12));
        }
    }

    #[test]
    fn asymmetric_spectrum_rejected() {
        let mut b = TimeFreqBlocks::zeros(8, 1);
        b.set(1, 0, Complex64::new(1.0, 0.0));
        assert!(matches!(stft_adjoint(&b), Err(Error::SymmetryViolation(_))));
    }

    #[test]
    fn ragged_length_rejected() {
        assert!(stft_forward(&[0.0; 10], 4).is_err());
    }

    #[test]
    fn block_norms_sum_to_total() {
        let x = pseudo_random(6 * 5, 11);
        let b = stft_forward(&x, 6).unwrap();
        let total: f64 = b.block_norms().iter().map(|n| n * n).sum();
        assert!((total.sqrt() - b.norm()).abs() < 1e-12);
        let ones = vec![1.0; 6];
        let l21: f64 = b.block_norms().iter().sum();
        assert!((b.weighted_l21(&ones) - l21).abs() < 1e-12);
    }
}
