//! Dense reference assemblies of the model operators, for verification.
//!
//! Everything here builds explicit matrices from their entry-wise definitions
//! and shares no code with the matrix-free operators beyond the input types.
//! Intended for small instances only.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rustfft::num_complex::Complex64;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::objective::SeparationState;
use crate::operators::{BlockMixing, TimeFreqBlocks};
use crate::pipeline::preprocess;
use crate::signal::{RgbSignal, WindowPlan};

/// Largest `tau * T` accepted by the dense assemblies.
pub const DENSE_LIMIT: usize = 5000;

fn guard(plan: &WindowPlan) -> Result<()> {
    let n = plan.stacked_len();
    if n > DENSE_LIMIT {
        return Err(Error::OracleTooLarge(n));
    }
    Ok(())
}

/// Sliding-window matrix, `tau T x L`: identity blocks shifted by one column per window.
pub fn dense_window_matrix(plan: &WindowPlan) -> Result<DMatrix<f64>> {
    guard(plan)?;
    let tau = plan.window_size();
    let mut g = DMatrix::zeros(plan.stacked_len(), plan.signal_length());
    for t in 0..plan.window_count() {
        for j in 0..tau {
            g[(t * tau + j, t + j)] = 1.0;
        }
    }
    Ok(g)
}

/// Block-diagonal mixing matrix, `tau T x C T`, acting on `w` stacked window by window.
pub fn dense_mixing_matrix(m: &BlockMixing) -> Result<DMatrix<f64>> {
    let (t_count, tau, c) = (m.window_count(), m.window_size(), m.channels());
    if tau * t_count > DENSE_LIMIT {
        return Err(Error::OracleTooLarge(tau * t_count));
    }
    let mut x = DMatrix::zeros(tau * t_count, c * t_count);
    for t in 0..t_count {
        let win = m.window(t);
        for j in 0..tau {
            for ch in 0..c {
                x[(t * tau + j, t * c + ch)] = win[[j, ch]];
            }
        }
    }
    Ok(x)
}

/// Unitary DFT matrix of size `tau`, entry `(f, j) = exp(-2 pi i f j / tau) / sqrt(tau)`.
pub fn dense_dft_matrix(tau: usize) -> DMatrix<Complex64> {
    let scale = 1.0 / (tau as f64).sqrt();
    DMatrix::from_fn(tau, tau, |f, j| {
        let ang = -2.0 * PI * ((f * j) % tau) as f64 / tau as f64;
        Complex64::new(ang.cos() * scale, ang.sin() * scale)
    })
}

/// Block-diagonal DFT `diag(F, ..., F)` with `windows` blocks, assembled in full.
pub fn dense_block_dft_matrix(tau: usize, windows: usize) -> Result<DMatrix<Complex64>> {
    let n = tau * windows;
    if n > DENSE_LIMIT {
        return Err(Error::OracleTooLarge(n));
    }
    let f = dense_dft_matrix(tau);
    let mut out = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for t in 0..windows {
        out.view_mut((t * tau, t * tau), (tau, tau)).copy_from(&f);
    }
    Ok(out)
}

/// Difference matrix, `C (T-1) x C T`, with `+I` then `-I` on each block row.
pub fn dense_difference_matrix(windows: usize, channels: usize) -> DMatrix<f64> {
    let rows = channels * windows.saturating_sub(1);
    let mut d = DMatrix::zeros(rows, channels * windows);
    for t in 0..windows.saturating_sub(1) {
        for c in 0..channels {
            d[(t * channels + c, t * channels + c)] = 1.0;
            d[(t * channels + c, (t + 1) * channels + c)] = -1.0;
        }
    }
    d
}

/// Stacks the rows of `w` into one vector.
pub fn stack_rows(w: &ndarray::Array2<f64>) -> DVector<f64> {
    DVector::from_iterator(w.len(), w.rows().into_iter().flat_map(|r| r.to_vec()))
}

fn to_blocks(v: &DVector<Complex64>, tau: usize) -> Result<TimeFreqBlocks> {
    TimeFreqBlocks::from_window_major(tau, v.iter().copied().collect())
}

fn to_complex(v: &DVector<f64>) -> DVector<Complex64> {
    v.map(|x| Complex64::new(x, 0.0))
}

/// Evaluates the joint objective with fully assembled matrices.
pub fn dense_oracle_objective(
    x: &RgbSignal,
    state: &SeparationState,
    cfg: &SolverConfig,
) -> Result<f64> {
    let (mixing, plan) = preprocess(x, cfg.tau)?;
    guard(&plan)?;
    let tau = plan.window_size();
    let g = dense_window_matrix(&plan)?;
    let xm = dense_mixing_matrix(&mixing)?;
    let f = dense_block_dft_matrix(tau, plan.window_count())?;
    let d = dense_difference_matrix(plan.window_count(), mixing.channels());

    let y = DVector::from_column_slice(&state.y_full);
    let w = stack_rows(&state.w);
    let gy = &g * &y;
    let data = (&gy - &xm * &w).norm_squared();
    let spectrum = &f * to_complex(&gy);
    let mut sparsity = 0.0;
    for (fbin, a) in cfg.alpha.iter().enumerate() {
        let block: f64 = (0..plan.window_count())
            .map(|t| spectrum[t * tau + fbin].norm_sqr())
            .sum();
        sparsity += a * block.sqrt();
    }
    let smooth = cfg.beta * (&d * &w).norm_squared();
    Ok(data + sparsity + smooth)
}

/// Solves the ADMM quadratic step by dense LU on the assembled normal equations
/// `(2 G^T G + (1/gamma) Re(G^T F^H F G)) y = 2 G^T x + (1/gamma) Re(G^T F^H (z - v))`.
pub fn dense_y_step_solve(
    x_mix: &[f64],
    z: &TimeFreqBlocks,
    v: &TimeFreqBlocks,
    plan: &WindowPlan,
    gamma: f64,
) -> Result<Vec<f64>> {
    guard(plan)?;
    let g = dense_window_matrix(plan)?;
    let f = dense_block_dft_matrix(plan.window_size(), plan.window_count())?;
    let fg = &f * g.map(|x| Complex64::new(x, 0.0));
    let fg_h = fg.adjoint();
    let normal = 2.0 * g.transpose() * &g + (&fg_h * &fg).map(|c| c.re) / gamma;
    let diff = DVector::from_iterator(
        z.as_slice().len(),
        z.as_slice().iter().zip(v.as_slice()).map(|(a, b)| a - b),
    );
    let rhs = 2.0 * g.transpose() * DVector::from_column_slice(x_mix) + (&fg_h * diff).map(|c| c.re) / gamma;
    normal
        .lu()
        .solve(&rhs)
        .map(|s| s.iter().copied().collect())
        .ok_or_else(|| Error::Divergence("dense normal matrix is singular".into()))
}

/// Dense `F G y` as time-frequency blocks.
pub fn dense_stft_of_signal(y_full: &[f64], plan: &WindowPlan) -> Result<TimeFreqBlocks> {
    let g = dense_window_matrix(plan)?;
    let f = dense_block_dft_matrix(plan.window_size(), plan.window_count())?;
    let out = f * to_complex(&(g * DVector::from_column_slice(y_full)));
    to_blocks(&out, plan.window_size())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;
    use ndarray::Array2;

    #[test]
    fn zero_state_is_zero() {
        let x = RgbSignal::new(Array2::zeros((20, 3)), 30.0).unwrap();
        let cfg = default_config(30.0, 8).unwrap();
        let w = Array2::from_shape_fn((13, 3), |(_, c)| (c == 1) as u8 as f64);
        let state = SeparationState::new(w, vec![0.0; 20]);
        assert_eq!(dense_oracle_objective(&x, &state, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn single_window_collapses() {
        let rows: Vec<[f64; 3]> = (0..8)
            .map(|i| [(i as f64).sin(), (0.5 * i as f64).cos(), 0.1 * i as f64])
            .collect();
        let x = RgbSignal::from_rows(&rows, 30.0).unwrap();
        let cfg = default_config(30.0, 8).unwrap();
        let w1 = [0.6, 0.0, 0.8];
        let y: Vec<f64> = (0..8).map(|i| (i as f64 * 0.9).sin()).collect();
        let state = SeparationState::new(Array2::from_shape_vec((1, 3), w1.to_vec()).unwrap(), y.clone());

        // ||y - X_1 w_1||^2 + sum_f alpha_f |DFT(y)_f| with X_1 the mean-removed window.
        let means: Vec<f64> = (0..3).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / 8.0).collect();
        let mut expected = 0.0;
        for i in 0..8 {
            let xw: f64 = (0..3).map(|c| (rows[i][c] - means[c]) * w1[c]).sum();
            expected += (y[i] - xw).powi(2);
        }
        let f = dense_dft_matrix(8);
        for fbin in 0..8 {
            let c: Complex64 = (0..8).map(|j| f[(fbin, j)] * y[j]).sum();
            expected += cfg.alpha[fbin] * c.norm();
        }
        let got = dense_oracle_objective(&x, &state, &cfg).unwrap();
        assert!((got - expected).abs() < 1e-10);
    }

    #[test]
    fn guard_refuses_large() {
        let plan = WindowPlan::new(5000, 100).unwrap();
        assert!(matches!(dense_window_matrix(&plan), Err(Error::OracleTooLarge(_))));
    }

    #[test]
    fn difference_matrix_layout() {
        let d = dense_difference_matrix(3, 2);
        assert_eq!(d.nrows(), 4);
        assert_eq!(d[(0, 0)], 1.0);
        assert_eq!(d[(0, 2)], -1.0);
        assert_eq!(d[(3, 5)], -1.0);
    }
}
