//! End-to-end extraction: windowing, initialisation and the alternating loop.

use log::debug;
use ndarray::Array2;
use serde::Serialize;

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::objective::{check_unit_rows, Objective};
use crate::operators::{mixing_forward, window_adjoint, window_forward, BlockMixing, WindowDft};
use crate::signal::{RgbSignal, WindowPlan};
use crate::solver::admm::admm_y_update;
use crate::solver::separation::update_w_with_gram;

/// Channel index selected by the initial separation vectors.
pub const GREEN: usize = 1;

/// Splits `x` into stride-one windows of length `tau`, removing each window's
/// per-channel mean.
pub fn preprocess(x: &RgbSignal, tau: usize) -> Result<(BlockMixing, WindowPlan)> {
    let plan = WindowPlan::new(x.len(), tau)?;
    let mixing = BlockMixing::from_signal(x, &plan, true)?;
    Ok((mixing, plan))
}

/// Every window starts on the green channel.
pub fn init_w(plan: &WindowPlan) -> Array2<f64> {
    Array2::from_shape_fn((plan.window_count(), 3), |(_, c)| if c == GREEN { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone, Serialize)]
pub struct OuterDiagnostics {
    pub admm_primal_residuals: Vec<f64>,
    pub admm_dual_residuals: Vec<f64>,
    /// ADMM iterate kept for the pulse; 0 means the previous pulse was kept.
    pub admm_best_iteration: usize,
    pub admm_max_imag_leakage: f64,
    pub cg_iterations: usize,
    pub objective_after_y: f64,
    pub w_iterations: usize,
    pub w_converged: bool,
    pub objective_after_w: f64,
}

#[derive(Debug, Clone)]
pub struct ExtractionResult {
    /// Extracted pulse, one value per input frame.
    pub y_full: Vec<f64>,
    /// Final separation vectors, one row per window.
    pub w: Array2<f64>,
    /// Objective value at the initial point.
    pub initial_objective: f64,
    /// Objective after each outer iteration.
    pub objective_trace: Vec<f64>,
    pub diagnostics: Vec<OuterDiagnostics>,
}

/// Jointly estimates the pulse and the per-window separation vectors.
pub fn extract(x: &RgbSignal, cfg: &SolverConfig) -> Result<ExtractionResult> {
    cfg.validate()?;
    if x.channels() != 3 {
        return Err(Error::InvalidInput(format!(
            "expected 3 colour channels, got {}",
            x.channels()
        )));
    }
    let (mixing, plan) = preprocess(x, cfg.tau)?;
    let dft = WindowDft::new(cfg.tau)?;
    let gram = mixing.gram();
    let objective = Objective {
        mixing: &mixing,
        plan: &plan,
        dft: &dft,
        cfg,
    };

    let mut w = init_w(&plan);
    // Least-squares fit of the pulse to the initial windows.
    let x_mix = mixing_forward(&mixing, w.view())?;
    let mut y: Vec<f64> = window_adjoint(&x_mix, &plan)?
        .iter()
        .zip(plan.overlap_counts())
        .map(|(v, &c)| v / c as f64)
        .collect();
    let initial_objective = objective.value(&y, w.view())?;

    let mut warm = None;
    let mut trace = Vec::with_capacity(cfg.outer_iters);
    let mut diagnostics = Vec::with_capacity(cfg.outer_iters);
    let mut last = initial_objective;

    for it in 0..cfg.outer_iters {
        let x_mix = mixing_forward(&mixing, w.view())?;
        let admm = admm_y_update(&x_mix, &plan, &dft, cfg, warm.take(), Some(&y))?;
        y = admm.y;
        warm = Some(admm.state);
        let objective_after_y = objective.value(&y, w.view())?;

        let gy = window_forward(&y, &plan)?;
        let w_out = update_w_with_gram(&mixing, &gram, &gy, w.view(), cfg)?;
        w = w_out.w;
        check_unit_rows(w.view(), cfg.w_solver_tol)?;
        let value = objective.value(&y, w.view())?;
        debug!(
            "outer {it}: objective {value:.6e} (after y {objective_after_y:.6e}), \
             admm best {} of {}, w iters {}",
            admm.best_iteration,
            admm.objective_trace.len(),
            w_out.iterations
        );

        trace.push(value);
        diagnostics.push(OuterDiagnostics {
            admm_primal_residuals: admm.primal_residuals,
            admm_dual_residuals: admm.dual_residuals,
            admm_best_iteration: admm.best_iteration,
            admm_max_imag_leakage: admm.max_imag_leakage,
            cg_iterations: admm.cg_iterations,
            objective_after_y,
            w_iterations: w_out.iterations,
            w_converged: w_out.converged,
            objective_after_w: value,
        });

        if let Some(thr) = cfg.outer_rel_change_stop {
            if (last - value).abs() <= thr * last.abs().max(f64::MIN_POSITIVE) {
                break;
            }
        }
        last = value;
    }

    Ok(ExtractionResult {
        y_full: y,
        w,
        initial_objective,
        objective_trace: trace,
        diagnostics,
    })
}
