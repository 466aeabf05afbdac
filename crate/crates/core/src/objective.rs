//! Joint objective over the full-length pulse and the separation vectors.

use ndarray::{Array2, ArrayView2};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::operators::{
    difference_energy, mixing_forward, window_forward, BlockMixing, WindowDft,
};
use crate::pipeline::preprocess;
use crate::signal::{RgbSignal, WindowPlan};

/// Rows of `w` must have unit norm to within this tolerance to be accepted
/// by the objective.
pub const FEASIBILITY_TOL: f64 = 1e-6;

/// Current iterate of the alternating scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationState {
    /// `T x C`, row `t` is the separation vector of window `t`.
    pub w: Array2<f64>,
    /// Full-length pulse estimate, length `L`.
    pub y_full: Vec<f64>,
    /// Objective value at the last evaluation.
    pub residual_objective: f64,
}

impl SeparationState {
    pub fn new(w: Array2<f64>, y_full: Vec<f64>) -> Self {
        Self {
            w,
            y_full,
            residual_objective: f64::NAN,
        }
    }
}

/// Returns an error naming the first row of `w` whose norm is further than
/// `tol` from one.
pub fn check_unit_rows(w: ArrayView2<f64>, tol: f64) -> Result<()> {
    for (t, row) in w.rows().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if !((norm - 1.0).abs() <= tol) {
            return Err(Error::Infeasible { row: t, norm });
        }
    }
    Ok(())
}

/// Individual terms of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// `||G y - X w||^2`
    pub data: f64,
    /// `sum_f alpha_f ||[F G y]_f||`
    pub sparsity: f64,
    /// `beta ||D w||^2`
    pub smoothness: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.data + self.sparsity + self.smoothness
    }
}

/// Objective evaluator bound to one preprocessed input.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    pub mixing: &'a BlockMixing,
    pub plan: &'a WindowPlan,
    pub dft: &'a WindowDft,
    pub cfg: &'a SolverConfig,
}

impl Objective<'_> {
    pub fn terms(&self, y_full: &[f64], w: ArrayView2<f64>) -> Result<ObjectiveTerms> {
        let gy = window_forward(y_full, self.plan)?;
        let xw = mixing_forward(self.mixing, w)?;
        let data = gy.iter().zip(&xw).map(|(a, b)| (a - b).powi(2)).sum();
        let sparsity = self.dft.forward(&gy)?.weighted_l21(&self.cfg.alpha);
        let smoothness = self.cfg.beta * difference_energy(w);
        let terms = ObjectiveTerms {
            data,
            sparsity,
            smoothness,
        };
        if !terms.total().is_finite() {
            return Err(Error::NonFinite("objective"));
        }
        Ok(terms)
    }

    pub fn value(&self, y_full: &[f64], w: ArrayView2<f64>) -> Result<f64> {
        self.terms(y_full, w).map(|t| t.total())
    }
}

/// Evaluates the joint objective at `state` for input `x`.
///
/// The unit-norm constraint is not scored; states violating it by more than
/// [`FEASIBILITY_TOL`] are rejected instead.
pub fn evaluate_objective(
    x: &RgbSignal,
    state: &SeparationState,
    cfg: &SolverConfig,
) -> Result<f64> {
    cfg.validate()?;
    let (mixing, plan) = preprocess(x, cfg.tau)?;
    if state.y_full.len() != plan.signal_length() {
        return Err(Error::DimensionMismatch {
            context: "evaluate_objective (y_full)",
            expected: plan.signal_length(),
            actual: state.y_full.len(),
        });
    }
    if state.w.nrows() != plan.window_count() || state.w.ncols() != x.channels() {
        return Err(Error::DimensionMismatch {
            context: "evaluate_objective (w rows)",
            expected: plan.window_count(),
            actual: state.w.nrows(),
        });
    }
    check_unit_rows(state.w.view(), FEASIBILITY_TOL)?;
    let dft = WindowDft::new(cfg.tau)?;
    Objective {
        mixing: &mixing,
        plan: &plan,
        dft: &dft,
        cfg,
    }
    .value(&state.y_full, state.w.view())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;

    fn green_rows(t: usize) -> Array2<f64> {
        Array2::from_shape_fn((t, 3), |(_, c)| if c == 1 { 1.0 } else { 0.0 })
    }

    #[test]
    fn zero_everything_is_zero() {
        let x = RgbSignal::new(Array2::zeros((20, 3)), 30.0).unwrap();
        let cfg = default_config(30.0, 8).unwrap();
        let state = SeparationState::new(green_rows(13), vec![0.0; 20]);
        assert_eq!(evaluate_objective(&x, &state, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn zero_pulse_leaves_data_term() {
        let rows: Vec<[f64; 3]> = (0..20)
            .map(|i| [(i as f64).sin(), (i as f64 * 0.7).cos(), 0.1 * i as f64])
            .collect();
        let x = RgbSignal::from_rows(&rows, 30.0).unwrap();
        let cfg = default_config(30.0, 8).unwrap();
        let w = green_rows(13);
        let (mixing, _) = preprocess(&x, 8).unwrap();
        let xw = mixing_forward(&mixing, w.view()).unwrap();
        let expected: f64 = xw.iter().map(|v| v * v).sum();
        let state = SeparationState::new(w, vec![0.0; 20]);
        let got = evaluate_objective(&x, &state, &cfg).unwrap();
        assert!((got - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn infeasible_and_mismatched_states_rejected() {
        let x = RgbSignal::new(Array2::zeros((20, 3)), 30.0).unwrap();
        let cfg = default_config(30.0, 8).unwrap();
        let mut w = green_rows(13);
        w[[4, 1]] = 1.1;
        let state = SeparationState::new(w, vec![0.0; 20]);
        assert!(matches!(
            evaluate_objective(&x, &state, &cfg),
            Err(Error::Infeasible { row: 4, .. })
        ));
        let state = SeparationState::new(green_rows(12), vec![0.0; 20]);
        assert!(evaluate_objective(&x, &state, &cfg).is_err());
        let state = SeparationState::new(green_rows(13), vec![0.0; 19]);
        assert!(evaluate_objective(&x, &state, &cfg).is_err());
    }
}
