//! ADMM solver for the pulse subproblem with the separation vectors held fixed:
//!
//! ```text
//! min_y ||G y - x_mix||^2 + sum_f alpha_f ||[F G y]_f||
//! ```
//!
//! split as `u = F G y`. Each iteration solves a quadratic in `y` by CG,
//! block soft-thresholds `F G y + v` into `z` and updates the scaled dual `v`.

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::operators::{window_adjoint, window_forward, TimeFreqBlocks, WindowDft};
use crate::signal::WindowPlan;
use crate::solver::cg::{pcg_solve, CgOutcome};
use crate::solver::prox::prox_weighted_l21;

/// Auxiliary and scaled dual variables carried between ADMM iterations.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub z: TimeFreqBlocks,
    pub v: TimeFreqBlocks,
    /// Total iterations run on this state, across warm starts.
    pub iteration: usize,
    /// `||F G y - z||` after the last iteration.
    pub primal_residual: f64,
    /// `||z - z_prev|| / gamma` after the last iteration.
    pub dual_residual: f64,
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    /// Lowest-objective iterate (see [`admm_y_update`]).
    pub y: Vec<f64>,
    pub state: AdmmState,
    /// Subproblem objective after each iteration.
    pub objective_trace: Vec<f64>,
    pub primal_residuals: Vec<f64>,
    pub dual_residuals: Vec<f64>,
    /// Iteration that produced `y`; 0 means the incoming `y_prev` was kept.
    pub best_iteration: usize,
    /// Largest imaginary part discarded by the inverse DFT.
    pub max_imag_leakage: f64,
    pub cg_iterations: usize,
}

/// Operators and data of one pulse subproblem.
#[derive(Debug, Clone, Copy)]
pub struct YProblem<'a> {
    pub x_mix: &'a [f64],
    pub plan: &'a WindowPlan,
    pub dft: &'a WindowDft,
    pub gamma: f64,
}

impl YProblem<'_> {
    fn check(&self) -> Result<()> {
        if self.x_mix.len() != self.plan.stacked_len() {
            return Err(Error::DimensionMismatch {
                context: "admm x_mix",
                expected: self.plan.stacked_len(),
                actual: self.x_mix.len(),
            });
        }
        if self.dft.tau() != self.plan.window_size() {
            return Err(Error::DimensionMismatch {
                context: "admm dft size",
                expected: self.plan.window_size(),
                actual: self.dft.tau(),
            });
        }
        Ok(())
    }

    /// `2 G^T G y + (1/gamma) G^T F^H F G y`, applied matrix-free.
    pub fn apply_normal(&self, y: &[f64]) -> Result<Vec<f64>> {
        let gy = window_forward(y, self.plan)?;
        let roundtrip = self.dft.adjoint(&self.dft.forward(&gy)?)?;
        let data = window_adjoint(&gy, self.plan)?;
        let prior = window_adjoint(&roundtrip, self.plan)?;
        Ok(data
            .iter()
            .zip(&prior)
            .map(|(d, p)| 2.0 * d + p / self.gamma)
            .collect())
    }

    /// Right-hand side `2 G^T x_mix + (1/gamma) G^T F^H (z - v)`, plus the
    /// imaginary leakage of the inverse DFT.
    pub fn rhs(&self, z: &TimeFreqBlocks, v: &TimeFreqBlocks) -> Result<(Vec<f64>, f64)> {
        let (back, leak) = self.dft.adjoint_with_leakage(&z.add_scaled(-1.0, v))?;
        let data = window_adjoint(self.x_mix, self.plan)?;
        let prior = window_adjoint(&back, self.plan)?;
        let rhs = data
            .iter()
            .zip(&prior)
            .map(|(d, p)| 2.0 * d + p / self.gamma)
            .collect();
        Ok((rhs, leak))
    }

    /// Diagonal of the normal matrix, `(2 + 1/gamma) * overlap_counts`.
    ///
    /// Exact because the per-window DFT is unitary.
    pub fn normal_diagonal(&self) -> Vec<f64> {
        let k = 2.0 + 1.0 / self.gamma;
        self.plan
            .overlap_counts()
            .iter()
            .map(|&c| k * c as f64)
            .collect()
    }

    /// `||G y - x_mix||^2 + 1/(2 gamma) ||F G y - z + v||^2`.
    pub fn quadratic_objective(
        &self,
        y: &[f64],
        z: &TimeFreqBlocks,
        v: &TimeFreqBlocks,
    ) -> Result<f64> {
        let gy = window_forward(y, self.plan)?;
        let data: f64 = gy.iter().zip(self.x_mix).map(|(a, b)| (a - b).powi(2)).sum();
        let fgy = self.dft.forward(&gy)?;
        let gap = fgy.add_scaled(-1.0, z).add_scaled(1.0, v).norm();
        Ok(data + gap * gap / (2.0 * self.gamma))
    }

    /// `||G y - x_mix||^2 + sum_f alpha_f ||[F G y]_f||` together with `F G y`.
    pub fn subproblem_objective(&self, y: &[f64], alpha: &[f64]) -> Result<(f64, TimeFreqBlocks)> {
        let gy = window_forward(y, self.plan)?;
        let data: f64 = gy.iter().zip(self.x_mix).map(|(a, b)| (a - b).powi(2)).sum();
        let fgy = self.dft.forward(&gy)?;
        Ok((data + fgy.weighted_l21(alpha), fgy))
    }
}

/// Solves the quadratic `y`-step by Jacobi-preconditioned CG on the
/// matrix-free normal operator.
pub fn y_step_cg(
    problem: &YProblem<'_>,
    z: &TimeFreqBlocks,
    v: &TimeFreqBlocks,
    tol: f64,
    max_iters: usize,
) -> Result<(CgOutcome, f64)> {
    problem.check()?;
    let (rhs, leak) = problem.rhs(z, v)?;
    let diag = problem.normal_diagonal();
    let out = pcg_solve(|p| problem.apply_normal(p), &rhs, Some(&diag), tol, max_iters)?;
    Ok((out, leak))
}

/// Closed-form `y`-step: the normal matrix is diagonal under the unitary DFT.
pub fn y_step_diagonal(
    problem: &YProblem<'_>,
    z: &TimeFreqBlocks,
    v: &TimeFreqBlocks,
) -> Result<Vec<f64>> {
    problem.check()?;
    let (rhs, _) = problem.rhs(z, v)?;
    Ok(rhs
        .iter()
        .zip(problem.normal_diagonal())
        .map(|(r, d)| r / d)
        .collect())
}

/// Runs `cfg.admm_iters` ADMM iterations on the pulse subproblem.
///
/// Without a warm state, `z` starts at `F G y_prev` (zero when `y_prev` is
/// absent) and `v` at zero. The returned pulse is the iterate with the lowest
/// subproblem objective among all iterations and `y_prev`, so the subproblem
/// objective never increases relative to `y_prev`. The returned state is the
/// final ADMM state regardless, for warm-starting the next call.
pub fn admm_y_update(
    x_mix: &[f64],
    plan: &WindowPlan,
    dft: &WindowDft,
    cfg: &SolverConfig,
    warm: Option<AdmmState>,
    y_prev: Option<&[f64]>,
) -> Result<AdmmOutcome> {
    let problem = YProblem {
        x_mix,
        plan,
        dft,
        gamma: cfg.gamma,
    };
    problem.check()?;
    let tau = plan.window_size();
    let windows = plan.window_count();

    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    if let Some(y0) = y_prev {
        let (obj, _) = problem.subproblem_objective(y0, &cfg.alpha)?;
        best = Some((obj, y0.to_vec(), 0));
    }

    let mut state = match warm {
        Some(s) => s,
        None => {
            let z = match y_prev {
                Some(y0) => dft.forward(&window_forward(y0, plan)?)?,
                None => TimeFreqBlocks::zeros(tau, windows),
            };
            AdmmState {
                z,
                v: TimeFreqBlocks::zeros(tau, windows),
                iteration: 0,
                primal_residual: f64::NAN,
                dual_residual: f64::NAN,
            }
        }
    };

    let mut objective_trace = Vec::with_capacity(cfg.admm_iters);
    let mut primal_residuals = Vec::with_capacity(cfg.admm_iters);
    let mut dual_residuals = Vec::with_capacity(cfg.admm_iters);
    let mut max_leak = 0.0f64;
    let mut cg_iterations = 0;

    for k in 1..=cfg.admm_iters {
        let (cg, leak) = y_step_cg(&problem, &state.z, &state.v, cfg.cg_tol, cfg.cg_max_iters)?;
        max_leak = max_leak.max(leak);
        cg_iterations += cg.iterations;
        let y = cg.x;

        let (obj, fgy) = problem.subproblem_objective(&y, &cfg.alpha)?;
        if !obj.is_finite() {
            return Err(Error::NonFinite("ADMM subproblem objective"));
        }
        objective_trace.push(obj);

        let z_next = prox_weighted_l21(&fgy.add_scaled(1.0, &state.v), cfg.gamma, &cfg.alpha);
        let primal = fgy.add_scaled(-1.0, &z_next).norm();
        let dual = z_next.add_scaled(-1.0, &state.z).norm() / cfg.gamma;
        state.v = state.v.add_scaled(1.0, &fgy).add_scaled(-1.0, &z_next);
        state.z = z_next;
        state.iteration += 1;
        state.primal_residual = primal;
        state.dual_residual = dual;
        primal_residuals.push(primal);
        dual_residuals.push(dual);

        if best.as_ref().map_or(true, |(b, _, _)| obj < *b) {
            best = Some((obj, y, k));
        }
        if cfg.admm_residual_stop.is_some_and(|thr| primal < thr) {
            break;
        }
    }

    let (y, best_iteration) = match best {
        Some((_, y, k)) => (y, k),
        None => (vec![0.0; plan.signal_length()], 0),
    };
    Ok(AdmmOutcome {
        y,
        state,
        objective_trace,
        primal_residuals,
        dual_residuals,
        best_iteration,
        max_imag_leakage: max_leak,
        cg_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_config;

    fn wave(n: usize, seed: f64) -> Vec<f64> {
        (0..n)
            .map(|i| (i as f64 * 0.41 + seed).sin() + 0.3 * (i as f64 * 1.7 + 2.0 * seed).cos())
            .collect()
    }

    #[test]
    fn zero_input_is_fixed_point() {
        let plan = WindowPlan::new(20, 8).unwrap();
        let dft = WindowDft::new(8).unwrap();
        let cfg = default_config(30.0, 8).unwrap();
        let out = admm_y_update(&vec![0.0; plan.stacked_len()], &plan, &dft, &cfg, None, Some(&[0.0; 20]))
            .unwrap();
        assert!(out.y.iter().all(|&v| v == 0.0));
        assert!(out.state.z.as_slice().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn huge_weights_shrink_to_zero() {
        let plan = WindowPlan::new(20, 8).unwrap();
        let dft = WindowDft::new(8).unwrap();
        let mut cfg = default_config(30.0, 8).unwrap();
        cfg.alpha = vec![1e6; 8];
        cfg.admm_iters = 200;
        let x = window_forward(&wave(20, 0.3), &plan).unwrap();
        let out = admm_y_update(&x, &plan, &dft, &cfg, None, None).unwrap();
        let norm = out.y.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-8, "norm {norm}");
    }

    #[test]
    fn cg_matches_diagonal_solve() {
        let plan = WindowPlan::new(40, 10).unwrap();
        let dft = WindowDft::new(10).unwrap();
        let x = window_forward(&wave(40, 1.0), &plan).unwrap();
        let z = dft.forward(&window_forward(&wave(40, 2.0), &plan).unwrap()).unwrap();
        let v = dft.forward(&window_forward(&wave(40, 3.0), &plan).unwrap()).unwrap();
        for gamma in [0.1, 1.0, 10.0] {
            let problem = YProblem { x_mix: &x, plan: &plan, dft: &dft, gamma };
            let (cg, leak) = y_step_cg(&problem, &z, &v, 1e-12, 200).unwrap();
            let diag = y_step_diagonal(&problem, &z, &v).unwrap();
            assert!(leak < 1e-8);
            for (a, b) in cg.x.iter().zip(&diag) {
                assert!((a - b).abs() < 1e-8);
            }
            // Plain CG without preconditioning reaches the same point.
            let (rhs, _) = problem.rhs(&z, &v).unwrap();
            let plain = crate::solver::cg::cg_solve(|p| problem.apply_normal(p), &rhs, 1e-12, 200).unwrap();
            for (a, b) in plain.x.iter().zip(&diag) {
                assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn warm_state_continues_counting() {
        let plan = WindowPlan::new(30, 10).unwrap();
        let dft = WindowDft::new(10).unwrap();
        let cfg = default_config(30.0, 10).unwrap();
        let x = window_forward(&wave(30, 0.5), &plan).unwrap();
        let first = admm_y_update(&x, &plan, &dft, &cfg, None, None).unwrap();
        assert_eq!(first.state.iteration, 20);
        assert_eq!(first.objective_trace.len(), 20);
        let second = admm_y_update(&x, &plan, &dft, &cfg, Some(first.state.clone()), Some(&first.y)).unwrap();
        assert_eq!(second.state.iteration, 40);
        let prev_obj = YProblem { x_mix: &x, plan: &plan, dft: &dft, gamma: 1.0 }
            .subproblem_objective(&first.y, &cfg.alpha)
            .unwrap()
            .0;
        let new_obj = YProblem { x_mix: &x, plan: &plan, dft: &dft, gamma: 1.0 }
            .subproblem_objective(&second.y, &cfg.alpha)
            .unwrap()
            .0;
        assert!(new_obj <= prev_obj);
    }

    #[test]
    fn residual_stop_exits_early() {
        let plan = WindowPlan::new(20, 8).unwrap();
        let dft = WindowDft::new(8).unwrap();
        let mut cfg = default_config(30.0, 8).unwrap();
        cfg.admm_residual_stop = Some(1e300);
        let x = window_forward(&wave(20, 0.1), &plan).unwrap();
        let out = admm_y_update(&x, &plan, &dft, &cfg, None, None).unwrap();
        assert_eq!(out.objective_trace.len(), 1);
    }
}
