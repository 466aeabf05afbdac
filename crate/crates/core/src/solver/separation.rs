//! Separation-vector subproblem:
//!
//! ```text
//! min_w ||y - X w||^2 + beta ||D w||^2   subject to ||w_t|| = 1 for every t
//! ```
//!
//! solved by projected (retracted) gradient descent on the product of unit
//! spheres. Trial steps come from a Barzilai-Borwein estimate and are halved
//! until the Armijo condition holds, so every accepted step decreases the
//! objective.
//!
//! Descent starts from the caller's point or from the per-window global
//! minimisers of the data term, whichever scores lower.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, Array3, ArrayView1, ArrayView2, Axis, Zip};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::objective::{check_unit_rows, FEASIBILITY_TOL};
use crate::operators::{difference_adjoint, difference_energy, difference_forward, mixing_adjoint, BlockMixing};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// Relative stationarity target on the Riemannian gradient.
pub const STATIONARITY_TOL: f64 = 1e-5;

/// Divides every row by its Euclidean norm.
pub fn project_rows_to_sphere(w: ArrayView2<f64>) -> Result<Array2<f64>> {
    let mut out = w.to_owned();
    for (t, mut row) in out.rows_mut().into_iter().enumerate() {
        let norm = row.dot(&row).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::ZeroRow(t));
        }
        row /= norm;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct WUpdateOutcome {
    pub w: Array2<f64>,
    pub iterations: usize,
    /// True when the stationarity test passed before the iteration cap.
    pub converged: bool,
    pub objective_start: f64,
    pub objective_end: f64,
    pub riemannian_grad_norm: f64,
    pub grad_norm: f64,
}

/// Quadratic model of the subproblem in per-window Gram form.
struct Quadratic<'a> {
    gram: &'a Array3<f64>,
    /// Row `t` is `X_t^T y_t`.
    cross: Array2<f64>,
    y_sq: f64,
    beta: f64,
}

impl Quadratic<'_> {
    fn value(&self, w: ArrayView2<f64>) -> f64 {
        let mut v = self.y_sq;
        for (t, row) in w.rows().into_iter().enumerate() {
            let g = self.gram.index_axis(Axis(0), t);
            v += row.dot(&g.dot(&row)) - 2.0 * row.dot(&self.cross.row(t));
        }
        v + self.beta * difference_energy(w)
    }

    fn gradient(&self, w: ArrayView2<f64>) -> Result<Array2<f64>> {
        let mut grad = Array2::zeros(w.raw_dim());
        for (t, (row, mut out)) in w.rows().into_iter().zip(grad.rows_mut()).enumerate() {
            let g = self.gram.index_axis(Axis(0), t);
            out.assign(&(2.0 * (&g.dot(&row) - &self.cross.row(t))));
        }
        if self.beta > 0.0 {
            let smooth = difference_adjoint(difference_forward(w).view(), w.nrows())?;
            grad.scaled_add(2.0 * self.beta, &smooth);
        }
        Ok(grad)
    }
}

/// Removes from each gradient row its component along the matching row of `w`.
fn tangent(w: ArrayView2<f64>, grad: &Array2<f64>) -> Array2<f64> {
    let mut out = grad.clone();
    Zip::from(out.rows_mut()).and(w.rows()).for_each(|mut g, wt| {
        let radial = g.dot(&wt);
        g.scaled_add(-radial, &wt);
    });
    out
}

/// Global minimiser of `w^T A w - 2 b^T w` on the unit sphere.
///
/// Writes `A = Q diag(l) Q^T` and solves the secular equation
/// `sum_i c_i^2 / (l_i - mu)^2 = 1` for `mu < l_min`, with `c = Q^T b`.
/// When `c` has no weight on the bottom eigenspace the remaining norm is
/// filled along the bottom eigenvector.
pub fn sphere_quadratic_minimum(a: ArrayView2<f64>, b: ArrayView1<f64>) -> Vec<f64> {
    let n = b.len();
    let eig = SymmetricEigen::new(DMatrix::from_fn(n, n, |i, j| 0.5 * (a[[i, j]] + a[[j, i]])));
    let order = {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        idx
    };
    let lam: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let q: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    let c: Vec<f64> = q
        .iter()
        .map(|qi| qi.iter().zip(b.iter()).map(|(x, y)| x * y).sum())
        .collect();
    let scale = lam.iter().map(|l| l.abs()).fold(b.dot(&b).sqrt(), f64::max).max(f64::MIN_POSITIVE);
    let tie = 1e-12 * scale;
    let lmin = lam[0];
    let bottom: Vec<usize> = (0..n).filter(|&i| lam[i] - lmin <= tie).collect();
    let norm_sq = |s: f64| -> f64 {
        (0..n)
            .map(|i| c[i] * c[i] / (lam[i] - lmin + s).powi(2))
            .sum()
    };

    let hard = bottom.iter().all(|&i| c[i].abs() <= tie)
        && (0..n)
            .filter(|i| !bottom.contains(i))
            .map(|i| (c[i] / (lam[i] - lmin)).powi(2))
            .sum::<f64>()
            <= 1.0;
    let mut coef = vec![0.0; n];
    if hard {
        let mut used = 0.0;
        for i in (0..n).filter(|i| !bottom.contains(i)) {
            coef[i] = c[i] / (lam[i] - lmin);
            used += coef[i] * coef[i];
        }
        coef[bottom[0]] = (1.0 - used).max(0.0).sqrt();
    } else {
        // norm_sq decreases in s; the root lies in (0, ||b||].
        let (mut lo, mut hi) = (0.0, b.dot(&b).sqrt().max(f64::MIN_POSITIVE));
        while norm_sq(hi) > 1.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if norm_sq(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        for i in 0..n {
            coef[i] = c[i] / (lam[i] - lmin + hi);
        }
    }
    let mut w = vec![0.0; n];
    for (qi, k) in q.iter().zip(&coef) {
        for (wj, qij) in w.iter_mut().zip(qi) {
            *wj += k * qij;
        }
    }
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter().map(|v| v / norm).collect()
}

fn frob(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Minimises the separation-vector subproblem starting from the feasible `w_init`.
///
/// `y_windows` is the stacked windowed pulse `G y`.
pub fn update_w(
    m: &BlockMixing,
    y_windows: &[f64],
    w_init: ArrayView2<f64>,
    cfg: &SolverConfig,
) -> Result<WUpdateOutcome> {
    check_unit_rows(w_init, FEASIBILITY_TOL)?;
    let gram = m.gram();
    update_w_with_gram(m, &gram, y_windows, w_init, cfg)
}

/// As [`update_w`], reusing precomputed per-window Gram matrices of `m`.
pub fn update_w_with_gram(
    m: &BlockMixing,
    gram: &Array3<f64>,
    y_windows: &[f64],
    w_init: ArrayView2<f64>,
    cfg: &SolverConfig,
) -> Result<WUpdateOutcome> {
    check_unit_rows(w_init, FEASIBILITY_TOL)?;
    let cross = mixing_adjoint(m, y_windows)?;
    if w_init.raw_dim() != cross.raw_dim() {
        return Err(Error::DimensionMismatch {
            context: "update_w",
            expected: cross.nrows(),
            actual: w_init.nrows(),
        });
    }
    let quad = Quadratic {
        gram,
        cross,
        y_sq: y_windows.iter().map(|v| v * v).sum(),
        beta: cfg.beta,
    };

    // Start exactly on the sphere.
    let mut w = project_rows_to_sphere(w_init)?;
    let mut f = quad.value(w.view());
    if !f.is_finite() {
        return Err(Error::NonFinite("separation objective"));
    }
    let objective_start = f;
    let mut candidate = Array2::zeros(w.raw_dim());
    for (t, mut row) in candidate.rows_mut().into_iter().enumerate() {
        let best = sphere_quadratic_minimum(gram.index_axis(Axis(0), t), quad.cross.row(t));
        row.assign(&ArrayView1::from(&best));
    }
    if candidate.iter().all(|v| v.is_finite()) {
        let fc = quad.value(candidate.view());
        if fc < f {
            w = candidate;
            f = fc;
        }
    }
    let mut grad = quad.gradient(w.view())?;
    let mut rgrad = tangent(w.view(), &grad);
    let mut step = {
        let n = frob(&rgrad);
        if n > 0.0 {
            1.0 / n
        } else {
            1.0
        }
    };

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let g_norm = frob(&grad);
        let rg_norm = frob(&rgrad);
        if rg_norm <= STATIONARITY_TOL * (1.0 + g_norm) {
            converged = true;
            break;
        }
        if iterations >= cfg.w_max_iters {
            break;
        }

        let rg_sq = rg_norm * rg_norm;
        let mut accepted = None;
        let mut s = step;
        for _ in 0..MAX_HALVINGS {
            let trial = project_rows_to_sphere((&w - &(s * &rgrad)).view())?;
            let ft = quad.value(trial.view());
            if ft.is_finite() && ft <= f - ARMIJO * s * rg_sq {
                accepted = Some((trial, ft, s));
                break;
            }
            s *= 0.5;
        }
        let Some((w_next, f_next, s_used)) = accepted else {
            // No decrease is representable at this precision.
            break;
        };
        iterations += 1;

        let grad_next = quad.gradient(w_next.view())?;
        let rgrad_next = tangent(w_next.view(), &grad_next);
        let dw = &w_next - &w;
        let dg = &rgrad_next - &rgrad;
        let curvature: f64 = dw.iter().zip(dg.iter()).map(|(a, b)| a * b).sum();
        let dw_sq: f64 = dw.iter().map(|v| v * v).sum();
        step = if curvature > 0.0 {
            (dw_sq / curvature).clamp(1e-12, 1e12)
        } else {
            (2.0 * s_used).min(1e12)
        };

        w = w_next;
        f = f_next;
        grad = grad_next;
        rgrad = rgrad_next;
    }

    if !f.is_finite() {
        return Err(Error::NonFinite("separation objective"));
    }
    check_unit_rows(w.view(), cfg.w_solver_tol)?;
    Ok(WUpdateOutcome {
        riemannian_grad_norm: frob(&rgrad),
        grad_norm: frob(&grad),
        w,
        iterations,
        converged,
        objective_start,
        objective_end: f,
    })
}

/// `||y - X w||^2 + beta ||D w||^2` evaluated through the operators.
pub fn separation_objective(
    m: &BlockMixing,
    y_windows: &[f64],
    w: ArrayView2<f64>,
    beta: f64,
) -> Result<f64> {
    let xw = crate::operators::mixing_forward(m, w)?;
    let data: f64 = y_windows.iter().zip(&xw).map(|(a, b)| (a - b).powi(2)).sum();
    Ok(data + beta * difference_energy(w))
}
