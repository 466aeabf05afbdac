use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final `||A x - b||`.
    pub residual_norm: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradient for a symmetric positive definite `apply_a`, started from zero.
///
/// Stops when `||A x - b|| <= tol * ||b||` or after `max_iters` iterations.
pub fn cg_solve<F>(apply_a: F, b: &[f64], tol: f64, max_iters: usize) -> Result<CgOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    pcg_solve(apply_a, b, None, tol, max_iters)
}

/// Conjugate gradient with an optional diagonal (Jacobi) preconditioner.
///
/// `precond_diag` holds the diagonal of the preconditioning matrix `M`; each
/// iteration applies `M^{-1}` to the residual.
pub fn pcg_solve<F>(
    mut apply_a: F,
    b: &[f64],
    precond_diag: Option<&[f64]>,
    tol: f64,
    max_iters: usize,
) -> Result<CgOutcome>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    let n = b.len();
    if let Some(m) = precond_diag {
        if m.len() != n {
            return Err(Error::DimensionMismatch {
                context: "pcg_solve preconditioner",
                expected: n,
                actual: m.len(),
            });
        }
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence("non-finite right-hand side".into()));
    }
    let precondition = |r: &[f64]| -> Vec<f64> {
        match precond_diag {
            Some(m) => r.iter().zip(m).map(|(ri, mi)| ri / mi).collect(),
            None => r.to_vec(),
        }
    };

    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            x,
            iterations: 0,
            residual_norm: 0.0,
            converged: true,
        });
    }
    let target = tol * b_norm;
    let mut r = b.to_vec();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut r_norm = b_norm;

    for it in 1..=max_iters {
        let ap = apply_a(&p)?;
        let pap = dot(&p, &ap);
        if !pap.is_finite() || pap <= 0.0 {
            return Err(Error::Divergence(format!(
                "curvature p^T A p = {pap:e} at iteration {it}"
            )));
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        r_norm = dot(&r, &r).sqrt();
        if !r_norm.is_finite() {
            return Err(Error::Divergence(format!("residual is {r_norm} at iteration {it}")));
        }
        if r_norm <= target {
            return Ok(CgOutcome {
                x,
                iterations: it,
                residual_norm: r_norm,
                converged: true,
            });
        }
        z = precondition(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(CgOutcome {
        x,
        iterations: max_iters,
        residual_norm: r_norm,
        converged: false,
    })
}
