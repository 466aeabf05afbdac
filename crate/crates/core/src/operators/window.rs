use crate::error::{Error, Result};
use crate::signal::WindowPlan;

/// Stacks every stride-one window of `y_full` into one vector of length `tau * T`.
pub fn window_forward(y_full: &[f64], plan: &WindowPlan) -> Result<Vec<f64>> {
    if y_full.len() != plan.signal_length() {
        return Err(Error::DimensionMismatch {
            context: "window_forward",
            expected: plan.signal_length(),
            actual: y_full.len(),
        });
    }
    let tau = plan.window_size();
    let mut out = Vec::with_capacity(plan.stacked_len());
    for t in 0..plan.window_count() {
        out.extend_from_slice(&y_full[t..t + tau]);
    }
    Ok(out)
}

/// Overlap-add: sample `i` receives the sum of every window entry that maps to it.
pub fn window_adjoint(y_windows: &[f64], plan: &WindowPlan) -> Result<Vec<f64>> {
    if y_windows.len() != plan.stacked_len() {
        return Err(Error::DimensionMismatch {
            context: "window_adjoint",
            expected: plan.stacked_len(),
            actual: y_windows.len(),
        });
    }
    let tau = plan.window_size();
    let mut out = vec![0.0; plan.signal_length()];
    for (t, seg) in y_windows.chunks_exact(tau).enumerate() {
        for (o, v) in out[t..t + tau].iter_mut().zip(seg) {
            *o += v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_forward() {
        let plan = WindowPlan::new(3, 2).unwrap();
        assert_eq!(
            window_forward(&[1.0, 2.0, 3.0], &plan).unwrap(),
            vec![1.0, 2.0, 2.0, 3.0]
        );
    }

    #[test]
    fn constant_signal_copies() {
        let plan = WindowPlan::new(11, 4).unwrap();
        let out = window_forward(&[2.5; 11], &plan).unwrap();
        assert_eq!(out.len(), 4 * 8);
        assert!(out.iter().all(|&v| v == 2.5));
    }

    #[test]
    fn small_adjoint_is_overlap_count() {
        let plan = WindowPlan::new(3, 2).unwrap();
        assert_eq!(window_adjoint(&[1.0; 4], &plan).unwrap(), vec![1.0, 2.0, 1.0]);
    }

    #[test]
    fn gram_is_overlap_diagonal() {
        let plan = WindowPlan::new(17, 5).unwrap();
        let y: Vec<f64> = (0..17).map(|i| (i as f64 * 0.37).sin()).collect();
        let back = window_adjoint(&window_forward(&y, &plan).unwrap(), &plan).unwrap();
        for i in 0..17 {
            assert!((back[i] - plan.overlap_counts()[i] as f64 * y[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn length_mismatch() {
        let plan = WindowPlan::new(5, 2).unwrap();
        assert!(window_forward(&[0.0; 4], &plan).is_err());
        assert!(window_adjoint(&[0.0; 7], &plan).is_err());
    }
}
