use ndarray::{s, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Row `t` of the output is `w_t - w_{t+1}`. A single row yields an empty matrix.
pub fn difference_forward(w: ArrayView2<f64>) -> Array2<f64> {
    let t = w.nrows();
    if t < 2 {
        return Array2::zeros((0, w.ncols()));
    }
    &w.slice(s![..t - 1, ..]) - &w.slice(s![1.., ..])
}

/// Transpose of [`difference_forward`]; maps `(T-1) x C` back to `T x C`.
pub fn difference_adjoint(d: ArrayView2<f64>, windows: usize) -> Result<Array2<f64>> {
    let expected = windows.saturating_sub(1);
    if d.nrows() != expected {
        return Err(Error::DimensionMismatch {
            context: "difference_adjoint",
            expected,
            actual: d.nrows(),
        });
    }
    let mut out = Array2::zeros((windows, d.ncols()));
    if windows >= 2 {
        let mut head = out.slice_mut(s![..windows - 1, ..]);
        head += &d;
        let mut tail = out.slice_mut(s![1.., ..]);
        tail -= &d;
    }
    Ok(out)
}

/// `||D w||^2`, the squared smoothness penalty before weighting.
pub fn difference_energy(w: ArrayView2<f64>) -> f64 {
    w.rows()
        .into_iter()
        .zip(w.rows().into_iter().skip(1))
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>())
        .sum()
}
