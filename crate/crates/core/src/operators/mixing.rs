use ndarray::{s, Array2, Array3, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::signal::{RgbSignal, WindowPlan};

/// Block-diagonal mixing operator `diag(X_1, ..., X_T)`.
///
/// Window `t` is a `tau x C` slice of the input trace. Mapping a stack of
/// separation vectors through it gives the stacked windowed pulse estimate.
#[derive(Debug, Clone)]
pub struct BlockMixing {
    /// Shape `(T, tau, C)`.
    windows: Array3<f64>,
}

impl BlockMixing {
    pub fn from_windows(windows: Array3<f64>) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self { windows })
    }

    /// Raw windows of `x`, optionally with each window's per-channel mean removed.
    pub fn from_signal(x: &RgbSignal, plan: &WindowPlan, remove_mean: bool) -> Result<Self> {
        if x.len() != plan.signal_length() {
            return Err(Error::DimensionMismatch {
                context: "BlockMixing::from_signal",
                expected: plan.signal_length(),
                actual: x.len(),
            });
        }
        let tau = plan.window_size();
        let c = x.channels();
        let mut windows = Array3::zeros((plan.window_count(), tau, c));
        for (t, mut win) in windows.axis_iter_mut(Axis(0)).enumerate() {
            win.assign(&x.samples().slice(s![t..t + tau, ..]));
            if remove_mean {
                for mut col in win.columns_mut() {
                    let mean = col.sum() / tau as f64;
                    col -= mean;
                }
            }
        }
        Ok(Self { windows })
    }

    pub fn window_count(&self) -> usize {
        self.windows.len_of(Axis(0))
    }

    pub fn window_size(&self) -> usize {
        self.windows.len_of(Axis(1))
    }

    pub fn channels(&self) -> usize {
        self.windows.len_of(Axis(2))
    }

    pub fn window(&self, t: usize) -> ArrayView2<'_, f64> {
        self.windows.index_axis(Axis(0), t)
    }

    pub fn windows(&self) -> &Array3<f64> {
        &self.windows
    }

    /// Per-window Gram matrices `X_t^T X_t`, shape `(T, C, C)`.
    pub fn gram(&self) -> Array3<f64> {
        let c = self.channels();
        let mut out = Array3::zeros((self.window_count(), c, c));
        for (t, mut g) in out.axis_iter_mut(Axis(0)).enumerate() {
            let x = self.window(t);
            g.assign(&x.t().dot(&x));
        }
        out
    }

    fn check_w(&self, w: &ArrayView2<f64>, context: &'static str) -> Result<()> {
        if w.nrows() != self.window_count() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.window_count(),
                actual: w.nrows(),
            });
        }
        if w.ncols() != self.channels() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.channels(),
                actual: w.ncols(),
            });
        }
        Ok(())
    }
}

/// Segment `t` of the output is `X_t w_t`.
pub fn mixing_forward(m: &BlockMixing, w: ArrayView2<f64>) -> Result<Vec<f64>> {
    m.check_w(&w, "mixing_forward")?;
    let tau = m.window_size();
    let mut out = Vec::with_capacity(tau * m.window_count());
    for (t, wt) in w.rows().into_iter().enumerate() {
        out.extend(m.window(t).dot(&wt).iter().copied());
    }
    Ok(out)
}

/// Row `t` of the output is `X_t^T r_t`.
pub fn mixing_adjoint(m: &BlockMixing, r: &[f64]) -> Result<Array2<f64>> {
    let tau = m.window_size();
    if r.len() != tau * m.window_count() {
        return Err(Error::DimensionMismatch {
            context: "mixing_adjoint",
            expected: tau * m.window_count(),
            actual: r.len(),
        });
    }
    let mut out = Array2::zeros((m.window_count(), m.channels()));
    for (t, (mut row, seg)) in out.rows_mut().into_iter().zip(r.chunks_exact(tau)).enumerate() {
        let x = m.window(t);
        for (j, &v) in seg.iter().enumerate() {
            row.scaled_add(v, &x.row(j));
        }
    }
    Ok(out)
}
