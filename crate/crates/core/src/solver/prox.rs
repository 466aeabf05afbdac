use crate::operators::TimeFreqBlocks;

/// Proximal operator of `gamma * sum_f alpha_f ||u_f||` (block soft-thresholding).
///
/// Each frequency block is scaled by `max(0, 1 - gamma * alpha_f / ||u_f||)`,
/// so its norm becomes `max(0, ||u_f|| - gamma * alpha_f)`.
pub fn prox_weighted_l21(u: &TimeFreqBlocks, gamma: f64, alpha: &[f64]) -> TimeFreqBlocks {
    let tau = u.tau();
    debug_assert_eq!(alpha.len(), tau);
    let factors: Vec<f64> = u
        .block_norms()
        .iter()
        .zip(alpha)
        .map(|(&norm, &a)| {
            let thresh = gamma * a;
            if norm > thresh {
                1.0 - thresh / norm
            } else {
                0.0
            }
        })
        .collect();
    let mut out = u.clone();
    for win in out.as_mut_slice().chunks_exact_mut(tau) {
        for (c, &k) in win.iter_mut().zip(&factors) {
            *c *= k;
        }
    }
    out
}
