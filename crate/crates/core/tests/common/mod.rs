#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rppg_core::operators::{Complex64, TimeFreqBlocks};
use rppg_core::RgbSignal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn random_rgb(rng: &mut ChaCha8Rng, len: usize) -> RgbSignal {
    let samples = Array2::from_shape_fn((len, 3), |_| rng.random_range(-1.0..1.0));
    RgbSignal::new(samples, 30.0).unwrap()
}

pub fn random_unit_rows(rng: &mut ChaCha8Rng, rows: usize) -> Array2<f64> {
    let mut w: Array2<f64> = Array2::from_shape_fn((rows, 3), |_| rng.random_range(-1.0..1.0));
    for mut row in w.rows_mut() {
        let n: f64 = row.dot(&row).sqrt();
        row /= n;
    }
    w
}

/// Random blocks with the conjugate symmetry of a real signal's spectrum.
pub fn random_symmetric_blocks(rng: &mut ChaCha8Rng, tau: usize, windows: usize) -> TimeFreqBlocks {
    let mut b = TimeFreqBlocks::zeros(tau, windows);
    for t in 0..windows {
        for f in 0..=tau / 2 {
            let mirror = (tau - f) % tau;
            let re = rng.random_range(-1.0..1.0);
            let im = if f == mirror { 0.0 } else { rng.random_range(-1.0..1.0) };
            b.set(f, t, Complex64::new(re, im));
            b.set(mirror, t, Complex64::new(re, -im));
        }
    }
    b
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn tone(hz: f64, len: usize, fs: f64) -> Vec<f64> {
    (0..len)
        .map(|i| (2.0 * std::f64::consts::PI * hz * i as f64 / fs).sin())
        .collect()
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

pub fn standardized(s: &[f64]) -> Vec<f64> {
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let sd = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    s.iter().map(|v| (v - mean) / sd).collect()
}

/// Leading principal component by power iteration on the correlation matrix.
pub fn power_iteration_pc(signals: &[Vec<f64>]) -> Vec<f64> {
    let z: Vec<Vec<f64>> = signals.iter().map(|s| standardized(s)).collect();
    let p = z.len();
    let c: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| dot(&z[i], &z[j])).collect()).collect();
    let mut v = vec![1.0; p];
    for _ in 0..10_000 {
        let next: Vec<f64> = (0..p).map(|i| dot(&c[i], &v)).collect();
        let n = norm(&next);
        v = next.iter().map(|x| x / n).collect();
    }
    (0..z[0].len()).map(|t| (0..p).map(|i| v[i] * z[i][t]).sum()).collect()
}
