mod common;

use common::*;
use rand_distr::{Distribution, StandardNormal};
use rppg_core::metrics::{
    abs_pearson, estimate_hr, mae_bpm, mae_bpm_with_exclusions, periodogram, snr_db, success_rate,
};

const FS: f64 = 30.0;

fn white(rng: &mut rand_chacha::ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Counts periodogram bins near `f0`/`2 f0` and elsewhere in 0.5 to 4 Hz.
fn bin_counts(n: usize, f0: f64) -> (usize, usize) {
    let (mut inside, mut outside) = (0, 0);
    for k in 0..=n / 2 {
        let f = k as f64 * FS / n as f64;
        if !(0.5..=4.0).contains(&f) {
            continue;
        }
        if (f - f0).abs() <= 0.1 || (f - 2.0 * f0).abs() <= 0.1 {
            inside += 1;
        } else {
            outside += 1;
        }
    }
    (inside, outside)
}

#[test]
fn white_noise_snr_matches_bin_ratio() {
    let mut rng = rng(31);
    let n = 900;
    let mut deviation = 0.0;
    for seed in 0..100 {
        let f0 = 0.7 + 0.012 * seed as f64;
        let (inside, outside) = bin_counts(n, f0);
        let expected = 10.0 * (inside as f64 / outside as f64).log10();
        let got = snr_db(&white(&mut rng, n), f0, FS).unwrap();
        deviation += got - expected;
    }
    let mean = deviation / 100.0;
    assert!(mean.abs() <= 3.0, "mean deviation {mean} dB");
}

#[test]
fn independent_noise_is_uncorrelated() {
    let mut rng = rng(32);
    let trials = 200;
    let below = (0..trials)
        .filter(|_| {
            let a = white(&mut rng, 10_000);
            let b = white(&mut rng, 10_000);
            abs_pearson(&a, &b).unwrap() <= 0.05
        })
        .count();
    assert!(below as f64 >= 0.99 * trials as f64, "{below}/{trials}");
}

#[test]
fn seventy_two_bpm_sinusoid() {
    let s = tone(1.2, 450, FS);
    let hr = estimate_hr(&s, FS).unwrap();
    assert!(hr.valid);
    assert!((hr.bpm - 72.0).abs() <= 0.5, "{}", hr.bpm);
    let flipped: Vec<f64> = s.iter().map(|v| -v).collect();
    assert!((estimate_hr(&flipped, FS).unwrap().bpm - 72.0).abs() <= 0.5);
    assert!(!estimate_hr(&[3.0; 450], FS).unwrap().valid);
}

#[test]
fn snr_tone_examples() {
    let s = tone(1.2, 450, FS);
    let clean = snr_db(&s, 1.2, FS).unwrap();
    assert!(clean >= 40.0, "{clean}");
    let flipped: Vec<f64> = s.iter().map(|v| -v).collect();
    assert_eq!(snr_db(&flipped, 1.2, FS).unwrap(), clean);

    let mut rng = rng(33);
    let noisy: Vec<f64> = s.iter().zip(white(&mut rng, 450)).map(|(a, b)| a + 0.3 * b).collect();
    let with_tone = snr_db(&noisy, 1.2, FS).unwrap();
    let extra: Vec<f64> = noisy.iter().zip(tone(3.1, 450, FS)).map(|(a, b)| a + 0.5 * b).collect();
    assert!(snr_db(&extra, 1.2, FS).unwrap() < with_tone);
}

#[test]
fn periodogram_parseval() {
    let mut rng = rng(34);
    let s = white(&mut rng, 256);
    let (freqs, power) = periodogram(&s, FS);
    assert_eq!(freqs.len(), 129);
    let two_sided: f64 = power[0] + power[128] + 2.0 * power[1..128].iter().sum::<f64>();
    let energy: f64 = s.iter().map(|v| v * v).sum();
    assert!((two_sided / 256.0 - energy).abs() <= 1e-9 * energy);
}

#[test]
fn error_and_success_examples() {
    assert_eq!(mae_bpm(&[70.0, 80.0], &[72.0, 76.0]).unwrap(), 3.0);
    assert_eq!(mae_bpm(&[70.0, 80.0], &[70.0, 80.0]).unwrap(), 0.0);
    assert_eq!(mae_bpm(&[61.5], &[64.0]).unwrap(), 2.5);
    assert_eq!(mae_bpm_with_exclusions(&[f64::NAN, 80.0], &[72.0, 76.0]).unwrap(), (4.0, 1));
    assert_eq!(success_rate(&[70.0, 90.0], &[72.0, 76.0], 5.0).unwrap(), 50.0);
    assert_eq!(success_rate(&[72.0, 76.0], &[72.0, 76.0], 5.0).unwrap(), 100.0);
    assert_eq!(success_rate(&[f64::NAN, f64::NAN], &[72.0, 76.0], 5.0).unwrap(), 0.0);
    let a = tone(1.0, 100, FS);
    let neg: Vec<f64> = a.iter().map(|v| -v).collect();
    assert!((abs_pearson(&a, &a).unwrap() - 1.0).abs() <= 1e-12);
    assert!((abs_pearson(&a, &neg).unwrap() - 1.0).abs() <= 1e-12);
}
