mod common;

use common::*;
use ndarray::Array2;
use rand_distr::{Distribution, Normal};
use rppg_core::metrics::{dominant_frequency_hz, periodogram};
use rppg_core::synth::oracle::dense_oracle_objective;
use rppg_core::synth::{generate, SynthScenario};
use rppg_core::{default_config, evaluate_objective, extract, preprocess, RgbSignal, SeparationState};

fn argmax_frequency(signal: &[f64], fs: f64) -> f64 {
    let (freqs, power) = periodogram(signal, fs);
    let k = (1..power.len()).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap();
    freqs[k]
}

fn shared_tone_input(seed: u64) -> RgbSignal {
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, 1e-3).unwrap();
    let s = tone(1.2, 450, 30.0);
    let samples = Array2::from_shape_fn((450, 3), |(i, _)| s[i] + noise.sample(&mut rng));
    RgbSignal::new(samples, 30.0).unwrap()
}

#[test]
fn shared_tone_is_recovered_at_its_frequency() {
    let x = shared_tone_input(41);
    let cfg = default_config(30.0, 150).unwrap();
    let out = extract(&x, &cfg).unwrap();
    assert_eq!(out.y_full.len(), 450);
    let bin = 30.0 / 450.0;
    let f = argmax_frequency(&out.y_full, 30.0);
    assert!((f - 1.2).abs() <= bin + 1e-9, "dominant {f} Hz");
}

#[test]
fn default_run_shape_and_determinism() {
    let x = shared_tone_input(42);
    let cfg = default_config(30.0, 150).unwrap();
    let a = extract(&x, &cfg).unwrap();
    let b = extract(&x, &cfg).unwrap();
    assert_eq!(a.y_full, b.y_full);
    assert_eq!(a.w, b.w);
    assert_eq!(a.objective_trace.len(), 15);
    assert_eq!(a.diagnostics.len(), 15);
    for d in &a.diagnostics {
        assert_eq!(d.admm_primal_residuals.len(), 20);
        assert!(d.admm_max_imag_leakage <= 1e-10);
    }
    assert_eq!(a.w.dim(), (301, 3));
    for row in a.w.rows() {
        assert!((row.dot(&row).sqrt() - 1.0).abs() <= cfg.w_solver_tol);
    }
}

#[test]
fn trace_matches_independent_objective() {
    let mut s = SynthScenario::random(7);
    s.duration_s = 8.0;
    let rec = generate(&s).unwrap();
    let cfg = default_config(s.sample_rate_hz, 60).unwrap();
    let out = extract(&rec.rgb, &cfg).unwrap();
    let state = SeparationState::new(out.w.clone(), out.y_full.clone());
    let fast = evaluate_objective(&rec.rgb, &state, &cfg).unwrap();
    assert!((fast - out.objective_trace.last().unwrap()).abs() <= 1e-9 * fast.max(1.0));
}

#[test]
fn objective_trace_is_monotone_on_short_scenarios() {
    for seed in 0..4 {
        let mut s = SynthScenario::random(100 + seed);
        s.duration_s = 6.0;
        let rec = generate(&s).unwrap();
        let cfg = default_config(s.sample_rate_hz, 45).unwrap();
        let out = extract(&rec.rgb, &cfg).unwrap();
        let mut prev = out.initial_objective;
        for &v in &out.objective_trace {
            assert!(v <= prev + 1e-6, "seed {seed}: {v} after {prev}");
            prev = v;
        }
    }
}

#[test]
fn preprocess_examples() {
    let x = RgbSignal::new(Array2::zeros((450, 3)), 30.0).unwrap();
    let (m, plan) = preprocess(&x, 150).unwrap();
    assert_eq!((plan.window_count(), m.window_count()), (301, 301));

    let mut rng = rng(43);
    let mut samples = Array2::from_shape_fn((40, 3), |_| rand::Rng::random_range(&mut rng, -1.0..1.0));
    samples.column_mut(2).fill(4.0);
    let (m, _) = preprocess(&RgbSignal::new(samples, 30.0).unwrap(), 10).unwrap();
    for t in 0..m.window_count() {
        assert!(m.window(t).column(2).iter().all(|v| v.abs() <= 1e-15));
    }
}

#[test]
fn single_window_objective_collapses() {
    let mut rng = rng(44);
    let tau = 12;
    let x = random_rgb(&mut rng, tau);
    let cfg = default_config(30.0, tau).unwrap();
    let w = random_unit_rows(&mut rng, 1);
    let y = uniform_vec(&mut rng, tau);
    let (m, _) = preprocess(&x, tau).unwrap();
    let xw = m.window(0).dot(&w.row(0));
    let data: f64 = y.iter().zip(xw.iter()).map(|(a, b)| (a - b).powi(2)).sum();
    let mut sparsity = 0.0;
    for (f, a) in cfg.alpha.iter().enumerate() {
        let (mut re, mut im) = (0.0, 0.0);
        for (n, v) in y.iter().enumerate() {
            let ang = -2.0 * std::f64::consts::PI * (f * n) as f64 / tau as f64;
            re += v * ang.cos();
            im += v * ang.sin();
        }
        sparsity += a * (re * re + im * im).sqrt() / (tau as f64).sqrt();
    }
    let state = SeparationState::new(w, y);
    let dense = dense_oracle_objective(&x, &state, &cfg).unwrap();
    assert!((dense - (data + sparsity)).abs() <= 1e-10, "{dense} vs {}", data + sparsity);
    let zero = SeparationState::new(Array2::from_shape_vec((1, 3), vec![0.0, 1.0, 0.0]).unwrap(), vec![0.0; tau]);
    assert_eq!(dense_oracle_objective(&RgbSignal::new(Array2::zeros((tau, 3)), 30.0).unwrap(), &zero, &cfg).unwrap(), 0.0);
}

#[test]
fn synthetic_pulse_peaks_at_mean_rate() {
    let s = SynthScenario::desk_standard();
    let rec = generate(&s).unwrap();
    let bin = s.sample_rate_hz / rec.pulse.len() as f64;
    let f = dominant_frequency_hz(&rec.pulse, s.sample_rate_hz, (0.5, 4.0)).unwrap();
    assert!((f - rec.mean_hr_bpm() / 60.0).abs() <= bin + 1e-9);
    let again = generate(&s).unwrap();
    assert_eq!(rec.rgb.samples(), again.rgb.samples());
    assert_eq!(rec.pulse, again.pulse);
}
