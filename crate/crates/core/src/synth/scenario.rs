//! Synthetic RGB traces with a known pulse.
//!
//! The pulse is a harmonic series whose phase integrates a piecewise-linear
//! heart-rate trajectory. It enters the colour channels along a slowly
//! rotating unit vector, on top of slow illumination drift and white noise.

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::RgbSignal;

const MIN_BPM: f64 = 42.0;
const MAX_BPM: f64 = 240.0;
/// Illumination drift components are drawn below this frequency.
pub const DRIFT_MAX_HZ: f64 = 0.3;
const DRIFT_MIN_HZ: f64 = 0.03;
const DRIFT_COMPONENTS: usize = 3;

const STREAM_PULSE: u64 = 0;
const STREAM_DRIFT: u64 = 1;
const STREAM_PATCH: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthScenario {
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Control points, evenly spaced over the recording, linearly interpolated.
    pub hr_trajectory_bpm: Vec<f64>,
    /// Relative amplitudes of harmonics 1..=H.
    pub pulse_harmonic_amplitudes: Vec<f64>,
    /// Unit pulse colour directions, evenly spaced over the recording,
    /// spherically interpolated.
    pub mixing_trajectory: Vec<[f64; 3]>,
    /// Peak amplitude of the illumination drift.
    pub illumination_drift_amp: f64,
    /// Colour direction along which the illumination drift acts.
    #[serde(default = "default_drift_direction")]
    pub drift_direction: [f64; 3],
    pub noise_std: f64,
    pub seed: u64,
}

fn default_drift_direction() -> [f64; 3] {
    normalize([0.8, 0.5, 0.33])
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = dot(v, v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Rotates unit vector `from` by `degrees` towards `toward` (in their common plane).
fn rotate_towards(from: [f64; 3], toward: [f64; 3], degrees: f64) -> [f64; 3] {
    let proj = dot(from, toward);
    let u = normalize([
        toward[0] - proj * from[0],
        toward[1] - proj * from[1],
        toward[2] - proj * from[2],
    ]);
    let (s, c) = degrees.to_radians().sin_cos();
    normalize([
        c * from[0] + s * u[0],
        c * from[1] + s * u[1],
        c * from[2] + s * u[2],
    ])
}

/// Spherical linear interpolation between unit vectors.
fn slerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    let cos = dot(a, b).clamp(-1.0, 1.0);
    let theta = cos.acos();
    if theta < 1e-12 {
        return a;
    }
    let s = theta.sin();
    let (wa, wb) = (((1.0 - t) * theta).sin() / s, (t * theta).sin() / s);
    normalize([
        wa * a[0] + wb * b[0],
        wa * a[1] + wb * b[1],
        wa * a[2] + wb * b[2],
    ])
}

/// Value of evenly spaced control points at relative position `u` in `[0, 1]`.
fn control_position(count: usize, u: f64) -> (usize, f64) {
    if count == 1 {
        return (0, 0.0);
    }
    let pos = u.clamp(0.0, 1.0) * (count - 1) as f64;
    let i = (pos.floor() as usize).min(count - 2);
    (i, pos - i as f64)
}

impl SynthScenario {
    /// Reference scenario: 15 s at 30 fps, heart rate ramping 66 to 78 bpm,
    /// a pulse colour rotating 20 degrees, drift three times and noise once
    /// the fundamental pulse amplitude.
    pub fn desk_standard() -> Self {
        let start = normalize([0.33, 0.77, 0.53]);
        let end = rotate_towards(start, [1.0, 0.0, 0.0], 20.0);
        Self {
            duration_s: 15.0,
            sample_rate_hz: 30.0,
            hr_trajectory_bpm: vec![66.0, 78.0],
            pulse_harmonic_amplitudes: vec![1.0, 0.4, 0.15],
            mixing_trajectory: vec![start, end],
            illumination_drift_amp: 3.0,
            drift_direction: default_drift_direction(),
            noise_std: 1.0,
            seed: 0,
        }
    }

    /// Randomised variant for robustness sweeps.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5eed);
        let hr0 = rng.random_range(55.0..100.0);
        let hr1 = (hr0 + rng.random_range(-10.0..10.0_f64)).clamp(MIN_BPM, MAX_BPM);
        let start = normalize([
            rng.random_range(0.1..0.6),
            rng.random_range(0.5..1.0),
            rng.random_range(0.1..0.7),
        ]);
        let toward = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let end = rotate_towards(start, toward, rng.random_range(0.0..30.0));
        Self {
            duration_s: 15.0,
            sample_rate_hz: 30.0,
            hr_trajectory_bpm: vec![hr0, hr1],
            pulse_harmonic_amplitudes: vec![1.0, rng.random_range(0.0..0.6), rng.random_range(0.0..0.3)],
            mixing_trajectory: vec![start, end],
            illumination_drift_amp: rng.random_range(0.0..4.0),
            drift_direction: normalize([
                rng.random_range(0.5..1.0),
                rng.random_range(0.3..0.8),
                rng.random_range(0.2..0.6),
            ]),
            noise_std: rng.random_range(0.2..2.0),
            seed,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let s: Self = toml::from_str(text).map_err(|e| Error::InvalidInput(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn len(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return bad(format!("sample rate {} must be positive", self.sample_rate_hz));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) || self.len() < 2 {
            return bad(format!("duration {} s is too short", self.duration_s));
        }
        if self.hr_trajectory_bpm.is_empty()
            || self
                .hr_trajectory_bpm
                .iter()
                .any(|&h| !(MIN_BPM..=MAX_BPM).contains(&h))
        {
            return bad(format!(
                "heart-rate control points must lie in [{MIN_BPM}, {MAX_BPM}] bpm"
            ));
        }
        if self.pulse_harmonic_amplitudes.is_empty()
            || self
                .pulse_harmonic_amplitudes
                .iter()
                .any(|&a| !(a >= 0.0 && a.is_finite()))
        {
            return bad("harmonic amplitudes must be nonnegative".into());
        }
        if self.mixing_trajectory.is_empty() {
            return bad("mixing trajectory needs at least one vector".into());
        }
        for (i, m) in self
            .mixing_trajectory
            .iter()
            .chain(std::iter::once(&self.drift_direction))
            .enumerate()
        {
            if (dot(*m, *m).sqrt() - 1.0).abs() > 1e-6 {
                return bad(format!("colour direction {i} is not unit norm"));
            }
        }
        if !(self.illumination_drift_amp >= 0.0 && self.noise_std >= 0.0) {
            return bad("drift amplitude and noise level must be nonnegative".into());
        }
        Ok(())
    }

    fn hr_at(&self, u: f64) -> f64 {
        let (i, frac) = control_position(self.hr_trajectory_bpm.len(), u);
        match self.hr_trajectory_bpm.get(i + 1) {
            Some(next) => self.hr_trajectory_bpm[i] * (1.0 - frac) + next * frac,
            None => self.hr_trajectory_bpm[i],
        }
    }

    fn mixing_at(&self, u: f64) -> [f64; 3] {
        let (i, frac) = control_position(self.mixing_trajectory.len(), u);
        match self.mixing_trajectory.get(i + 1) {
            Some(next) => slerp(self.mixing_trajectory[i], *next, frac),
            None => self.mixing_trajectory[i],
        }
    }
}

/// Generated recording with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecording {
    pub rgb: RgbSignal,
    /// Clean pulse waveform.
    pub pulse: Vec<f64>,
    /// Instantaneous heart rate per frame.
    pub hr_bpm: Vec<f64>,
}

impl SynthRecording {
    pub fn mean_hr_bpm(&self) -> f64 {
        self.hr_bpm.iter().sum::<f64>() / self.hr_bpm.len() as f64
    }
}

fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Shared {
    pulse: Vec<f64>,
    hr: Vec<f64>,
    drift: Vec<f64>,
}

fn shared_components(s: &SynthScenario) -> Result<Shared> {
    s.validate()?;
    let n = s.len();
    let fs = s.sample_rate_hz;
    let u = |i: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };

    let mut rng = rng_stream(s.seed, STREAM_PULSE);
    let mut phase: f64 = rng.random_range(0.0..1.0);
    let mut pulse = Vec::with_capacity(n);
    let mut hr = Vec::with_capacity(n);
    for i in 0..n {
        let h = s.hr_at(u(i));
        hr.push(h);
        pulse.push(
            s.pulse_harmonic_amplitudes
                .iter()
                .enumerate()
                .map(|(k, a)| a * (2.0 * PI * (k + 1) as f64 * phase).sin())
                .sum(),
        );
        phase += h / 60.0 / fs;
    }

    let mut drift = vec![0.0; n];
    if s.illumination_drift_amp > 0.0 {
        let mut rng = rng_stream(s.seed, STREAM_DRIFT);
        let comps: Vec<(f64, f64, f64)> = (0..DRIFT_COMPONENTS)
            .map(|_| {
                (
                    rng.random_range(0.2..1.0),
                    rng.random_range(DRIFT_MIN_HZ..DRIFT_MAX_HZ),
                    rng.random_range(0.0..2.0 * PI),
                )
            })
            .collect();
        for (i, d) in drift.iter_mut().enumerate() {
            let t = i as f64 / fs;
            *d = comps
                .iter()
                .map(|(a, f, p)| a * (2.0 * PI * f * t + p).sin())
                .sum();
        }
        let peak = drift.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak > 0.0 {
            for d in &mut drift {
                *d *= s.illumination_drift_amp / peak;
            }
        }
    }
    Ok(Shared { pulse, hr, drift })
}

fn render_patch(s: &SynthScenario, shared: &Shared, pulse_gain: f64, noise_stream: u64) -> Result<RgbSignal> {
    let n = s.len();
    let mut rng = rng_stream(s.seed, noise_stream);
    let mut samples = Array2::zeros((n, 3));
    for i in 0..n {
        let u = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
        let m = s.mixing_at(u);
        for c in 0..3 {
            let noise = if s.noise_std > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                s.noise_std * z
            } else {
                0.0
            };
            samples[[i, c]] =
                pulse_gain * shared.pulse[i] * m[c] + shared.drift[i] * s.drift_direction[c] + noise;
        }
    }
    RgbSignal::new(samples, s.sample_rate_hz)
}

/// Generates one recording from `s`. Deterministic in `s.seed`.
pub fn generate(s: &SynthScenario) -> Result<SynthRecording> {
    let shared = shared_components(s)?;
    let rgb = render_patch(s, &shared, 1.0, STREAM_PATCH)?;
    Ok(SynthRecording {
        rgb,
        pulse: shared.pulse,
        hr_bpm: shared.hr,
    })
}

/// Generates `count` patches sharing one pulse and illumination. Patch 0 is
/// identical to [`generate`]; later patches get their own pulse gain in
/// `[0.6, 1.4)` and independent noise.
pub fn generate_patches(s: &SynthScenario, count: usize) -> Result<(Vec<RgbSignal>, SynthRecording)> {
    if count == 0 {
        return Err(Error::InvalidInput("patch count must be positive".into()));
    }
    let shared = shared_components(s)?;
    let mut gains = rng_stream(s.seed, STREAM_PATCH - 1);
    let mut patches = Vec::with_capacity(count);
    for p in 0..count {
        let gain = if p == 0 { 1.0 } else { gains.random_range(0.6..1.4) };
        patches.push(render_patch(s, &shared, gain, STREAM_PATCH + p as u64)?);
    }
    let recording = SynthRecording {
        rgb: patches[0].clone(),
        pulse: shared.pulse,
        hr_bpm: shared.hr,
    };
    Ok((patches, recording))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::dominant_frequency_hz;

    #[test]
    fn clean_green_harmonic_series() {
        let s = SynthScenario {
            hr_trajectory_bpm: vec![72.0],
            mixing_trajectory: vec![[0.0, 1.0, 0.0]],
            illumination_drift_amp: 0.0,
            noise_std: 0.0,
            ..SynthScenario::desk_standard()
        };
        let rec = generate(&s).unwrap();
        let x = rec.rgb.samples();
        for i in 0..rec.pulse.len() {
            assert_eq!(x[[i, 0]], 0.0);
            assert_eq!(x[[i, 2]], 0.0);
            assert_eq!(x[[i, 1]], rec.pulse[i]);
        }
        // Period of 25 frames at 72 bpm and 30 fps.
        for i in 0..rec.pulse.len() - 25 {
            assert!((rec.pulse[i] - rec.pulse[i + 25]).abs() < 1e-9);
        }
    }

    #[test]
    fn dominant_bin_tracks_mean_rate() {
        let s = SynthScenario::desk_standard();
        let rec = generate(&s).unwrap();
        let f = dominant_frequency_hz(&rec.pulse, 30.0, (0.5, 4.0)).unwrap();
        let bin = 30.0 / rec.pulse.len() as f64;
        assert!((f - rec.mean_hr_bpm() / 60.0).abs() <= bin + 1e-12, "{f}");
    }

    #[test]
    fn deterministic_per_seed() {
        let s = SynthScenario::desk_standard();
        assert_eq!(generate(&s).unwrap(), generate(&s).unwrap());
        let other = SynthScenario { seed: 1, ..s.clone() };
        assert_ne!(generate(&s).unwrap().rgb, generate(&other).unwrap().rgb);
    }

    #[test]
    fn drift_is_bounded_and_slow() {
        let s = SynthScenario {
            noise_std: 0.0,
            pulse_harmonic_amplitudes: vec![0.0],
            ..SynthScenario::desk_standard()
        };
        let rec = generate(&s).unwrap();
        let g = rec.rgb.channel(0).to_vec();
        let peak = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 3.0 * s.drift_direction[0]).abs() < 1e-9);
        let f = dominant_frequency_hz(&g, 30.0, (0.0, 15.0)).unwrap();
        assert!(f < DRIFT_MAX_HZ);
    }

    #[test]
    fn scenario_file_round_trip_and_validation() {
        let s = SynthScenario::desk_standard();
        assert_eq!(SynthScenario::parse(&s.to_toml()).unwrap(), s);
        let bad = SynthScenario {
            hr_trajectory_bpm: vec![30.0],
            ..s.clone()
        };
        assert!(SynthScenario::parse(&bad.to_toml()).is_err());
        let bad = SynthScenario {
            mixing_trajectory: vec![[1.0, 1.0, 0.0]],
            ..s
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn desk_standard_rotation_is_twenty_degrees() {
        let s = SynthScenario::desk_standard();
        let angle = dot(s.mixing_trajectory[0], s.mixing_trajectory[1]).acos().to_degrees();
        assert!((angle - 20.0).abs() < 1e-9);
    }

    #[test]
    fn patches_share_pulse() {
        let s = SynthScenario::desk_standard();
        let (patches, rec) = generate_patches(&s, 3).unwrap();
        assert_eq!(patches.len(), 3);
        assert_eq!(patches[0], generate(&s).unwrap().rgb);
        assert_eq!(rec.pulse, generate(&s).unwrap().pulse);
        assert_ne!(patches[1], patches[2]);
    }
}
