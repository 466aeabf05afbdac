//! Solver tunables and their on-disk key/value form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TAU: usize = 150;
pub const DEFAULT_BETA: f64 = 0.4;
pub const DEFAULT_GAMMA: f64 = 1.0;
pub const DEFAULT_OUTER_ITERS: usize = 15;
pub const DEFAULT_ADMM_ITERS: usize = 20;
pub const DEFAULT_PASSBAND_HZ: (f64, f64) = (0.7, 4.0);
pub const ALPHA_IN_BAND: f64 = 0.1;
pub const ALPHA_OUT_OF_BAND: f64 = 100.0;

/// Relative slack used when testing whether a bin centre lies on a passband edge.
const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Window length in samples.
    pub tau: usize,
    /// Weight of the separation-vector smoothness term.
    pub beta: f64,
    /// ADMM step parameter.
    pub gamma: f64,
    /// Per-bin block weights, length `tau`, mirror symmetric.
    pub alpha: Vec<f64>,
    pub passband_hz: (f64, f64),
    pub outer_iters: usize,
    pub admm_iters: usize,
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub w_solver_tol: f64,
    pub w_max_iters: usize,
    pub sr_threshold_bpm: f64,
    /// Stop ADMM once the primal residual drops below this value.
    pub admm_residual_stop: Option<f64>,
    /// Stop the outer loop once the relative objective change drops below this value.
    pub outer_rel_change_stop: Option<f64>,
}

/// Frequency in Hz represented by DFT bin `f` of a `tau`-point window.
pub fn bin_frequency_hz(f: usize, tau: usize, sample_rate_hz: f64) -> f64 {
    let k = f.min(tau - f);
    k as f64 * sample_rate_hz / tau as f64
}

/// Block weights: `in_band` for bins whose centre frequency falls in the closed
/// passband, `out_of_band` elsewhere.
pub fn passband_weights(
    tau: usize,
    sample_rate_hz: f64,
    passband_hz: (f64, f64),
    in_band: f64,
    out_of_band: f64,
) -> Vec<f64> {
    let (lo, hi) = passband_hz;
    (0..tau)
        .map(|f| {
            let hz = bin_frequency_hz(f, tau, sample_rate_hz);
            if hz >= lo * (1.0 - EDGE_EPS) && hz <= hi * (1.0 + EDGE_EPS) {
                in_band
            } else {
                out_of_band
            }
        })
        .collect()
}

/// Default configuration for a given frame rate and window size.
pub fn default_config(sample_rate_hz: f64, tau: usize) -> Result<SolverConfig> {
    if tau < 2 {
        return Err(Error::InvalidConfig(format!("tau must be >= 2, got {tau}")));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let cfg = SolverConfig {
        tau,
        beta: DEFAULT_BETA,
        gamma: DEFAULT_GAMMA,
        alpha: passband_weights(
            tau,
            sample_rate_hz,
            DEFAULT_PASSBAND_HZ,
            ALPHA_IN_BAND,
            ALPHA_OUT_OF_BAND,
        ),
        passband_hz: DEFAULT_PASSBAND_HZ,
        outer_iters: DEFAULT_OUTER_ITERS,
        admm_iters: DEFAULT_ADMM_ITERS,
        cg_tol: 1e-10,
        cg_max_iters: 200,
        w_solver_tol: 1e-8,
        w_max_iters: 500,
        sr_threshold_bpm: 5.0,
        admm_residual_stop: None,
        outer_rel_change_stop: None,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.tau < 2 {
            return bad(format!("tau must be >= 2, got {}", self.tau));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be nonnegative, got {}", self.beta));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if self.alpha.len() != self.tau {
            return bad(format!(
                "alpha has {} entries, expected tau = {}",
                self.alpha.len(),
                self.tau
            ));
        }
        if self.alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return bad("alpha weights must be positive and finite".into());
        }
        for f in 1..self.tau {
            if self.alpha[f] != self.alpha[self.tau - f] {
                return bad(format!("alpha is not mirror symmetric at bin {f}"));
            }
        }
        let (lo, hi) = self.passband_hz;
        if !(lo >= 0.0 && hi > lo) {
            return bad(format!("invalid passband [{lo}, {hi}]"));
        }
        if self.cg_max_iters == 0 || !(self.cg_tol > 0.0) {
            return bad("cg_tol and cg_max_iters must be positive".into());
        }
        if !(self.w_solver_tol > 0.0) || self.w_max_iters == 0 {
            return bad("w_solver_tol and w_max_iters must be positive".into());
        }
        if !(self.sr_threshold_bpm > 0.0) {
            return bad("sr_threshold_bpm must be positive".into());
        }
        Ok(())
    }
}

/// Flat key/value configuration file. Every key is optional; missing keys take
/// the defaults of [`default_config`].
///
/// ```toml
/// tau = 150
/// beta = 0.4
/// gamma = 1.0
/// passband_low_hz = 0.7
/// passband_high_hz = 4.0
/// alpha_in_band = 0.1
/// alpha_out_of_band = 100.0
/// outer_iters = 15
/// admm_iters = 20
/// ```
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub tau: Option<usize>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub passband_low_hz: Option<f64>,
    pub passband_high_hz: Option<f64>,
    pub alpha_in_band: Option<f64>,
    pub alpha_out_of_band: Option<f64>,
    /// Explicit per-bin weights; overrides the passband-derived ones.
    pub alpha: Option<Vec<f64>>,
    pub outer_iters: Option<usize>,
    pub admm_iters: Option<usize>,
    pub cg_tol: Option<f64>,
    pub cg_max_iters: Option<usize>,
    pub w_solver_tol: Option<f64>,
    pub w_max_iters: Option<usize>,
    pub sr_threshold_bpm: Option<f64>,
    pub admm_residual_stop: Option<f64>,
    pub outer_rel_change_stop: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn resolve(&self, sample_rate_hz: f64) -> Result<SolverConfig> {
        let tau = self.tau.unwrap_or(DEFAULT_TAU);
        let mut cfg = default_config(sample_rate_hz, tau)?;
        cfg.passband_hz = (
            self.passband_low_hz.unwrap_or(DEFAULT_PASSBAND_HZ.0),
            self.passband_high_hz.unwrap_or(DEFAULT_PASSBAND_HZ.1),
        );
        cfg.alpha = match &self.alpha {
            Some(a) => a.clone(),
            None => passband_weights(
                tau,
                sample_rate_hz,
                cfg.passband_hz,
                self.alpha_in_band.unwrap_or(ALPHA_IN_BAND),
                self.alpha_out_of_band.unwrap_or(ALPHA_OUT_OF_BAND),
            ),
        };
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        take!(
            beta,
            gamma,
            outer_iters,
            admm_iters,
            cg_tol,
            cg_max_iters,
            w_solver_tol,
            w_max_iters,
            sr_threshold_bpm
        );
        cfg.admm_residual_stop = self.admm_residual_stop;
        cfg.outer_rel_change_stop = self.outer_rel_change_stop;
        cfg.validate()?;
        Ok(cfg)
    }
}
