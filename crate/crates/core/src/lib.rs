//! Pulse extraction from RGB traces by time-varying separation with a
//! block-sparse time-frequency prior.
//!
//! The pulse `y` (one value per frame) and one separation vector per window
//! are estimated jointly by minimising
//!
//! ```text
//! ||G y - X w||^2 + sum_f alpha_f ||[F G y]_f|| + beta ||D w||^2,  ||w_t|| = 1
//! ```
//!
//! where `G` stacks the stride-one windows of `y`, `X` holds the windowed
//! colour channels, `F` is the per-window DFT and `D` differences adjacent
//! separation vectors. The pulse step runs ADMM; the separation step runs
//! projected gradient descent on the unit spheres.

pub mod cli;
pub mod config;
pub mod error;
pub mod metrics;
pub mod objective;
pub mod operators;
pub mod pipeline;
pub mod signal;
pub mod solver;
pub mod synth;

pub use config::{default_config, ConfigFile, SolverConfig};
pub use error::{Error, Result};
pub use objective::{evaluate_objective, SeparationState};
pub use pipeline::{extract, init_w, preprocess, ExtractionResult};
pub use signal::{RgbSignal, WindowPlan};
