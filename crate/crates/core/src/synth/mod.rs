//! Synthetic recordings, reference baselines and dense verification oracles.

pub mod baseline;
pub mod oracle;
pub mod scenario;

pub use baseline::{green_baseline, ideal_bandpass, pca_aggregate, standardize};
pub use oracle::dense_oracle_objective;
pub use scenario::{generate, generate_patches, SynthRecording, SynthScenario};
