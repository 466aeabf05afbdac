//! Matrix-free linear operators of the separation model, each with its adjoint.

mod difference;
mod mixing;
mod stft;
mod window;

pub use difference::{difference_adjoint, difference_energy, difference_forward};
pub use mixing::{mixing_adjoint, mixing_forward, BlockMixing};
pub use stft::{stft_adjoint, stft_forward, TimeFreqBlocks, WindowDft, SYMMETRY_TOL};
pub use window::{window_adjoint, window_forward};

pub use rustfft::num_complex::Complex64;
