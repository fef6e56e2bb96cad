//! Energy grids, spectra, maps, lineshapes and the resampling/convolution
//! primitives shared by every other module.

mod convolve;
mod grid;
pub mod io;
mod lineshape;
mod map;
mod spectrum;

pub use convolve::{convolve, convolve_checked, Convolution, KERNEL_TAIL_FWHM};
pub(crate) use convolve::{convolve_slice, sampled_kernel};
pub use grid::{EnergyGrid, GridSpec};
pub use lineshape::{gaussian, lorentzian, LineShape};
pub(crate) use lineshape::lorentzian_profile;
pub use map::{EnergyTransferMap, RixsMap};
pub use spectrum::{resample, Spectrum};
pub(crate) use spectrum::{argmax, interpolate_sorted};
