//! Elastic-line calibration: peak positions on detector frames, the cubic
//! position-to-energy fit, and conversion of frames to energy spectra.

mod fit;
mod peak;
mod reduce;

pub use fit::{fit_dispersion, CalibrationPoint, CalibrationReport, DispersionFit};
pub use peak::{find_peak, PeakFit, MAX_FIT_ITERATIONS, MIN_TOTAL_COUNTS};
pub use reduce::frame_to_spectrum;
