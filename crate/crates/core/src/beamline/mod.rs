//! Dispersive spectrometer model: position-to-energy dispersion, detector
//! frames with Poisson noise, and elastic-line calibration scans.

mod detector;
mod dispersion;
pub mod io;
mod rng;

pub use detector::{
    elastic_scan, even_energies, expected_counts, noiseless_frame, render_frame, Detector, DetectorFrame, FrameMeta,
    ScanSettings,
};
pub use dispersion::DispersionCoeffs;
pub use rng::{child_seed, PortableRng};
