//! Forward simulation and analysis of core-to-core resonant inelastic X-ray
//! scattering (RIXS) near the W L3 edge.
//!
//! The crate covers the whole synthetic-beamline chain:
//!
//! * [`spectra`]: grids, spectra, maps, lineshapes, convolution, resampling, file formats
//! * [`kh`]: Kramers-Heisenberg discrete and continuum channels, XES cuts and RIXS maps
//! * [`beamline`]: dispersive-spectrometer detector frames with Poisson noise, elastic scans
//! * [`calibration`]: peak fitting, cubic position-to-energy calibration, frame reduction
//! * [`analysis`]: TFY, HERFD, XES cuts, energy-transfer maps, peak tracking
//! * [`heros`]: off-resonant emission forward model and XAS reconstruction

pub mod analysis;
pub mod beamline;
pub mod calibration;
pub mod error;
pub mod heros;
pub mod kh;
pub mod spectra;

pub use error::{Error, Result, Violation};
pub use spectra::{EnergyGrid, EnergyTransferMap, LineShape, RixsMap, Spectrum};
