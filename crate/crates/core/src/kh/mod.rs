//! Kramers-Heisenberg forward model: the discrete 2p->5d resonant channel,
//! the continuum ionization channel, XES cuts and full RIXS maps.

mod channels;
mod params;
mod simulate;

pub use channels::{continuum_channel, discrete_channel};
pub use params::{ContinuumDos, DosShape, ModelParams, CLASSICAL_ELECTRON_RADIUS_M, PHYSICAL_PREFACTOR};
pub use simulate::{simulate_rixs_map, simulate_rixs_map_with_workers, simulate_xes_cut};
