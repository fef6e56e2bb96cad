//! Spectral extraction from RIXS maps: incident rebinning, TFY, HERFD,
//! XES cuts, energy-transfer maps, peak tracking and line-shape metrics.

mod extract;
mod metrics;
mod tracks;

pub use extract::{herfd, rebin_incident, tfy, to_energy_transfer, xes_cut};
pub use metrics::{centroid, fwhm, transfer_constant, white_line_centroid};
pub use tracks::{
    track_peaks, write_tracks_csv, PeakClass, PeakTracks, TrackRow, TrackedPeak, DEFAULT_MIN_REL_HEIGHT,
    FLUORESCENCE_MAX_SLOPE, RESONANT_MIN_SLOPE, SLOPE_HALF_WINDOW,
};
