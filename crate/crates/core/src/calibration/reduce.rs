use crate::beamline::{DetectorFrame, DispersionCoeffs};
use crate::error::{Error, Result};
use crate::spectra::{interpolate_sorted, EnergyGrid, Spectrum};

/// Pixels up to this far outside the calibrated positions are still used.
const EDGE_ALLOWANCE_PX: f64 = 1.0;

/// Counts per eV on `target`: each pixel's counts divided by |dE/dpos| at
/// its centre, placed at its calibrated energy and interpolated linearly.
/// Pixels outside the calibrated range (plus one pixel) are ignored.
pub fn frame_to_spectrum(f: &DetectorFrame, d: &DispersionCoeffs, target: &EnergyGrid) -> Result<Spectrum> {
    let [lo, hi] = d.valid_range();
    let (lo, hi) = (lo - EDGE_ALLOWANCE_PX, hi + EDGE_ALLOWANCE_PX);
    let mut pts: Vec<(f64, f64)> = f
        .pixels
        .iter()
        .enumerate()
        .filter(|(i, _)| (*i as f64) >= lo && (*i as f64) <= hi)
        .map(|(i, &c)| {
            let x = i as f64;
            (d.energy(x), c as f64 / d.derivative(x).abs())
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::OutOfRange {
            what: "calibrated pixels".into(),
            value: pts.len() as f64,
            min: 2.0,
            max: f.pixels.len() as f64,
        });
    }
    if !d.is_increasing() {
        pts.reverse();
    }
    if pts.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::CalibrationFailed("dispersion is not monotone over the used pixels".into()));
    }
    let (emin, emax) = (pts[0].0, pts[pts.len() - 1].0);
    if target.last() < emin || target.start() > emax {
        return Err(Error::out_of_range("target grid", target.start(), emin, emax));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    Spectrum::new(*target, target.points().map(|e| interpolate_sorted(&xs, &ys, e)).collect())
}
