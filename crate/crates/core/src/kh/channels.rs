use crate::error::{Error, Result};
use crate::spectra::lorentzian_profile;

use super::params::ModelParams;

fn check_photons(w1: f64, w2: f64) -> Result<()> {
    if !(w1 > 0.0 && w1.is_finite()) {
        return Err(Error::invalid("w1", format!("incident energy must be > 0, got {w1}")));
    }
    if !(w2 > 0.0 && w2.is_finite()) {
        return Err(Error::invalid("w2", format!("emission energy must be > 0, got {w2}")));
    }
    Ok(())
}

/// Resonant 2p -> 5d -> 3d channel with the final-state δ replaced by a
/// unit Lorentzian of FWHM `gamma_3d`.
pub fn discrete_channel(p: &ModelParams, w1: f64, w2: f64) -> Result<f64> {
    p.validate()?;
    check_photons(w1, w2)?;
    Ok(discrete_unchecked(p, w1, w2))
}

/// Ionization into the continuum followed by 3d -> 2p decay. The δ fixes the
/// photoelectron energy at ω* = w1 − e_3d − w2; no pointwise final-state
/// broadening is applied here.
pub fn continuum_channel(p: &ModelParams, w1: f64, w2: f64) -> Result<f64> {
    p.validate()?;
    check_photons(w1, w2)?;
    Ok(continuum_unchecked(p, w1, w2))
}

pub(crate) fn discrete_unchecked(p: &ModelParams, w1: f64, w2: f64) -> f64 {
    let res = p.e_2p - p.e_5d;
    let detune = res - w1;
    let rest = (w2 / w1) * (p.e_2p - p.e_3d) * p.g_3d2p * res * p.g_2p5d
        / (detune * detune + 0.25 * p.gamma_2p * p.gamma_2p)
        * lorentzian_profile(w1 - (p.e_3d - p.e_5d) - w2, p.gamma_3d);
    p.r0_scale * rest
}

pub(crate) fn continuum_unchecked(p: &ModelParams, w1: f64, w2: f64) -> f64 {
    let omega = w1 - p.e_3d - w2;
    if omega < 0.0 {
        return 0.0;
    }
    let dg = p.dos.density(omega);
    if dg == 0.0 {
        return 0.0;
    }
    let detune = p.e_2p + omega - w1;
    let rest = (w2 / w1) * (p.e_2p - p.e_3d) * p.g_3d2p * (p.e_2p + omega)
        / (detune * detune + 0.25 * p.gamma_2p * p.gamma_2p)
        * dg;
    p.r0_scale * rest
}
