//! Unit-area line profiles parameterised by their full width at half maximum.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineShape {
    Lorentzian,
    Gaussian,
}

impl LineShape {
    /// Profile value at `offset` from the centre. `fwhm` must be positive.
    #[inline]
    pub fn profile(self, offset: f64, fwhm: f64) -> f64 {
        match self {
            LineShape::Lorentzian => lorentzian_profile(offset, fwhm),
            LineShape::Gaussian => gaussian_profile(offset, fwhm),
        }
    }
}

#[inline]
pub(crate) fn lorentzian_profile(offset: f64, fwhm: f64) -> f64 {
    (fwhm / (2.0 * PI)) / (offset * offset + 0.25 * fwhm * fwhm)
}

#[inline]
pub(crate) fn gaussian_profile(offset: f64, fwhm: f64) -> f64 {
    let peak = 2.0 * (LN_2 / PI).sqrt() / fwhm;
    peak * (-4.0 * LN_2 * offset * offset / (fwhm * fwhm)).exp()
}

fn check_fwhm(fwhm: f64) -> Result<()> {
    if fwhm.is_finite() && fwhm > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("fwhm", format!("must be > 0, got {fwhm}")))
    }
}

/// Unit-normalised Lorentzian density (1/eV).
pub fn lorentzian(x: f64, center: f64, fwhm: f64) -> Result<f64> {
    check_fwhm(fwhm)?;
    Ok(lorentzian_profile(x - center, fwhm))
}

/// Unit-normalised Gaussian density (1/eV).
pub fn gaussian(x: f64, center: f64, fwhm: f64) -> Result<f64> {
    check_fwhm(fwhm)?;
    Ok(gaussian_profile(x - center, fwhm))
}
