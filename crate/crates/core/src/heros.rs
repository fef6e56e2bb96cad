//! Off-resonant emission (HEROS) from an absorption profile and the inverse:
//! pointwise reconstruction of the absorption spectrum from one emission cut.
//!
//! The absorption axis E is the photoelectron energy measured from the 2p
//! threshold, so a bound 5d level at binding energy e_5d sits at E = −e_5d.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::kh::ModelParams;
use crate::spectra::{EnergyGrid, Spectrum};

/// Bins whose weight falls below this fraction of the largest weight are zeroed and flagged.
pub const WEIGHT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionParams {
    /// |E_i|, initial-state (2p) binding energy, eV.
    pub e_i: f64,
    /// |E_f|, final-state (3d) binding energy, eV.
    pub e_f: f64,
    /// Initial-state FWHM, eV.
    pub gamma_i: f64,
    /// Fixed incident energy, eV.
    pub w1: f64,
}

impl ReconstructionParams {
    pub fn from_model(p: &ModelParams, w1: f64) -> Self {
        ReconstructionParams { e_i: p.e_2p, e_f: p.e_3d, gamma_i: p.gamma_2p, w1 }
    }

    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut v = Vec::new();
        for (name, x) in [("e_i", self.e_i), ("e_f", self.e_f), ("gamma_i", self.gamma_i), ("w1", self.w1)] {
            if !x.is_finite() {
                v.push(Violation::new(format!("{prefix}{name}"), format!("must be finite, got {x}")));
            }
        }
        if !(self.gamma_i > 0.0) {
            v.push(Violation::new(format!("{prefix}gamma_i"), format!("must be > 0, got {}", self.gamma_i)));
        }
        if !(self.e_f > 0.0) {
            v.push(Violation::new(format!("{prefix}e_f"), format!("must be > 0, got {}", self.e_f)));
        }
        if !(self.e_i > self.e_f) {
            v.push(Violation::new(format!("{prefix}e_i"), format!("must exceed e_f ({}), got {}", self.e_f, self.e_i)));
        }
        if !(self.w1 > 0.0) {
            v.push(Violation::new(format!("{prefix}w1"), format!("must be > 0, got {}", self.w1)));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        Error::from_violations(self.violations(""))
    }

    /// True when w1 lies at least `margin` below the threshold e_i.
    pub fn is_off_resonant(&self, margin: f64) -> bool {
        self.w1 <= self.e_i - margin
    }

    /// Emission energy paired with absorption energy `e`, and back.
    pub fn emission_of(&self, e: f64) -> f64 {
        self.w1 - self.e_f - e
    }

    pub fn absorption_of(&self, w2: f64) -> f64 {
        self.w1 - self.e_f - w2
    }
}

fn weight_unchecked(e: f64, p: &ReconstructionParams, w2: f64) -> f64 {
    let d = e + p.e_i - p.w1;
    (w2 / p.w1) * (p.e_i - p.e_f) * (e + p.e_i) / (d * d + 0.25 * p.gamma_i * p.gamma_i)
}

/// (w2/w1)·(e_i − e_f)·(E + e_i) / ((E + e_i − w1)² + Γ_i²/4)
pub fn kernel_weight(e: f64, p: &ReconstructionParams, w2: f64) -> Result<f64> {
    p.validate()?;
    Ok(weight_unchecked(e, p, w2))
}

/// Emission at fixed `p.w1`: I(w2) = weight(E*)·XAS(E*) with E* = w1 − e_f − w2,
/// the absorption profile interpolated linearly and zero outside its grid.
pub fn heros_forward(xas: &Spectrum, p: &ReconstructionParams, emission: &EnergyGrid) -> Result<Spectrum> {
    p.validate()?;
    let values = emission
        .points()
        .map(|w2| {
            let e = p.absorption_of(w2);
            let a = xas.value_at(e);
            if a == 0.0 {
                0.0
            } else {
                (weight_unchecked(e, p, w2) * a).max(0.0)
            }
        })
        .collect();
    Spectrum::new(*emission, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Absorption profile on the requested grid, not normalized.
    pub xas: Spectrum,
    /// Largest weight on the grid divided by the bin's weight; infinite on flagged bins.
    pub condition_number: Vec<f64>,
    /// Bins whose weight fell under the floor and were set to zero.
    pub flagged: Vec<bool>,
}

/// Pointwise inverse of [`heros_forward`].
pub fn reconstruct_xas(xes: &Spectrum, p: &ReconstructionParams, e_grid: &EnergyGrid) -> Result<Reconstruction> {
    p.validate()?;
    if xes.values().iter().any(|&v| v < 0.0) {
        return Err(Error::invalid("xes", "emission intensities must be non-negative"));
    }
    let pairs: Vec<(f64, f64)> = e_grid.points().map(|e| (e, p.emission_of(e))).collect();
    if !pairs.iter().any(|&(_, w2)| xes.grid().contains(w2)) {
        let lo = p.emission_of(e_grid.last());
        return Err(Error::out_of_range(
            "emission energy paired with the XAS grid",
            lo,
            xes.grid().start(),
            xes.grid().last(),
        ));
    }
    let weights: Vec<f64> = pairs.iter().map(|&(e, w2)| weight_unchecked(e, p, w2)).collect();
    let max_w = weights.iter().copied().fold(0.0, f64::max);
    let floor = WEIGHT_FLOOR * max_w;
    let mut values = Vec::with_capacity(pairs.len());
    let mut condition_number = Vec::with_capacity(pairs.len());
    let mut flagged = Vec::with_capacity(pairs.len());
    for (&(_, w2), &w) in pairs.iter().zip(&weights) {
        if !(w >= floor && w > 0.0) {
            values.push(0.0);
            condition_number.push(f64::INFINITY);
            flagged.push(true);
        } else {
            values.push(xes.value_at(w2) / w);
            condition_number.push(max_w / w);
            flagged.push(false);
        }
    }
    Ok(Reconstruction { xas: Spectrum::new(*e_grid, values)?, condition_number, flagged })
}

/// Synthetic absorption profile: a Lorentzian white line of height
/// `line_height` and FWHM `line_fwhm` at `center`, on a smooth step of
/// height `edge_height` and width `edge_width` centred at `edge`.
pub fn white_line_xas(
    grid: &EnergyGrid,
    center: f64,
    line_fwhm: f64,
    line_height: f64,
    edge: f64,
    edge_height: f64,
    edge_width: f64,
) -> Result<Spectrum> {
    let hw2 = 0.25 * line_fwhm * line_fwhm;
    Spectrum::from_fn(*grid, |e| {
        let d = e - center;
        line_height * hw2 / (d * d + hw2) + edge_height * 0.5 * (1.0 + ((e - edge) / edge_width).tanh())
    })
}
