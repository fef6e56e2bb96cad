use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::beamline::DispersionCoeffs;
use crate::error::{Error, Result};

const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub position: f64,
    #[serde(rename = "energy_eV")]
    pub energy: f64,
    #[serde(rename = "fitted_eV")]
    pub fitted: f64,
    #[serde(rename = "residual_eV")]
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionFit {
    pub coeffs: DispersionCoeffs,
    /// energy − fitted energy, in input order.
    pub residuals: Vec<f64>,
    pub rms_residual: f64,
}

/// JSON calibration report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub coeffs: DispersionCoeffs,
    pub points: Vec<CalibrationPoint>,
    #[serde(rename = "rms_residual_eV")]
    pub rms_residual: f64,
    pub valid_range: [f64; 2],
}

impl DispersionFit {
    pub fn report(&self, points: &[(f64, f64)]) -> CalibrationReport {
        CalibrationReport {
            coeffs: self.coeffs,
            points: points
                .iter()
                .zip(&self.residuals)
                .map(|(&(position, energy), &residual)| CalibrationPoint {
                    position,
                    energy,
                    fitted: self.coeffs.energy(position),
                    residual,
                })
                .collect(),
            rms_residual: self.rms_residual,
            valid_range: self.coeffs.valid_range(),
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Least-squares cubic through `(position, energy)` pairs.
///
/// Positions are mapped to u ∈ [−1, 1] before forming the normal equations;
/// the solution is expanded back to powers of the raw position. The points
/// are sorted first so the result does not depend on input order.
pub fn fit_dispersion(points: &[(f64, f64)]) -> Result<DispersionFit> {
    if points.len() < MIN_POINTS {
        return Err(Error::Underdetermined { points: points.len(), needed: MIN_POINTS });
    }
    if points.iter().any(|(x, e)| !x.is_finite() || !e.is_finite()) {
        return Err(Error::invalid("points", "positions and energies must be finite"));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid("points", "positions must be distinct"));
    }
    let lo = sorted[0].0;
    let hi = sorted[sorted.len() - 1].0;
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let mut ata = Matrix4::<f64>::zeros();
    let mut atb = Vector4::<f64>::zeros();
    for &(x, e) in &sorted {
        let u = (x - mid) / half;
        let row = Vector4::new(1.0, u, u * u, u * u * u);
        ata += row * row.transpose();
        atb += row * e;
    }
    let b = ata
        .cholesky()
        .ok_or_else(|| Error::CalibrationFailed("normal equations are singular".into()))?
        .solve(&atb);

    // Σ_k b_k ((x − m)/h)^k  =  Σ_j c_j x^j
    let mut c = [0.0; 4];
    for k in 0..4 {
        let scale = b[k] / half.powi(k as i32);
        for (j, cj) in c.iter_mut().enumerate().take(k + 1) {
            *cj += scale * binomial(k, j) * (-mid).powi((k - j) as i32);
        }
    }
    let coeffs = DispersionCoeffs::new(c, [lo, hi]).map_err(|_| {
        Error::CalibrationFailed(format!("fitted cubic is not monotone over positions [{lo}, {hi}]"))
    })?;
    let residuals: Vec<f64> = points.iter().map(|&(x, e)| e - coeffs.energy(x)).collect();
    let rms_residual = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(DispersionFit { coeffs, residuals, rms_residual })
}
