use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

use super::grid::EnergyGrid;
use super::spectrum::Spectrum;

/// Intensity over (incident energy x emission energy). Row `i` is the
/// emission spectrum recorded at `incident.point(i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RixsMap {
    incident: EnergyGrid,
    emission: EnergyGrid,
    intensity: Array2<f64>,
}

/// Intensity over (incident energy x energy transfer).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTransferMap {
    incident: EnergyGrid,
    transfer: EnergyGrid,
    intensity: Array2<f64>,
}

fn check_matrix(rows: &EnergyGrid, cols: &EnergyGrid, m: &Array2<f64>) -> Result<()> {
    if m.dim() != (rows.count(), cols.count()) {
        return Err(Error::invalid(
            "intensity",
            format!(
                "shape {:?} does not match grids ({}, {})",
                m.dim(),
                rows.count(),
                cols.count()
            ),
        ));
    }
    if let Some(((i, j), v)) = m.indexed_iter().find(|(_, v)| !v.is_finite() || **v < 0.0) {
        return Err(Error::invalid(
            "intensity",
            format!("value {v} at ({i}, {j}) must be finite and >= 0"),
        ));
    }
    Ok(())
}

impl RixsMap {
    pub fn new(incident: EnergyGrid, emission: EnergyGrid, intensity: Array2<f64>) -> Result<Self> {
        check_matrix(&incident, &emission, &intensity)?;
        Ok(RixsMap {
            incident,
            emission,
            intensity,
        })
    }

    /// Stack emission spectra (one per incident point) into a map.
    pub fn from_rows(incident: EnergyGrid, rows: Vec<Spectrum>) -> Result<Self> {
        let emission = match rows.first() {
            Some(r) => *r.grid(),
            None => return Err(Error::invalid("rows", "no rows given")),
        };
        if rows.len() != incident.count() {
            return Err(Error::invalid(
                "rows",
                format!("{} rows for {} incident points", rows.len(), incident.count()),
            ));
        }
        let mut m = Array2::zeros((incident.count(), emission.count()));
        for (i, r) in rows.iter().enumerate() {
            if *r.grid() != emission {
                return Err(Error::invalid("rows", format!("row {i} has a different emission grid")));
            }
            m.row_mut(i).assign(&ArrayView1::from(r.values()));
        }
        RixsMap::new(incident, emission, m)
    }

    pub fn incident(&self) -> &EnergyGrid {
        &self.incident
    }

    pub fn emission(&self) -> &EnergyGrid {
        &self.emission
    }

    pub fn intensity(&self) -> &Array2<f64> {
        &self.intensity
    }

    pub fn into_intensity(self) -> Array2<f64> {
        self.intensity
    }

    /// Emission spectrum at incident index `i`.
    pub fn row(&self, i: usize) -> Spectrum {
        Spectrum::new(self.emission, self.intensity.row(i).to_vec())
            .expect("map rows satisfy spectrum invariants")
    }

    /// Incident-energy profile at emission index `j`.
    pub fn column(&self, j: usize) -> Spectrum {
        Spectrum::new(self.incident, self.intensity.column(j).to_vec())
            .expect("map columns satisfy spectrum invariants")
    }

    /// Sum over every cell, row by row.
    pub fn total(&self) -> f64 {
        self.intensity.rows().into_iter().map(|r| r.sum()).sum()
    }
}

impl EnergyTransferMap {
    pub fn new(incident: EnergyGrid, transfer: EnergyGrid, intensity: Array2<f64>) -> Result<Self> {
        check_matrix(&incident, &transfer, &intensity)?;
        Ok(EnergyTransferMap {
            incident,
            transfer,
            intensity,
        })
    }

    pub fn incident(&self) -> &EnergyGrid {
        &self.incident
    }

    pub fn transfer(&self) -> &EnergyGrid {
        &self.transfer
    }

    pub fn intensity(&self) -> &Array2<f64> {
        &self.intensity
    }

    /// Intensity versus energy transfer at incident index `i`.
    pub fn row(&self, i: usize) -> Spectrum {
        Spectrum::new(self.transfer, self.intensity.row(i).to_vec())
            .expect("map rows satisfy spectrum invariants")
    }
}
