//! Frame files: CSV `pixel,counts`, a JSON sidecar with the frame metadata,
//! and a JSON scan manifest listing frame files with their energies.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::detector::{DetectorFrame, FrameMeta};

pub fn write_frame_csv<W: Write>(w: W, f: &DetectorFrame) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["pixel", "counts"]).map_err(std::io::Error::other)?;
    for (i, c) in f.pixels.iter().enumerate() {
        out.write_record([i.to_string(), c.to_string()]).map_err(std::io::Error::other)?;
    }
    out.flush()
}

/// Counts in pixel order. Pixels must be listed as 0, 1, 2, ...
pub fn read_frame_csv<R: Read>(r: R) -> Result<Vec<u64>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut pixels = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let get = |k: usize| -> Result<u64> {
            rec.get(k)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::parse(line, "expected `pixel,counts` as non-negative integers"))
        };
        let (i, c) = (get(0)?, get(1)?);
        if i as usize != pixels.len() {
            return Err(Error::parse(line, format!("pixel {i} out of sequence")));
        }
        pixels.push(c);
    }
    Ok(pixels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSidecar {
    #[serde(rename = "incident_energy_eV")]
    pub incident_energy: Option<f64>,
    #[serde(rename = "exposure_s")]
    pub exposure: f64,
    pub seed: u64,
    pub n_pixels: usize,
}

impl FrameSidecar {
    pub fn of(f: &DetectorFrame) -> Self {
        FrameSidecar {
            incident_energy: f.meta.incident_energy,
            exposure: f.meta.exposure,
            seed: f.meta.seed,
            n_pixels: f.pixels.len(),
        }
    }

    pub fn meta(&self) -> FrameMeta {
        FrameMeta {
            incident_energy: self.incident_energy,
            exposure: self.exposure,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    #[serde(rename = "energy_eV")]
    pub energy: f64,
    pub frame: String,
    pub sidecar: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScanManifest {
    pub frames: Vec<ManifestEntry>,
}
