//! Pipeline configuration (TOML).
//!
//! Grids are read as plain `{start, step, count}` tables and model
//! parameters as plain numbers so that [`PipelineConfig::violations`] can
//! report every broken invariant at once, each with its field path.

use std::path::{Path, PathBuf};

use rixs_core::beamline::{Detector, DispersionCoeffs, ScanSettings};
use rixs_core::kh::ModelParams;
use rixs_core::spectra::{EnergyGrid, GridSpec};
use rixs_core::{Error, Result, Violation};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub n_pixels: usize,
    /// c0, c1, c2, c3 of energy(pos) in eV, eV/px, eV/px², eV/px³.
    pub dispersion: [f64; 4],
    /// Elastic-scan incident energies: `scan_points` evenly over `scan_range`.
    pub scan_range: [f64; 2],
    pub scan_points: usize,
    /// Incident-band FWHM of the elastic line, eV.
    pub bandwidth_fwhm: f64,
    pub exposure: f64,
    /// Counts·eV per unit intensity per second for the elastic scan.
    pub flux_scale: f64,
    /// Same, for rendering map rows through the detector in `all`.
    pub map_flux_scale: f64,
    pub seed: u64,
    /// Keep rounded expected counts instead of Poisson draws.
    pub noiseless: bool,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        let d = DispersionCoeffs::default_detector();
        let s = ScanSettings::default();
        DetectorConfig {
            n_pixels: 512,
            dispersion: d.coeffs(),
            scan_range: [8310.0, 8450.0],
            scan_points: 8,
            bandwidth_fwhm: s.bandwidth_fwhm,
            exposure: s.exposure,
            flux_scale: s.flux_scale,
            map_flux_scale: 4.0,
            seed: s.seed,
            noiseless: false,
        }
    }
}

impl DetectorConfig {
    pub fn detector(&self) -> Result<Detector> {
        let d = DispersionCoeffs::new(self.dispersion, [-0.5, self.n_pixels as f64 - 0.5])?;
        Detector::new(self.n_pixels, d)
    }

    pub fn scan_settings(&self) -> ScanSettings {
        ScanSettings {
            bandwidth_fwhm: self.bandwidth_fwhm,
            exposure: self.exposure,
            flux_scale: self.flux_scale,
            seed: self.seed,
            noiseless: self.noiseless,
        }
    }

    pub fn scan_energies(&self) -> Vec<f64> {
        rixs_core::beamline::even_energies(self.scan_range[0], self.scan_range[1], self.scan_points)
    }

    fn violations(&self, v: &mut Vec<Violation>) {
        let mut bad = |f: &str, m: String| v.push(Violation::new(format!("detector.{f}"), m));
        if self.n_pixels < 2 {
            bad("n_pixels", format!("need at least 2, got {}", self.n_pixels));
        }
        if self.scan_points < 5 {
            bad("scan_points", format!("a cubic fit needs at least 5, got {}", self.scan_points));
        }
        if !(self.bandwidth_fwhm > 0.0) {
            bad("bandwidth_fwhm", format!("must be > 0, got {}", self.bandwidth_fwhm));
        }
        if !(self.exposure > 0.0 && self.exposure.is_finite()) {
            bad("exposure", format!("must be > 0, got {}", self.exposure));
        }
        if !(self.flux_scale >= 0.0 && self.flux_scale.is_finite()) {
            bad("flux_scale", format!("must be >= 0, got {}", self.flux_scale));
        }
        if !(self.map_flux_scale > 0.0 && self.map_flux_scale.is_finite()) {
            bad("map_flux_scale", format!("must be > 0, got {}", self.map_flux_scale));
        }
        let [lo, hi] = self.scan_range;
        if !(lo < hi) {
            bad("scan_range", format!("need low < high, got [{lo}, {hi}]"));
        }
        if self.n_pixels >= 2 {
            match self.detector() {
                Err(e) => bad("dispersion", e.to_string()),
                Ok(det) => {
                    let (elo, ehi) = det.dispersion.energy_range();
                    if lo < elo || hi > ehi {
                        bad("scan_range", format!("[{lo}, {hi}] eV exceeds the detector range [{elo:.3}, {ehi:.3}] eV"));
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    /// Inclusive emission window for HERFD, eV.
    pub herfd_window: [f64; 2],
    /// Incident energy of the off-resonant cut used for reconstruction, eV.
    pub heros_w1: f64,
    pub rebin_step: f64,
    /// Incident energies of the XES cuts written by `extract`.
    pub xes_cuts: Vec<f64>,
    pub min_rel_height: f64,
    pub model: ModelParams,
    pub incident_grid: GridSpec,
    pub emission_grid: GridSpec,
    pub transfer_grid: GridSpec,
    /// Photoelectron-energy axis of the reconstructed absorption spectrum.
    pub xas_grid: GridSpec,
    pub detector: DetectorConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            output_dir: PathBuf::from("rixs-out"),
            herfd_window: [8397.0, 8398.4],
            heros_w1: 10172.0,
            rebin_step: 1.0,
            xes_cuts: (0..9).map(|k| 10206.0 + 2.0 * k as f64).collect(),
            min_rel_height: rixs_core::analysis::DEFAULT_MIN_REL_HEIGHT,
            model: ModelParams::wsi2_default(),
            incident_grid: GridSpec { start: 10140.0, step: 1.0, count: 110 },
            emission_grid: GridSpec { start: 8310.0, step: 1.0, count: 140 },
            transfer_grid: GridSpec { start: 1690.0, step: 1.0, count: 251 },
            xas_grid: GridSpec { start: -30.4, step: 1.0, count: 81 },
            detector: DetectorConfig::default(),
        }
    }
}

/// Header written above the default configuration.
const HEADER: &str = "\
# rixs-workbench pipeline configuration (wsi2-default).
# Energies in eV. Grids are {start, step, count}; point i = start + i*step.
# Model keys are flat; dos_shape is \"smooth_step\" or \"sharp_step\".
# r0_scale = 1 gives arbitrary units; 4.989344e-29 (2*pi*r0^2 in m^2) gives absolute ones.
# Fluorescence is e_2p - e_3d = 8397.6 and the transfer stripe e_3d - e_5d = 1809.
# The edge at 10208 minus 8397.6 would give 1810.4, so the resonance e_2p - e_5d
# lands at 10206.6; the 1.4 eV mismatch is kept rather than reconciled.
# herfd_window spans 1.4 eV although it is often quoted as a 0.6 eV window.
";

fn grid(spec: &GridSpec) -> EnergyGrid {
    EnergyGrid::new(spec.start, spec.step, spec.count).expect("validated before use")
}

impl PipelineConfig {
    pub fn to_toml(&self) -> String {
        format!("{HEADER}\n{}", toml::to_string(self).expect("config always serializes"))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1)
                .unwrap_or(0);
            Error::parse(line, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        v.extend(self.model.violations("model."));
        for (name, g) in [
            ("incident_grid", &self.incident_grid),
            ("emission_grid", &self.emission_grid),
            ("transfer_grid", &self.transfer_grid),
            ("xas_grid", &self.xas_grid),
        ] {
            v.extend(g.violations(name));
        }
        let grids_ok = v.iter().all(|x| !x.field.ends_with("_grid") && !x.field.contains("_grid."));
        let [lo, hi] = self.herfd_window;
        if !(lo < hi) {
            v.push(Violation::new("herfd_window", format!("need low < high, got [{lo}, {hi}]")));
        }
        if self.output_dir.as_os_str().is_empty() {
            v.push(Violation::new("output_dir", "must not be empty"));
        }
        if !(self.min_rel_height > 0.0 && self.min_rel_height < 1.0) {
            v.push(Violation::new("min_rel_height", format!("must lie in (0, 1), got {}", self.min_rel_height)));
        }
        if grids_ok {
            let inc = grid(&self.incident_grid);
            let em = grid(&self.emission_grid);
            if lo < hi && (lo < em.start() || hi > em.last()) {
                v.push(Violation::new(
                    "herfd_window",
                    format!("[{lo}, {hi}] must lie within the emission grid [{}, {}]", em.start(), em.last()),
                ));
            }
            if !inc.contains(self.heros_w1) {
                v.push(Violation::new(
                    "heros_w1",
                    format!("{} must lie within the incident grid [{}, {}]", self.heros_w1, inc.start(), inc.last()),
                ));
            }
            if !(self.rebin_step >= inc.step()) || !self.rebin_step.is_finite() {
                v.push(Violation::new(
                    "rebin_step",
                    format!("must be >= the incident step {}, got {}", inc.step(), self.rebin_step),
                ));
            } else if self.rebin_step * 2.0 > inc.step() * inc.count() as f64 {
                v.push(Violation::new("rebin_step", "must leave at least two incident bins"));
            }
            for (k, w1) in self.xes_cuts.iter().enumerate() {
                if !inc.contains(*w1) {
                    v.push(Violation::new(format!("xes_cuts[{k}]"), format!("{w1} is outside the incident grid")));
                }
            }
        }
        self.detector.violations(&mut v);
        v
    }

    pub fn validate(&self) -> Result<()> {
        Error::from_violations(self.violations())
    }

    pub fn incident(&self) -> EnergyGrid {
        grid(&self.incident_grid)
    }

    pub fn emission(&self) -> EnergyGrid {
        grid(&self.emission_grid)
    }

    pub fn transfer(&self) -> EnergyGrid {
        grid(&self.transfer_grid)
    }

    pub fn xas(&self) -> EnergyGrid {
        grid(&self.xas_grid)
    }
}
