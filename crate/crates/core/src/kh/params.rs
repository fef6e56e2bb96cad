use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Classical electron radius in metres.
pub const CLASSICAL_ELECTRON_RADIUS_M: f64 = 2.8179403e-15;

/// 2π·r₀², in m². Set `r0_scale` to this for absolute cross sections.
pub const PHYSICAL_PREFACTOR: f64 =
    2.0 * std::f64::consts::PI * CLASSICAL_ELECTRON_RADIUS_M * CLASSICAL_ELECTRON_RADIUS_M;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DosShape {
    SharpStep,
    SmoothStep,
}

/// Continuum density of states above the 2p threshold, as a function of the
/// photoelectron kinetic energy ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuumDos {
    #[serde(rename = "dos_shape")]
    pub shape: DosShape,
    #[serde(rename = "dos_onset")]
    pub onset: f64,
    #[serde(rename = "dos_edge_width")]
    pub edge_width: f64,
    #[serde(rename = "dos_amplitude")]
    pub amplitude: f64,
}

impl ContinuumDos {
    pub fn density(&self, omega: f64) -> f64 {
        match self.shape {
            DosShape::SharpStep => {
                if omega >= self.onset {
                    self.amplitude
                } else {
                    0.0
                }
            }
            DosShape::SmoothStep => {
                self.amplitude * 0.5 * (1.0 + ((omega - self.onset) / self.edge_width).tanh())
            }
        }
    }
}

/// Physical parameters of the two-channel model. Energies in eV.
///
/// Serialized flat: the DOS fields appear as `dos_shape`, `dos_onset`,
/// `dos_edge_width` and `dos_amplitude` next to the other keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub e_2p: f64,
    pub e_3d: f64,
    pub e_5d: f64,
    pub gamma_2p: f64,
    pub gamma_3d: f64,
    pub g_3d2p: f64,
    pub g_2p5d: f64,
    #[serde(flatten)]
    pub dos: ContinuumDos,
    pub r0_scale: f64,
    pub instrument_fwhm_in: f64,
    pub instrument_fwhm_out: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::wsi2_default()
    }
}

impl ModelParams {
    /// W L3 edge of WSi2. Lα1 at e_2p − e_3d = 8397.6 eV, resonant stripe at
    /// constant transfer e_3d − e_5d = 1809 eV.
    pub fn wsi2_default() -> Self {
        ModelParams {
            e_2p: 10208.0,
            e_3d: 1810.4,
            e_5d: 1.4,
            gamma_2p: 7.2,
            gamma_3d: 2.0,
            g_3d2p: 1.0,
            g_2p5d: 1.0,
            dos: ContinuumDos {
                shape: DosShape::SmoothStep,
                onset: 0.0,
                edge_width: 2.0,
                amplitude: 0.05,
            },
            r0_scale: 1.0,
            instrument_fwhm_in: 1.22,
            instrument_fwhm_out: 0.5,
        }
    }

    /// Resonance energy e_2p − e_5d.
    pub fn resonance(&self) -> f64 {
        self.e_2p - self.e_5d
    }

    /// Lα1 fluorescence energy e_2p − e_3d.
    pub fn fluorescence(&self) -> f64 {
        self.e_2p - self.e_3d
    }

    /// Energy transfer of the resonant stripe, e_3d − e_5d.
    pub fn transfer(&self) -> f64 {
        self.e_3d - self.e_5d
    }

    /// Every violated invariant, with field names prefixed by `prefix`.
    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut v = Vec::new();
        let mut bad = |field: &str, msg: String| v.push(Violation::new(format!("{prefix}{field}"), msg));
        let named = [
            ("e_2p", self.e_2p),
            ("e_3d", self.e_3d),
            ("e_5d", self.e_5d),
            ("gamma_2p", self.gamma_2p),
            ("gamma_3d", self.gamma_3d),
            ("g_3d2p", self.g_3d2p),
            ("g_2p5d", self.g_2p5d),
            ("dos_onset", self.dos.onset),
            ("dos_edge_width", self.dos.edge_width),
            ("dos_amplitude", self.dos.amplitude),
            ("r0_scale", self.r0_scale),
            ("instrument_fwhm_in", self.instrument_fwhm_in),
            ("instrument_fwhm_out", self.instrument_fwhm_out),
        ];
        for (name, x) in named {
            if !x.is_finite() {
                bad(name, format!("must be finite, got {x}"));
            }
        }
        if !(self.gamma_2p > 0.0) {
            bad("gamma_2p", format!("must be > 0, got {}", self.gamma_2p));
        }
        if !(self.gamma_3d > 0.0) {
            bad("gamma_3d", format!("must be > 0, got {}", self.gamma_3d));
        } else if !(self.gamma_3d < self.gamma_2p) {
            bad("gamma_3d", format!("must be < gamma_2p ({}), got {}", self.gamma_2p, self.gamma_3d));
        }
        if !(self.e_2p > self.e_3d) {
            bad("e_3d", format!("must be < e_2p ({}), got {}", self.e_2p, self.e_3d));
        }
        if !(self.e_3d > self.e_5d) {
            bad("e_5d", format!("must be < e_3d ({}), got {}", self.e_3d, self.e_5d));
        }
        if !(self.g_3d2p >= 0.0) {
            bad("g_3d2p", format!("must be >= 0, got {}", self.g_3d2p));
        }
        if !(self.g_2p5d >= 0.0) {
            bad("g_2p5d", format!("must be >= 0, got {}", self.g_2p5d));
        }
        if !(self.dos.amplitude >= 0.0) {
            bad("dos_amplitude", format!("must be >= 0, got {}", self.dos.amplitude));
        }
        if self.dos.shape == DosShape::SmoothStep && !(self.dos.edge_width > 0.0) {
            bad("dos_edge_width", format!("must be > 0 for smooth_step, got {}", self.dos.edge_width));
        }
        if !(self.r0_scale >= 0.0) {
            bad("r0_scale", format!("must be >= 0, got {}", self.r0_scale));
        }
        if !(self.instrument_fwhm_in >= 0.0) {
            bad("instrument_fwhm_in", format!("must be >= 0, got {}", self.instrument_fwhm_in));
        }
        if !(self.instrument_fwhm_out >= 0.0) {
            bad("instrument_fwhm_out", format!("must be >= 0, got {}", self.instrument_fwhm_out));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        Error::from_violations(self.violations(""))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("flat struct of numbers and an enum always serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: ModelParams = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1)
                .unwrap_or(0);
            Error::parse(line, e.message().to_string())
        })?;
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry() {
        let p = ModelParams::wsi2_default();
        assert!((p.fluorescence() - 8397.6).abs() < 1e-9);
        assert!((p.transfer() - 1809.0).abs() < 1e-9);
        p.validate().unwrap();
    }

    #[test]
    fn toml_round_trip_is_flat() {
        let p = ModelParams::wsi2_default();
        let text = p.to_toml();
        assert!(text.contains("dos_shape = \"smooth_step\""), "{text}");
        assert!(text.contains("dos_amplitude = 0.05"));
        assert_eq!(ModelParams::from_toml(&text).unwrap(), p);
    }

    #[test]
    fn every_violation_is_listed() {
        let mut p = ModelParams::wsi2_default();
        p.gamma_2p = -1.0;
        p.e_3d = 20000.0;
        p.instrument_fwhm_out = -0.1;
        let fields: Vec<String> = p.violations("model.").into_iter().map(|v| v.field).collect();
        assert!(fields.contains(&"model.gamma_2p".to_string()));
        assert!(fields.contains(&"model.e_3d".to_string()));
        assert!(fields.contains(&"model.instrument_fwhm_out".to_string()));
    }

    #[test]
    fn gamma_3d_must_be_narrower() {
        let mut p = ModelParams::wsi2_default();
        p.gamma_3d = 8.0;
        assert!(matches!(p.validate(), Err(Error::Validation(v)) if v[0].field == "gamma_3d"));
    }

    #[test]
    fn dos_shapes() {
        let sharp = ContinuumDos { shape: DosShape::SharpStep, onset: 0.0, edge_width: 0.0, amplitude: 2.0 };
        assert_eq!(sharp.density(-1e-9), 0.0);
        assert_eq!(sharp.density(0.0), 2.0);
        let smooth = ContinuumDos { shape: DosShape::SmoothStep, onset: 0.0, edge_width: 2.0, amplitude: 2.0 };
        assert_eq!(smooth.density(0.0), 1.0);
        let mut last = 0.0;
        for k in -100..100 {
            let d = smooth.density(k as f64 * 0.1);
            assert!(d >= last);
            last = d;
        }
    }

    #[test]
    fn physical_prefactor_value() {
        assert!((PHYSICAL_PREFACTOR / 4.989344e-29 - 1.0).abs() < 1e-6);
    }
}
