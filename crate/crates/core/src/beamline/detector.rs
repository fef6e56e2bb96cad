use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{EnergyGrid, Spectrum};

use super::dispersion::DispersionCoeffs;
use super::rng::{child_seed, PortableRng};

/// A 1D detector along the dispersion axis. Pixel `i` spans `[i − 0.5, i + 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detector {
    pub n_pixels: usize,
    pub dispersion: DispersionCoeffs,
}

impl Default for Detector {
    fn default() -> Self {
        Detector {
            n_pixels: 512,
            dispersion: DispersionCoeffs::default_detector(),
        }
    }
}

impl Detector {
    pub fn new(n_pixels: usize, dispersion: DispersionCoeffs) -> Result<Self> {
        let d = Detector { n_pixels, dispersion };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_pixels < 2 {
            return Err(Error::invalid("detector.n_pixels", "need at least two pixels"));
        }
        let [lo, hi] = self.dispersion.valid_range();
        let need = [-0.5, self.n_pixels as f64 - 0.5];
        if lo > need[0] || hi < need[1] {
            return Err(Error::invalid(
                "detector.dispersion.valid_range",
                format!("[{lo}, {hi}] must cover the pixel span [{}, {}]", need[0], need[1]),
            ));
        }
        Ok(())
    }

    /// Energies of the two edges of pixel `i`, ascending.
    pub fn pixel_span(&self, i: usize) -> (f64, f64) {
        let a = self.dispersion.energy(i as f64 - 0.5);
        let b = self.dispersion.energy(i as f64 + 0.5);
        (a.min(b), a.max(b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    /// Incident energy in eV, when the frame belongs to a scan or a map row.
    pub incident_energy: Option<f64>,
    pub exposure: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorFrame {
    pub pixels: Vec<u64>,
    pub meta: FrameMeta,
}

impl DetectorFrame {
    pub fn total(&self) -> u64 {
        self.pixels.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

fn check_exposure(exposure: f64, flux_scale: f64) -> Result<()> {
    if !(exposure > 0.0 && exposure.is_finite()) {
        return Err(Error::invalid("exposure", format!("must be > 0, got {exposure}")));
    }
    if !(flux_scale >= 0.0 && flux_scale.is_finite()) {
        return Err(Error::invalid("flux_scale", format!("must be >= 0, got {flux_scale}")));
    }
    Ok(())
}

/// Mean counts per pixel: flux·exposure times the exact integral of the
/// piecewise-linear spectrum over the pixel's energy span.
pub fn expected_counts(s: &Spectrum, det: &Detector, exposure: f64, flux_scale: f64) -> Result<Vec<f64>> {
    det.validate()?;
    check_exposure(exposure, flux_scale)?;
    let k = flux_scale * exposure;
    Ok((0..det.n_pixels)
        .map(|i| {
            let (a, b) = det.pixel_span(i);
            (k * s.integrate_between(a, b)).max(0.0)
        })
        .collect())
}

/// Poisson-sampled frame; one draw per pixel in pixel order from a stream seeded by `seed`.
pub fn render_frame(
    s: &Spectrum,
    det: &Detector,
    exposure: f64,
    flux_scale: f64,
    seed: u64,
) -> Result<DetectorFrame> {
    let lam = expected_counts(s, det, exposure, flux_scale)?;
    let mut rng = PortableRng::new(seed);
    Ok(DetectorFrame {
        pixels: lam.iter().map(|&l| rng.poisson(l)).collect(),
        meta: FrameMeta { incident_energy: None, exposure, seed },
    })
}

/// Frame holding the expected counts rounded to the nearest integer.
pub fn noiseless_frame(s: &Spectrum, det: &Detector, exposure: f64, flux_scale: f64) -> Result<DetectorFrame> {
    let lam = expected_counts(s, det, exposure, flux_scale)?;
    Ok(DetectorFrame {
        pixels: lam.iter().map(|&l| l.round() as u64).collect(),
        meta: FrameMeta { incident_energy: None, exposure, seed: 0 },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    /// Incident-band FWHM in eV.
    pub bandwidth_fwhm: f64,
    pub exposure: f64,
    pub flux_scale: f64,
    pub seed: u64,
    /// Skip Poisson sampling and keep rounded expected counts.
    #[serde(default)]
    pub noiseless: bool,
}

impl Default for ScanSettings {
    /// About 1e4 counts in the peak pixel on the default detector.
    fn default() -> Self {
        ScanSettings {
            bandwidth_fwhm: 1.0,
            exposure: 1.0,
            flux_scale: 32000.0,
            seed: 42,
            noiseless: false,
        }
    }
}

/// Unit-area Gaussian incident band sampled finely enough for exact pixel integrals.
fn elastic_line(energy: f64, fwhm: f64) -> Result<Spectrum> {
    let step = fwhm / 40.0;
    let half = 400;
    let grid = EnergyGrid::new(energy - half as f64 * step, step, 2 * half + 1)?;
    let sigma = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    Spectrum::from_fn(grid, |e| {
        let z = (e - energy) / sigma;
        norm * (-0.5 * z * z).exp()
    })
}

/// One frame per incident energy. Frame `k` is drawn with seed
/// `child_seed(settings.seed, k)`.
pub fn elastic_scan(energies: &[f64], det: &Detector, settings: &ScanSettings) -> Result<Vec<DetectorFrame>> {
    det.validate()?;
    check_exposure(settings.exposure, settings.flux_scale)?;
    if !(settings.bandwidth_fwhm > 0.0) {
        return Err(Error::invalid(
            "bandwidth_fwhm",
            format!("must be > 0, got {}", settings.bandwidth_fwhm),
        ));
    }
    let (lo, hi) = det.dispersion.energy_range();
    energies
        .iter()
        .enumerate()
        .map(|(k, &e)| {
            if !(e >= lo && e <= hi) {
                return Err(Error::out_of_range("elastic energy", e, lo, hi));
            }
            let line = elastic_line(e, settings.bandwidth_fwhm)?;
            let mut f = if settings.noiseless {
                noiseless_frame(&line, det, settings.exposure, settings.flux_scale)?
            } else {
                render_frame(&line, det, settings.exposure, settings.flux_scale, child_seed(settings.seed, k as u64))?
            };
            f.meta.incident_energy = Some(e);
            Ok(f)
        })
        .collect()
}

/// `n` energies evenly spanning `[lo, hi]`.
pub fn even_energies(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smooth_spectrum() -> Spectrum {
        let grid = EnergyGrid::new(8300.0, 0.1, 1601).unwrap();
        Spectrum::from_fn(grid, |e| {
            let z = (e - 8397.6) / 3.0;
            1.0 / (1.0 + z * z) + 0.2
        })
        .unwrap()
    }

    #[test]
    fn zero_flux_gives_zero_frame() {
        let f = render_frame(&smooth_spectrum(), &Detector::default(), 1.0, 0.0, 42).unwrap();
        assert!(f.pixels.iter().all(|&c| c == 0));
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let s = smooth_spectrum();
        let a = render_frame(&s, &Detector::default(), 1.0, 1e3, 42).unwrap();
        let b = render_frame(&s, &Detector::default(), 1.0, 1e3, 42).unwrap();
        assert_eq!(a, b);
        let c = render_frame(&s, &Detector::default(), 1.0, 1e3, 43).unwrap();
        assert_ne!(a.pixels, c.pixels);
    }

    #[test]
    fn expected_counts_conserve_the_covered_integral() {
        let s = smooth_spectrum();
        let det = Detector::default();
        let lam = expected_counts(&s, &det, 2.0, 50.0).unwrap();
        let (lo, hi) = det.dispersion.energy_range();
        let want = 100.0 * s.integrate_between(lo, hi);
        let got: f64 = lam.iter().sum();
        assert!((got / want - 1.0).abs() < 5e-3, "{got} {want}");
    }

    #[test]
    fn scan_peaks_follow_dispersion_order() {
        let det = Detector::default();
        let energies = even_energies(8310.0, 8450.0, 8);
        let frames = elastic_scan(&energies, &det, &ScanSettings::default()).unwrap();
        assert_eq!(frames.len(), 8);
        let peaks: Vec<usize> = frames
            .iter()
            .map(|f| (0..f.len()).max_by_key(|&i| (f.pixels[i], std::cmp::Reverse(i))).unwrap())
            .collect();
        assert!(peaks.windows(2).all(|w| w[0] < w[1]), "{peaks:?}");
        assert_eq!(frames[3].meta.incident_energy, Some(energies[3]));
        assert_eq!(frames[3].meta.seed, child_seed(42, 3));
        assert!(elastic_scan(&[], &det, &ScanSettings::default()).unwrap().is_empty());
    }

    #[test]
    fn scan_rejects_out_of_range_energy() {
        let r = elastic_scan(&[9000.0], &Detector::default(), &ScanSettings::default());
        assert!(matches!(r, Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn mean_of_many_frames_matches_expectation() {
        let s = smooth_spectrum();
        let det = Detector::new(64, DispersionCoeffs::new([8370.0, 0.8, 0.0, 0.0], [-0.5, 63.5]).unwrap()).unwrap();
        let lam = expected_counts(&s, &det, 1.0, 20.0).unwrap();
        let n = 10_000;
        let mut sum = vec![0u64; det.n_pixels];
        for k in 0..n {
            let f = render_frame(&s, &det, 1.0, 20.0, child_seed(7, k)).unwrap();
            for (acc, c) in sum.iter_mut().zip(&f.pixels) {
                *acc += c;
            }
        }
        for (i, (&tot, &l)) in sum.iter().zip(&lam).enumerate() {
            let mean = tot as f64 / n as f64;
            let sigma = (l / n as f64).sqrt();
            assert!((mean - l).abs() < 5.0 * sigma, "pixel {i}: {mean} vs {l}");
        }
    }
}
