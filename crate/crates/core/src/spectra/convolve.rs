use crate::error::{Error, Result};

use super::lineshape::LineShape;
use super::spectrum::Spectrum;

/// Kernel tails extend this many FWHM on each side.
pub const KERNEL_TAIL_FWHM: f64 = 10.0;

/// Result of a convolution together with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Convolution {
    pub spectrum: Spectrum,
    /// The kernel FWHM was narrower than the grid step.
    pub under_resolved: bool,
}

/// Convolve with a unit-area kernel sampled on the spectrum's own step.
///
/// The output lives on the input grid; samples beyond the grid edges are
/// treated as zero. A zero width returns the input unchanged.
pub fn convolve(s: &Spectrum, kernel_fwhm: f64, kind: LineShape) -> Result<Spectrum> {
    let c = convolve_checked(s, kernel_fwhm, kind)?;
    if c.under_resolved {
        log::warn!(
            "{kind:?} kernel FWHM {kernel_fwhm} eV is below the grid step {} eV",
            s.grid().step()
        );
    }
    Ok(c.spectrum)
}

pub fn convolve_checked(s: &Spectrum, kernel_fwhm: f64, kind: LineShape) -> Result<Convolution> {
    if !(kernel_fwhm.is_finite() && kernel_fwhm >= 0.0) {
        return Err(Error::invalid(
            "kernel_fwhm",
            format!("must be >= 0, got {kernel_fwhm}"),
        ));
    }
    if kernel_fwhm == 0.0 {
        return Ok(Convolution {
            spectrum: s.clone(),
            under_resolved: false,
        });
    }
    let step = s.grid().step();
    let kernel = sampled_kernel(kernel_fwhm, step, kind);
    let values = convolve_slice(s.values(), &kernel);
    Ok(Convolution {
        spectrum: Spectrum::new(*s.grid(), values)?,
        under_resolved: kernel_fwhm < step,
    })
}

/// Odd-length kernel normalised to unit sum, centred on the middle sample.
pub(crate) fn sampled_kernel(fwhm: f64, step: f64, kind: LineShape) -> Vec<f64> {
    let half = (KERNEL_TAIL_FWHM * fwhm / step).ceil() as isize;
    let mut k: Vec<f64> = (-half..=half)
        .map(|j| kind.profile(j as f64 * step, fwhm))
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Zero-padded discrete convolution returning the central part (same length as `values`).
pub(crate) fn convolve_slice(values: &[f64], kernel: &[f64]) -> Vec<f64> {
    let n = values.len() as isize;
    let half = (kernel.len() / 2) as isize;
    (0..n)
        .map(|i| {
            let lo = (i - half).max(0);
            let hi = (i + half).min(n - 1);
            let mut acc = 0.0;
            for src in lo..=hi {
                acc += values[src as usize] * kernel[(i - src + half) as usize];
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::grid::EnergyGrid;
    use crate::spectra::lineshape::gaussian_profile;
    use proptest::prelude::*;

    fn grid(start: f64, step: f64, count: usize) -> EnergyGrid {
        EnergyGrid::new(start, step, count).unwrap()
    }

    #[test]
    fn zero_width_is_identity() {
        let s = Spectrum::from_fn(grid(0.0, 0.3, 40), |e| (e * 1.7).cos().abs()).unwrap();
        assert_eq!(convolve(&s, 0.0, LineShape::Lorentzian).unwrap(), s);
        assert_eq!(convolve(&s, 0.0, LineShape::Gaussian).unwrap(), s);
    }

    #[test]
    fn negative_width_is_rejected() {
        let s = Spectrum::zeros(grid(0.0, 1.0, 4));
        assert!(convolve(&s, -0.1, LineShape::Gaussian).is_err());
    }

    #[test]
    fn delta_input_reproduces_kernel() {
        let g = grid(0.0, 0.5, 201);
        let mut v = vec![0.0; 201];
        v[100] = 1.0;
        let s = Spectrum::new(g, v).unwrap();
        for kind in [LineShape::Lorentzian, LineShape::Gaussian] {
            let out = convolve(&s, 2.0, kind).unwrap();
            let k = sampled_kernel(2.0, 0.5, kind);
            let half = k.len() / 2;
            assert_eq!(out.argmax(), 100);
            for (j, kv) in k.iter().enumerate() {
                assert_eq!(out.values()[100 + j - half], *kv);
            }
        }
    }

    #[test]
    fn under_resolved_kernel_is_flagged_but_computed() {
        let s = Spectrum::from_fn(grid(0.0, 1.0, 30), |e| gaussian_profile(e - 15.0, 4.0)).unwrap();
        let c = convolve_checked(&s, 0.5, LineShape::Gaussian).unwrap();
        assert!(c.under_resolved);
        assert_eq!(c.spectrum.grid(), s.grid());
        assert!(!convolve_checked(&s, 2.0, LineShape::Gaussian).unwrap().under_resolved);
    }

    #[test]
    fn interior_signal_keeps_its_area() {
        let g = grid(0.0, 0.2, 2001);
        let s = Spectrum::from_fn(g, |e| gaussian_profile(e - 200.0, 3.0)).unwrap();
        for kind in [LineShape::Lorentzian, LineShape::Gaussian] {
            let out = convolve(&s, 2.0, kind).unwrap();
            let rel = (out.integral() - s.integral()).abs() / s.integral();
            assert!(rel < 1e-3, "{kind:?}: {rel}");
        }
    }

    /// Direct double convolution is the oracle for the Gaussian semigroup.
    #[test]
    fn gaussian_widths_add_in_quadrature() {
        let g = grid(-60.0, 0.25, 481);
        let src = Spectrum::from_fn(g, |e| {
            gaussian_profile(e + 6.0, 2.5) + 0.6 * gaussian_profile(e - 9.0, 1.5)
        })
        .unwrap();
        let (a, b) = (2.0, 3.0);
        let twice = convolve(&convolve(&src, a, LineShape::Gaussian).unwrap(), b, LineShape::Gaussian).unwrap();
        let once = convolve(&src, (a * a + b * b as f64).sqrt(), LineShape::Gaussian).unwrap();
        let peak = once.max();
        let worst = twice
            .values()
            .iter()
            .zip(once.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6 * peak, "{worst} vs peak {peak}");
    }

    proptest! {
        #[test]
        fn preserves_non_negativity(vals in proptest::collection::vec(0.0f64..1e3, 2..60),
                                    fwhm in 0.0f64..10.0, lor in any::<bool>()) {
            let s = Spectrum::new(grid(0.0, 0.7, vals.len()), vals).unwrap();
            let kind = if lor { LineShape::Lorentzian } else { LineShape::Gaussian };
            let out = convolve_checked(&s, fwhm, kind).unwrap().spectrum;
            prop_assert!(out.values().iter().all(|v| *v >= 0.0));
        }
    }
}
