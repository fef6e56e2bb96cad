use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::beamline::DetectorFrame;
use crate::error::{Error, Result};

pub const MIN_TOTAL_COUNTS: u64 = 20;
pub const MAX_FIT_ITERATIONS: usize = 200;
/// A separate maximum at least this fraction of the primary makes the frame ambiguous.
const AMBIGUOUS_RATIO: f64 = 0.6;
const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    /// Peak centre, pixels.
    pub position: f64,
    pub position_err: f64,
    /// Integrated counts under the fitted Gaussian.
    pub amplitude: f64,
    /// Pixels.
    pub fwhm: f64,
    /// Reduced chi-square; NaN when the centroid fallback was used.
    pub goodness: f64,
}

impl PeakFit {
    pub fn is_fallback(&self) -> bool {
        self.goodness.is_nan()
    }
}

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Bin-integrated Gaussian and its gradient wrt (amp, mu, sigma).
fn model(x: f64, p: &Vector3<f64>) -> (f64, Vector3<f64>) {
    let (amp, mu, s) = (p[0], p[1], p[2]);
    let a = (x - 0.5 - mu) / s;
    let b = (x + 0.5 - mu) / s;
    let d = cdf(b) - cdf(a);
    let (pa, pb) = (phi(a), phi(b));
    (amp * d, Vector3::new(d, amp * (pa - pb) / s, amp * (pa * a - pb * b) / s))
}

fn chi2(xs: &[f64], ys: &[f64], w: &[f64], p: &Vector3<f64>) -> f64 {
    xs.iter()
        .zip(ys)
        .zip(w)
        .map(|((&x, &y), &wi)| {
            let r = y - model(x, p).0;
            wi * r * r
        })
        .sum()
}

struct Fitted {
    params: Vector3<f64>,
    cov: Matrix3<f64>,
    chi2: f64,
}

/// Levenberg-Marquardt with multiplicative damping on the diagonal.
fn levenberg_marquardt(xs: &[f64], ys: &[f64], w: &[f64], start: Vector3<f64>) -> Option<Fitted> {
    let mut p = start;
    let mut lambda = 1e-3;
    let mut cur = chi2(xs, ys, w, &p);
    for _ in 0..MAX_FIT_ITERATIONS {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for ((&x, &y), &wi) in xs.iter().zip(ys).zip(w) {
            let (m, g) = model(x, &p);
            jtj += wi * g * g.transpose();
            jtr += wi * (y - m) * g;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut a = jtj;
            for k in 0..3 {
                a[(k, k)] *= 1.0 + lambda;
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            if !(trial[2] > 0.0) {
                lambda *= 10.0;
                continue;
            }
            let next = chi2(xs, ys, w, &trial);
            if next <= cur {
                let small = step[1].abs() < 1e-10 && (step[2] / trial[2]).abs() < 1e-10;
                let flat = cur - next <= 1e-12 * cur.max(1e-300);
                p = trial;
                cur = next;
                lambda = (lambda * 0.1).max(1e-12);
                accepted = true;
                if small || flat {
                    let cov = jtj.try_inverse()?;
                    return Some(Fitted { params: p, cov, chi2: cur });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No downhill step at any damping: we sit at the minimum.
            let cov = jtj.try_inverse()?;
            return Some(Fitted { params: p, cov, chi2: cur });
        }
    }
    None
}

/// Width of the region above half the value at `peak`, with linear
/// interpolation at both crossings. At least one pixel.
fn half_max_walk(c: &[f64], peak: usize) -> (usize, usize, f64) {
    let h = 0.5 * c[peak];
    let mut l = peak;
    while l > 0 && c[l - 1] > h {
        l -= 1;
    }
    let mut r = peak;
    while r + 1 < c.len() && c[r + 1] > h {
        r += 1;
    }
    let left = if l > 0 { (l - 1) as f64 + (h - c[l - 1]) / (c[l] - c[l - 1]) } else { l as f64 - 0.5 };
    let right = if r + 1 < c.len() { r as f64 + (c[r] - h) / (c[r] - c[r + 1]) } else { r as f64 + 0.5 };
    (l, r, (right - left).max(1.0))
}

/// Gaussian fit of the strongest peak on a frame, seeded by the centroid of
/// the region above half maximum and restricted to ±4 initial FWHM around it.
pub fn find_peak(f: &DetectorFrame) -> Result<PeakFit> {
    let total = f.total();
    if total < MIN_TOTAL_COUNTS {
        return Err(Error::NoSignal(format!(
            "frame holds {total} counts, need at least {MIN_TOTAL_COUNTS}"
        )));
    }
    let c: Vec<f64> = f.pixels.iter().map(|&v| v as f64).collect();
    let peak = crate::spectra::argmax(&c);
    let (l, r, fwhm0) = half_max_walk(&c, peak);

    let guard = 2.0 * fwhm0 + 1.0;
    let secondary = c
        .iter()
        .enumerate()
        .filter(|(i, _)| (*i as f64 - peak as f64).abs() > guard)
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)));
    if let Some((j, &v)) = secondary {
        if v >= AMBIGUOUS_RATIO * c[peak] {
            return Err(Error::AmbiguousPeak {
                primary: peak,
                secondary: j,
                ratio: v / c[peak],
            });
        }
    }

    let top: f64 = c[l..=r].iter().sum();
    let centroid = (l..=r).map(|i| i as f64 * c[i]).sum::<f64>() / top;

    let lo = (centroid - 4.0 * fwhm0).floor().max(0.0) as usize;
    let hi = ((centroid + 4.0 * fwhm0).ceil() as usize).min(c.len() - 1);
    let xs: Vec<f64> = (lo..=hi).map(|i| i as f64).collect();
    let ys = &c[lo..=hi];
    let w: Vec<f64> = ys.iter().map(|&y| 1.0 / y.max(1.0)).collect();
    let area: f64 = ys.iter().sum();

    let sigma0 = fwhm0 / FWHM_PER_SIGMA;
    let fit = levenberg_marquardt(&xs, ys, &w, Vector3::new(area, centroid, sigma0));
    let dof = xs.len().saturating_sub(3).max(1) as f64;
    match fit {
        Some(fit)
            if fit.params[1] >= lo as f64 - 0.5
                && fit.params[1] <= hi as f64 + 0.5
                && fit.params[2] > 0.0
                && fit.params.iter().all(|v| v.is_finite()) =>
        {
            let red = fit.chi2 / dof;
            Ok(PeakFit {
                position: fit.params[1],
                position_err: (fit.cov[(1, 1)] * red.max(1e-300)).sqrt(),
                amplitude: fit.params[0],
                fwhm: fit.params[2] * FWHM_PER_SIGMA,
                goodness: red,
            })
        }
        _ => {
            log::warn!("peak fit did not converge; using the centroid at pixel {centroid:.3}");
            let spread = (l..=r).map(|i| c[i] * (i as f64 - centroid).powi(2)).sum::<f64>();
            Ok(PeakFit {
                position: centroid,
                position_err: spread.sqrt() / top,
                amplitude: area,
                fwhm: fwhm0,
                goodness: f64::NAN,
            })
        }
    }
}
