use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectra::{convolve_slice, sampled_kernel, EnergyGrid, LineShape, RixsMap, Spectrum};

use super::channels::{continuum_unchecked, discrete_unchecked};
use super::params::ModelParams;

/// Kernels shared by every row of a map.
struct RowKernels {
    final_state: Vec<f64>,
    analyzer: Option<Vec<f64>>,
}

impl RowKernels {
    fn new(p: &ModelParams, emission: &EnergyGrid) -> Self {
        let step = emission.step();
        RowKernels {
            final_state: sampled_kernel(p.gamma_3d, step, LineShape::Lorentzian),
            analyzer: (p.instrument_fwhm_out > 0.0)
                .then(|| sampled_kernel(p.instrument_fwhm_out, step, LineShape::Gaussian)),
        }
    }
}

fn xes_row(p: &ModelParams, w1: f64, emission: &EnergyGrid, k: &RowKernels) -> Vec<f64> {
    let discrete: Vec<f64> = emission.points().map(|w2| discrete_unchecked(p, w1, w2)).collect();
    let continuum: Vec<f64> = emission.points().map(|w2| continuum_unchecked(p, w1, w2)).collect();
    let continuum = convolve_slice(&continuum, &k.final_state);
    let sum: Vec<f64> = discrete.iter().zip(&continuum).map(|(a, b)| a + b).collect();
    match &k.analyzer {
        Some(g) => convolve_slice(&sum, g),
        None => sum,
    }
}

fn check_w1(w1: f64) -> Result<()> {
    if w1 > 0.0 && w1.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("w1", format!("incident energy must be > 0, got {w1}")))
    }
}

fn check_emission(emission: &EnergyGrid) -> Result<()> {
    if emission.start() > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("emission", "emission energies must be > 0"))
    }
}

/// Emission spectrum at one incident energy: both channels, the continuum
/// broadened by the final-state Lorentzian, the sum by the analyzer Gaussian.
pub fn simulate_xes_cut(p: &ModelParams, w1: f64, emission: &EnergyGrid) -> Result<Spectrum> {
    p.validate()?;
    check_w1(w1)?;
    check_emission(emission)?;
    let k = RowKernels::new(p, emission);
    let row = xes_row(p, w1, emission, &k);
    Spectrum::new(*emission, row.into_iter().map(|v| v.max(0.0)).collect())
}

/// Full RIXS map on the current rayon pool. Rows are computed on an incident
/// grid padded by ten incident-band FWHM on each side, smeared column-wise
/// by the incident-band Gaussian, then cropped back to `incident`.
pub fn simulate_rixs_map(p: &ModelParams, incident: &EnergyGrid, emission: &EnergyGrid) -> Result<RixsMap> {
    p.validate()?;
    check_emission(emission)?;
    let band = (p.instrument_fwhm_in > 0.0)
        .then(|| sampled_kernel(p.instrument_fwhm_in, incident.step(), LineShape::Gaussian));
    let pad = band.as_ref().map_or(0, |k| k.len() / 2);
    let first = incident.start() - pad as f64 * incident.step();
    check_w1(first)?;
    let n_rows = incident.count() + 2 * pad;
    let k = RowKernels::new(p, emission);
    let rows: Vec<Vec<f64>> = (0..n_rows)
        .into_par_iter()
        .map(|i| {
            let w1 = incident.point(0) + (i as f64 - pad as f64) * incident.step();
            xes_row(p, w1, emission, &k)
        })
        .collect();

    let n_em = emission.count();
    let mut out = Array2::<f64>::zeros((incident.count(), n_em));
    match band {
        None => {
            for (i, row) in rows.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    out[[i, j]] = v.max(0.0);
                }
            }
        }
        Some(kernel) => {
            let columns: Vec<Vec<f64>> = (0..n_em)
                .into_par_iter()
                .map(|j| {
                    let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                    convolve_slice(&col, &kernel)
                })
                .collect();
            for (j, col) in columns.iter().enumerate() {
                for i in 0..incident.count() {
                    out[[i, j]] = col[i + pad].max(0.0);
                }
            }
        }
    }
    RixsMap::new(*incident, *emission, out)
}

/// As [`simulate_rixs_map`] on a dedicated pool of `workers` threads. The
/// result does not depend on `workers`.
pub fn simulate_rixs_map_with_workers(
    p: &ModelParams,
    incident: &EnergyGrid,
    emission: &EnergyGrid,
    workers: usize,
) -> Result<RixsMap> {
    if workers == 0 {
        return Err(Error::invalid("workers", "need at least one worker"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
    pool.install(|| simulate_rixs_map(p, incident, emission))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::lorentzian;

    fn grids() -> (EnergyGrid, EnergyGrid) {
        (
            EnergyGrid::new(10140.0, 1.0, 110).unwrap(),
            EnergyGrid::new(8310.0, 1.0, 140).unwrap(),
        )
    }

    fn local_maxima(v: &[f64], rel: f64) -> Vec<usize> {
        let mx = v.iter().cloned().fold(0.0, f64::max);
        (1..v.len() - 1)
            .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] >= rel * mx)
            .collect()
    }

    #[test]
    fn cut_shapes_follow_incident_energy() {
        let p = ModelParams::wsi2_default();
        let em = EnergyGrid::new(8310.0, 1.0, 140).unwrap();
        let above = simulate_xes_cut(&p, 10218.0, &em).unwrap();
        let peaks = local_maxima(above.values(), 0.1);
        assert_eq!(peaks.len(), 2, "{peaks:?}");
        assert!((em.point(peaks[0]) - 8397.6).abs() <= 1.0);
        assert!(em.point(peaks[1]) > 8400.0);
        assert!(above.values()[peaks[1]] < above.values()[peaks[0]]);

        let merged = simulate_xes_cut(&p, 10208.0, &em).unwrap();
        assert_eq!(local_maxima(merged.values(), 0.1).len(), 1);

        let below = simulate_xes_cut(&p, 10196.0, &em).unwrap();
        let peaks = local_maxima(below.values(), 0.1);
        assert_eq!(peaks.len(), 1);
        assert_eq!(em.point(peaks[0]), 10196.0 - 1809.0);
    }

    #[test]
    fn zero_strengths_give_zero_map() {
        let mut p = ModelParams::wsi2_default();
        p.g_3d2p = 0.0;
        p.g_2p5d = 0.0;
        p.dos.amplitude = 0.0;
        let (inc, em) = grids();
        let m = simulate_rixs_map(&p, &inc, &em).unwrap();
        assert!(m.intensity().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn map_is_independent_of_worker_count() {
        let p = ModelParams::wsi2_default();
        let (inc, em) = grids();
        let a = simulate_rixs_map_with_workers(&p, &inc, &em, 1).unwrap();
        let b = simulate_rixs_map_with_workers(&p, &inc, &em, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn map_scales_exactly_with_r0() {
        let p = ModelParams::wsi2_default();
        let mut q = p;
        q.r0_scale = 4.0;
        let (inc, em) = grids();
        let a = simulate_rixs_map(&p, &inc, &em).unwrap();
        let b = simulate_rixs_map(&q, &inc, &em).unwrap();
        for (x, y) in a.intensity().iter().zip(b.intensity()) {
            assert_eq!(*y, 4.0 * x);
        }
    }

    #[test]
    fn stripe_and_line_in_the_map() {
        let p = ModelParams::wsi2_default();
        let (inc, em) = grids();
        let m = simulate_rixs_map(&p, &inc, &em).unwrap();
        for i in 0..inc.count() {
            let w1 = inc.point(i);
            let w2 = em.point(m.row(i).argmax());
            if w1 <= 10196.0 {
                assert!((w1 - w2 - 1809.0).abs() <= 1.0, "w1={w1} w2={w2}");
            }
            if w1 >= 10223.0 {
                assert!((w2 - 8397.6).abs() <= 1.0, "w1={w1} w2={w2}");
            }
        }
    }

    #[test]
    fn integrated_discrete_part_is_the_intermediate_lorentzian() {
        let mut p = ModelParams::wsi2_default();
        p.dos.amplitude = 0.0;
        p.gamma_3d = 0.05;
        p.instrument_fwhm_out = 0.0;
        let em = EnergyGrid::new(8200.0, 0.01, 40001).unwrap();
        let res = p.resonance();
        let totals: Vec<(f64, f64)> = (-40..=40)
            .map(|k| {
                let w1 = res + k as f64 * 0.5;
                (w1, simulate_xes_cut(&p, w1, &em).unwrap().integral())
            })
            .collect();
        let peak = totals.iter().map(|t| t.1).fold(0.0, f64::max);
        let scale = peak / lorentzian(res, res, p.gamma_2p).unwrap();
        for (w1, t) in totals {
            let expect = scale * lorentzian(w1, res, p.gamma_2p).unwrap();
            assert!((t - expect).abs() < 0.01 * peak, "w1={w1}: {t} vs {expect}");
        }
    }
}
