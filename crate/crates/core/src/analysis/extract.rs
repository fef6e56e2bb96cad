use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spectra::{EnergyGrid, EnergyTransferMap, RixsMap, Spectrum};

/// Guards bin-index arithmetic against representation error in the steps.
const BIN_EPS: f64 = 1e-9;

/// Sum rows into bins of width `step`. Row `i` goes to bin
/// `floor((i + 0.5)·old_step / step)`; bin `k` is labelled `start + k·step`.
pub fn rebin_incident(m: &RixsMap, step: f64) -> Result<RixsMap> {
    let old = m.incident().step();
    if !(step.is_finite() && step >= old * (1.0 - BIN_EPS)) {
        return Err(Error::invalid(
            "rebin_step",
            format!("must be >= the incident step {old}, got {step}"),
        ));
    }
    let bin = |i: usize| ((i as f64 + 0.5) * old / step + BIN_EPS).floor() as usize;
    let n_bins = bin(m.incident().count() - 1) + 1;
    let grid = EnergyGrid::new(m.incident().start(), step, n_bins)
        .map_err(|_| Error::invalid("rebin_step", format!("{step} eV leaves fewer than two incident bins")))?;
    let mut out = Array2::<f64>::zeros((n_bins, m.emission().count()));
    for (i, row) in m.intensity().rows().into_iter().enumerate() {
        let mut dst = out.row_mut(bin(i));
        dst += &row;
    }
    RixsMap::new(grid, *m.emission(), out)
}

fn band_sum(m: &RixsMap, cols: std::ops::RangeInclusive<usize>) -> Spectrum {
    let step = m.emission().step();
    let values = m
        .intensity()
        .rows()
        .into_iter()
        .map(|row| {
            let mut s = 0.0;
            for j in cols.clone() {
                s += row[j];
            }
            s * step
        })
        .collect();
    Spectrum::new(*m.incident(), values).expect("sums of finite non-negative values")
}

/// Total fluorescence yield: each row summed over the whole emission axis, times its step.
pub fn tfy(m: &RixsMap) -> Spectrum {
    band_sum(m, 0..=m.emission().count() - 1)
}

/// Partial yield over emission bins whose centres lie in `[low, high]`
/// (inclusive). Over the full emission range this equals [`tfy`] exactly.
pub fn herfd(m: &RixsMap, window: [f64; 2]) -> Result<Spectrum> {
    let [low, high] = window;
    if !(low < high) {
        return Err(Error::invalid("herfd_window", format!("need low < high, got [{low}, {high}]")));
    }
    let g = m.emission();
    let first = g.position(low) - BIN_EPS;
    let last = g.position(high) + BIN_EPS;
    let j0 = first.ceil().max(0.0);
    let j1 = last.floor().min((g.count() - 1) as f64);
    if j1 < j0 {
        return Err(Error::EmptyWindow { low, high });
    }
    Ok(band_sum(m, j0 as usize..=j1 as usize))
}

/// Row at the incident grid point nearest `w1` (ties to the lower energy).
pub fn xes_cut(m: &RixsMap, w1: f64) -> Result<Spectrum> {
    let g = m.incident();
    g.nearest_index(w1)
        .map(|i| m.row(i))
        .ok_or_else(|| Error::out_of_range("incident energy", w1, g.start(), g.last()))
}

/// Resample every row onto energy transfer t = w1 − w2.
pub fn to_energy_transfer(m: &RixsMap, transfer: &EnergyGrid) -> Result<EnergyTransferMap> {
    let mut out = Array2::<f64>::zeros((m.incident().count(), transfer.count()));
    for (i, w1) in m.incident().points().enumerate() {
        let row = m.row(i);
        for (k, t) in transfer.points().enumerate() {
            out[[i, k]] = row.value_at(w1 - t);
        }
    }
    EnergyTransferMap::new(*m.incident(), *transfer, out)
}
