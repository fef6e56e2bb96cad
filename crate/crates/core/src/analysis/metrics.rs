use crate::spectra::{EnergyTransferMap, Spectrum};

/// Full width at half maximum of the highest peak, with linear
/// interpolation at both crossings. `None` when the signal does not drop
/// below half maximum on both sides within the grid.
pub fn fwhm(s: &Spectrum) -> Option<f64> {
    let (l, r) = half_max_crossings(s)?;
    Some(r - l)
}

fn half_max_crossings(s: &Spectrum) -> Option<(f64, f64)> {
    let v = s.values();
    let i = s.argmax();
    let h = 0.5 * v[i];
    if !(h > 0.0) {
        return None;
    }
    let mut l = i;
    while l > 0 && v[l] > h {
        l -= 1;
    }
    let mut r = i;
    while r + 1 < v.len() && v[r] > h {
        r += 1;
    }
    if v[l] > h || v[r] > h {
        return None;
    }
    let g = s.grid();
    let left = g.point(l) + g.step() * (h - v[l]) / (v[l + 1] - v[l]);
    let right = g.point(r - 1) + g.step() * (v[r - 1] - h) / (v[r - 1] - v[r]);
    Some((left, right))
}

/// Intensity-weighted mean energy over the whole grid.
pub fn centroid(s: &Spectrum) -> Option<f64> {
    let total: f64 = s.values().iter().sum();
    (total > 0.0).then(|| s.energies().zip(s.values()).map(|(e, v)| e * v).sum::<f64>() / total)
}

/// Intensity-weighted mean energy over the contiguous region above half of
/// the maximum around the highest peak.
pub fn white_line_centroid(s: &Spectrum) -> Option<f64> {
    let v = s.values();
    let i = s.argmax();
    let h = 0.5 * v[i];
    if !(h > 0.0) {
        return None;
    }
    let mut l = i;
    while l > 0 && v[l - 1] > h {
        l -= 1;
    }
    let mut r = i;
    while r + 1 < v.len() && v[r + 1] > h {
        r += 1;
    }
    let g = s.grid();
    let w: f64 = v[l..=r].iter().sum();
    Some((l..=r).map(|k| g.point(k) * v[k]).sum::<f64>() / w)
}

/// Median over rows with incident energy ≤ `incident_max` of the transfer
/// at each row's maximum. `None` when no row qualifies.
pub fn transfer_constant(tm: &EnergyTransferMap, incident_max: f64) -> Option<f64> {
    let mut t: Vec<f64> = tm
        .incident()
        .points()
        .enumerate()
        .filter(|(_, w1)| *w1 <= incident_max)
        .map(|(i, _)| {
            let row = tm.row(i);
            tm.transfer().point(row.argmax())
        })
        .collect();
    if t.is_empty() {
        return None;
    }
    t.sort_by(f64::total_cmp);
    let n = t.len();
    Some(if n % 2 == 1 { t[n / 2] } else { 0.5 * (t[n / 2 - 1] + t[n / 2]) })
}
