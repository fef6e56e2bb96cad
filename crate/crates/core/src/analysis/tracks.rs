use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::io::fmt;
use crate::spectra::RixsMap;

pub const DEFAULT_MIN_REL_HEIGHT: f64 = 0.10;
/// |slope| at or below this: the peak stays put as incident energy changes.
pub const FLUORESCENCE_MAX_SLOPE: f64 = 0.2;
/// Slope at or above this: the peak moves with the incident energy.
pub const RESONANT_MIN_SLOPE: f64 = 0.8;
/// Rows on each side used for the slope.
pub const SLOPE_HALF_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeakClass {
    Resonant,
    Fluorescence,
    Merged,
}

impl PeakClass {
    pub fn as_str(self) -> &'static str {
        match self {
            PeakClass::Resonant => "resonant",
            PeakClass::Fluorescence => "fluorescence",
            PeakClass::Merged => "merged",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackedPeak {
    /// Emission energy of the parabola vertex, eV.
    pub emission: f64,
    pub height: f64,
    /// d(emission)/d(incident) over the neighbouring rows.
    pub slope: f64,
    pub class: PeakClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRow {
    pub incident: f64,
    pub peaks: Vec<TrackedPeak>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakTracks {
    pub rows: Vec<TrackRow>,
}

impl PeakTracks {
    /// Row at the incident grid point `w1` (within 1e-6 eV).
    pub fn at(&self, w1: f64) -> Option<&TrackRow> {
        self.rows.iter().find(|r| (r.incident - w1).abs() < 1e-6)
    }
}

/// Local maxima of one row above `rel` of its maximum, refined by a
/// three-point parabola. Returns (energy, height) pairs.
fn row_peaks(v: &[f64], start: f64, step: f64, rel: f64) -> Vec<(f64, f64)> {
    let mx = v.iter().copied().fold(0.0, f64::max);
    if !(mx > 0.0) {
        return Vec::new();
    }
    let lo = start;
    let hi = start + (v.len() - 1) as f64 * step;
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] >= rel * mx)
        .map(|i| {
            let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
            let den = a - 2.0 * b + c;
            let off = if den != 0.0 { (0.5 * (a - c) / den).clamp(-0.5, 0.5) } else { 0.0 };
            let e = (start + (i as f64 + off) * step).clamp(lo, hi);
            (e, b - 0.25 * (a - c) * off)
        })
        .collect()
}

fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Per-row peaks with a slope-based classification.
///
/// For each peak, every row within ±3 contributes its peak nearest in
/// emission energy (ties to the lower energy); the least-squares slope of
/// those positions against incident energy decides the class. A row keeps
/// at most one fluorescence peak (the flattest); others become merged.
pub fn track_peaks(m: &RixsMap, min_rel_height: f64) -> Result<PeakTracks> {
    if !(min_rel_height > 0.0 && min_rel_height < 1.0) {
        return Err(Error::invalid(
            "min_rel_height",
            format!("must lie in (0, 1), got {min_rel_height}"),
        ));
    }
    let inc = m.incident();
    let em = m.emission();
    let found: Vec<Vec<(f64, f64)>> = m
        .intensity()
        .rows()
        .into_iter()
        .map(|r| row_peaks(r.as_slice().expect("standard layout"), em.start(), em.step(), min_rel_height))
        .collect();

    let n = found.len();
    let rows = (0..n)
        .map(|i| {
            let mut peaks: Vec<TrackedPeak> = found[i]
                .iter()
                .map(|&(e, h)| {
                    let lo = i.saturating_sub(SLOPE_HALF_WINDOW);
                    let hi = (i + SLOPE_HALF_WINDOW).min(n - 1);
                    let pts: Vec<(f64, f64)> = (lo..=hi)
                        .filter_map(|j| {
                            found[j]
                                .iter()
                                .map(|p| p.0)
                                .min_by(|a, b| (a - e).abs().total_cmp(&(b - e).abs()).then(a.total_cmp(b)))
                                .map(|x| (inc.point(j), x))
                        })
                        .collect();
                    let slope = least_squares_slope(&pts).unwrap_or(f64::NAN);
                    let class = if slope.abs() <= FLUORESCENCE_MAX_SLOPE {
                        PeakClass::Fluorescence
                    } else if slope >= RESONANT_MIN_SLOPE {
                        PeakClass::Resonant
                    } else {
                        PeakClass::Merged
                    };
                    TrackedPeak { emission: e, height: h, slope, class }
                })
                .collect();
            let keep = peaks
                .iter()
                .enumerate()
                .filter(|(_, p)| p.class == PeakClass::Fluorescence)
                .min_by(|a, b| a.1.slope.abs().total_cmp(&b.1.slope.abs()))
                .map(|(k, _)| k);
            for (k, p) in peaks.iter_mut().enumerate() {
                if p.class == PeakClass::Fluorescence && Some(k) != keep {
                    p.class = PeakClass::Merged;
                }
            }
            TrackRow { incident: inc.point(i), peaks }
        })
        .collect();
    Ok(PeakTracks { rows })
}

/// CSV `incident_eV,emission_eV,height,class`, one line per peak.
pub fn write_tracks_csv<W: Write>(w: W, t: &PeakTracks) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["incident_eV", "emission_eV", "height", "class"])
        .map_err(std::io::Error::other)?;
    for row in &t.rows {
        for p in &row.peaks {
            out.write_record([fmt(row.incident), fmt(p.emission), fmt(p.height), p.class.as_str().to_string()])
                .map_err(std::io::Error::other)?;
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::EnergyGrid;
    use ndarray::Array2;

    /// Two Gaussian ridges: one fixed at 50, one moving one-for-one with incident energy.
    fn ridges() -> RixsMap {
        let inc = EnergyGrid::new(0.0, 1.0, 30).unwrap();
        let em = EnergyGrid::new(0.0, 1.0, 100).unwrap();
        let m = Array2::from_shape_fn((30, 100), |(i, j)| {
            let x = j as f64;
            let fixed = (-(x - 50.3f64).powi(2) / 4.0).exp();
            let moving = 0.5 * (-(x - 10.0 - i as f64).powi(2) / 4.0).exp();
            fixed + moving
        });
        RixsMap::new(inc, em, m).unwrap()
    }

    #[test]
    fn fixed_and_moving_ridges_are_classified() {
        let t = track_peaks(&ridges(), 0.1).unwrap();
        let row = t.at(5.0).unwrap();
        assert_eq!(row.peaks.len(), 2);
        assert_eq!(row.peaks[0].class, PeakClass::Resonant);
        assert!((row.peaks[0].emission - 15.0).abs() < 0.05);
        assert_eq!(row.peaks[1].class, PeakClass::Fluorescence);
        assert!((row.peaks[1].emission - 50.3).abs() < 0.1);
        for r in &t.rows {
            assert!(r.peaks.iter().filter(|p| p.class == PeakClass::Fluorescence).count() <= 1);
            for p in &r.peaks {
                assert!((0.0..=99.0).contains(&p.emission));
            }
        }
    }

    #[test]
    fn bad_threshold() {
        assert!(track_peaks(&ridges(), 0.0).is_err());
        assert!(track_peaks(&ridges(), 1.0).is_err());
    }

    #[test]
    fn csv_has_one_line_per_peak() {
        let t = track_peaks(&ridges(), 0.1).unwrap();
        let mut buf = Vec::new();
        write_tracks_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let n: usize = t.rows.iter().map(|r| r.peaks.len()).sum();
        assert_eq!(text.lines().count(), n + 1);
        assert!(text.starts_with("incident_eV,emission_eV,height,class\n"));
        assert!(text.contains(",fluorescence\n"));
    }

    #[test]
    fn parabola_vertex() {
        let v = [0.0, 1.0, 3.0, 2.0, 0.0];
        let p = row_peaks(&v, 0.0, 1.0, 0.1);
        assert_eq!(p.len(), 1);
        // Vertex of the parabola through (1,1), (2,3), (3,2).
        assert!((p[0].0 - (2.0 + 0.5 * (1.0 - 2.0) / (1.0 - 6.0 + 2.0))).abs() < 1e-12);
    }
}
