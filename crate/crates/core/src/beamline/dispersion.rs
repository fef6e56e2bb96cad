use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// energy(pos) = c0 + c1·pos + c2·pos² + c3·pos³, strictly monotone on
/// `valid_range` (pixels).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoeffs", into = "RawCoeffs")]
pub struct DispersionCoeffs {
    c: [f64; 4],
    valid_range: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct RawCoeffs {
    c0: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    valid_range: [f64; 2],
}

impl TryFrom<RawCoeffs> for DispersionCoeffs {
    type Error = Error;
    fn try_from(r: RawCoeffs) -> Result<Self> {
        DispersionCoeffs::new([r.c0, r.c1, r.c2, r.c3], r.valid_range)
    }
}

impl From<DispersionCoeffs> for RawCoeffs {
    fn from(d: DispersionCoeffs) -> Self {
        RawCoeffs {
            c0: d.c[0],
            c1: d.c[1],
            c2: d.c[2],
            c3: d.c[3],
            valid_range: d.valid_range,
        }
    }
}

const NEWTON_TOL_PX: f64 = 1e-12;

impl DispersionCoeffs {
    pub fn new(c: [f64; 4], valid_range: [f64; 2]) -> Result<Self> {
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("dispersion", "coefficients must be finite"));
        }
        let [lo, hi] = valid_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(
                "dispersion.valid_range",
                format!("need finite min < max, got [{lo}, {hi}]"),
            ));
        }
        let d = DispersionCoeffs { c, valid_range };
        if !d.is_monotone() {
            return Err(Error::invalid(
                "dispersion",
                format!("energy(pos) is not strictly monotone on [{lo}, {hi}]"),
            ));
        }
        Ok(d)
    }

    /// Default 512-pixel detector: 8310-8450 eV covers about 80% of it.
    pub fn default_detector() -> Self {
        DispersionCoeffs::new([8292.0, 0.33, 4e-5, -2e-8], [-0.5, 511.5]).expect("monotone")
    }

    /// The derivative is a quadratic, so checking its sign at the ends and
    /// at its vertex covers the whole range.
    fn is_monotone(&self) -> bool {
        let [lo, hi] = self.valid_range;
        let mut probes = vec![lo, hi];
        if self.c[3] != 0.0 {
            let v = -self.c[2] / (3.0 * self.c[3]);
            if v > lo && v < hi {
                probes.push(v);
            }
        }
        let signs: Vec<f64> = probes.iter().map(|&x| self.derivative(x)).collect();
        signs.iter().all(|&s| s > 0.0) || signs.iter().all(|&s| s < 0.0)
    }

    pub fn coeffs(&self) -> [f64; 4] {
        self.c
    }

    pub fn valid_range(&self) -> [f64; 2] {
        self.valid_range
    }

    pub fn energy(&self, pos: f64) -> f64 {
        let [c0, c1, c2, c3] = self.c;
        c0 + pos * (c1 + pos * (c2 + pos * c3))
    }

    pub fn derivative(&self, pos: f64) -> f64 {
        let [_, c1, c2, c3] = self.c;
        c1 + pos * (2.0 * c2 + pos * 3.0 * c3)
    }

    pub fn is_increasing(&self) -> bool {
        self.derivative(self.valid_range[0]) > 0.0
    }

    /// Energies at the ends of the valid range, ascending.
    pub fn energy_range(&self) -> (f64, f64) {
        let a = self.energy(self.valid_range[0]);
        let b = self.energy(self.valid_range[1]);
        (a.min(b), a.max(b))
    }

    /// Inverse of [`energy`](Self::energy) by Newton iteration kept inside a
    /// shrinking bisection bracket.
    pub fn position_of_energy(&self, e: f64) -> Result<f64> {
        let (emin, emax) = self.energy_range();
        if !(e >= emin && e <= emax) {
            return Err(Error::out_of_range("energy", e, emin, emax));
        }
        let [mut lo, mut hi] = self.valid_range;
        let sign = if self.is_increasing() { 1.0 } else { -1.0 };
        let mut x = lo + (hi - lo) * (e - emin) / (emax - emin);
        if sign < 0.0 {
            x = hi - (x - lo);
        }
        for _ in 0..200 {
            let f = self.energy(x) - e;
            if f == 0.0 {
                return Ok(x);
            }
            if sign * f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - f / self.derivative(x);
            let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - x).abs() < NEWTON_TOL_PX || hi - lo < NEWTON_TOL_PX {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }
}
