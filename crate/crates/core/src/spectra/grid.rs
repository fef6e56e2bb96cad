use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Fractional grid positions closer than this to an integer are snapped to it.
pub(crate) const SNAP: f64 = 1e-9;

/// Uniform, strictly ascending energy axis in eV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct EnergyGrid {
    start: f64,
    step: f64,
    count: usize,
}

/// Unvalidated `{start, step, count}` triple, as it appears in files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl GridSpec {
    /// Every violated grid invariant, with field names prefixed by `prefix`.
    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut v = Vec::new();
        if !self.start.is_finite() {
            v.push(Violation::new(format!("{prefix}.start"), "must be finite"));
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            v.push(Violation::new(
                format!("{prefix}.step"),
                format!("must be > 0, got {}", self.step),
            ));
        }
        if self.count < 2 {
            v.push(Violation::new(
                format!("{prefix}.count"),
                format!("must be >= 2, got {}", self.count),
            ));
        }
        v
    }
}

impl TryFrom<GridSpec> for EnergyGrid {
    type Error = Error;

    fn try_from(s: GridSpec) -> Result<Self> {
        EnergyGrid::new(s.start, s.step, s.count)
    }
}

impl From<EnergyGrid> for GridSpec {
    fn from(g: EnergyGrid) -> Self {
        GridSpec {
            start: g.start,
            step: g.step,
            count: g.count,
        }
    }
}

impl EnergyGrid {
    pub fn new(start: f64, step: f64, count: usize) -> Result<Self> {
        let spec = GridSpec { start, step, count };
        let v = spec.violations("grid");
        if let Some(first) = v.into_iter().next() {
            return Err(Error::InvalidParameter {
                name: first.field,
                reason: first.message,
            });
        }
        Ok(EnergyGrid { start, step, count })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn last(&self) -> f64 {
        self.point(self.count - 1)
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.point(i))
    }

    pub fn contains(&self, e: f64) -> bool {
        let x = self.position(e);
        x >= -SNAP && x <= (self.count - 1) as f64 + SNAP
    }

    /// Fractional index of `e` on this grid (unclamped).
    #[inline]
    pub fn position(&self, e: f64) -> f64 {
        (e - self.start) / self.step
    }

    /// Nearest grid index; exact midpoints go to the lower index.
    pub fn nearest_index(&self, e: f64) -> Option<usize> {
        if !self.contains(e) {
            return None;
        }
        let x = self.position(e);
        let i = (x - 0.5).ceil().max(0.0) as usize;
        Some(i.min(self.count - 1))
    }

    /// Same axis shifted so that it starts at `start`.
    pub fn with_start(&self, start: f64) -> Result<Self> {
        EnergyGrid::new(start, self.step, self.count)
    }
}
