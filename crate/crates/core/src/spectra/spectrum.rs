use crate::error::{Error, Result};

use super::grid::{EnergyGrid, SNAP};

/// Intensity sampled on a uniform energy grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: EnergyGrid,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: EnergyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::invalid(
                "values",
                format!("length {} does not match grid count {}", values.len(), grid.count()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "values",
                format!("non-finite value at index {i} ({})", grid.point(i)),
            ));
        }
        Ok(Spectrum { grid, values })
    }

    pub fn zeros(grid: EnergyGrid) -> Self {
        Spectrum {
            grid,
            values: vec![0.0; grid.count()],
        }
    }

    /// Sample `f` at every grid point.
    pub fn from_fn(grid: EnergyGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Spectrum::new(grid, grid.points().map(f).collect())
    }

    pub fn grid(&self) -> &EnergyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.points()
    }

    /// Linear interpolation; zero outside the grid.
    pub fn value_at(&self, e: f64) -> f64 {
        interpolate_uniform(&self.grid, &self.values, e)
    }

    /// Riemann sum: total of the bins times the step.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.step()
    }

    /// Exact integral of the piecewise-linear interpolant over `[a, b]`.
    pub fn integrate_between(&self, a: f64, b: f64) -> f64 {
        if b < a {
            return -self.integrate_between(b, a);
        }
        let lo = a.max(self.grid.start());
        let hi = b.min(self.grid.last());
        if hi <= lo {
            return 0.0;
        }
        let step = self.grid.step();
        let first = self.grid.position(lo).floor().max(0.0) as usize;
        let last_seg = self.values.len() - 2;
        let mut total = 0.0;
        let mut i = first.min(last_seg);
        loop {
            let x0 = self.grid.point(i);
            let x1 = x0 + step;
            let s = lo.max(x0);
            let e = hi.min(x1);
            if e > s {
                // Trapezoid on the sub-segment of a straight line is exact.
                total += 0.5 * (self.value_at_segment(i, s) + self.value_at_segment(i, e)) * (e - s);
            }
            if x1 >= hi || i == last_seg {
                break;
            }
            i += 1;
        }
        total
    }

    fn value_at_segment(&self, i: usize, e: f64) -> f64 {
        let f = (e - self.grid.point(i)) / self.grid.step();
        self.values[i] * (1.0 - f) + self.values[i + 1] * f
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the maximum; ties go to the lowest energy.
    pub fn argmax(&self) -> usize {
        argmax(&self.values)
    }

    pub fn scaled(&self, c: f64) -> Result<Spectrum> {
        Spectrum::new(self.grid, self.values.iter().map(|v| v * c).collect())
    }

    /// Rescale so that the maximum is one. All-zero spectra are returned unchanged.
    pub fn normalized_to_max(&self) -> Spectrum {
        let m = self.max();
        if m > 0.0 {
            Spectrum {
                grid: self.grid,
                values: self.values.iter().map(|v| v / m).collect(),
            }
        } else {
            self.clone()
        }
    }
}

/// First index of the maximum value.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn interpolate_uniform(grid: &EnergyGrid, values: &[f64], e: f64) -> f64 {
    let n = values.len();
    let mut x = grid.position(e);
    let r = x.round();
    if (x - r).abs() < SNAP {
        x = r;
    }
    if x < 0.0 || x > (n - 1) as f64 || x.is_nan() {
        return 0.0;
    }
    let i = x.floor() as usize;
    if i == n - 1 {
        return values[n - 1];
    }
    let f = x - i as f64;
    if f == 0.0 {
        return values[i];
    }
    values[i] * (1.0 - f) + values[i + 1] * f
}

/// Linear interpolation through `(xs, ys)` with `xs` strictly ascending; zero outside.
pub(crate) fn interpolate_sorted(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return 0.0;
    }
    let j = xs.partition_point(|&v| v <= x);
    if j == 0 {
        return ys[0];
    }
    if j >= n {
        return ys[n - 1];
    }
    let (x0, x1) = (xs[j - 1], xs[j]);
    if x == x0 {
        return ys[j - 1];
    }
    let f = (x - x0) / (x1 - x0);
    ys[j - 1] * (1.0 - f) + ys[j] * f
}

/// Linear resampling onto `target`. Points outside the source grid become zero.
pub fn resample(s: &Spectrum, target: &EnergyGrid) -> Spectrum {
    if s.grid == *target {
        return s.clone();
    }
    let values = target.points().map(|e| s.value_at(e)).collect();
    Spectrum {
        grid: *target,
        values,
    }
}
