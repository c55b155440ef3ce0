//! Trapezoid-rule scoring: integrated square error and L2 distance.

use crate::error::{Error, Result};

pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Uniform trapezoid grid on `[a, b]` with `m` points, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    a: f64,
    b: f64,
    points: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {m}"
            )));
        }
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidGrid(format!("interval [{a}, {b}] is empty")));
        }
        let h = (b - a) / (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|i| a + i as f64 * h).collect();
        points[m - 1] = b;
        Ok(QuadratureGrid { a, b, points })
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn step(&self) -> f64 {
        (self.b - self.a) / (self.points.len() - 1) as f64
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Trapezoid weight of node `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        let h = self.step();
        if i == 0 || i + 1 == self.points.len() {
            0.5 * h
        } else {
            h
        }
    }

    /// Trapezoid integral of grid values.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        check_len(values.len(), self.len())?;
        Ok(self.integrate_unchecked(values))
    }

    fn integrate_unchecked(&self, values: &[f64]) -> f64 {
        let n = values.len();
        let interior: f64 = values[1..n - 1].iter().sum();
        self.step() * (0.5 * (values[0] + values[n - 1]) + interior)
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.points.iter().map(|&x| f(x)).collect()
    }
}

fn check_len(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    Ok(())
}

/// `int (estimate - truth)^2` by the trapezoid rule.
pub fn ise(estimate: &[f64], truth: &[f64], grid: &QuadratureGrid) -> Result<f64> {
    check_len(estimate.len(), truth.len())?;
    check_len(estimate.len(), grid.len())?;
    let sq: Vec<f64> = estimate
        .iter()
        .zip(truth)
        .map(|(p, q)| (p - q) * (p - q))
        .collect();
    Ok(grid.integrate_unchecked(&sq))
}

/// `sqrt(int (f - g)^2)`
pub fn l2_distance(f: &[f64], g: &[f64], grid: &QuadratureGrid) -> Result<f64> {
    ise(f, g, grid).map(f64::sqrt)
}

/// `sqrt(int f^2)`
pub fn l2_norm(f: &[f64], grid: &QuadratureGrid) -> Result<f64> {
    check_len(f.len(), grid.len())?;
    let sq: Vec<f64> = f.iter().map(|v| v * v).collect();
    Ok(grid.integrate_unchecked(&sq).sqrt())
}
