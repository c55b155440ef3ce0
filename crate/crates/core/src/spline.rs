//! Natural cubic spline on a uniform grid.

/// Interpolates `values` at `x_0 + n h` with zero second derivative at both ends.
#[derive(Debug, Clone)]
pub struct UniformCubicSpline {
    x0: f64,
    step: f64,
    inv_step: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl UniformCubicSpline {
    /// Needs at least two samples and a positive step.
    pub fn new(x0: f64, step: f64, values: Vec<f64>) -> Self {
        assert!(values.len() >= 2, "spline needs at least two samples");
        assert!(step > 0.0, "spline step must be positive");
        let second = natural_second_derivatives(&values, step);
        UniformCubicSpline {
            x0,
            step,
            inv_step: 1.0 / step,
            values,
            second,
        }
    }

    pub fn x_min(&self) -> f64 {
        self.x0
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + (self.values.len() - 1) as f64 * self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Evaluates the spline; arguments outside the knot range are clamped to
    /// the end intervals (callers short-circuit out-of-support points).
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let last = self.values.len() - 2;
        let pos = (x - self.x0) * self.inv_step;
        let i = if pos <= 0.0 {
            0
        } else {
            (pos.floor() as usize).min(last)
        };
        let b = pos - i as f64;
        if b == 0.0 {
            return self.values[i];
        }
        let a = 1.0 - b;
        let h2 = self.step * self.step / 6.0;
        a * self.values[i]
            + b * self.values[i + 1]
            + h2 * ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1])
    }
}

/// Solves the tridiagonal system `M_{i-1} + 4 M_i + M_{i+1} = 6 (y_{i+1} - 2 y_i + y_{i-1}) / h^2`
/// with `M_0 = M_n = 0` (Thomas algorithm).
fn natural_second_derivatives(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let interior = n - 2;
    let scale = 6.0 / (h * h);
    let mut c_prime = vec![0.0; interior];
    let mut d_prime = vec![0.0; interior];
    for k in 0..interior {
        let i = k + 1;
        let rhs = scale * (y[i + 1] - 2.0 * y[i] + y[i - 1]);
        if k == 0 {
            c_prime[k] = 1.0 / 4.0;
            d_prime[k] = rhs / 4.0;
        } else {
            let denom = 4.0 - c_prime[k - 1];
            c_prime[k] = 1.0 / denom;
            d_prime[k] = (rhs - d_prime[k - 1]) / denom;
        }
    }
    m[interior] = d_prime[interior - 1];
    for k in (0..interior - 1).rev() {
        m[k + 1] = d_prime[k] - c_prime[k] * m[k + 2];
    }
    m
}
