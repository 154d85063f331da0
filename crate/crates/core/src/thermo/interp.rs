//! Shape-preserving monotone piecewise-cubic interpolation (Fritsch-Carlson).
//!
//! Used for tabulated internal-energy laws: the interpolant preserves strict
//! monotonicity of the data, so the derived specific heat stays positive where
//! linear interpolation of sparse tables could not guarantee it after
//! differentiation.

use crate::error::{CoreError, Result};

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Derivative of the interpolant at each knot.
    m: Vec<f64>,
}

impl MonotoneCubic {
    /// Builds the interpolant from knots strictly increasing in both x and y.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.len() < 2 {
            return Err(CoreError::InvalidModel(
                "tabulated law needs at least two (T, e_int) knots".into(),
            ));
        }
        for i in 1..x.len() {
            if !(x[i] > x[i - 1]) || !(y[i] > y[i - 1]) {
                return Err(CoreError::InvalidModel(format!(
                    "tabulated knots must be strictly increasing in both columns (row {i})"
                )));
            }
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidModel("non-finite knot value".into()));
        }

        let n = x.len();
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();

        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = delta[0];
            m[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                // All secants are positive here; the weighted harmonic mean
                // keeps m in the Fritsch-Carlson monotonicity region.
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
            m[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
            m[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }

        Ok(Self { x, y, m })
    }

    pub fn x_min(&self) -> f64 {
        self.x[0]
    }

    pub fn x_max(&self) -> f64 {
        *self.x.last().unwrap()
    }

    pub fn y_min(&self) -> f64 {
        self.y[0]
    }

    pub fn y_max(&self) -> f64 {
        *self.y.last().unwrap()
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.y.iter().copied())
    }

    fn segment_of(&self, x: f64) -> usize {
        match self.x.partition_point(|&xk| xk <= x) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        }
    }

    /// Cubic coefficients of segment `j` in powers of (x - x_j).
    pub fn segment_coeffs(&self, j: usize) -> [f64; 4] {
        let h = self.x[j + 1] - self.x[j];
        let delta = (self.y[j + 1] - self.y[j]) / h;
        let c2 = (3.0 * delta - 2.0 * self.m[j] - self.m[j + 1]) / h;
        let c3 = (self.m[j] + self.m[j + 1] - 2.0 * delta) / (h * h);
        [self.y[j], self.m[j], c2, c3]
    }

    pub fn n_segments(&self) -> usize {
        self.x.len() - 1
    }

    pub fn segment_x(&self, j: usize) -> (f64, f64) {
        (self.x[j], self.x[j + 1])
    }

    pub fn eval(&self, x: f64) -> f64 {
        let j = self.segment_of(x);
        let [c0, c1, c2, c3] = self.segment_coeffs(j);
        let s = x - self.x[j];
        c0 + s * (c1 + s * (c2 + s * c3))
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let j = self.segment_of(x);
        let [_, c1, c2, c3] = self.segment_coeffs(j);
        let s = x - self.x[j];
        c1 + s * (2.0 * c2 + s * 3.0 * c3)
    }

    /// Inverts y = f(x) on the knot span. Newton from the bracketing segment,
    /// with bisection fallback; f is strictly increasing.
    pub fn invert(&self, y: f64) -> Result<f64> {
        if !(y >= self.y_min() && y <= self.y_max()) {
            return Err(CoreError::EnergyRange {
                e: y,
                e_min: self.y_min(),
                e_max: self.y_max(),
            });
        }
        let j = match self.y.partition_point(|&yk| yk <= y) {
            0 => 0,
            p => (p - 1).min(self.y.len() - 2),
        };
        let (mut lo, mut hi) = (self.x[j], self.x[j + 1]);
        let mut t = lo + (hi - lo) * (y - self.y[j]) / (self.y[j + 1] - self.y[j]);
        for _ in 0..100 {
            let r = self.eval(t) - y;
            if r > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let d = self.deriv(t);
            let mut step = if d > 0.0 { -r / d } else { f64::NAN };
            if !step.is_finite() || t + step <= lo || t + step >= hi {
                step = 0.5 * (lo + hi) - t;
            }
            t += step;
            if step.abs() <= 1e-15 * t.abs().max(self.x_min().abs()) {
                return Ok(t);
            }
        }
        Err(CoreError::NoConvergence {
            target: y,
            iterations: 100,
        })
    }
}

/// Three-point endpoint slope with the usual monotonicity clamps.
fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_knot_table_is_linear() {
        let s = MonotoneCubic::new(vec![200.0, 400.0], vec![100.0, 300.0]).unwrap();
        assert!((s.eval(300.0) - 200.0).abs() < 1e-12);
        assert!((s.deriv(250.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hits_knots_exactly() {
        let x = vec![1.0, 2.0, 4.0, 7.0];
        let y = vec![0.5, 1.0, 3.0, 10.0];
        let s = MonotoneCubic::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert!((s.eval(*xi) - yi).abs() < 1e-13);
            assert!((s.invert(*yi).unwrap() - xi).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolant_is_monotone() {
        let x = vec![10.0, 20.0, 25.0, 60.0, 100.0];
        let y = vec![1.0, 1.5, 8.0, 8.5, 30.0];
        let s = MonotoneCubic::new(x, y).unwrap();
        let mut prev = s.eval(10.0);
        for i in 1..=900 {
            let xi = 10.0 + 0.1 * i as f64;
            let v = s.eval(xi);
            assert!(v >= prev, "non-monotone at x={xi}");
            prev = v;
        }
    }

    #[test]
    fn rejects_non_increasing() {
        assert!(MonotoneCubic::new(vec![1.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(MonotoneCubic::new(vec![1.0, 2.0], vec![1.0, 0.5]).is_err());
    }

    #[test]
    fn invert_round_trip() {
        let x = vec![10.0, 30.0, 90.0, 200.0];
        let y = vec![2.0, 9.0, 20.0, 70.0];
        let s = MonotoneCubic::new(x, y).unwrap();
        for i in 0..50 {
            let xi = 10.0 + (200.0 - 10.0) * (i as f64) / 49.0;
            let xr = s.invert(s.eval(xi)).unwrap();
            assert!((xr - xi).abs() < 1e-9 * xi, "{xi} vs {xr}");
        }
    }
}
