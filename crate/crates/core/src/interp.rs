//! Shape-preserving piecewise cubic Hermite interpolation (PCHIP).
//!
//! Slopes follow Fritsch & Carlson with the weighted harmonic mean at
//! interior knots and the non-centered three-point formula at the ends,
//! which is what SciPy's `PchipInterpolator` computes. On each interval the
//! interpolant stays between the two knot values, so it never overshoots.

use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InterpError {
    #[error("need at least 2 knots, got {0}")]
    TooFewKnots(usize),
    #[error("knot abscissae must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("knot and value counts differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, InterpError> {
        if x.len() != y.len() {
            return Err(InterpError::LengthMismatch(x.len(), y.len()));
        }
        if x.len() < 2 {
            return Err(InterpError::TooFewKnots(x.len()));
        }
        if let Some(i) = x.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(InterpError::NotIncreasing(i + 1));
        }
        let slopes = slopes(&x, &y);
        Ok(Pchip { x, y, slopes })
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.x, &self.y)
    }

    /// Value at `q`; queries outside the knot range return the nearest end value.
    pub fn eval(&self, q: f64) -> f64 {
        let n = self.x.len();
        if q <= self.x[0] {
            return self.y[0];
        }
        if q >= self.x[n - 1] {
            return self.y[n - 1];
        }
        // last knot with x[k] <= q
        let k = self.x.partition_point(|&xk| xk <= q) - 1;
        let h = self.x[k + 1] - self.x[k];
        let t = (q - self.x[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        // h00 = 1 - h01 folded in, so flat intervals return the knot value exactly
        self.y[k] + h01 * (self.y[k + 1] - self.y[k]) + h * (h10 * self.slopes[k] + h11 * self.slopes[k + 1])
    }
}

fn slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return alloc::vec![delta[0]; 2];
    }
    let mut d = alloc::vec![0.0; n];
    for i in 1..n - 1 {
        let (a, b) = (delta[i - 1], delta[i]);
        if a == 0.0 || b == 0.0 || (a > 0.0) != (b > 0.0) {
            continue;
        }
        let w1 = 2.0 * h[i] + h[i - 1];
        let w2 = h[i] + 2.0 * h[i - 1];
        d[i] = (w1 + w2) / (w1 / a + w2 / b);
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, m0: f64, m1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    let sign = |v: f64| if v > 0.0 { 1 } else if v < 0.0 { -1 } else { 0 };
    if sign(d) != sign(m0) {
        0.0
    } else if sign(m0) != sign(m1) && d.abs() > 3.0 * m0.abs() {
        3.0 * m0
    } else {
        d
    }
}
