//! Distance-decay calibration with Hyman's method.
//!
//! The inner model is a doubly-constrained gravity model,
//! `T_ij = A_i O_i B_j D_j exp(alpha * c_ij)`, balanced by alternating row
//! and column scaling (Furness). Hyman's method then adjusts `alpha` until
//! the modeled mean trip cost matches the observed one.
//!
//! Textbook statements use `exp(-beta * c)` with `beta > 0`; here the
//! exponent is written with `alpha = -beta < 0` throughout.

use alloc::vec::Vec;

use thiserror::Error;

use crate::math;

pub const DEFAULT_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 50;
pub const BALANCING_TOLERANCE: f64 = 1e-8;
pub const BALANCING_MAX_SWEEPS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("cost matrix has {got} cells, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("marginals must be finite and non-negative")]
    BadMarginal,
    #[error("origin total {origins} differs from destination total {destinations}")]
    UnequalTotals { origins: f64, destinations: f64 },
    #[error("no trips to distribute")]
    NoTrips,
    #[error("decay parameter must be finite and non-positive, got {0}")]
    BadAlpha(f64),
    #[error("zone {zone} has trips but no reachable counterpart")]
    Infeasible { zone: usize },
    #[error("balancing did not converge after {sweeps} sweeps (residual {residual:e})")]
    NonConvergence { sweeps: usize, residual: f64 },
    #[error("uncalibratable target: mean cost {target} outside achievable range ({low}, {high})")]
    Uncalibratable { target: f64, low: f64, high: f64 },
    #[error("observed mean cost must be finite and positive, got {0}")]
    BadTarget(f64),
    #[error("pair ({origin}, {dest}) has trips but no finite cost")]
    MissingCost { origin: usize, dest: usize },
}

/// Observed trip matrix with the cost of each cell (minutes).
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedTrips {
    rows: usize,
    cols: usize,
    trips: Vec<f64>,
    cost: Vec<Option<f64>>,
}

impl ObservedTrips {
    pub fn new(rows: usize, cols: usize, trips: Vec<f64>, cost: Vec<Option<f64>>) -> Result<Self, CalibrationError> {
        for v in [&trips.len(), &cost.len()] {
            if *v != rows * cols {
                return Err(CalibrationError::ShapeMismatch { expected: rows * cols, got: *v });
            }
        }
        if trips.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(CalibrationError::BadMarginal);
        }
        if trips.iter().sum::<f64>() <= 0.0 {
            return Err(CalibrationError::NoTrips);
        }
        for (k, (&t, c)) in trips.iter().zip(&cost).enumerate() {
            if t > 0.0 && !c.is_some_and(f64::is_finite) {
                return Err(CalibrationError::MissingCost { origin: k / cols, dest: k % cols });
            }
        }
        Ok(ObservedTrips { rows, cols, trips, cost })
    }

    pub fn origins(&self) -> Vec<f64> {
        self.trips.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn destinations(&self) -> Vec<f64> {
        (0..self.cols).map(|j| (0..self.rows).map(|i| self.trips[i * self.cols + j]).sum()).collect()
    }

    pub fn cost(&self) -> &[Option<f64>] {
        &self.cost
    }

    /// Trip-weighted mean cost.
    pub fn mean_cost(&self) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for (&t, c) in self.trips.iter().zip(&self.cost) {
            if t > 0.0 {
                num += t * c.expect("validated");
                den += t;
            }
        }
        num / den
    }

    pub fn scaled(&self, k: f64) -> Self {
        ObservedTrips { trips: self.trips.iter().map(|t| t * k).collect(), ..self.clone() }
    }
}

/// Balanced doubly-constrained trip matrix (row-major).
pub fn gravity_trips(origins: &[f64], dests: &[f64], cost: &[Option<f64>], alpha: f64) -> Result<Vec<f64>, CalibrationError> {
    let (n, m) = (origins.len(), dests.len());
    if cost.len() != n * m {
        return Err(CalibrationError::ShapeMismatch { expected: n * m, got: cost.len() });
    }
    if !(alpha.is_finite() && alpha <= 0.0) {
        return Err(CalibrationError::BadAlpha(alpha));
    }
    if origins.iter().chain(dests).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(CalibrationError::BadMarginal);
    }
    let o_total: f64 = origins.iter().sum();
    let d_total: f64 = dests.iter().sum();
    if o_total <= 0.0 {
        return Err(CalibrationError::NoTrips);
    }
    if (o_total - d_total).abs() > 1e-9 * o_total {
        return Err(CalibrationError::UnequalTotals { origins: o_total, destinations: d_total });
    }

    // Deterrence shifted by each row's minimum cost; the shift is absorbed by A_i.
    let mut f = alloc::vec![0.0; n * m];
    for i in 0..n {
        let row = &cost[i * m..(i + 1) * m];
        let min = row.iter().flatten().copied().filter(|c| c.is_finite()).fold(f64::INFINITY, f64::min);
        for j in 0..m {
            if let Some(c) = row[j].filter(|c| c.is_finite()) {
                f[i * m + j] = math::exp(alpha * (c - min));
            }
        }
    }

    let mut a = alloc::vec![1.0; n];
    let mut b = alloc::vec![1.0; m];
    let mut residual = f64::INFINITY;
    for _ in 0..BALANCING_MAX_SWEEPS {
        for i in 0..n {
            if origins[i] == 0.0 {
                continue;
            }
            let s: f64 = (0..m).map(|j| b[j] * dests[j] * f[i * m + j]).sum();
            if s <= 0.0 {
                return Err(CalibrationError::Infeasible { zone: i });
            }
            a[i] = 1.0 / s;
        }
        for j in 0..m {
            if dests[j] == 0.0 {
                continue;
            }
            let s: f64 = (0..n).map(|i| a[i] * origins[i] * f[i * m + j]).sum();
            if s <= 0.0 {
                return Err(CalibrationError::Infeasible { zone: j });
            }
            b[j] = 1.0 / s;
        }
        // columns now match exactly; measure the row mismatch
        residual = 0.0;
        for i in 0..n {
            if origins[i] == 0.0 {
                continue;
            }
            let row: f64 = (0..m).map(|j| a[i] * origins[i] * b[j] * dests[j] * f[i * m + j]).sum();
            residual = residual.max((row - origins[i]).abs() / origins[i]);
        }
        if residual <= BALANCING_TOLERANCE {
            let mut t = alloc::vec![0.0; n * m];
            for i in 0..n {
                for j in 0..m {
                    t[i * m + j] = a[i] * origins[i] * b[j] * dests[j] * f[i * m + j];
                }
            }
            return Ok(t);
        }
    }
    Err(CalibrationError::NonConvergence { sweeps: BALANCING_MAX_SWEEPS, residual })
}

/// Trip-weighted mean cost of the balanced gravity model at `alpha`.
pub fn gravity_mean_cost(origins: &[f64], dests: &[f64], cost: &[Option<f64>], alpha: f64) -> Result<f64, CalibrationError> {
    let t = gravity_trips(origins, dests, cost, alpha)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (tij, c) in t.iter().zip(cost) {
        if let Some(c) = c {
            if *tij > 0.0 {
                num += tij * c;
                den += tij;
            }
        }
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub alpha: f64,
    /// `(alpha_m, modeled mean cost)` for every model evaluation.
    pub iterations: Vec<(f64, f64)>,
    pub converged: bool,
}

/// Modeled mean costs bracketing what any negative `alpha` can reach:
/// the unconstrained-decay mean (alpha -> 0) and a very steep decay.
fn achievable_range(origins: &[f64], dests: &[f64], cost: &[Option<f64>]) -> Result<(f64, f64), CalibrationError> {
    let high = gravity_mean_cost(origins, dests, cost, 0.0)?;
    let finite = cost.iter().flatten().copied().filter(|c| c.is_finite());
    let (lo_c, hi_c) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), c| (l.min(c), h.max(c)));
    let spread = hi_c - lo_c;
    if !(spread > 0.0) {
        return Ok((high, high));
    }
    let mut last_err = None;
    for steepness in [50.0, 20.0, 10.0] {
        match gravity_mean_cost(origins, dests, cost, -steepness / spread) {
            Ok(low) => return Ok((low, high)),
            Err(e @ CalibrationError::NonConvergence { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.expect("at least one attempt"))
}

/// Hyman's method: start from `-1 / target`, rescale once by the ratio of
/// modeled to observed mean, then iterate secant steps on the mean cost.
pub fn calibrate_alpha(
    origins: &[f64],
    dests: &[f64],
    cost: &[Option<f64>],
    target: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CalibrationResult, CalibrationError> {
    if !(target.is_finite() && target > 0.0) {
        return Err(CalibrationError::BadTarget(target));
    }
    let (low, high) = achievable_range(origins, dests, cost)?;
    if !(target > low && target < high) {
        return Err(CalibrationError::Uncalibratable { target, low, high });
    }
    let close = |c: f64| (c - target).abs() / target <= tol;
    let mut trace: Vec<(f64, f64)> = Vec::new();

    let a1 = -1.0 / target;
    let c1 = gravity_mean_cost(origins, dests, cost, a1)?;
    trace.push((a1, c1));
    if close(c1) {
        return Ok(CalibrationResult { alpha: a1, iterations: trace, converged: true });
    }
    let a2 = a1 * c1 / target;
    while trace.len() < max_iter {
        let next = if trace.len() == 1 {
            a2
        } else {
            let (a_prev, c_prev) = trace[trace.len() - 2];
            let (a_cur, c_cur) = trace[trace.len() - 1];
            if c_cur == c_prev {
                break;
            }
            let a = ((target - c_prev) * a_cur - (target - c_cur) * a_prev) / (c_cur - c_prev);
            // stay on the decay side
            if a.is_finite() && a < 0.0 { a } else { a_cur / 2.0 }
        };
        let c = gravity_mean_cost(origins, dests, cost, next)?;
        trace.push((next, c));
        if close(c) {
            return Ok(CalibrationResult { alpha: next, iterations: trace, converged: true });
        }
    }
    let alpha = trace.last().expect("at least one evaluation").0;
    Ok(CalibrationResult { alpha, iterations: trace, converged: false })
}

/// Calibrates against an observed trip matrix with the defaults.
pub fn calibrate_trips(observed: &ObservedTrips) -> Result<CalibrationResult, CalibrationError> {
    calibrate_alpha(
        &observed.origins(),
        &observed.destinations(),
        &observed.cost,
        observed.mean_cost(),
        DEFAULT_TOLERANCE,
        DEFAULT_MAX_ITER,
    )
}
