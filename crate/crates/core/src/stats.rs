//! Descriptive statistics over accessibility fields.
//!
//! Standard deviations are population deviations (divide by `n`).
//! Coefficients of variation are percentages and are `None` when the mean is
//! zero.

use alloc::string::{String, ToString};

use thiserror::Error;

use crate::accessibility::{AccessibilityField, ScenarioKind};
use crate::math;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("no values to summarize")]
    Empty,
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("scenario {0} not present in field")]
    MissingScenario(&'static str),
    #[error("slot {0} out of range")]
    SlotOutOfRange(usize),
    #[error("zone {0} out of range")]
    ZoneOutOfRange(usize),
    #[error("need at least two slots, got {0}")]
    TooFewSlots(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
    /// Percent; `None` when the mean is zero.
    pub cv: Option<f64>,
}

pub fn coefficient_of_variation(mean: f64, sd: f64) -> Option<f64> {
    (mean != 0.0).then(|| 100.0 * sd / mean)
}

/// Population mean and standard deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, math::sqrt(var))
}

pub fn summarize(label: &str, values: &[f64]) -> Result<SummaryRow, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(i));
    }
    let (mean, sd) = mean_sd(values);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SummaryRow { label: label.to_string(), n: values.len(), min, max, mean, sd, cv: coefficient_of_variation(mean, sd) })
}

/// Summary over zones of one scenario at one slot.
pub fn summarize_across_zones(field: &AccessibilityField, kind: ScenarioKind, slot: usize) -> Result<SummaryRow, StatsError> {
    if !field.has(kind) {
        return Err(StatsError::MissingScenario(kind.name()));
    }
    let values = field.slot_values(kind, slot).ok_or(StatsError::SlotOutOfRange(slot))?;
    let label = alloc::format!("{} {}", kind.name(), crate::time::format_hhmm(field.grid().slot_start(slot)));
    summarize(&label, values)
}

/// Summary over zones of the static reference field.
pub fn summarize_reference(field: &AccessibilityField) -> Result<SummaryRow, StatsError> {
    summarize("reference", field.reference())
}

/// Coefficient of variation of one zone's values over the day.
pub fn cv_over_time(field: &AccessibilityField, kind: ScenarioKind, zone: usize) -> Result<Option<f64>, StatsError> {
    if !field.has(kind) {
        return Err(StatsError::MissingScenario(kind.name()));
    }
    if zone >= field.zone_ids().len() {
        return Err(StatsError::ZoneOutOfRange(zone));
    }
    let series = field.zone_series(kind, zone).expect("checked scenario and zone");
    if series.len() < 2 {
        return Err(StatsError::TooFewSlots(series.len()));
    }
    Ok(summarize("", &series)?.cv)
}

/// Element-wise `scenario / reference` for each statistic.
///
/// A field is `None` when the reference statistic is zero (or undefined).
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub label: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub cv: Option<f64>,
}

fn ratio(a: f64, b: f64) -> Option<f64> {
    (b != 0.0).then(|| a / b)
}

pub fn ratios_vs_reference(row: &SummaryRow, reference: &SummaryRow) -> RatioRow {
    RatioRow {
        label: row.label.clone(),
        min: ratio(row.min, reference.min),
        max: ratio(row.max, reference.max),
        mean: ratio(row.mean, reference.mean),
        sd: ratio(row.sd, reference.sd),
        cv: match (row.cv, reference.cv) {
            (Some(a), Some(b)) => ratio(a, b),
            _ => None,
        },
    }
}
