//! Attractiveness surface from geolocated, timestamped user events.
//!
//! Events are filtered to the analysis weekdays and daily window, assigned
//! to zones by point-in-polygon, and counted as distinct `(user, day)`
//! pairs per zone and slot. Each slot is then normalized to 100,000 units.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Datelike, NaiveDateTime, Timelike, Weekday};

use crate::geometry::Point;
use crate::math;
use crate::time::TimeGrid;
use crate::zones::ZoneSystem;
use crate::Warning;

/// Total mass of every non-empty slot.
pub const MASS_UNITS: f64 = 100_000.0;

/// Weekdays analysed by default (typical working days).
pub const WORKING_DAYS: [Weekday; 3] = [Weekday::Tue, Weekday::Wed, Weekday::Thu];

#[derive(Debug, Clone, PartialEq)]
pub struct GeoEvent {
    pub user_id: String,
    /// Local wall-clock time.
    pub timestamp: NaiveDateTime,
    pub x: f64,
    pub y: f64,
}

impl GeoEvent {
    pub fn seconds_of_day(&self) -> u32 {
        self.timestamp.time().num_seconds_from_midnight()
    }
}

/// Why an event did not contribute to the counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RejectReason {
    UnparseableTimestamp,
    MalformedRow,
    NonFiniteCoordinates,
    OutsideZones,
    OutsideWindow,
    ExcludedWeekday,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            RejectReason::UnparseableTimestamp => "unparseable_timestamp",
            RejectReason::MalformedRow => "malformed_row",
            RejectReason::NonFiniteCoordinates => "non_finite_coordinates",
            RejectReason::OutsideZones => "outside_zones",
            RejectReason::OutsideWindow => "outside_window",
            RejectReason::ExcludedWeekday => "excluded_weekday",
        }
    }
}

/// Keeps events on the given weekdays whose time of day lies in `[start, end)` of `window`.
pub fn filter_events(events: &[GeoEvent], weekdays: &[Weekday], window: &TimeGrid) -> Vec<GeoEvent> {
    events
        .iter()
        .filter(|e| weekdays.contains(&e.timestamp.weekday()) && window.contains(e.seconds_of_day()))
        .cloned()
        .collect()
}

/// Distinct-user counts per zone and slot, laid out slot-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCounts {
    zone_ids: Vec<String>,
    grid: TimeGrid,
    counts: Vec<u64>,
}

impl RawCounts {
    /// Counts from a slot-major table (`counts[slot * zones + zone]`).
    pub fn from_table(zone_ids: Vec<String>, grid: TimeGrid, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), zone_ids.len() * grid.len(), "count table shape");
        RawCounts { zone_ids, grid, counts }
    }

    pub fn zone_ids(&self) -> &[String] {
        &self.zone_ids
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn get(&self, zone: usize, slot: usize) -> u64 {
        self.counts[slot * self.zone_ids.len() + zone]
    }

    pub fn slot(&self, slot: usize) -> &[u64] {
        let n = self.zone_ids.len();
        &self.counts[slot * n..(slot + 1) * n]
    }

    /// Same counts multiplied by `k` (for scale checks).
    pub fn scaled(&self, k: u64) -> Self {
        RawCounts { counts: self.counts.iter().map(|c| c * k).collect(), ..self.clone() }
    }
}

/// Counts distinct `(user, calendar day)` pairs per zone and slot.
///
/// Returns the counts plus `(event index, reason)` for each dropped event.
pub fn count_unique_users(
    events: &[GeoEvent],
    zones: &ZoneSystem,
    grid: &TimeGrid,
) -> (RawCounts, Vec<(usize, RejectReason)>) {
    let mut seen: BTreeSet<(usize, usize, &str, chrono::NaiveDate)> = BTreeSet::new();
    let mut rejects = Vec::new();
    for (i, e) in events.iter().enumerate() {
        if !(e.x.is_finite() && e.y.is_finite()) {
            rejects.push((i, RejectReason::NonFiniteCoordinates));
            continue;
        }
        let Some(slot) = grid.slot_of(e.seconds_of_day()) else {
            rejects.push((i, RejectReason::OutsideWindow));
            continue;
        };
        let Some(zone) = zones.locate(Point::new(e.x, e.y)) else {
            rejects.push((i, RejectReason::OutsideZones));
            continue;
        };
        seen.insert((zone, slot, e.user_id.as_str(), e.timestamp.date()));
    }
    let n = zones.len();
    let mut counts = alloc::vec![0u64; n * grid.len()];
    for (zone, slot, _, _) in seen {
        counts[slot * n + zone] += 1;
    }
    let zone_ids = zones.ids().map(String::from).collect();
    (RawCounts { zone_ids, grid: *grid, counts }, rejects)
}

/// Normalized masses per zone and slot (slot-major).
#[derive(Debug, Clone, PartialEq)]
pub struct ActivitySurface {
    raw: RawCounts,
    mass: Vec<f64>,
    empty_slots: Vec<usize>,
}

/// Scales each slot so that masses sum to [`MASS_UNITS`]; empty slots stay
/// at zero and are reported.
pub fn normalize(raw: &RawCounts) -> (ActivitySurface, Vec<Warning>) {
    let n = raw.zone_ids.len();
    let mut mass = alloc::vec![0.0; raw.counts.len()];
    let mut empty_slots = Vec::new();
    for s in 0..raw.grid.len() {
        let row = raw.slot(s);
        let total: u64 = row.iter().sum();
        if total == 0 {
            empty_slots.push(s);
            continue;
        }
        for (z, &c) in row.iter().enumerate() {
            mass[s * n + z] = MASS_UNITS * c as f64 / total as f64;
        }
    }
    let warnings = empty_slots.iter().map(|&slot| Warning::EmptySlot { slot }).collect();
    (ActivitySurface { raw: raw.clone(), mass, empty_slots }, warnings)
}

impl ActivitySurface {
    /// Surface with given masses (slot-major) and no raw counts behind it.
    pub fn from_masses(zone_ids: Vec<String>, grid: TimeGrid, mass: Vec<f64>) -> Self {
        assert_eq!(mass.len(), zone_ids.len() * grid.len(), "mass table shape");
        let n = zone_ids.len();
        let empty_slots = (0..grid.len()).filter(|s| mass[s * n..(s + 1) * n].iter().all(|&m| m == 0.0)).collect();
        let counts = alloc::vec![0; mass.len()];
        ActivitySurface { raw: RawCounts { zone_ids, grid, counts }, mass, empty_slots }
    }

    pub fn zone_ids(&self) -> &[String] {
        &self.raw.zone_ids
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.raw.grid
    }

    pub fn raw(&self) -> &RawCounts {
        &self.raw
    }

    pub fn num_zones(&self) -> usize {
        self.raw.zone_ids.len()
    }

    pub fn mass(&self, zone: usize, slot: usize) -> f64 {
        self.mass[slot * self.num_zones() + zone]
    }

    pub fn slot_masses(&self, slot: usize) -> &[f64] {
        let n = self.num_zones();
        &self.mass[slot * n..(slot + 1) * n]
    }

    pub fn empty_slots(&self) -> &[usize] {
        &self.empty_slots
    }

    /// Per-zone mean mass over all slots of the grid.
    pub fn average(&self) -> Vec<f64> {
        let n = self.num_zones();
        let slots = self.raw.grid.len();
        (0..n).map(|z| math::mean((0..slots).map(|s| self.mass[s * n + z])).unwrap_or(0.0)).collect()
    }
}

/// Per-zone mean mass over the day; see [`ActivitySurface::average`].
pub fn average_surface(surface: &ActivitySurface) -> Vec<f64> {
    surface.average()
}
