//! Core algorithms for time-of-day-varying potential accessibility.
//!
//! The crate is `no_std` (with `alloc`) and performs no IO. It covers:
//!
//! * [`network`]: road graph with 5-minute speed profiles and a FIFO arc
//!   traversal model.
//! * [`routing`]: time-dependent earliest-arrival search and zone-level
//!   travel-time cubes, indexed by departure or arrival slot.
//! * [`zones`]: transport zones, centroid snapping, intrazonal times and
//!   cost composition.
//! * [`activity`]: event filtering, unique-user counts and the normalized
//!   attractiveness surface.
//! * [`accessibility`]: the exponential potential measure and the four
//!   congestion/attractiveness scenarios.
//! * [`calibration`]: doubly-constrained gravity model and Hyman's method
//!   for the decay parameter.
//! * [`stats`]: summaries, coefficients of variation and ratio tables.
//!
//! File formats, parallel execution and the command-line tool live in the
//! companion `dynacc` crate.
#![no_std]
#![deny(rust_2018_idioms, unused_must_use)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod accessibility;
pub mod activity;
pub mod calibration;
pub mod exec;
pub mod geometry;
pub mod interp;
pub mod network;
pub mod routing;
pub mod stats;
pub mod synthetic;
pub mod time;
pub mod zones;

pub(crate) mod math;

pub use accessibility::{AccessibilityField, DecayParameter, ScenarioKind};
pub use activity::{ActivitySurface, GeoEvent, RawCounts};
pub use calibration::{CalibrationResult, ObservedTrips};
pub use network::{Arc, ArcId, Junction, JunctionId, RoadNetwork, SpeedProfile};
pub use routing::{IndexingMode, TravelTimeCube};
pub use stats::{RatioRow, SummaryRow};
pub use time::TimeGrid;
pub use zones::{Zone, ZoneSystem};

/// Non-fatal conditions collected while building artifacts.
///
/// The core crate never logs; callers decide how to surface these.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// The zone's snapped junction lies outside its polygon.
    CentroidJunctionOutside { zone: alloc::string::String },
    /// No network junction lies inside the zone polygon; self time set to 0.
    NoInteriorJunctions { zone: alloc::string::String },
    /// Some sampled junctions cannot reach the centroid junction.
    UnreachableSampledJunctions { zone: alloc::string::String, count: usize },
    /// Number of (origin, destination, slot) cells without a path.
    UnreachableCells { count: usize },
    /// Number of pairs regrouped from fewer than two finite samples.
    SparseRegroupPairs { count: usize },
    /// No user was observed anywhere in this slot; masses stay zero.
    EmptySlot { slot: usize },
}
