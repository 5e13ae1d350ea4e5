//! Deterministic synthetic cities for tests, demos and benchmarks.
//!
//! A square grid of junctions joined in both directions, with a fast
//! perimeter ring (frc 0), ordinary streets (frc 6) and a few alleys
//! (frc 7). Street and ring arcs share one speed profile that slows
//! traffic during configurable peak windows.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::activity::GeoEvent;
use crate::geometry::{MultiPolygon, Point};
use crate::network::{ArcRecord, Junction, NetworkError, RoadNetwork, SpeedProfile, PROFILE_SLOTS, PROFILE_SLOT_SECONDS};

pub const PEAK_PROFILE: &str = "peak";

#[derive(Debug, Clone, PartialEq)]
pub struct GridCity {
    /// Junctions per side.
    pub side: usize,
    pub spacing_m: f64,
    pub ring_kmh: f64,
    pub street_kmh: f64,
    pub alley_kmh: f64,
    /// Factor applied inside peak windows; `1.0` gives a free-flow city.
    pub peak_factor: f64,
    /// Peak windows as `[start, end)` seconds of day.
    pub peaks: Vec<(u32, u32)>,
}

impl Default for GridCity {
    fn default() -> Self {
        GridCity {
            side: 10,
            spacing_m: 400.0,
            ring_kmh: 80.0,
            street_kmh: 40.0,
            alley_kmh: 20.0,
            peak_factor: 0.4,
            peaks: alloc::vec![(7 * 3600 + 1800, 9 * 3600 + 1800), (17 * 3600, 19 * 3600)],
        }
    }
}

impl GridCity {
    pub fn free_flow(mut self) -> Self {
        self.peak_factor = 1.0;
        self
    }

    pub fn in_peak(&self, seconds_of_day: u32) -> bool {
        self.peaks.iter().any(|&(s, e)| seconds_of_day >= s && seconds_of_day < e)
    }

    pub fn profile(&self) -> SpeedProfile {
        let factors = (0..PROFILE_SLOTS)
            .map(|k| {
                let t = (k as f64 * PROFILE_SLOT_SECONDS) as u32;
                if self.in_peak(t) { self.peak_factor } else { 1.0 }
            })
            .collect();
        SpeedProfile::new(PEAK_PROFILE, factors).expect("peak factor in (0, 2]")
    }

    fn extent(&self) -> (f64, f64) {
        let half = self.spacing_m / 2.0;
        (-half, (self.side - 1) as f64 * self.spacing_m + half)
    }
}

pub fn junction_name(x: usize, y: usize) -> String {
    format!("j{x}_{y}")
}

/// Junction, arc and profile records of the grid city (before linking).
pub fn grid_city_parts(city: &GridCity) -> (Vec<Junction>, Vec<ArcRecord>, Vec<SpeedProfile>) {
    let n = city.side;
    let mut junctions = Vec::with_capacity(n * n);
    for y in 0..n {
        for x in 0..n {
            junctions.push(Junction::new(junction_name(x, y), x as f64 * city.spacing_m, y as f64 * city.spacing_m));
        }
    }
    let on_rim = |x: usize, y: usize| x == 0 || y == 0 || x == n - 1 || y == n - 1;
    let mut arcs = Vec::new();
    let mut add = |a: (usize, usize), b: (usize, usize)| {
        let ring = on_rim(a.0, a.1) && on_rim(b.0, b.1) && (a.0 == b.0 && (a.0 == 0 || a.0 == n - 1) || a.1 == b.1 && (a.1 == 0 || a.1 == n - 1));
        // alleys: horizontal links on odd interior rows starting at odd columns
        let alley = !ring && a.1 == b.1 && a.1 % 2 == 1 && a.1 < n - 1 && a.0.min(b.0) % 2 == 1 && a.0.max(b.0) < n - 1;
        let (frc, kmh) = if ring {
            (0, city.ring_kmh)
        } else if alley {
            (7, city.alley_kmh)
        } else {
            (6, city.street_kmh)
        };
        for (from, to) in [(a, b), (b, a)] {
            let rec = ArcRecord::new(
                format!("{}-{}", junction_name(from.0, from.1), junction_name(to.0, to.1)),
                junction_name(from.0, from.1),
                junction_name(to.0, to.1),
                city.spacing_m,
                kmh,
                frc,
            );
            arcs.push(if alley { rec } else { rec.with_profile(PEAK_PROFILE) });
        }
    };
    for y in 0..n {
        for x in 0..n {
            if x + 1 < n {
                add((x, y), (x + 1, y));
            }
            if y + 1 < n {
                add((x, y), (x, y + 1));
            }
        }
    }
    (junctions, arcs, alloc::vec![city.profile()])
}

pub fn grid_city(city: &GridCity) -> Result<RoadNetwork, NetworkError> {
    let (j, a, p) = grid_city_parts(city);
    RoadNetwork::from_parts(j, a, p)
}

/// Partitions the city extent into `kx * ky` equal rectangles, ordered
/// row by row from the south-west corner. Zone ids are `z{col}_{row}`.
pub fn grid_zones(city: &GridCity, kx: usize, ky: usize) -> Vec<(String, MultiPolygon)> {
    let (lo, hi) = city.extent();
    let wx = (hi - lo) / kx as f64;
    let wy = (hi - lo) / ky as f64;
    let mut out = Vec::with_capacity(kx * ky);
    for row in 0..ky {
        for col in 0..kx {
            let min = Point::new(lo + col as f64 * wx, lo + row as f64 * wy);
            let max = Point::new(lo + (col + 1) as f64 * wx, lo + (row + 1) as f64 * wy);
            out.push((format!("z{col}_{row}"), MultiPolygon::rectangle(min, max).expect("positive extent")));
        }
    }
    out
}

/// Parameters for synthetic geolocated events.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPlan {
    pub users: usize,
    /// First day of the simulated period; seven consecutive days are used.
    pub first_day: NaiveDate,
    pub days: usize,
    /// Every user posts once per 15-minute slot between these hours.
    pub active_from: u32,
    pub active_to: u32,
    /// Users leave home for a downtown workplace between these times.
    /// `None` keeps everyone at home (a time-constant surface).
    pub work_hours: Option<(u32, u32)>,
    pub seed: u64,
}

impl Default for EventPlan {
    fn default() -> Self {
        EventPlan {
            users: 300,
            first_day: NaiveDate::from_ymd_opt(2013, 3, 4).expect("valid date"),
            days: 7,
            active_from: 6 * 3600,
            active_to: 24 * 3600,
            work_hours: Some((9 * 3600, 17 * 3600)),
            seed: 7,
        }
    }
}

/// Events where each user posts once per quarter hour, from home or (during
/// work hours) from a workplace drawn from the central part of the city.
pub fn city_events(city: &GridCity, plan: &EventPlan) -> Vec<GeoEvent> {
    let (lo, hi) = city.extent();
    let span = hi - lo;
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let mut users = Vec::with_capacity(plan.users);
    for _ in 0..plan.users {
        let home = Point::new(lo + rng.random::<f64>() * span, lo + rng.random::<f64>() * span);
        let work = Point::new(
            lo + span * (0.3 + 0.4 * rng.random::<f64>()),
            lo + span * (0.3 + 0.4 * rng.random::<f64>()),
        );
        users.push((home, work));
    }
    let mut events = Vec::new();
    for day in 0..plan.days {
        let date = plan.first_day + Duration::days(day as i64);
        let midnight: NaiveDateTime = date.and_hms_opt(0, 0, 0).expect("midnight");
        let mut t = plan.active_from;
        while t < plan.active_to {
            for (u, (home, work)) in users.iter().enumerate() {
                let at_work = plan.work_hours.is_some_and(|(s, e)| t >= s && t < e);
                let p = if at_work { *work } else { *home };
                let offset = (u as u32 * 7) % 900;
                events.push(GeoEvent {
                    user_id: format!("u{u}"),
                    timestamp: midnight + Duration::seconds((t + offset) as i64),
                    x: p.x,
                    y: p.y,
                });
            }
            t += 900;
        }
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_counts() {
        let net = grid_city(&GridCity::default()).unwrap();
        assert_eq!(net.num_junctions(), 100);
        assert_eq!(net.num_arcs(), 360);
        assert!(net.is_strongly_connected());
    }

    #[test]
    fn frc_filter_drops_alleys_only() {
        let net = grid_city(&GridCity::default()).unwrap();
        let alleys = net.arcs().iter().filter(|a| a.frc == 7).count();
        let ring = net.arcs().iter().filter(|a| a.frc == 0).count();
        assert!(alleys > 0);
        assert_eq!(ring, 72);
        let kept = net.filter_by_frc(6).unwrap();
        assert_eq!(kept.num_arcs(), 360 - alleys);
        assert_eq!(kept.num_junctions(), 100);
        assert!(kept.is_strongly_connected());
    }

    #[test]
    fn zones_tile_the_extent() {
        let city = GridCity::default();
        let z = grid_zones(&city, 5, 5);
        assert_eq!(z.len(), 25);
        let total: f64 = z.iter().map(|(_, s)| s.area()).sum();
        assert!((total - 4000.0 * 4000.0).abs() < 1e-6);
    }
}
