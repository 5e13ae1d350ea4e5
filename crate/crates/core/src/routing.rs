//! Time-dependent earliest-arrival search and zone travel-time cubes.

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::exec::{Sequential, TaskMap};
use crate::interp::Pchip;
use crate::network::{JunctionId, RoadNetwork};
use crate::time::TimeGrid;
use crate::zones::ZoneSystem;
use crate::Warning;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("origin junction {0} is not in the network")]
    UnknownOrigin(u32),
    #[error("cube must be indexed by {expected}, found {found}")]
    WrongIndexing { expected: IndexingMode, found: IndexingMode },
    #[error("expected {expected} cube cells, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}

/// Earliest-arrival labels from one search, in absolute seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalLabels {
    arrival: Vec<f64>,
}

impl ArrivalLabels {
    pub fn get(&self, j: JunctionId) -> Option<f64> {
        let t = self.arrival[j.index()];
        t.is_finite().then_some(t)
    }

    pub fn is_reachable(&self, j: JunctionId) -> bool {
        self.arrival[j.index()].is_finite()
    }

    /// Raw labels; unreachable junctions hold `+inf`.
    pub fn as_slice(&self) -> &[f64] {
        &self.arrival
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    time: f64,
    node: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on time, then node index
        other.time.total_cmp(&self.time).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Label-setting search over arcs weighted by `cost(arc, label) -> next label`,
/// following outgoing (`forward`) or incoming arcs.
fn label_setting<F>(net: &RoadNetwork, source: JunctionId, start: f64, forward: bool, step: F) -> Vec<f64>
where
    F: Fn(crate::network::ArcId, f64) -> f64,
{
    let mut label = alloc::vec![f64::INFINITY; net.num_junctions()];
    let mut settled = alloc::vec![false; net.num_junctions()];
    let mut heap = BinaryHeap::new();
    label[source.index()] = start;
    heap.push(HeapItem { time: start, node: source.0 });
    while let Some(HeapItem { time, node }) = heap.pop() {
        let u = JunctionId(node);
        if settled[u.index()] {
            continue;
        }
        settled[u.index()] = true;
        let arcs = if forward { net.outgoing(u) } else { net.incoming(u) };
        for &a in arcs {
            let arc = net.arc(a);
            let v = if forward { arc.to } else { arc.from };
            if settled[v.index()] {
                continue;
            }
            let t = step(a, time);
            if t < label[v.index()] {
                label[v.index()] = t;
                heap.push(HeapItem { time: t, node: v.0 });
            }
        }
    }
    label
}

/// Earliest arrival at every junction when leaving `origin` at `departure`
/// (seconds of day), using time-dependent arc traversal. Exact because every
/// arc is FIFO.
pub fn shortest_arrivals(net: &RoadNetwork, origin: JunctionId, departure: f64) -> Result<ArrivalLabels, RoutingError> {
    if origin.index() >= net.num_junctions() {
        return Err(RoutingError::UnknownOrigin(origin.0));
    }
    let arrival = label_setting(net, origin, departure, true, |a, t| net.traverse(a, t));
    Ok(ArrivalLabels { arrival })
}

/// Free-flow seconds from `origin` to every junction (`+inf` if unreachable).
pub fn static_times_from(net: &RoadNetwork, origin: JunctionId) -> Vec<f64> {
    label_setting(net, origin, 0.0, true, |a, t| t + net.free_flow_seconds(a))
}

/// Free-flow seconds from every junction to `target` (`+inf` if unreachable).
pub fn static_times_to(net: &RoadNetwork, target: JunctionId) -> Vec<f64> {
    label_setting(net, target, 0.0, false, |a, t| t + net.free_flow_seconds(a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexingMode {
    ByDeparture,
    ByArrival,
}

impl IndexingMode {
    pub fn as_str(self) -> &'static str {
        match self {
            IndexingMode::ByDeparture => "departure",
            IndexingMode::ByArrival => "arrival",
        }
    }
}

impl core::fmt::Display for IndexingMode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Origin x destination x slot travel times in minutes.
///
/// Cells are stored pair-major (`(o * n + d) * slots + s`); unreachable
/// cells are kept as NaN internally and surface as `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeCube {
    zone_ids: Vec<String>,
    grid: TimeGrid,
    mode: IndexingMode,
    values: Vec<f64>,
}

impl TravelTimeCube {
    /// Builds a cube from pair-major values; `None` marks unreachable cells.
    pub fn from_values(
        zone_ids: Vec<String>,
        grid: TimeGrid,
        mode: IndexingMode,
        values: Vec<Option<f64>>,
    ) -> Result<Self, RoutingError> {
        let expected = zone_ids.len() * zone_ids.len() * grid.len();
        if values.len() != expected {
            return Err(RoutingError::ShapeMismatch { expected, got: values.len() });
        }
        let values = values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        Ok(TravelTimeCube { zone_ids, grid, mode, values })
    }

    /// Cube whose every slot repeats the given `n x n` matrix (row-major).
    pub fn constant(zone_ids: Vec<String>, grid: TimeGrid, mode: IndexingMode, matrix: &[Option<f64>]) -> Self {
        let n = zone_ids.len();
        assert_eq!(matrix.len(), n * n, "matrix shape");
        let slots = grid.len();
        let mut values = Vec::with_capacity(n * n * slots);
        for m in matrix {
            values.extend(core::iter::repeat_n(m.unwrap_or(f64::NAN), slots));
        }
        TravelTimeCube { zone_ids, grid, mode, values }
    }

    pub fn zone_ids(&self) -> &[String] {
        &self.zone_ids
    }

    pub fn num_zones(&self) -> usize {
        self.zone_ids.len()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn mode(&self) -> IndexingMode {
        self.mode
    }

    #[inline]
    pub fn get(&self, origin: usize, dest: usize, slot: usize) -> Option<f64> {
        let v = self.values[self.cell(origin, dest, slot)];
        (!v.is_nan()).then_some(v)
    }

    #[inline]
    fn cell(&self, origin: usize, dest: usize, slot: usize) -> usize {
        (origin * self.zone_ids.len() + dest) * self.grid.len() + slot
    }

    /// All slots of one origin/destination pair (NaN = unreachable).
    pub fn pair_series(&self, origin: usize, dest: usize) -> &[f64] {
        let s = self.grid.len();
        let start = self.cell(origin, dest, 0);
        &self.values[start..start + s]
    }

    pub fn unreachable_cells(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }
}

/// Minutes from each zone centroid, leaving at `departure`, to every zone
/// centroid; the diagonal carries the zone's self time.
pub fn departure_row(net: &RoadNetwork, zones: &ZoneSystem, origin: usize, departure: f64) -> Vec<Option<f64>> {
    let zs = zones.zones();
    let labels = shortest_arrivals(net, zs[origin].centroid_junction, departure).expect("centroid junction in network");
    zs.iter()
        .enumerate()
        .map(|(d, z)| {
            if d == origin {
                Some(zs[origin].self_time)
            } else {
                labels.get(z.centroid_junction).map(|t| (t - departure) / 60.0)
            }
        })
        .collect()
}

/// Departure-indexed cube: one time-dependent search per origin zone and
/// slot start. Reports the number of unreachable cells as a warning.
pub fn build_departure_cube(net: &RoadNetwork, zones: &ZoneSystem, grid: &TimeGrid) -> (TravelTimeCube, Vec<Warning>) {
    build_departure_cube_with(&Sequential, net, zones, grid)
}

pub fn build_departure_cube_with<M: TaskMap>(
    exec: &M,
    net: &RoadNetwork,
    zones: &ZoneSystem,
    grid: &TimeGrid,
) -> (TravelTimeCube, Vec<Warning>) {
    let n = zones.len();
    let slots = grid.len();
    let rows = exec.map(n * slots, |task| {
        let (origin, slot) = (task / slots, task % slots);
        departure_row(net, zones, origin, grid.slot_start(slot) as f64)
    });
    let mut values = alloc::vec![f64::NAN; n * n * slots];
    for (task, row) in rows.into_iter().enumerate() {
        let (origin, slot) = (task / slots, task % slots);
        for (dest, v) in row.into_iter().enumerate() {
            values[(origin * n + dest) * slots + slot] = v.unwrap_or(f64::NAN);
        }
    }
    let cube = TravelTimeCube {
        zone_ids: zones.ids().map(String::from).collect(),
        grid: *grid,
        mode: IndexingMode::ByDeparture,
        values,
    };
    let unreachable = cube.unreachable_cells();
    let warnings = if unreachable > 0 { alloc::vec![Warning::UnreachableCells { count: unreachable }] } else { Vec::new() };
    (cube, warnings)
}

/// Outcome of regrouping one pair's series.
enum Regrouped {
    Interpolated,
    Sparse,
    Unreachable,
}

fn regroup_series(grid: &TimeGrid, series: &[f64], out: &mut [f64]) -> Regrouped {
    let mut xs = Vec::with_capacity(series.len());
    let mut ys = Vec::with_capacity(series.len());
    for (k, &tt) in series.iter().enumerate() {
        if !tt.is_finite() {
            continue;
        }
        let arrival = grid.slot_start(k) as f64 + tt * 60.0;
        // FIFO makes arrivals increasing; drop any rounding-level ties
        if xs.last().is_some_and(|&last| arrival <= last) {
            continue;
        }
        xs.push(arrival);
        ys.push(tt);
    }
    match xs.len() {
        0 => {
            out.fill(f64::NAN);
            Regrouped::Unreachable
        }
        1 => {
            out.fill(ys[0]);
            Regrouped::Sparse
        }
        _ => {
            let p = Pchip::new(xs, ys).expect("strictly increasing knots");
            for (s, o) in out.iter_mut().enumerate() {
                *o = p.eval(grid.slot_start(s) as f64);
            }
            Regrouped::Interpolated
        }
    }
}

/// Re-indexes a departure cube by arrival time: per pair, a monotone cubic
/// through `(departure + tt, tt)` is evaluated at each slot start, clamping
/// to the first/last sample outside the sampled arrival range.
pub fn regroup_by_arrival(cube: &TravelTimeCube) -> Result<(TravelTimeCube, Vec<Warning>), RoutingError> {
    regroup_by_arrival_with(&Sequential, cube)
}

pub fn regroup_by_arrival_with<M: TaskMap>(
    exec: &M,
    cube: &TravelTimeCube,
) -> Result<(TravelTimeCube, Vec<Warning>), RoutingError> {
    if cube.mode != IndexingMode::ByDeparture {
        return Err(RoutingError::WrongIndexing { expected: IndexingMode::ByDeparture, found: cube.mode });
    }
    let n = cube.num_zones();
    let slots = cube.grid.len();
    let results = exec.map(n * n, |pair| {
        let mut out = alloc::vec![0.0; slots];
        let kind = regroup_series(&cube.grid, &cube.values[pair * slots..(pair + 1) * slots], &mut out);
        (out, kind)
    });
    let mut values = Vec::with_capacity(n * n * slots);
    let mut sparse = 0;
    for (out, kind) in results {
        if let Regrouped::Sparse = kind {
            sparse += 1;
        }
        values.extend(out);
    }
    let mut warnings = Vec::new();
    if sparse > 0 {
        warnings.push(Warning::SparseRegroupPairs { count: sparse });
    }
    let regrouped = TravelTimeCube { values, mode: IndexingMode::ByArrival, ..cube.clone() };
    let unreachable = regrouped.unreachable_cells();
    if unreachable > 0 {
        warnings.push(Warning::UnreachableCells { count: unreachable });
    }
    Ok((regrouped, warnings))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::geometry::{MultiPolygon, Point};
    use crate::network::{ArcRecord, Junction, SpeedProfile, PROFILE_SLOTS};
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};

    /// Random digraph with `n` junctions, up to `m` arcs and random profiles.
    pub(crate) fn random_network(rng: &mut SmallRng, n: usize, m: usize) -> RoadNetwork {
        let junctions = (0..n).map(|i| Junction::new(format!("n{i}"), i as f64, 0.0)).collect();
        let profiles: Vec<SpeedProfile> = (0..3)
            .map(|p| {
                let f = (0..PROFILE_SLOTS).map(|_| rng.random_range(0.1..=2.0)).collect();
                SpeedProfile::new(format!("p{p}"), f).unwrap()
            })
            .collect();
        let mut arcs = Vec::new();
        for k in 0..m {
            let from = rng.random_range(0..n);
            let mut to = rng.random_range(0..n);
            if to == from {
                to = (to + 1) % n;
            }
            let mut rec = ArcRecord::new(
                format!("a{k}"),
                format!("n{from}"),
                format!("n{to}"),
                rng.random_range(50.0..8000.0),
                rng.random_range(10.0..120.0),
                rng.random_range(0..=7),
            );
            if rng.random_bool(0.8) {
                rec = rec.with_profile(format!("p{}", rng.random_range(0..3)));
            }
            arcs.push(rec);
        }
        RoadNetwork::from_parts(junctions, arcs, profiles).unwrap()
    }

    /// Earliest arrival by enumerating every simple path from `origin`.
    pub(crate) fn exhaustive_arrivals(net: &RoadNetwork, origin: JunctionId, departure: f64) -> Vec<f64> {
        fn walk(net: &RoadNetwork, at: JunctionId, t: f64, on_path: &mut Vec<bool>, best: &mut Vec<f64>) {
            if t < best[at.index()] {
                best[at.index()] = t;
            }
            for &a in net.outgoing(at) {
                let next = net.arc(a).to;
                if on_path[next.index()] {
                    continue;
                }
                on_path[next.index()] = true;
                walk(net, next, net.traverse(a, t), on_path, best);
                on_path[next.index()] = false;
            }
        }
        let mut best = vec![f64::INFINITY; net.num_junctions()];
        let mut on_path = vec![false; net.num_junctions()];
        on_path[origin.index()] = true;
        walk(net, origin, departure, &mut on_path, &mut best);
        best
    }

    #[test]
    fn matches_exhaustive_paths_on_small_graphs() {
        let mut rng = SmallRng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.random_range(2..=9);
            let m = rng.random_range(1..=20);
            let net = random_network(&mut rng, n, m);
            let origin = JunctionId(rng.random_range(0..n) as u32);
            let dep = rng.random_range(0.0..86_400.0);
            let got = shortest_arrivals(&net, origin, dep).unwrap();
            let want = exhaustive_arrivals(&net, origin, dep);
            for (g, w) in got.as_slice().iter().zip(&want) {
                assert!(g == w || (g - w).abs() < 1e-9, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn free_flow_reduces_to_static() {
        let mut rng = SmallRng::seed_from_u64(3);
        let net = random_network(&mut rng, 10, 30);
        let junctions = net.junctions().to_vec();
        let arcs = net
            .arcs()
            .iter()
            .map(|a| ArcRecord::new(a.id.clone(), net.junction(a.from).id.clone(), net.junction(a.to).id.clone(), a.length_m, a.free_flow_kmh, a.frc))
            .collect();
        let flat = RoadNetwork::from_parts(junctions, arcs, vec![]).unwrap();
        let dep = 30_000.0;
        let td = shortest_arrivals(&flat, JunctionId(0), dep).unwrap();
        let st = static_times_from(&flat, JunctionId(0));
        for (a, s) in td.as_slice().iter().zip(&st) {
            if s.is_finite() {
                assert!((a - dep - s).abs() < 1e-9);
            } else {
                assert!(a.is_infinite());
            }
        }
    }

    #[test]
    fn isolated_origin_only_labels_itself() {
        let net = RoadNetwork::from_parts(
            vec![Junction::new("a", 0.0, 0.0), Junction::new("b", 1.0, 0.0)],
            vec![ArcRecord::new("ba", "b", "a", 100.0, 50.0, 1)],
            vec![],
        )
        .unwrap();
        let l = shortest_arrivals(&net, JunctionId(0), 100.0).unwrap();
        assert_eq!(l.get(JunctionId(0)), Some(100.0));
        assert_eq!(l.get(JunctionId(1)), None);
        assert_eq!(shortest_arrivals(&net, JunctionId(5), 0.0).unwrap_err(), RoutingError::UnknownOrigin(5));
    }

    #[test]
    fn static_reverse_search_matches_forward() {
        let mut rng = SmallRng::seed_from_u64(5);
        let net = random_network(&mut rng, 8, 25);
        let to0 = static_times_to(&net, JunctionId(0));
        for j in 0..8 {
            let from = static_times_from(&net, JunctionId(j));
            assert!(from[0] == to0[j as usize] || (from[0] - to0[j as usize]).abs() < 1e-9);
        }
    }

    fn two_zone_fixture() -> (RoadNetwork, ZoneSystem) {
        let mut f = vec![1.0; PROFILE_SLOTS];
        f[96] = 0.5;
        let net = RoadNetwork::from_parts(
            vec![Junction::new("a", 0.0, 0.0), Junction::new("b", 3000.0, 0.0)],
            vec![
                ArcRecord::new("ab", "a", "b", 3000.0, 60.0, 1).with_profile("p"),
                ArcRecord::new("ba", "b", "a", 3000.0, 60.0, 1).with_profile("p"),
            ],
            vec![SpeedProfile::new("p", f).unwrap()],
        )
        .unwrap();
        let shapes = vec![
            ("A".to_string(), MultiPolygon::rectangle(Point::new(-100.0, -100.0), Point::new(100.0, 100.0)).unwrap()),
            ("B".to_string(), MultiPolygon::rectangle(Point::new(2900.0, -100.0), Point::new(3100.0, 100.0)).unwrap()),
        ];
        let (zs, _) = ZoneSystem::new(shapes, &net).unwrap();
        (net, zs)
    }

    #[test]
    fn two_zone_cube_hand_value() {
        let (net, mut zs) = two_zone_fixture();
        zs.set_self_times(&[1.0, 2.0]).unwrap();
        let grid = TimeGrid::new(8 * 3600 + 150, 8 * 3600 + 150 + 1800, 900).unwrap();
        let (cube, w) = build_departure_cube(&net, &zs, &grid);
        assert!(w.is_empty());
        assert!((cube.get(0, 1, 0).unwrap() - 4.25).abs() < 1e-12);
        assert_eq!(cube.get(0, 0, 0), Some(1.0));
        assert_eq!(cube.get(1, 1, 1), Some(2.0));
        // composed with half of each self time
        let c = crate::zones::composed_cost(0, 1, &zs.self_times(), cube.get(0, 1, 0).unwrap());
        assert!((c - 5.75).abs() < 1e-12);
    }

    #[test]
    fn single_zone_cube_is_self_times() {
        let (net, _) = two_zone_fixture();
        let shapes = vec![("A".to_string(), MultiPolygon::rectangle(Point::new(-100.0, -100.0), Point::new(100.0, 100.0)).unwrap())];
        let (mut zs, _) = ZoneSystem::new(shapes, &net).unwrap();
        zs.set_self_times(&[2.5]).unwrap();
        let (cube, _) = build_departure_cube(&net, &zs, &TimeGrid::default());
        assert_eq!(cube.num_zones(), 1);
        for s in 0..68 {
            assert_eq!(cube.get(0, 0, s), Some(2.5));
        }
    }

    #[test]
    fn unreachable_pairs_are_marked() {
        let net = RoadNetwork::from_parts(
            vec![Junction::new("a", 0.0, 0.0), Junction::new("b", 1000.0, 0.0)],
            vec![ArcRecord::new("ab", "a", "b", 1000.0, 60.0, 1)],
            vec![],
        )
        .unwrap();
        let shapes = vec![
            ("A".to_string(), MultiPolygon::rectangle(Point::new(-10.0, -10.0), Point::new(10.0, 10.0)).unwrap()),
            ("B".to_string(), MultiPolygon::rectangle(Point::new(990.0, -10.0), Point::new(1010.0, 10.0)).unwrap()),
        ];
        let (zs, _) = ZoneSystem::new(shapes, &net).unwrap();
        let grid = TimeGrid::new(0, 1800, 900).unwrap();
        let (cube, w) = build_departure_cube(&net, &zs, &grid);
        assert_eq!(cube.get(1, 0, 0), None);
        assert!((cube.get(0, 1, 1).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(w, vec![Warning::UnreachableCells { count: 2 }]);
        let (arr, _) = regroup_by_arrival(&cube).unwrap();
        assert_eq!(arr.get(1, 0, 1), None);
        assert_eq!(arr.mode(), IndexingMode::ByArrival);
        assert!(regroup_by_arrival(&arr).is_err());
    }

    fn synthetic_cube(series: impl Fn(usize, usize, usize) -> Option<f64>, n: usize, grid: TimeGrid) -> TravelTimeCube {
        let mut values = Vec::new();
        for o in 0..n {
            for d in 0..n {
                for s in 0..grid.len() {
                    values.push(series(o, d, s));
                }
            }
        }
        let ids = (0..n).map(|i| format!("z{i}")).collect();
        TravelTimeCube::from_values(ids, grid, IndexingMode::ByDeparture, values).unwrap()
    }

    #[test]
    fn regroup_constant_is_identity() {
        let grid = TimeGrid::default();
        let cube = synthetic_cube(|o, d, _| Some(3.0 + o as f64 * 2.0 + d as f64), 3, grid);
        let (arr, w) = regroup_by_arrival(&cube).unwrap();
        assert!(w.is_empty());
        for o in 0..3 {
            for d in 0..3 {
                assert_eq!(arr.pair_series(o, d), cube.pair_series(o, d));
            }
        }
    }

    #[test]
    fn regroup_reproduces_linear_relation() {
        let grid = TimeGrid::default();
        // tt(d) = 5 + 0.0004 * (d - 07:00) minutes
        let tt = |dep: f64| 5.0 + 0.0004 * (dep - 25_200.0);
        let cube = synthetic_cube(|_, _, s| Some(tt(grid.slot_start(s) as f64)), 2, grid);
        let (arr, _) = regroup_by_arrival(&cube).unwrap();
        // arrival a = d + 60 tt(d)  =>  d = (a - 300 + 0.024 * 25200) / 1.024
        let first_arrival = 25_200.0 + 60.0 * tt(25_200.0);
        let last_dep = grid.slot_start(67) as f64;
        let last_arrival = last_dep + 60.0 * tt(last_dep);
        for s in 0..grid.len() {
            let a = grid.slot_start(s) as f64;
            if a < first_arrival || a > last_arrival {
                continue;
            }
            let d = (a - 300.0 + 0.024 * 25_200.0) / 1.024;
            assert!((arr.get(0, 1, s).unwrap() - tt(d)).abs() < 1e-9);
        }
    }

    #[test]
    fn regroup_three_samples_no_overshoot() {
        let grid = TimeGrid::new(8 * 3600, 8 * 3600 + 2700, 900).unwrap();
        let samples = [10.0, 20.0, 12.0];
        let cube = synthetic_cube(|_, _, s| Some(samples[s]), 1, grid);
        // arrivals 08:10, 08:35, 08:42
        let (arr, _) = regroup_by_arrival(&cube).unwrap();
        let at_0830 = arr.get(0, 0, 2).unwrap();
        assert!((10.0..=20.0).contains(&at_0830), "{at_0830}");
        // 08:00 precedes the first arrival: clamp to the first sample
        assert_eq!(arr.get(0, 0, 0), Some(10.0));
    }

    #[test]
    fn regroup_sparse_pair_copies_value() {
        let grid = TimeGrid::new(0, 2700, 900).unwrap();
        let cube = synthetic_cube(|_, _, s| (s == 1).then_some(7.0), 1, grid);
        let (arr, w) = regroup_by_arrival(&cube).unwrap();
        assert_eq!(arr.pair_series(0, 0), &[7.0, 7.0, 7.0]);
        assert_eq!(w, vec![Warning::SparseRegroupPairs { count: 1 }]);
    }

    #[test]
    fn free_flow_centroid_times_obey_triangle_inequality() {
        let mut rng = SmallRng::seed_from_u64(21);
        let net = random_network(&mut rng, 12, 30);
        let all: Vec<Vec<f64>> = (0..12).map(|j| static_times_from(&net, JunctionId(j))).collect();
        for i in 0..12 {
            for j in 0..12 {
                for k in 0..12 {
                    let (ij, jk, ik) = (all[i][j], all[j][k], all[i][k]);
                    if ij.is_finite() && jk.is_finite() {
                        assert!(ik <= ij + jk + 1e-9);
                    }
                }
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]

        #[test]
        fn arrival_is_monotone_in_departure(seed in 0u64..1000, d1 in 0.0f64..80_000.0, gap in 0.0f64..6000.0) {
            let mut rng = SmallRng::seed_from_u64(seed);
            let net = random_network(&mut rng, 10, 25);
            let a = shortest_arrivals(&net, JunctionId(0), d1).unwrap();
            let b = shortest_arrivals(&net, JunctionId(0), d1 + gap).unwrap();
            for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                proptest::prop_assert!(x <= y || (x.is_infinite() && y.is_infinite()));
            }
        }
    }
}
