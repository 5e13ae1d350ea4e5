//! Transport zones: centroids snapped to the network, intrazonal (self)
//! travel times, and composition of zone-to-zone costs.

use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{BBox, GeometryError, MultiPolygon, Point};
use crate::math;
use crate::network::{JunctionId, RoadNetwork};
use crate::routing;
use crate::Warning;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ZoneError {
    #[error("no zones given")]
    Empty,
    #[error("duplicate zone id {0:?}")]
    DuplicateZone(String),
    #[error("zone {zone:?} has invalid geometry: {source}")]
    Geometry { zone: String, source: GeometryError },
    #[error("network has no junctions to snap to")]
    NoJunctions,
    #[error("sample fraction {0} must be in (0, 1]")]
    BadFraction(f64),
    #[error("expected {expected} self times, got {got}")]
    SelfTimeCount { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub id: String,
    pub shape: MultiPolygon,
    /// Geometric centroid, or an interior point when the centroid falls outside.
    pub centroid: Point,
    pub centroid_junction: JunctionId,
    /// Intrazonal travel time in minutes (0 until self times are assigned).
    pub self_time: f64,
}

/// Ordered zones; the order defines matrix indices everywhere.
#[derive(Debug, Clone)]
pub struct ZoneSystem {
    zones: Vec<Zone>,
    index: GridIndex,
}

/// Result of intrazonal time sampling for one zone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfTime {
    pub minutes: f64,
    pub n_sampled: usize,
}

impl ZoneSystem {
    /// Builds zones from shapes, snapping each anchor point to the nearest
    /// junction (ties go to the lower junction index).
    pub fn new(shapes: Vec<(String, MultiPolygon)>, net: &RoadNetwork) -> Result<(Self, Vec<Warning>), ZoneError> {
        if shapes.is_empty() {
            return Err(ZoneError::Empty);
        }
        if net.num_junctions() == 0 {
            return Err(ZoneError::NoJunctions);
        }
        let mut seen = alloc::collections::BTreeSet::new();
        let mut warnings = Vec::new();
        let mut zones = Vec::with_capacity(shapes.len());
        for (id, shape) in shapes {
            if !seen.insert(id.clone()) {
                return Err(ZoneError::DuplicateZone(id));
            }
            let centroid = shape.anchor_point();
            let centroid_junction = nearest_junction(net, centroid);
            let j = net.junction(centroid_junction);
            if !shape.contains(Point::new(j.x, j.y)) {
                warnings.push(Warning::CentroidJunctionOutside { zone: id.clone() });
            }
            zones.push(Zone { id, shape, centroid, centroid_junction, self_time: 0.0 });
        }
        let index = GridIndex::build(&zones);
        Ok((ZoneSystem { zones, index }, warnings))
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.zones.iter().map(|z| z.id.as_str())
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.id == id)
    }

    pub fn self_times(&self) -> Vec<f64> {
        self.zones.iter().map(|z| z.self_time).collect()
    }

    pub fn set_self_times(&mut self, minutes: &[f64]) -> Result<(), ZoneError> {
        if minutes.len() != self.zones.len() {
            return Err(ZoneError::SelfTimeCount { expected: self.zones.len(), got: minutes.len() });
        }
        for (z, &m) in self.zones.iter_mut().zip(minutes) {
            z.self_time = m;
        }
        Ok(())
    }

    /// First zone (in system order) whose shape contains the point.
    pub fn locate(&self, p: Point) -> Option<usize> {
        self.index.candidates(p).iter().map(|&z| z as usize).find(|&z| self.zones[z].shape.contains(p))
    }

    /// Junctions of `net` that lie inside zone `zone`.
    pub fn interior_junctions(&self, zone: usize, net: &RoadNetwork) -> Vec<JunctionId> {
        let shape = &self.zones[zone].shape;
        let bbox = shape.bbox();
        net.junctions()
            .iter()
            .enumerate()
            .filter(|(_, j)| {
                let p = Point::new(j.x, j.y);
                bbox.contains(p) && shape.contains(p)
            })
            .map(|(i, _)| JunctionId(i as u32))
            .collect()
    }
}

fn nearest_junction(net: &RoadNetwork, p: Point) -> JunctionId {
    let mut best = (f64::INFINITY, 0usize);
    for (i, j) in net.junctions().iter().enumerate() {
        let d = p.distance_sq(Point::new(j.x, j.y));
        if d < best.0 {
            best = (d, i);
        }
    }
    JunctionId(best.1 as u32)
}

/// Seed for one zone's sampler, derived from the run seed.
pub fn zone_seed(seed: u64, zone_index: usize) -> u64 {
    seed ^ zone_index as u64
}

/// Mean free-flow travel time, in minutes, from a seeded uniform sample of
/// `ceil(fraction * n)` (at least one) interior junctions to the zone's
/// centroid junction.
///
/// Candidates are ordered by junction id before sampling, so the result does
/// not depend on how the network enumerates its junctions.
pub fn self_potential_time(
    zones: &ZoneSystem,
    zone: usize,
    net: &RoadNetwork,
    fraction: f64,
    seed: u64,
) -> Result<(SelfTime, Option<Warning>), ZoneError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(ZoneError::BadFraction(fraction));
    }
    let z = &zones.zones[zone];
    let mut candidates = zones.interior_junctions(zone, net);
    if candidates.is_empty() {
        return Ok((SelfTime { minutes: 0.0, n_sampled: 0 }, Some(Warning::NoInteriorJunctions { zone: z.id.clone() })));
    }
    candidates.sort_by(|a, b| net.junction(*a).id.cmp(&net.junction(*b).id));
    let n = candidates.len();
    let k = (math::ceil(fraction * n as f64) as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(zone_seed(seed, zone));
    let mut picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();

    let to_centroid = routing::static_times_to(net, z.centroid_junction);
    let mut total = 0.0;
    let mut reached = 0usize;
    for &i in &picked {
        let t = to_centroid[candidates[i].index()];
        if t.is_finite() {
            total += t;
            reached += 1;
        }
    }
    let warning = (reached < k)
        .then(|| Warning::UnreachableSampledJunctions { zone: z.id.clone(), count: k - reached });
    let minutes = if reached == 0 { 0.0 } else { total / reached as f64 / 60.0 };
    Ok((SelfTime { minutes, n_sampled: k }, warning))
}

/// Zone-to-zone cost: half of each intrazonal time added to the network
/// time. For an intrazonal trip use [`composed_cost`] which returns `c_ii`.
#[inline]
pub fn compose_cost(c_ii: f64, c_ijt: f64, c_jj: f64) -> f64 {
    0.5 * c_ii + c_ijt + 0.5 * c_jj
}

/// Composed cost for the pair `(i, j)`; the diagonal is the self time itself.
#[inline]
pub fn composed_cost(i: usize, j: usize, self_times: &[f64], c_ijt: f64) -> f64 {
    if i == j {
        self_times[i]
    } else {
        compose_cost(self_times[i], c_ijt, self_times[j])
    }
}

/// Uniform bucket grid over zone bounding boxes.
#[derive(Debug, Clone)]
struct GridIndex {
    bounds: BBox,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl GridIndex {
    fn build(zones: &[Zone]) -> Self {
        let boxes: Vec<BBox> = zones.iter().map(|z| z.shape.bbox()).collect();
        let mut bounds = boxes[0];
        for b in &boxes[1..] {
            bounds.min.x = bounds.min.x.min(b.min.x);
            bounds.min.y = bounds.min.y.min(b.min.y);
            bounds.max.x = bounds.max.x.max(b.max.x);
            bounds.max.y = bounds.max.y.max(b.max.y);
        }
        let side = (math::sqrt(zones.len() as f64) as usize).clamp(1, 256);
        let (nx, ny) = (side, side);
        let mut cells = alloc::vec![Vec::new(); nx * ny];
        let tmp = GridIndex { bounds, nx, ny, cells: Vec::new() };
        for (z, b) in boxes.iter().enumerate() {
            let (x0, y0) = tmp.cell_of(b.min);
            let (x1, y1) = tmp.cell_of(b.max);
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    cells[cy * nx + cx].push(z as u32);
                }
            }
        }
        GridIndex { cells, ..tmp }
    }

    fn cell_of(&self, p: Point) -> (usize, usize) {
        let fx = (p.x - self.bounds.min.x) / (self.bounds.max.x - self.bounds.min.x);
        let fy = (p.y - self.bounds.min.y) / (self.bounds.max.y - self.bounds.min.y);
        let clamp = |f: f64, n: usize| {
            if f.is_nan() {
                0
            } else {
                ((f * n as f64) as isize).clamp(0, n as isize - 1) as usize
            }
        };
        (clamp(fx, self.nx), clamp(fy, self.ny))
    }

    fn candidates(&self, p: Point) -> &[u32] {
        if !self.bounds.contains(p) {
            return &[];
        }
        let (cx, cy) = self.cell_of(p);
        &self.cells[cy * self.nx + cx]
    }
}
