//! Road network with 5-minute speed profiles.
//!
//! Arcs are one-way. Each arc may reference a [`SpeedProfile`] giving, for
//! each 5-minute slot of the day, its speed as a fraction of free-flow
//! speed. Arcs without a profile run at free-flow speed all day.
//!
//! Traversal uses a live-speed model: the speed of the slot the clock is
//! currently in applies to every vehicle on the arc, so position is
//! integrated forward across slot boundaries. This keeps every arc FIFO.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::math;
use crate::time::SECONDS_PER_DAY;

/// Number of 5-minute slots in a day.
pub const PROFILE_SLOTS: usize = 288;
/// Length of one profile slot in seconds.
pub const PROFILE_SLOT_SECONDS: f64 = 300.0;
/// Largest accepted speed factor; anything above is treated as corrupt data.
pub const MAX_FACTOR: f64 = 2.0;
/// Highest functional road class.
pub const MAX_FRC: u8 = 7;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("duplicate junction id {0:?}")]
    DuplicateJunction(String),
    #[error("junction {0:?} has non-finite coordinates")]
    NonFiniteCoordinate(String),
    #[error("duplicate arc id {0:?}")]
    DuplicateArc(String),
    #[error("arc {arc:?} references missing junction {junction:?}")]
    DanglingEndpoint { arc: String, junction: String },
    #[error("arc {arc:?} references missing speed profile {profile:?}")]
    UnknownProfile { arc: String, profile: String },
    #[error("arc {arc:?} has non-positive or non-finite length {length}")]
    BadLength { arc: String, length: f64 },
    #[error("arc {arc:?} has non-positive or non-finite free-flow speed {speed}")]
    BadSpeed { arc: String, speed: f64 },
    #[error("arc {arc:?} has functional road class {frc}, expected 0-7")]
    BadFrc { arc: String, frc: u8 },
    #[error("duplicate speed profile id {0:?}")]
    DuplicateProfile(String),
    #[error("speed profile {profile:?} has {len} slots, expected 288")]
    ProfileLength { profile: String, len: usize },
    #[error("speed profile {profile:?} slot {slot} has factor {factor}, expected (0, 2]")]
    BadFactor { profile: String, slot: usize, factor: f64 },
    #[error("max_frc {0} is outside 0-7")]
    BadMaxFrc(u8),
    #[error("no arcs remain with frc <= {0}")]
    NothingRoutable(u8),
    #[error("unknown junction {0:?}")]
    UnknownJunction(String),
}

/// Dense index of a junction inside one [`RoadNetwork`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct JunctionId(pub u32);

impl JunctionId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Dense index of an arc inside one [`RoadNetwork`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArcId(pub u32);

impl ArcId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    pub id: String,
    /// Projected easting in meters.
    pub x: f64,
    /// Projected northing in meters.
    pub y: f64,
}

impl Junction {
    pub fn new(id: impl Into<String>, x: f64, y: f64) -> Self {
        Junction { id: id.into(), x, y }
    }
}

/// Arc as described in input data, with endpoints and profile given by id.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcRecord {
    pub id: String,
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub free_flow_kmh: f64,
    pub frc: u8,
    pub profile: Option<String>,
}

impl ArcRecord {
    pub fn new(
        id: impl Into<String>,
        from: impl Into<String>,
        to: impl Into<String>,
        length_m: f64,
        free_flow_kmh: f64,
        frc: u8,
    ) -> Self {
        ArcRecord {
            id: id.into(),
            from: from.into(),
            to: to.into(),
            length_m,
            free_flow_kmh,
            frc,
            profile: None,
        }
    }

    pub fn with_profile(mut self, profile: impl Into<String>) -> Self {
        self.profile = Some(profile.into());
        self
    }
}

/// A linked arc.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub id: String,
    pub from: JunctionId,
    pub to: JunctionId,
    pub length_m: f64,
    pub free_flow_kmh: f64,
    pub frc: u8,
    /// Index into [`RoadNetwork::profiles`].
    pub profile: Option<usize>,
}

/// Daily speed schedule as fractions of free-flow speed, one per 5 minutes.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    id: String,
    factors: Box<[f64]>,
}

impl SpeedProfile {
    pub fn new(id: impl Into<String>, factors: Vec<f64>) -> Result<Self, NetworkError> {
        let id = id.into();
        if factors.len() != PROFILE_SLOTS {
            return Err(NetworkError::ProfileLength { profile: id, len: factors.len() });
        }
        if let Some((slot, &factor)) = factors
            .iter()
            .enumerate()
            .find(|(_, f)| !(f.is_finite() && **f > 0.0 && **f <= MAX_FACTOR))
        {
            return Err(NetworkError::BadFactor { profile: id, slot, factor });
        }
        Ok(SpeedProfile { id, factors: factors.into_boxed_slice() })
    }

    /// Profile with the same factor in every slot.
    pub fn constant(id: impl Into<String>, factor: f64) -> Result<Self, NetworkError> {
        Self::new(id, alloc::vec![factor; PROFILE_SLOTS])
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    /// Factor in force at an absolute clock time (wraps every 24 h).
    #[inline]
    pub fn factor_at(&self, clock: f64) -> f64 {
        self.factors[profile_slot(clock)]
    }
}

#[inline]
fn profile_slot(clock: f64) -> usize {
    let k = math::floor(clock / PROFILE_SLOT_SECONDS) as i64;
    k.rem_euclid(PROFILE_SLOTS as i64) as usize
}

/// Exit time for an arc entered at `entry` seconds (absolute, may exceed
/// one day), integrating position forward under piecewise-constant speed.
///
/// `factors`, when given, must hold 288 strictly positive values.
pub fn integrate_exit(length_m: f64, free_flow_kmh: f64, factors: Option<&[f64]>, entry: f64) -> f64 {
    let free_mps = free_flow_kmh / 3.6;
    let Some(factors) = factors else {
        return entry + length_m / free_mps;
    };
    let mut remaining = length_m;
    let mut k = math::floor(entry / PROFILE_SLOT_SECONDS) as i64;
    let mut t = entry;
    loop {
        let speed = free_mps * factors[k.rem_euclid(PROFILE_SLOTS as i64) as usize];
        let slot_end = (k + 1) as f64 * PROFILE_SLOT_SECONDS;
        let reach = speed * (slot_end - t);
        if reach >= remaining {
            return t + remaining / speed;
        }
        remaining -= reach;
        t = slot_end;
        k += 1;
    }
}

/// Immutable, fully linked road network.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    junctions: Vec<Junction>,
    arcs: Vec<Arc>,
    profiles: Vec<SpeedProfile>,
    junction_index: BTreeMap<String, JunctionId>,
    out_offsets: Vec<u32>,
    out_arcs: Vec<ArcId>,
    in_offsets: Vec<u32>,
    in_arcs: Vec<ArcId>,
}

impl RoadNetwork {
    /// Links junctions, arcs and profiles, checking referential integrity.
    pub fn from_parts(
        junctions: Vec<Junction>,
        arcs: Vec<ArcRecord>,
        profiles: Vec<SpeedProfile>,
    ) -> Result<Self, NetworkError> {
        let mut junction_index = BTreeMap::new();
        for (i, j) in junctions.iter().enumerate() {
            if !(j.x.is_finite() && j.y.is_finite()) {
                return Err(NetworkError::NonFiniteCoordinate(j.id.clone()));
            }
            if junction_index.insert(j.id.clone(), JunctionId(i as u32)).is_some() {
                return Err(NetworkError::DuplicateJunction(j.id.clone()));
            }
        }
        let mut profile_index = BTreeMap::new();
        for (i, p) in profiles.iter().enumerate() {
            if profile_index.insert(p.id.clone(), i).is_some() {
                return Err(NetworkError::DuplicateProfile(p.id.clone()));
            }
        }

        let mut seen_arcs = BTreeMap::new();
        let mut linked = Vec::with_capacity(arcs.len());
        for rec in arcs {
            if seen_arcs.insert(rec.id.clone(), ()).is_some() {
                return Err(NetworkError::DuplicateArc(rec.id));
            }
            let endpoint = |name: &String| {
                junction_index.get(name).copied().ok_or_else(|| NetworkError::DanglingEndpoint {
                    arc: rec.id.clone(),
                    junction: name.clone(),
                })
            };
            let from = endpoint(&rec.from)?;
            let to = endpoint(&rec.to)?;
            if !(rec.length_m.is_finite() && rec.length_m > 0.0) {
                return Err(NetworkError::BadLength { arc: rec.id, length: rec.length_m });
            }
            if !(rec.free_flow_kmh.is_finite() && rec.free_flow_kmh > 0.0) {
                return Err(NetworkError::BadSpeed { arc: rec.id, speed: rec.free_flow_kmh });
            }
            if rec.frc > MAX_FRC {
                return Err(NetworkError::BadFrc { arc: rec.id, frc: rec.frc });
            }
            let profile = match &rec.profile {
                None => None,
                Some(p) => Some(*profile_index.get(p).ok_or_else(|| NetworkError::UnknownProfile {
                    arc: rec.id.clone(),
                    profile: p.clone(),
                })?),
            };
            linked.push(Arc {
                id: rec.id,
                from,
                to,
                length_m: rec.length_m,
                free_flow_kmh: rec.free_flow_kmh,
                frc: rec.frc,
                profile,
            });
        }
        Ok(Self::link(junctions, linked, profiles, junction_index))
    }

    fn link(
        junctions: Vec<Junction>,
        arcs: Vec<Arc>,
        profiles: Vec<SpeedProfile>,
        junction_index: BTreeMap<String, JunctionId>,
    ) -> Self {
        let n = junctions.len();
        let (out_offsets, out_arcs) = csr(n, arcs.iter().map(|a| a.from.index()));
        let (in_offsets, in_arcs) = csr(n, arcs.iter().map(|a| a.to.index()));
        RoadNetwork { junctions, arcs, profiles, junction_index, out_offsets, out_arcs, in_offsets, in_arcs }
    }

    /// Copy keeping only arcs with `frc <= max_frc` and the junctions they touch.
    pub fn filter_by_frc(&self, max_frc: u8) -> Result<RoadNetwork, NetworkError> {
        if max_frc > MAX_FRC {
            return Err(NetworkError::BadMaxFrc(max_frc));
        }
        let kept: Vec<&Arc> = self.arcs.iter().filter(|a| a.frc <= max_frc).collect();
        if kept.is_empty() {
            return Err(NetworkError::NothingRoutable(max_frc));
        }
        let mut used = alloc::vec![false; self.junctions.len()];
        for a in &kept {
            used[a.from.index()] = true;
            used[a.to.index()] = true;
        }
        let mut remap = alloc::vec![u32::MAX; self.junctions.len()];
        let mut junctions = Vec::new();
        let mut junction_index = BTreeMap::new();
        for (old, j) in self.junctions.iter().enumerate() {
            if used[old] {
                let new = JunctionId(junctions.len() as u32);
                remap[old] = new.0;
                junction_index.insert(j.id.clone(), new);
                junctions.push(j.clone());
            }
        }
        let arcs = kept
            .into_iter()
            .map(|a| Arc {
                from: JunctionId(remap[a.from.index()]),
                to: JunctionId(remap[a.to.index()]),
                ..a.clone()
            })
            .collect();
        Ok(Self::link(junctions, arcs, self.profiles.clone(), junction_index))
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn profiles(&self) -> &[SpeedProfile] {
        &self.profiles
    }

    pub fn junction(&self, id: JunctionId) -> &Junction {
        &self.junctions[id.index()]
    }

    pub fn arc(&self, id: ArcId) -> &Arc {
        &self.arcs[id.index()]
    }

    pub fn num_junctions(&self) -> usize {
        self.junctions.len()
    }

    pub fn num_arcs(&self) -> usize {
        self.arcs.len()
    }

    pub fn junction_by_id(&self, id: &str) -> Option<JunctionId> {
        self.junction_index.get(id).copied()
    }

    pub fn arc_by_id(&self, id: &str) -> Option<ArcId> {
        self.arcs.iter().position(|a| a.id == id).map(|i| ArcId(i as u32))
    }

    pub fn outgoing(&self, j: JunctionId) -> &[ArcId] {
        let i = j.index();
        &self.out_arcs[self.out_offsets[i] as usize..self.out_offsets[i + 1] as usize]
    }

    pub fn incoming(&self, j: JunctionId) -> &[ArcId] {
        let i = j.index();
        &self.in_arcs[self.in_offsets[i] as usize..self.in_offsets[i + 1] as usize]
    }

    fn factors_of(&self, arc: &Arc) -> Option<&[f64]> {
        arc.profile.map(|p| self.profiles[p].factors())
    }

    /// Speed in km/h on `arc` at `clock` seconds of day.
    pub fn arc_speed(&self, arc: ArcId, clock: f64) -> f64 {
        let a = &self.arcs[arc.index()];
        match a.profile {
            Some(p) => a.free_flow_kmh * self.profiles[p].factor_at(clock),
            None => a.free_flow_kmh,
        }
    }

    /// Exit time for a vehicle entering `arc` at absolute time `entry` (s).
    #[inline]
    pub fn traverse(&self, arc: ArcId, entry: f64) -> f64 {
        let a = &self.arcs[arc.index()];
        integrate_exit(a.length_m, a.free_flow_kmh, self.factors_of(a), entry)
    }

    /// Traversal time at free-flow speed, in seconds.
    #[inline]
    pub fn free_flow_seconds(&self, arc: ArcId) -> f64 {
        let a = &self.arcs[arc.index()];
        a.length_m / (a.free_flow_kmh / 3.6)
    }

    /// True when every junction reaches and is reached from junction 0.
    pub fn is_strongly_connected(&self) -> bool {
        if self.junctions.is_empty() {
            return true;
        }
        let reach = |forward: bool| {
            let mut seen = alloc::vec![false; self.junctions.len()];
            let mut stack = alloc::vec![JunctionId(0)];
            seen[0] = true;
            while let Some(j) = stack.pop() {
                let next = if forward { self.outgoing(j) } else { self.incoming(j) };
                for &a in next {
                    let arc = &self.arcs[a.index()];
                    let k = if forward { arc.to } else { arc.from };
                    if !seen[k.index()] {
                        seen[k.index()] = true;
                        stack.push(k);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

fn csr(n: usize, keys: impl Iterator<Item = usize> + Clone) -> (Vec<u32>, Vec<ArcId>) {
    let mut offsets = alloc::vec![0u32; n + 1];
    for k in keys.clone() {
        offsets[k + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut items = alloc::vec![ArcId(0); offsets[n] as usize];
    for (arc, k) in keys.enumerate() {
        items[fill[k] as usize] = ArcId(arc as u32);
        fill[k] += 1;
    }
    (offsets, items)
}

/// Seconds-of-day reading of an absolute clock value.
pub fn clock_of_day(t: f64) -> f64 {
    let day = SECONDS_PER_DAY as f64;
    t - math::floor(t / day) * day
}
