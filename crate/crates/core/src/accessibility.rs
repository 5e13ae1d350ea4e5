//! Exponential potential accessibility and the four evaluation scenarios.
//!
//! `P_it = sum_j M_jt * exp(alpha * C*_ijt)` with `alpha < 0` in 1/minutes
//! and `C*` the composed zone-to-zone cost. Times are arrival-indexed, so
//! slot `t` means "arriving at `t`".

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::activity::ActivitySurface;
use crate::exec::{Sequential, TaskMap};
use crate::math;
use crate::routing::TravelTimeCube;
use crate::time::TimeGrid;
use crate::zones::composed_cost;

/// Decay value obtained for Madrid from the 2004 mobility survey.
pub const MADRID_ALPHA: f64 = -0.129_578_49;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AccessError {
    #[error("decay parameter must be finite and negative, got {0}")]
    NonNegativeAlpha(f64),
    #[error("non-finite mass {value} for destination {dest} (origin {origin})")]
    BadMass { origin: usize, dest: usize, value: f64 },
    #[error("non-finite cost {value} for pair ({origin}, {dest})")]
    BadCost { origin: usize, dest: usize, value: f64 },
    #[error("mass and cost vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("travel-time grid {cube:?} differs from activity grid {surface:?}")]
    GridMismatch { cube: TimeGrid, surface: TimeGrid },
    #[error("travel-time and activity zone indices differ")]
    ZoneMismatch,
    #[error("expected {expected} self times, got {got}")]
    SelfTimeCount { expected: usize, got: usize },
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
}

/// Distance-decay rate in 1/minutes; always negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParameter(f64);

impl DecayParameter {
    pub fn new(alpha: f64) -> Result<Self, AccessError> {
        if alpha.is_finite() && alpha < 0.0 {
            Ok(DecayParameter(alpha))
        } else {
            Err(AccessError::NonNegativeAlpha(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioKind {
    /// Day-averaged times and day-averaged masses.
    Reference,
    /// Dynamic times and dynamic masses.
    DynamicAccessibility,
    /// Dynamic times, averaged masses.
    DynamicCongestion,
    /// Averaged times, dynamic masses.
    DynamicAttractiveness,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 4] = [
        ScenarioKind::Reference,
        ScenarioKind::DynamicAccessibility,
        ScenarioKind::DynamicCongestion,
        ScenarioKind::DynamicAttractiveness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Reference => "reference",
            ScenarioKind::DynamicAccessibility => "dynamic_accessibility",
            ScenarioKind::DynamicCongestion => "dynamic_congestion",
            ScenarioKind::DynamicAttractiveness => "dynamic_attractiveness",
        }
    }

    pub fn parse(name: &str) -> Result<Self, AccessError> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| AccessError::UnknownScenario(String::from(name)))
    }

    pub fn dynamic_times(self) -> bool {
        matches!(self, ScenarioKind::DynamicAccessibility | ScenarioKind::DynamicCongestion)
    }

    pub fn dynamic_masses(self) -> bool {
        matches!(self, ScenarioKind::DynamicAccessibility | ScenarioKind::DynamicAttractiveness)
    }
}

/// Day-averaged `n x n` travel-time matrix (row-major, NaN = unreachable).
#[derive(Debug, Clone, PartialEq)]
pub struct StaticMatrix {
    n: usize,
    values: Vec<f64>,
}

impl StaticMatrix {
    pub fn get(&self, origin: usize, dest: usize) -> Option<f64> {
        let v = self.values[origin * self.n + dest];
        (!v.is_nan()).then_some(v)
    }

    pub fn size(&self) -> usize {
        self.n
    }
}

/// Mean over the slots in which each pair is reachable.
pub fn average_times(cube: &TravelTimeCube) -> StaticMatrix {
    let n = cube.num_zones();
    let mut values = Vec::with_capacity(n * n);
    for o in 0..n {
        for d in 0..n {
            let reachable = cube.pair_series(o, d).iter().copied().filter(|v| !v.is_nan());
            values.push(math::mean(reachable).unwrap_or(f64::NAN));
        }
    }
    StaticMatrix { n, values }
}

/// Potential of one origin given destination masses and composed costs
/// (`None` = unreachable, contributing nothing).
pub fn potential(origin: usize, masses: &[f64], costs: &[Option<f64>], alpha: DecayParameter) -> Result<f64, AccessError> {
    if masses.len() != costs.len() {
        return Err(AccessError::LengthMismatch(masses.len(), costs.len()));
    }
    let mut p = 0.0;
    for (dest, (&m, c)) in masses.iter().zip(costs).enumerate() {
        if !m.is_finite() {
            return Err(AccessError::BadMass { origin, dest, value: m });
        }
        let Some(c) = *c else { continue };
        if !c.is_finite() {
            return Err(AccessError::BadCost { origin, dest, value: c });
        }
        p += m * math::exp(alpha.0 * c);
    }
    Ok(p)
}

/// Potential values per scenario, slot and zone, plus the static reference.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessibilityField {
    zone_ids: Vec<String>,
    grid: TimeGrid,
    scenarios: Vec<ScenarioKind>,
    /// `[scenario][slot][zone]`
    values: Vec<f64>,
    reference: Vec<f64>,
}

impl AccessibilityField {
    /// Assembles a field from `[scenario][slot][zone]` values.
    pub fn from_values(
        zone_ids: Vec<String>,
        grid: TimeGrid,
        scenarios: Vec<ScenarioKind>,
        values: Vec<f64>,
        reference: Vec<f64>,
    ) -> Self {
        assert_eq!(values.len(), scenarios.len() * grid.len() * zone_ids.len(), "field shape");
        assert_eq!(reference.len(), zone_ids.len(), "reference length");
        AccessibilityField { zone_ids, grid, scenarios, values, reference }
    }

    pub fn zone_ids(&self) -> &[String] {
        &self.zone_ids
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn scenarios(&self) -> &[ScenarioKind] {
        &self.scenarios
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn has(&self, kind: ScenarioKind) -> bool {
        self.scenarios.contains(&kind)
    }

    fn offset(&self, kind: ScenarioKind) -> Option<usize> {
        let k = self.scenarios.iter().position(|&s| s == kind)?;
        Some(k * self.grid.len() * self.zone_ids.len())
    }

    /// Values over zones for one scenario and slot.
    pub fn slot_values(&self, kind: ScenarioKind, slot: usize) -> Option<&[f64]> {
        if slot >= self.grid.len() {
            return None;
        }
        let n = self.zone_ids.len();
        let base = self.offset(kind)? + slot * n;
        self.values.get(base..base + n)
    }

    pub fn get(&self, kind: ScenarioKind, zone: usize, slot: usize) -> Option<f64> {
        self.slot_values(kind, slot).map(|v| v[zone])
    }

    /// One zone's values over all slots (its daily signature).
    pub fn zone_series(&self, kind: ScenarioKind, zone: usize) -> Option<Vec<f64>> {
        (0..self.grid.len()).map(|s| self.get(kind, zone, s)).collect()
    }
}

struct ScenarioInputs<'a> {
    cube: &'a TravelTimeCube,
    avg_times: StaticMatrix,
    surface: &'a ActivitySurface,
    avg_masses: Vec<f64>,
    self_times: &'a [f64],
    alpha: DecayParameter,
}

impl ScenarioInputs<'_> {
    fn origin_value(&self, kind: ScenarioKind, slot: usize, origin: usize, costs: &mut Vec<Option<f64>>) -> Result<f64, AccessError> {
        let n = self.avg_masses.len();
        costs.clear();
        for dest in 0..n {
            let raw = if kind.dynamic_times() { self.cube.get(origin, dest, slot) } else { self.avg_times.get(origin, dest) };
            costs.push(raw.map(|c| composed_cost(origin, dest, self.self_times, c)));
        }
        let masses = if kind.dynamic_masses() { self.surface.slot_masses(slot) } else { &self.avg_masses };
        potential(origin, masses, costs, self.alpha)
    }

    fn slot_vector(&self, kind: ScenarioKind, slot: usize) -> Result<Vec<f64>, AccessError> {
        let n = self.avg_masses.len();
        let mut costs = Vec::with_capacity(n);
        (0..n).map(|o| self.origin_value(kind, slot, o, &mut costs)).collect()
    }
}

/// Evaluates the requested scenarios at every slot.
///
/// The cube should be arrival-indexed and share grid and zone order with the
/// surface. The reference vector is always computed and is replicated across
/// slots when `Reference` is among `kinds`.
pub fn run_scenarios(
    cube: &TravelTimeCube,
    surface: &ActivitySurface,
    self_times: &[f64],
    alpha: DecayParameter,
    kinds: &[ScenarioKind],
) -> Result<AccessibilityField, AccessError> {
    run_scenarios_with(&Sequential, cube, surface, self_times, alpha, kinds)
}

pub fn run_scenarios_with<M: TaskMap>(
    exec: &M,
    cube: &TravelTimeCube,
    surface: &ActivitySurface,
    self_times: &[f64],
    alpha: DecayParameter,
    kinds: &[ScenarioKind],
) -> Result<AccessibilityField, AccessError> {
    if cube.grid() != surface.grid() {
        return Err(AccessError::GridMismatch { cube: *cube.grid(), surface: *surface.grid() });
    }
    if cube.zone_ids() != surface.zone_ids() {
        return Err(AccessError::ZoneMismatch);
    }
    let n = cube.num_zones();
    if self_times.len() != n {
        return Err(AccessError::SelfTimeCount { expected: n, got: self_times.len() });
    }
    let inputs = ScenarioInputs {
        cube,
        avg_times: average_times(cube),
        surface,
        avg_masses: surface.average(),
        self_times,
        alpha,
    };
    let reference = inputs.slot_vector(ScenarioKind::Reference, 0)?;

    let mut scenarios: Vec<ScenarioKind> = Vec::new();
    for &k in kinds {
        if !scenarios.contains(&k) {
            scenarios.push(k);
        }
    }
    let slots = cube.grid().len();
    let dynamic: Vec<ScenarioKind> = scenarios.iter().copied().filter(|&k| k != ScenarioKind::Reference).collect();
    let computed = exec.map(dynamic.len() * slots, |task| inputs.slot_vector(dynamic[task / slots], task % slots));
    let mut computed = computed.into_iter();

    let mut values = Vec::with_capacity(scenarios.len() * slots * n);
    for &k in &scenarios {
        for _ in 0..slots {
            if k == ScenarioKind::Reference {
                values.extend_from_slice(&reference);
            } else {
                values.extend(computed.next().expect("one vector per dynamic task")?);
            }
        }
    }
    Ok(AccessibilityField { zone_ids: cube.zone_ids().to_vec(), grid: *cube.grid(), scenarios, values, reference })
}
