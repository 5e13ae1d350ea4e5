//! Writes the synthetic grid city as a complete input set on disk.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Result;
use dynacc_core::calibration::gravity_trips;
use dynacc_core::exec::Sequential;
use dynacc_core::geometry::MultiPolygon;
use dynacc_core::synthetic::{self, EventPlan, GridCity};
use serde_json::{json, Value};

use crate::config::{self, CostBasis, Overrides};
use crate::pipeline;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixtureAlpha {
    Fixed(f64),
    /// Write a trip file generated at this alpha (free-flow costs) and
    /// configure the run to calibrate against it.
    CalibrateFrom(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    pub city: GridCity,
    pub zones_x: usize,
    pub zones_y: usize,
    pub events: EventPlan,
    pub alpha: FixtureAlpha,
    pub sample_fraction: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            city: GridCity::default(),
            zones_x: 5,
            zones_y: 5,
            events: EventPlan::default(),
            alpha: FixtureAlpha::Fixed(dynacc_core::accessibility::MADRID_ALPHA),
            sample_fraction: 0.1,
            seed: 42,
            workers: 0,
        }
    }
}

pub fn shape_geojson(shape: &MultiPolygon) -> Value {
    let ring = |r: &dynacc_core::geometry::Ring| {
        let mut pts: Vec<Value> = r.points().iter().map(|p| json!([p.x, p.y])).collect();
        pts.push(pts[0].clone());
        Value::Array(pts)
    };
    let polys: Vec<Value> = shape
        .parts()
        .iter()
        .map(|p| {
            let mut rings = vec![ring(&p.exterior)];
            rings.extend(p.holes.iter().map(ring));
            Value::Array(rings)
        })
        .collect();
    json!({"type": "MultiPolygon", "coordinates": polys})
}

fn config_text(spec: &FixtureSpec, alpha: &str, extra_inputs: &str, calibration: &str) -> String {
    format!(
        r#"[inputs]
nodes = "nodes.csv"
arcs = "arcs.csv"
profiles = "profiles.csv"
zones = "zones.geojson"
events = "events.csv"
{extra_inputs}
[grid]
start = "07:00"
end = "24:00"
step_min = 15

[network]
max_frc = 6

[zones]
sample_fraction = {}
seed = {}

[accessibility]
alpha = {alpha}
{calibration}
[run]
output_dir = "out"
workers = {}
time_zone = "Europe/Madrid"
"#,
        spec.sample_fraction, spec.seed, spec.workers
    )
}

/// Writes nodes, arcs, profiles, zones, events (and trips when calibrating)
/// plus `run.toml` into `dir`. Returns the config path.
pub fn write_fixture(dir: &Path, spec: &FixtureSpec) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let (junctions, arcs, profiles) = synthetic::grid_city_parts(&spec.city);

    let mut s = String::from("node_id,x,y\n");
    for j in &junctions {
        writeln!(s, "{},{},{}", j.id, j.x, j.y)?;
    }
    fs::write(dir.join("nodes.csv"), s)?;

    let mut s = String::from("arc_id,from,to,length_m,freeflow_kmh,frc,profile_id\n");
    for a in &arcs {
        writeln!(s, "{},{},{},{},{},{},{}", a.id, a.from, a.to, a.length_m, a.free_flow_kmh, a.frc, a.profile.as_deref().unwrap_or(""))?;
    }
    fs::write(dir.join("arcs.csv"), s)?;

    let mut s = String::from("profile_id,slot,factor\n");
    for p in &profiles {
        for (k, f) in p.factors().iter().enumerate() {
            writeln!(s, "{},{k},{f}", p.id())?;
        }
    }
    fs::write(dir.join("profiles.csv"), s)?;

    let features: Vec<Value> = synthetic::grid_zones(&spec.city, spec.zones_x, spec.zones_y)
        .iter()
        .map(|(id, shape)| json!({"type": "Feature", "properties": {"zone_id": id}, "geometry": shape_geojson(shape)}))
        .collect();
    fs::write(
        dir.join("zones.geojson"),
        serde_json::to_string_pretty(&json!({"type": "FeatureCollection", "features": features}))?,
    )?;

    let mut s = String::from("user_id,timestamp_iso8601_local,x,y\n");
    for e in synthetic::city_events(&spec.city, &spec.events) {
        writeln!(s, "{},{},{},{}", e.user_id, e.timestamp.format("%Y-%m-%dT%H:%M:%S"), e.x, e.y)?;
    }
    fs::write(dir.join("events.csv"), s)?;

    let config = dir.join("run.toml");
    match spec.alpha {
        FixtureAlpha::Fixed(a) => fs::write(&config, config_text(spec, &a.to_string(), "", ""))?,
        FixtureAlpha::CalibrateFrom(a) => {
            // zones and self times come from the same code path the run uses
            fs::write(&config, config_text(spec, &a.to_string(), "", ""))?;
            let settings = config::load(&config, &Overrides::default()).map_err(|e| anyhow::anyhow!("{e:?}"))?;
            let prepared = pipeline::prepare(&settings, &Sequential)?;
            let costs = pipeline::calibration_costs(CostBasis::FreeFlow, &prepared, None)?;
            let n = prepared.zones.len();
            let o: Vec<f64> = (0..n).map(|i| 500.0 + 37.0 * (i % 7) as f64).collect();
            let mut d: Vec<f64> = (0..n).map(|j| 500.0 + 53.0 * (j % 5) as f64).collect();
            let k = o.iter().sum::<f64>() / d.iter().sum::<f64>();
            d.iter_mut().for_each(|v| *v *= k);
            let trips = gravity_trips(&o, &d, &costs, a)?;
            let ids: Vec<&str> = prepared.zones.ids().collect();
            let mut s = String::from("origin_zone,dest_zone,trips\n");
            for (i, oi) in ids.iter().enumerate() {
                for (j, dj) in ids.iter().enumerate() {
                    writeln!(s, "{oi},{dj},{}", trips[i * n + j])?;
                }
            }
            fs::write(dir.join("trips.csv"), s)?;
            fs::write(
                &config,
                config_text(spec, "\"calibrate\"", "trips = \"trips.csv\"\n", "\n[calibration]\ncost = \"free_flow\"\n"),
            )?;
        }
    }
    Ok(config)
}
