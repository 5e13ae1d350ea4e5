//! CSV, GeoJSON and JSON artifact writers, plus the field reader used by
//! `stats` and `profile`.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! re-reading an export gives back the exact values. Unreachable or
//! undefined values are written as `NA` in CSV and `null` in JSON.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use dynacc_core::accessibility::{AccessibilityField, ScenarioKind};
use dynacc_core::activity::ActivitySurface;
use dynacc_core::calibration::CalibrationResult;
use dynacc_core::routing::TravelTimeCube;
use dynacc_core::stats::{RatioRow, SummaryRow};
use dynacc_core::time::{format_hhmm, parse_clock, TimeGrid};
use dynacc_core::zones::SelfTime;
use dynacc_core::Warning;
use serde_json::{json, Map, Value};

use crate::input::{Reject, ZoneShape};

pub fn fmt_opt(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite()).map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn json_opt(v: Option<f64>) -> Value {
    v.filter(|x| x.is_finite()).map_or(Value::Null, |x| json!(x))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(f)))
}

fn finish(mut w: csv::Writer<BufWriter<File>>, path: &Path) -> Result<()> {
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// `origin_zone,dest_zone,slot_start_hhmm,indexing_mode,travel_time_min`
pub fn write_cube(path: &Path, cube: &TravelTimeCube) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["origin_zone", "dest_zone", "slot_start_hhmm", "indexing_mode", "travel_time_min"])?;
    let ids = cube.zone_ids();
    let slots: Vec<String> = cube.grid().slot_starts().map(format_hhmm).collect();
    let mode = cube.mode().as_str();
    for (o, oid) in ids.iter().enumerate() {
        for (d, did) in ids.iter().enumerate() {
            for (s, hhmm) in slots.iter().enumerate() {
                w.write_record([oid.as_str(), did, hhmm, mode, &fmt_opt(cube.get(o, d, s))])?;
            }
        }
    }
    finish(w, path)
}

/// `zone_id,slot_start_hhmm,raw_count,mass`
pub fn write_surface(path: &Path, surface: &ActivitySurface) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["zone_id", "slot_start_hhmm", "raw_count", "mass"])?;
    let raw = surface.raw();
    for (z, id) in surface.zone_ids().iter().enumerate() {
        for (s, start) in surface.grid().slot_starts().enumerate() {
            w.write_record([id.as_str(), &format_hhmm(start), &raw.get(z, s).to_string(), &surface.mass(z, s).to_string()])?;
        }
    }
    finish(w, path)
}

/// `zone_id,self_time_min,n_sampled`
pub fn write_self_times(path: &Path, ids: &[String], times: &[SelfTime]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["zone_id", "self_time_min", "n_sampled"])?;
    for (id, t) in ids.iter().zip(times) {
        w.write_record([id.as_str(), &t.minutes.to_string(), &t.n_sampled.to_string()])?;
    }
    finish(w, path)
}

/// `line,user_id,reason`
pub fn write_rejects(path: &Path, rejects: &[Reject]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["line", "user_id", "reason"])?;
    for r in rejects {
        w.write_record([r.line.to_string().as_str(), &r.user_id, r.reason.code()])?;
    }
    finish(w, path)
}

pub fn warning_row(w: &Warning) -> (&'static str, String) {
    match w {
        Warning::CentroidJunctionOutside { zone } => ("centroid_junction_outside", zone.clone()),
        Warning::NoInteriorJunctions { zone } => ("no_interior_junctions", zone.clone()),
        Warning::UnreachableSampledJunctions { zone, count } => ("unreachable_sampled_junctions", format!("{zone}: {count}")),
        Warning::UnreachableCells { count } => ("unreachable_cells", count.to_string()),
        Warning::SparseRegroupPairs { count } => ("sparse_regroup_pairs", count.to_string()),
        Warning::EmptySlot { slot } => ("empty_slot", slot.to_string()),
    }
}

/// `stage,kind,detail`
pub fn write_warnings(path: &Path, warnings: &[(&str, Warning)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["stage", "kind", "detail"])?;
    for (stage, warning) in warnings {
        let (kind, detail) = warning_row(warning);
        w.write_record([*stage, kind, &detail])?;
    }
    finish(w, path)
}

/// `zone_id,slot_start_hhmm,scenario,P`, scenario by scenario, slot by slot.
pub fn write_field(path: &Path, field: &AccessibilityField) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["zone_id", "slot_start_hhmm", "scenario", "P"])?;
    for &kind in field.scenarios() {
        for (s, start) in field.grid().slot_starts().enumerate() {
            let hhmm = format_hhmm(start);
            let values = field.slot_values(kind, s).expect("scenario present");
            for (id, v) in field.zone_ids().iter().zip(values) {
                w.write_record([id.as_str(), &hhmm, kind.name(), &v.to_string()])?;
            }
        }
    }
    finish(w, path)
}

/// Reads a field export back. Zone order follows first appearance and the
/// grid is rebuilt from the distinct slot starts, which must be evenly
/// spaced. The `reference` scenario must be present.
pub fn read_field(path: &Path) -> Result<AccessibilityField> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != ["zone_id", "slot_start_hhmm", "scenario", "P"] {
        bail!("{}:1: unexpected header `{}`", path.display(), header.join(","));
    }
    let mut zones: Vec<String> = Vec::new();
    let mut zone_pos: HashMap<String, usize> = HashMap::new();
    let mut scenarios: Vec<ScenarioKind> = Vec::new();
    let mut starts: Vec<u32> = Vec::new();
    let mut cells: Vec<(usize, u32, usize, f64)> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let ctx = || format!("{}:{line}", path.display());
        let z = *zone_pos.entry(rec[0].to_string()).or_insert_with(|| {
            zones.push(rec[0].to_string());
            zones.len() - 1
        });
        let start = parse_clock(&rec[1]).map_err(|e| anyhow::anyhow!("{}: {e}", ctx()))?;
        let kind = ScenarioKind::parse(&rec[2]).map_err(|e| anyhow::anyhow!("{}: {e}", ctx()))?;
        if !scenarios.contains(&kind) {
            scenarios.push(kind);
        }
        if !starts.contains(&start) {
            starts.push(start);
        }
        let p: f64 = rec[3].parse().with_context(ctx)?;
        let k = scenarios.iter().position(|&x| x == kind).expect("inserted");
        cells.push((k, start, z, p));
    }
    starts.sort_unstable();
    let step = match starts.as_slice() {
        [] => bail!("{}: empty field export", path.display()),
        [_] => 900,
        [a, b, ..] => b - a,
    };
    if starts.windows(2).any(|w| w[1] - w[0] != step) {
        bail!("{}: slot starts are not evenly spaced", path.display());
    }
    let grid = TimeGrid::new(starts[0], starts[starts.len() - 1] + step, step)?;
    let (n, slots) = (zones.len(), grid.len());
    let mut values = vec![f64::NAN; scenarios.len() * slots * n];
    for (k, start, z, p) in cells {
        let s = grid.slot_of(start).expect("start on grid");
        values[(k * slots + s) * n + z] = p;
    }
    if values.iter().any(|v| v.is_nan()) {
        bail!("{}: field export is missing (zone, slot, scenario) rows", path.display());
    }
    let Some(rk) = scenarios.iter().position(|&k| k == ScenarioKind::Reference) else {
        bail!("{}: field export has no reference scenario", path.display());
    };
    let reference = values[rk * slots * n..rk * slots * n + n].to_vec();
    Ok(AccessibilityField::from_values(zones, grid, scenarios, values, reference))
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

/// FeatureCollection of the zone polygons with per-zone properties.
fn write_zone_geojson(path: &Path, zones: &[ZoneShape], props: impl Fn(usize) -> Map<String, Value>) -> Result<()> {
    let features: Vec<Value> = zones
        .iter()
        .enumerate()
        .map(|(z, shape)| {
            let mut p = props(z);
            p.insert("zone_id".into(), json!(shape.id));
            json!({"type": "Feature", "properties": p, "geometry": shape.geometry})
        })
        .collect();
    write_json(path, &json!({"type": "FeatureCollection", "features": features}))
}

/// One scenario's field joined onto the zones, one `P_hhmm` property per slot.
pub fn write_field_geojson(path: &Path, zones: &[ZoneShape], field: &AccessibilityField, kind: ScenarioKind) -> Result<()> {
    let keys: Vec<String> = field.grid().slot_starts().map(|s| format!("P_{}", format_hhmm(s))).collect();
    write_zone_geojson(path, zones, |z| {
        let mut p = Map::new();
        for (s, key) in keys.iter().enumerate() {
            p.insert(key.clone(), json_opt(field.get(kind, z, s)));
        }
        p
    })
}

/// One row per (scenario, slot) plus the static reference row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryEntry {
    pub scenario: ScenarioKind,
    /// `None` for the slot-independent reference row.
    pub slot_start: Option<u32>,
    pub row: SummaryRow,
}

fn slot_label(s: Option<u32>) -> String {
    s.map_or_else(|| "all".to_string(), format_hhmm)
}

/// `scenario,slot_start_hhmm,n,min,max,mean,sd,cv_pct`
pub fn write_summary(path: &Path, rows: &[SummaryEntry]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["scenario", "slot_start_hhmm", "n", "min", "max", "mean", "sd", "cv_pct"])?;
    for e in rows {
        let r = &e.row;
        w.write_record([
            e.scenario.name(),
            &slot_label(e.slot_start),
            &r.n.to_string(),
            &r.min.to_string(),
            &r.max.to_string(),
            &r.mean.to_string(),
            &r.sd.to_string(),
            &fmt_opt(r.cv),
        ])?;
    }
    finish(w, path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioEntry {
    pub scenario: ScenarioKind,
    pub slot_start: u32,
    pub ratio: RatioRow,
}

/// `scenario,slot_start_hhmm,min,max,mean,sd,cv` as scenario / reference.
pub fn write_ratios(path: &Path, rows: &[RatioEntry]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["scenario", "slot_start_hhmm", "min", "max", "mean", "sd", "cv"])?;
    for e in rows {
        let r = &e.ratio;
        w.write_record([
            e.scenario.name(),
            &format_hhmm(e.slot_start),
            &fmt_opt(r.min),
            &fmt_opt(r.max),
            &fmt_opt(r.mean),
            &fmt_opt(r.sd),
            &fmt_opt(r.cv),
        ])?;
    }
    finish(w, path)
}

/// Per-zone coefficient of variation over the day, per scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneCv {
    pub scenarios: Vec<ScenarioKind>,
    /// `[zone][scenario]`
    pub values: Vec<Vec<Option<f64>>>,
}

/// `zone_id,scenario,cv_pct`
pub fn write_zone_cv(path: &Path, ids: &[String], cv: &ZoneCv) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["zone_id", "scenario", "cv_pct"])?;
    for (id, row) in ids.iter().zip(&cv.values) {
        for (k, v) in cv.scenarios.iter().zip(row) {
            w.write_record([id.as_str(), k.name(), &fmt_opt(*v)])?;
        }
    }
    finish(w, path)
}

/// Zone polygons with one `cv_<scenario>` property per scenario.
pub fn write_zone_cv_geojson(path: &Path, zones: &[ZoneShape], cv: &ZoneCv) -> Result<()> {
    write_zone_geojson(path, zones, |z| {
        cv.scenarios.iter().zip(&cv.values[z]).map(|(k, v)| (format!("cv_{}", k.name()), json_opt(*v))).collect()
    })
}

pub fn write_calibration(path: &Path, result: &CalibrationResult, observed_mean: f64, cost_basis: &str) -> Result<()> {
    let trace: Vec<Value> = result.iterations.iter().map(|(a, c)| json!({"alpha": a, "mean_cost_min": c})).collect();
    write_json(
        path,
        &json!({
            "alpha": result.alpha,
            "converged": result.converged,
            "observed_mean_cost_min": observed_mean,
            "cost_basis": cost_basis,
            "trace": trace,
        }),
    )
}

pub fn write_manifest(path: &Path, manifest: &Value) -> Result<()> {
    write_json(path, manifest)
}

/// Per-zone signature: one row per slot, one column per scenario.
pub fn write_profile(path: &Path, field: &AccessibilityField, zone: usize) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header = vec!["slot_start_hhmm".to_string()];
    header.extend(field.scenarios().iter().map(|k| k.name().to_string()));
    w.write_record(&header)?;
    for (s, start) in field.grid().slot_starts().enumerate() {
        let mut row = vec![format_hhmm(start)];
        row.extend(field.scenarios().iter().map(|&k| fmt_opt(field.get(k, zone, s))));
        w.write_record(&row)?;
    }
    finish(w, path)
}
