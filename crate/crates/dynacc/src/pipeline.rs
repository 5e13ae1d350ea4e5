//! End-to-end pipeline: validation, the full run and calibration.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use chrono::Datelike;
use dynacc_core::accessibility::{self, AccessibilityField, DecayParameter, ScenarioKind};
use dynacc_core::activity::{self, ActivitySurface, RejectReason};
use dynacc_core::calibration::{self, CalibrationResult, ObservedTrips};
use dynacc_core::exec::TaskMap;
use dynacc_core::network::RoadNetwork;
use dynacc_core::routing::{self, TravelTimeCube};
use dynacc_core::stats;
use dynacc_core::zones::{self, composed_cost, SelfTime, ZoneSystem};
use dynacc_core::Warning;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{AlphaSetting, CalibrationTarget, CostBasis, Settings};
use crate::input::{self, EventsFile, Issue, Reject, ZoneShape};
use crate::output::{self, RatioEntry, SummaryEntry, ZoneCv};

/// Schema and referential checks on all inputs, without routing.
pub fn validate(settings: &Settings) -> Vec<Issue> {
    let mut issues = Vec::new();
    let net = input::load_network(&settings.network, settings.max_frc).map_err(|e| issues.extend(e.0)).ok();
    let shapes = input::read_zones(&settings.zones).map_err(|e| issues.extend(e.0)).ok();
    let zones = match (&net, shapes) {
        (Some(net), Some(shapes)) => match build_zones(&shapes, net) {
            Ok((zs, _)) => Some(zs),
            Err(e) => {
                issues.push(Issue::new(&settings.zones, None, e.to_string()));
                None
            }
        },
        _ => None,
    };
    if let Err(e) = input::read_events(&settings.events) {
        issues.extend(e.0);
    }
    if let (Some(target), Some(zones)) = (&settings.calibration_target, &zones) {
        if let Err(e) = calibration_marginals(target, zones) {
            let path = match target {
                CalibrationTarget::Trips(p) => p,
                CalibrationTarget::Marginals { path, .. } => path,
            };
            issues.push(Issue::new(path, None, format!("{e:#}")));
        }
    }
    issues
}

fn build_zones(shapes: &[ZoneShape], net: &RoadNetwork) -> Result<(ZoneSystem, Vec<Warning>)> {
    let parts = shapes.iter().map(|s| (s.id.clone(), s.shape.clone())).collect();
    Ok(ZoneSystem::new(parts, net)?)
}

/// Network, zones with self times, ready for routing.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub net: RoadNetwork,
    pub shapes: Vec<ZoneShape>,
    pub zones: ZoneSystem,
    pub self_times: Vec<SelfTime>,
    pub warnings: Vec<(&'static str, Warning)>,
}

pub fn prepare<M: TaskMap>(settings: &Settings, exec: &M) -> Result<Prepared> {
    let net = input::load_network(&settings.network, settings.max_frc)?;
    let shapes = input::read_zones(&settings.zones)?;
    let (mut zones, zone_warnings) = build_zones(&shapes, &net)?;
    let mut warnings: Vec<(&'static str, Warning)> = zone_warnings.into_iter().map(|w| ("zones", w)).collect();
    let sampled = exec.map(zones.len(), |z| {
        zones::self_potential_time(&zones, z, &net, settings.sample_fraction, settings.seed)
    });
    let mut self_times = Vec::with_capacity(sampled.len());
    for r in sampled {
        let (t, w) = r?;
        self_times.push(t);
        warnings.extend(w.map(|w| ("self_time", w)));
    }
    zones.set_self_times(&self_times.iter().map(|t| t.minutes).collect::<Vec<_>>())?;
    Ok(Prepared { net, shapes, zones, self_times, warnings })
}

/// Weekday filter, unique-user counts and normalization, with every dropped
/// row accounted for in the rejects list.
pub fn build_surface(events: &EventsFile, settings: &Settings, zones: &ZoneSystem) -> (ActivitySurface, Vec<Reject>, Vec<Warning>) {
    let mut rejects = events.rejects.clone();
    let mut kept = Vec::new();
    let mut kept_lines = Vec::new();
    for (e, &line) in events.events.iter().zip(&events.lines) {
        if settings.weekdays.contains(&e.timestamp.weekday()) {
            kept.push(e.clone());
            kept_lines.push(line);
        } else {
            rejects.push(Reject { line, user_id: e.user_id.clone(), reason: RejectReason::ExcludedWeekday });
        }
    }
    let (raw, dropped) = activity::count_unique_users(&kept, zones, &settings.grid);
    for (i, reason) in dropped {
        rejects.push(Reject { line: kept_lines[i], user_id: kept[i].user_id.clone(), reason });
    }
    rejects.sort_by_key(|r| r.line);
    let (surface, warnings) = activity::normalize(&raw);
    (surface, rejects, warnings)
}

/// Composed zone-to-zone costs (minutes) used for calibration.
pub fn calibration_costs(basis: CostBasis, prepared: &Prepared, arrival: Option<&TravelTimeCube>) -> Result<Vec<Option<f64>>> {
    let zs = prepared.zones.zones();
    let n = zs.len();
    let self_times = prepared.zones.self_times();
    let mut out = Vec::with_capacity(n * n);
    match basis {
        CostBasis::Reference => {
            let cube = arrival.ok_or_else(|| anyhow!("reference costs need the arrival cube"))?;
            let avg = accessibility::average_times(cube);
            for o in 0..n {
                for d in 0..n {
                    out.push(avg.get(o, d).map(|c| composed_cost(o, d, &self_times, c)));
                }
            }
        }
        CostBasis::FreeFlow => {
            for (o, zo) in zs.iter().enumerate() {
                let secs = routing::static_times_from(&prepared.net, zo.centroid_junction);
                for (d, zd) in zs.iter().enumerate() {
                    let t = secs[zd.centroid_junction.index()];
                    out.push(t.is_finite().then(|| composed_cost(o, d, &self_times, t / 60.0)));
                }
            }
        }
    }
    Ok(out)
}

/// Origin and destination totals per zone, plus the trip matrix if given.
fn calibration_marginals(target: &CalibrationTarget, zones: &ZoneSystem) -> Result<(Vec<f64>, Vec<f64>, Option<Vec<f64>>)> {
    let n = zones.len();
    let pos = |id: &str| zones.position(id).ok_or_else(|| anyhow!("unknown zone id {id:?}"));
    match target {
        CalibrationTarget::Trips(path) => {
            let trips = input::read_trips(path)?;
            let mut t = vec![0.0; n * n];
            for ((o, d), v) in &trips {
                t[pos(o)? * n + pos(d)?] += v;
            }
            let o: Vec<f64> = t.chunks(n).map(|r| r.iter().sum()).collect();
            let d: Vec<f64> = (0..n).map(|j| (0..n).map(|i| t[i * n + j]).sum()).collect();
            if o.iter().sum::<f64>() <= 0.0 {
                bail!("trip file has no trips");
            }
            Ok((o, d, Some(t)))
        }
        CalibrationTarget::Marginals { path, .. } => {
            let rows = input::read_marginals(path)?;
            let (mut o, mut d) = (vec![0.0; n], vec![0.0; n]);
            for (id, oi, di) in rows {
                let z = pos(&id)?;
                o[z] = oi;
                d[z] = di;
            }
            let (so, sd): (f64, f64) = (o.iter().sum(), d.iter().sum());
            if so <= 0.0 || (so - sd).abs() > 1e-9 * so {
                bail!("origin total {so} and destination total {sd} must be positive and equal");
            }
            Ok((o, d, None))
        }
    }
}

/// Hyman calibration against the configured target. Returns the result and
/// the observed mean cost.
pub fn calibrate(settings: &Settings, zones: &ZoneSystem, costs: &[Option<f64>]) -> Result<(CalibrationResult, f64)> {
    let target = settings.calibration_target.as_ref().ok_or_else(|| anyhow!("no calibration target configured"))?;
    let (o, d, trips) = calibration_marginals(target, zones)?;
    let observed = match (target, trips) {
        (_, Some(t)) => ObservedTrips::new(zones.len(), zones.len(), t, costs.to_vec())?.mean_cost(),
        (CalibrationTarget::Marginals { observed_mean_cost_min, .. }, None) => *observed_mean_cost_min,
        (CalibrationTarget::Trips(_), None) => unreachable!("trips target yields a matrix"),
    };
    let result = calibration::calibrate_alpha(&o, &d, costs, observed, settings.tolerance, settings.max_iter)?;
    Ok((result, observed))
}

/// Summary rows, ratio rows and per-zone CVs for a field.
pub fn summarize_field(field: &AccessibilityField) -> Result<(Vec<SummaryEntry>, Vec<RatioEntry>, ZoneCv)> {
    let reference = stats::summarize("reference", field.reference())?;
    let mut summary = vec![SummaryEntry { scenario: ScenarioKind::Reference, slot_start: None, row: reference.clone() }];
    let mut ratios = Vec::new();
    for &kind in field.scenarios().iter().filter(|&&k| k != ScenarioKind::Reference) {
        for (s, start) in field.grid().slot_starts().enumerate() {
            let row = stats::summarize_across_zones(field, kind, s)?;
            ratios.push(RatioEntry { scenario: kind, slot_start: start, ratio: stats::ratios_vs_reference(&row, &reference) });
            summary.push(SummaryEntry { scenario: kind, slot_start: Some(start), row });
        }
    }
    let scenarios = field.scenarios().to_vec();
    let mut values = Vec::with_capacity(field.zone_ids().len());
    for z in 0..field.zone_ids().len() {
        let mut row = Vec::with_capacity(scenarios.len());
        for &k in &scenarios {
            row.push(match stats::cv_over_time(field, k, z) {
                Ok(v) => v,
                Err(stats::StatsError::TooFewSlots(_)) => None,
                Err(e) => return Err(e.into()),
            });
        }
        values.push(row);
    }
    Ok((summary, ratios, ZoneCv { scenarios, values }))
}

/// Everything a run produces, kept in memory for callers and tests.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub zone_ids: Vec<String>,
    pub self_times: Vec<SelfTime>,
    pub departure: TravelTimeCube,
    pub arrival: TravelTimeCube,
    pub surface: ActivitySurface,
    pub rejects: Vec<Reject>,
    pub calibration: Option<(CalibrationResult, f64)>,
    pub alpha: DecayParameter,
    pub field: AccessibilityField,
    pub summary: Vec<SummaryEntry>,
    pub ratios: Vec<RatioEntry>,
    pub zone_cv: ZoneCv,
    pub warnings: Vec<(&'static str, Warning)>,
    pub timings: Vec<(&'static str, f64)>,
}

struct Clock(Instant, Vec<(&'static str, f64)>);

impl Clock {
    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        let secs = (now - self.0).as_secs_f64();
        log::info!("{stage}: {secs:.3} s");
        self.1.push((stage, secs));
        self.0 = now;
    }
}

/// Runs every stage, writing each artifact into `dir` as soon as it exists.
pub fn run_stages<M: TaskMap>(settings: &Settings, exec: &M, dir: &Path) -> Result<RunArtifacts> {
    let mut clock = Clock(Instant::now(), Vec::new());
    let prepared = prepare(settings, exec)?;
    let mut warnings = prepared.warnings.clone();
    let zone_ids: Vec<String> = prepared.zones.ids().map(String::from).collect();
    output::write_self_times(&dir.join("self_times.csv"), &zone_ids, &prepared.self_times)?;
    clock.lap("network_and_zones");

    let (departure, w) = routing::build_departure_cube_with(exec, &prepared.net, &prepared.zones, &settings.grid);
    warnings.extend(w.into_iter().map(|w| ("departure_cube", w)));
    output::write_cube(&dir.join("cube_departure.csv"), &departure)?;
    clock.lap("departure_cube");
    let (arrival, w) = routing::regroup_by_arrival_with(exec, &departure)?;
    warnings.extend(w.into_iter().map(|w| ("arrival_cube", w)));
    output::write_cube(&dir.join("cube_arrival.csv"), &arrival)?;
    clock.lap("arrival_cube");

    let events = input::read_events(&settings.events)?;
    let (surface, rejects, w) = build_surface(&events, settings, &prepared.zones);
    warnings.extend(w.into_iter().map(|w| ("surface", w)));
    output::write_surface(&dir.join("surface.csv"), &surface)?;
    output::write_rejects(&dir.join("rejects.csv"), &rejects)?;
    clock.lap("surface");

    let (alpha, calibration) = match settings.alpha {
        AlphaSetting::Fixed(a) => (a, None),
        AlphaSetting::Calibrate => {
            let costs = calibration_costs(settings.cost_basis, &prepared, Some(&arrival))?;
            let (result, observed) = calibrate(settings, &prepared.zones, &costs)?;
            output::write_calibration(&dir.join("calibration.json"), &result, observed, cost_basis_name(settings.cost_basis))?;
            if !result.converged {
                log::warn!("calibration did not converge; using last alpha {}", result.alpha);
            }
            let alpha = DecayParameter::new(result.alpha).context("calibrated alpha")?;
            clock.lap("calibration");
            (alpha, Some((result, observed)))
        }
    };

    let self_minutes = prepared.zones.self_times();
    let field = accessibility::run_scenarios_with(exec, &arrival, &surface, &self_minutes, alpha, &settings.scenarios)?;
    output::write_field(&dir.join("field.csv"), &field)?;
    for &k in field.scenarios() {
        output::write_field_geojson(&dir.join(format!("field_{}.geojson", k.name())), &prepared.shapes, &field, k)?;
    }
    clock.lap("accessibility");

    let (summary, ratios, zone_cv) = summarize_field(&field)?;
    write_summaries(dir, &summary, &ratios, &zone_ids, &zone_cv)?;
    output::write_zone_cv_geojson(&dir.join("zone_cv.geojson"), &prepared.shapes, &zone_cv)?;
    for (stage, w) in &warnings {
        log::warn!("{stage}: {}", output::warning_row(w).0);
    }
    output::write_warnings(&dir.join("warnings.csv"), &warnings)?;
    clock.lap("statistics");

    Ok(RunArtifacts {
        zone_ids,
        self_times: prepared.self_times,
        departure,
        arrival,
        surface,
        rejects,
        calibration,
        alpha,
        field,
        summary,
        ratios,
        zone_cv,
        warnings,
        timings: clock.1,
    })
}

pub fn write_summaries(dir: &Path, summary: &[SummaryEntry], ratios: &[RatioEntry], ids: &[String], cv: &ZoneCv) -> Result<()> {
    output::write_summary(&dir.join("summary.csv"), summary)?;
    output::write_ratios(&dir.join("ratios.csv"), ratios)?;
    output::write_zone_cv(&dir.join("zone_cv.csv"), ids, cv)
}

pub fn cost_basis_name(b: CostBasis) -> &'static str {
    match b {
        CostBasis::Reference => "reference",
        CostBasis::FreeFlow => "free_flow",
    }
}

/// SHA-256 over the config and every input file, each framed by its name
/// and length so that moving bytes between files also changes the hash.
pub fn config_hash(settings: &Settings) -> Result<String> {
    let mut h = Sha256::new();
    let mut feed = |name: &str, bytes: &[u8]| {
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    };
    feed("config", &settings.config_bytes);
    for (name, path) in settings.input_files() {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        feed(name, &bytes);
    }
    Ok(hex::encode(h.finalize()))
}

fn manifest(settings: &Settings, a: &RunArtifacts, workers: usize) -> Result<serde_json::Value> {
    let inputs: serde_json::Map<String, serde_json::Value> =
        settings.input_files().into_iter().map(|(k, p)| (k.to_string(), json!(p.display().to_string()))).collect();
    let timings: serde_json::Map<String, serde_json::Value> = a.timings.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    Ok(json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": settings.config_path.display().to_string(),
        "config_hash": config_hash(settings)?,
        "inputs": inputs,
        "seed": settings.seed,
        "time_zone": settings.time_zone,
        "grid": {
            "start": dynacc_core::time::format_hhmm(settings.grid.start()),
            "end": dynacc_core::time::format_hhmm(settings.grid.end()),
            "step_min": settings.grid.step() / 60,
            "slots": settings.grid.len(),
        },
        "max_frc": settings.max_frc,
        "sample_fraction": settings.sample_fraction,
        "alpha": a.alpha.value(),
        "alpha_calibrated": a.calibration.is_some(),
        "scenarios": settings.scenarios.iter().map(|k| k.name()).collect::<Vec<_>>(),
        "zones": a.zone_ids.len(),
        "workers": workers,
        "warnings": a.warnings.len(),
        "rejected_events": a.rejects.len(),
        "timings_s": timings,
    }))
}

/// Full run into `settings.output_dir`. Outputs are staged and moved into
/// place on success; on failure whatever was written ends up in `failed/`.
pub fn execute_run<M: TaskMap>(settings: &Settings, exec: &M, workers: usize) -> Result<RunArtifacts> {
    let out = &settings.output_dir;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let stage = out.join(".staging");
    if stage.exists() {
        fs::remove_dir_all(&stage)?;
    }
    fs::create_dir_all(&stage)?;
    let started = Instant::now();
    let result = run_stages(settings, exec, &stage).and_then(|mut a| {
        a.timings.push(("total", started.elapsed().as_secs_f64()));
        output::write_manifest(&stage.join("manifest.json"), &manifest(settings, &a, workers)?)?;
        Ok(a)
    });
    match result {
        Ok(a) => {
            let mut names: Vec<_> = fs::read_dir(&stage)?.collect::<std::io::Result<Vec<_>>>()?;
            names.sort_by_key(|e| e.file_name());
            for e in names {
                fs::rename(e.path(), out.join(e.file_name()))?;
            }
            fs::remove_dir(&stage)?;
            Ok(a)
        }
        Err(e) => {
            let failed = out.join("failed");
            if failed.exists() {
                fs::remove_dir_all(&failed)?;
            }
            fs::rename(&stage, &failed)?;
            Err(e)
        }
    }
}

/// Index of `zone` in `ids`, or an error listing the valid ids.
pub fn zone_index(ids: &[String], zone: &str) -> Result<usize> {
    ids.iter().position(|z| z == zone).ok_or_else(|| anyhow!("unknown zone {zone:?}; valid zone ids: {}", ids.join(", ")))
}

