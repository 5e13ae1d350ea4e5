//! Readers for the network, zone, event and trip files.
//!
//! Every problem is reported as an [`Issue`] naming the file and, for CSV
//! inputs, the 1-based line. Readers keep going after a bad row so that
//! validation can list everything at once.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime};
use dynacc_core::activity::RejectReason;
use dynacc_core::geometry::{MultiPolygon, Point, Polygon, Ring};
use dynacc_core::network::{ArcRecord, Junction, RoadNetwork, SpeedProfile, MAX_FACTOR, MAX_FRC, PROFILE_SLOTS};
use dynacc_core::GeoEvent;
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    pub file: PathBuf,
    pub line: Option<u64>,
    pub reason: String,
}

impl Issue {
    pub fn new(file: &Path, line: Option<u64>, reason: impl Into<String>) -> Self {
        Issue { file: file.to_path_buf(), line, reason: reason.into() }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(line) => write!(f, "{}:{}: {}", self.file.display(), line, self.reason),
            None => write!(f, "{}: {}", self.file.display(), self.reason),
        }
    }
}

/// One or more input problems.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct InputError(pub Vec<Issue>);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, issue) in self.0.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

impl From<Issue> for InputError {
    fn from(issue: Issue) -> Self {
        InputError(vec![issue])
    }
}

/// A CSV file with a checked header; rows come with their line numbers.
struct CsvRows {
    path: PathBuf,
    reader: csv::Reader<File>,
}

impl CsvRows {
    fn open(path: &Path, expected: &[&str]) -> Result<Self, Issue> {
        let file = File::open(path).map_err(|e| Issue::new(path, None, format!("cannot open: {e}")))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(file);
        let header = reader.headers().map_err(|e| Issue::new(path, Some(1), format!("unreadable header: {e}")))?;
        let got: Vec<&str> = header.iter().map(|h| h.trim_start_matches('\u{feff}')).collect();
        if got != expected {
            return Err(Issue::new(
                path,
                Some(1),
                format!("header is `{}`, expected `{}`", got.join(","), expected.join(",")),
            ));
        }
        Ok(CsvRows { path: path.to_path_buf(), reader })
    }

    /// Calls `f(line, fields)` for each record with the expected arity.
    fn for_each(mut self, issues: &mut Vec<Issue>, mut f: impl FnMut(u64, &csv::StringRecord, &mut Vec<Issue>)) {
        let width = self.reader.headers().map(|h| h.len()).unwrap_or(0);
        let mut record = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(false) => break,
                Ok(true) => {
                    let line = record.position().map_or(0, |p| p.line());
                    if record.len() != width {
                        issues.push(Issue::new(&self.path, Some(line), format!("expected {width} fields, found {}", record.len())));
                        continue;
                    }
                    f(line, &record, issues);
                }
                Err(e) => {
                    let line = e.position().map(|p| p.line());
                    issues.push(Issue::new(&self.path, line, format!("unreadable row: {e}")));
                    if !matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) {
                        break;
                    }
                }
            }
        }
    }
}

fn parse_f64(text: &str, what: &str) -> Result<f64, String> {
    text.parse::<f64>().map_err(|_| format!("{what} `{text}` is not a number"))
}

fn finish<T>(value: T, issues: Vec<Issue>) -> Result<T, InputError> {
    if issues.is_empty() {
        Ok(value)
    } else {
        Err(InputError(issues))
    }
}

/// `node_id,x,y`
pub fn read_nodes(path: &Path) -> Result<Vec<Junction>, InputError> {
    let rows = CsvRows::open(path, &["node_id", "x", "y"])?;
    let mut issues = Vec::new();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    rows.for_each(&mut issues, |line, r, issues| {
        let id = &r[0];
        let coords = parse_f64(&r[1], "x").and_then(|x| parse_f64(&r[2], "y").map(|y| (x, y)));
        match coords {
            Err(e) => issues.push(Issue::new(path, Some(line), e)),
            Ok((x, y)) if !(x.is_finite() && y.is_finite()) => {
                issues.push(Issue::new(path, Some(line), format!("node {id:?} has non-finite coordinates")))
            }
            Ok(_) if id.is_empty() => issues.push(Issue::new(path, Some(line), "empty node_id")),
            Ok(_) if !seen.insert(id.to_string()) => {
                issues.push(Issue::new(path, Some(line), format!("duplicate node_id {id:?}")))
            }
            Ok((x, y)) => out.push(Junction::new(id, x, y)),
        }
    });
    finish(out, issues)
}

/// `profile_id,slot,factor`, long format with slots 0-287.
pub fn read_profiles(path: &Path) -> Result<Vec<SpeedProfile>, InputError> {
    let rows = CsvRows::open(path, &["profile_id", "slot", "factor"])?;
    let mut issues = Vec::new();
    let mut order: Vec<String> = Vec::new();
    let mut table: HashMap<String, Vec<Option<f64>>> = HashMap::new();
    rows.for_each(&mut issues, |line, r, issues| {
        let id = &r[0];
        let slot = match r[1].parse::<usize>() {
            Ok(s) if s < PROFILE_SLOTS => s,
            _ => {
                issues.push(Issue::new(path, Some(line), format!("slot `{}` outside 0-{}", &r[1], PROFILE_SLOTS - 1)));
                return;
            }
        };
        let factor = match parse_f64(&r[2], "factor") {
            Ok(f) if f > 0.0 && f <= MAX_FACTOR => f,
            Ok(f) => {
                issues.push(Issue::new(path, Some(line), format!("factor {f} outside (0, {MAX_FACTOR}]")));
                return;
            }
            Err(e) => {
                issues.push(Issue::new(path, Some(line), e));
                return;
            }
        };
        let entry = table.entry(id.to_string()).or_insert_with(|| {
            order.push(id.to_string());
            vec![None; PROFILE_SLOTS]
        });
        if entry[slot].replace(factor).is_some() {
            issues.push(Issue::new(path, Some(line), format!("profile {id:?} slot {slot} given twice")));
        }
    });
    let mut out = Vec::new();
    for id in order {
        let slots = &table[&id];
        let missing: Vec<usize> = (0..PROFILE_SLOTS).filter(|&s| slots[s].is_none()).collect();
        if !missing.is_empty() {
            let shown: Vec<String> = missing.iter().take(5).map(|s| s.to_string()).collect();
            let more = if missing.len() > 5 { ", ..." } else { "" };
            issues.push(Issue::new(
                path,
                None,
                format!("profile {id:?} is missing {} slot(s): {}{more}", missing.len(), shown.join(", ")),
            ));
            continue;
        }
        match SpeedProfile::new(id.clone(), slots.iter().map(|f| f.expect("checked")).collect()) {
            Ok(p) => out.push(p),
            Err(e) => issues.push(Issue::new(path, None, e.to_string())),
        }
    }
    finish(out, issues)
}

/// `arc_id,from,to,length_m,freeflow_kmh,frc,profile_id`; an empty
/// `profile_id` means free-flow speed all day. Endpoints and profiles are
/// checked against the given id sets when provided.
pub fn read_arcs(
    path: &Path,
    nodes: Option<&HashSet<String>>,
    profiles: Option<&HashSet<String>>,
) -> Result<Vec<ArcRecord>, InputError> {
    let rows = CsvRows::open(path, &["arc_id", "from", "to", "length_m", "freeflow_kmh", "frc", "profile_id"])?;
    let mut issues = Vec::new();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    rows.for_each(&mut issues, |line, r, issues| {
        let mut bad = |msg: String| issues.push(Issue::new(path, Some(line), msg));
        let id = &r[0];
        if !seen.insert(id.to_string()) {
            return bad(format!("duplicate arc_id {id:?}"));
        }
        let length = match parse_f64(&r[3], "length_m") {
            Ok(v) if v.is_finite() && v > 0.0 => v,
            Ok(v) => return bad(format!("length_m {v} must be positive")),
            Err(e) => return bad(e),
        };
        let kmh = match parse_f64(&r[4], "freeflow_kmh") {
            Ok(v) if v.is_finite() && v > 0.0 => v,
            Ok(v) => return bad(format!("freeflow_kmh {v} must be positive")),
            Err(e) => return bad(e),
        };
        let frc = match r[5].parse::<u8>() {
            Ok(v) if v <= MAX_FRC => v,
            _ => return bad(format!("frc `{}` outside 0-{MAX_FRC}", &r[5])),
        };
        for end in [&r[1], &r[2]] {
            if nodes.is_some_and(|n| !n.contains(end)) {
                bad(format!("arc {id:?} references unknown node {end:?}"));
            }
        }
        let profile = (!r[6].is_empty()).then(|| r[6].to_string());
        if let (Some(p), Some(known)) = (&profile, profiles) {
            if !known.contains(p) {
                bad(format!("arc {id:?} references unknown profile {p:?}"));
            }
        }
        let mut rec = ArcRecord::new(id, &r[1], &r[2], length, kmh, frc);
        rec.profile = profile;
        out.push(rec);
    });
    finish(out, issues)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkFiles {
    pub nodes: PathBuf,
    pub arcs: PathBuf,
    pub profiles: PathBuf,
}

/// Reads and links the network, restricted to `frc <= max_frc`.
pub fn load_network(files: &NetworkFiles, max_frc: u8) -> Result<RoadNetwork, InputError> {
    let mut issues = Vec::new();
    let nodes = read_nodes(&files.nodes).map_err(|e| issues.extend(e.0)).ok();
    let profiles = read_profiles(&files.profiles).map_err(|e| issues.extend(e.0)).ok();
    let node_ids: Option<HashSet<String>> = nodes.as_ref().map(|n| n.iter().map(|j| j.id.clone()).collect());
    let profile_ids: Option<HashSet<String>> = profiles.as_ref().map(|p| p.iter().map(|p| p.id().to_string()).collect());
    let arcs = read_arcs(&files.arcs, node_ids.as_ref(), profile_ids.as_ref()).map_err(|e| issues.extend(e.0)).ok();
    let (Some(nodes), Some(arcs), Some(profiles)) = (nodes, arcs, profiles) else {
        return Err(InputError(issues));
    };
    let net = RoadNetwork::from_parts(nodes, arcs, profiles).map_err(|e| Issue::new(&files.arcs, None, e.to_string()))?;
    net.filter_by_frc(max_frc).map_err(|e| Issue::new(&files.arcs, None, e.to_string()).into())
}

/// A zone polygon plus its GeoJSON geometry, kept for output joins.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneShape {
    pub id: String,
    pub shape: MultiPolygon,
    pub geometry: Value,
}

fn ring_from_json(v: &Value) -> Result<Ring, String> {
    let coords = v.as_array().ok_or("ring is not an array")?;
    let mut pts = Vec::with_capacity(coords.len());
    for c in coords {
        let xy = c.as_array().filter(|a| a.len() >= 2).ok_or("position is not [x, y]")?;
        let (Some(x), Some(y)) = (xy[0].as_f64(), xy[1].as_f64()) else {
            return Err("position is not numeric".into());
        };
        pts.push(Point::new(x, y));
    }
    Ring::new(pts).map_err(|e| e.to_string())
}

fn polygon_from_json(v: &Value) -> Result<Polygon, String> {
    let rings = v.as_array().filter(|r| !r.is_empty()).ok_or("polygon has no rings")?;
    let exterior = ring_from_json(&rings[0])?;
    let holes = rings[1..].iter().map(ring_from_json).collect::<Result<_, _>>()?;
    Ok(Polygon::new(exterior, holes))
}

fn shape_from_geometry(g: &Value) -> Result<MultiPolygon, String> {
    let coords = g.get("coordinates").ok_or("geometry has no coordinates")?;
    let parts = match g.get("type").and_then(Value::as_str) {
        Some("Polygon") => vec![polygon_from_json(coords)?],
        Some("MultiPolygon") => {
            coords.as_array().ok_or("coordinates are not an array")?.iter().map(polygon_from_json).collect::<Result<_, _>>()?
        }
        other => return Err(format!("geometry type {other:?} is not Polygon or MultiPolygon")),
    };
    MultiPolygon::new(parts).map_err(|e| e.to_string())
}

/// GeoJSON FeatureCollection of (multi)polygons with a `zone_id` property.
pub fn read_zones(path: &Path) -> Result<Vec<ZoneShape>, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| Issue::new(path, None, format!("cannot open: {e}")))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Issue::new(path, Some(e.line() as u64), format!("invalid JSON: {e}")))?;
    let features = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Issue::new(path, None, "not a FeatureCollection"))?;
    let mut issues = Vec::new();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (k, f) in features.iter().enumerate() {
        let id = match f.pointer("/properties/zone_id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => {
                issues.push(Issue::new(path, None, format!("feature {k}: missing zone_id property")));
                continue;
            }
        };
        if !seen.insert(id.clone()) {
            issues.push(Issue::new(path, None, format!("feature {k}: duplicate zone_id {id:?}")));
            continue;
        }
        let geometry = f.get("geometry").cloned().unwrap_or(Value::Null);
        match shape_from_geometry(&geometry) {
            Ok(shape) => out.push(ZoneShape { id, shape, geometry }),
            Err(e) => issues.push(Issue::new(path, None, format!("feature {k} (zone {id:?}): {e}"))),
        }
    }
    if out.is_empty() && issues.is_empty() {
        issues.push(Issue::new(path, None, "no zones"));
    }
    finish(out, issues)
}

/// Parses local wall time. A UTC offset, if present, is ignored: events are
/// expected in the configured local zone already.
pub fn parse_local_timestamp(text: &str) -> Option<NaiveDateTime> {
    const FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];
    FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(text, f).ok())
        .or_else(|| DateTime::parse_from_rfc3339(text).ok().map(|d| d.naive_local()))
}

/// A row of the events file that could not be used.
#[derive(Debug, Clone, PartialEq)]
pub struct Reject {
    pub line: u64,
    pub user_id: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventsFile {
    pub events: Vec<GeoEvent>,
    /// File line of each entry in `events`.
    pub lines: Vec<u64>,
    pub rejects: Vec<Reject>,
}

/// `user_id,timestamp_iso8601_local,x,y`. Bad rows become rejects, not errors.
pub fn read_events(path: &Path) -> Result<EventsFile, InputError> {
    let rows = CsvRows::open(path, &["user_id", "timestamp_iso8601_local", "x", "y"])?;
    let mut out = EventsFile::default();
    let mut arity = Vec::new();
    rows.for_each(&mut arity, |line, r, _| {
        let user_id = r[0].to_string();
        let reject = |reason| Reject { line, user_id: user_id.clone(), reason };
        let Some(timestamp) = parse_local_timestamp(&r[1]) else {
            out.rejects.push(reject(RejectReason::UnparseableTimestamp));
            return;
        };
        let (Ok(x), Ok(y)) = (r[2].parse::<f64>(), r[3].parse::<f64>()) else {
            out.rejects.push(reject(RejectReason::MalformedRow));
            return;
        };
        if user_id.is_empty() {
            out.rejects.push(reject(RejectReason::MalformedRow));
            return;
        }
        out.events.push(GeoEvent { user_id, timestamp, x, y });
        out.lines.push(line);
    });
    // wrong-arity rows are malformed events, not fatal
    for issue in arity {
        let line = issue.line.unwrap_or(0);
        out.rejects.push(Reject { line, user_id: String::new(), reason: RejectReason::MalformedRow });
    }
    out.rejects.sort_by_key(|r| r.line);
    Ok(out)
}

/// `origin_zone,dest_zone,trips`; repeated pairs are summed.
pub fn read_trips(path: &Path) -> Result<BTreeMap<(String, String), f64>, InputError> {
    let rows = CsvRows::open(path, &["origin_zone", "dest_zone", "trips"])?;
    let mut issues = Vec::new();
    let mut out = BTreeMap::new();
    rows.for_each(&mut issues, |line, r, issues| match parse_f64(&r[2], "trips") {
        Ok(t) if t.is_finite() && t >= 0.0 => *out.entry((r[0].to_string(), r[1].to_string())).or_insert(0.0) += t,
        Ok(t) => issues.push(Issue::new(path, Some(line), format!("trips {t} must be finite and non-negative"))),
        Err(e) => issues.push(Issue::new(path, Some(line), e)),
    });
    finish(out, issues)
}

/// `zone_id,origins,destinations`
pub fn read_marginals(path: &Path) -> Result<Vec<(String, f64, f64)>, InputError> {
    let rows = CsvRows::open(path, &["zone_id", "origins", "destinations"])?;
    let mut issues = Vec::new();
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    rows.for_each(&mut issues, |line, r, issues| {
        let parsed = parse_f64(&r[1], "origins").and_then(|o| parse_f64(&r[2], "destinations").map(|d| (o, d)));
        match parsed {
            Err(e) => issues.push(Issue::new(path, Some(line), e)),
            Ok((o, d)) if !(o.is_finite() && d.is_finite() && o >= 0.0 && d >= 0.0) => {
                issues.push(Issue::new(path, Some(line), "marginals must be finite and non-negative"))
            }
            Ok(_) if !seen.insert(r[0].to_string()) => {
                issues.push(Issue::new(path, Some(line), format!("duplicate zone_id {:?}", &r[0])))
            }
            Ok((o, d)) => out.push((r[0].to_string(), o, d)),
        }
    });
    finish(out, issues)
}
