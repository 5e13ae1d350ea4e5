//! TOML run configuration.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Grid, worker count and output directory can be overridden from the
//! command line.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::Weekday;
use dynacc_core::accessibility::{DecayParameter, ScenarioKind};
use dynacc_core::activity::WORKING_DAYS;
use dynacc_core::time::{parse_clock, TimeGrid};
use serde::Deserialize;

use crate::input::{Issue, NetworkFiles};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub inputs: InputsSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub zones: ZonesSection,
    pub accessibility: AccessibilitySection,
    #[serde(default)]
    pub calibration: CalibrationSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsSection {
    pub nodes: PathBuf,
    pub arcs: PathBuf,
    pub profiles: PathBuf,
    pub zones: PathBuf,
    pub events: PathBuf,
    pub trips: Option<PathBuf>,
    pub marginals: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub start: String,
    pub end: String,
    pub step_min: u32,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { start: "07:00".into(), end: "24:00".into(), step_min: 15 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkSection {
    pub max_frc: u8,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection { max_frc: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ZonesSection {
    pub sample_fraction: f64,
    pub seed: u64,
}

impl Default for ZonesSection {
    fn default() -> Self {
        ZonesSection { sample_fraction: 0.1, seed: 42 }
    }
}

/// Either a number or the string `"calibrate"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AlphaField {
    Value(f64),
    Directive(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessibilitySection {
    pub alpha: AlphaField,
    #[serde(default = "all_scenarios")]
    pub scenarios: Vec<String>,
}

fn all_scenarios() -> Vec<String> {
    ScenarioKind::ALL.iter().map(|k| k.name().to_string()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostBasis {
    /// Day-averaged arrival-indexed times plus intrazonal terms.
    Reference,
    /// Static free-flow times plus intrazonal terms.
    FreeFlow,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub cost: CostBasis,
    pub observed_mean_cost_min: Option<f64>,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        CalibrationSection {
            cost: CostBasis::Reference,
            observed_mean_cost_min: None,
            tolerance: dynacc_core::calibration::DEFAULT_TOLERANCE,
            max_iter: dynacc_core::calibration::DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub output_dir: PathBuf,
    /// 0 means one worker per core.
    pub workers: usize,
    pub time_zone: String,
    pub weekdays: Vec<String>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            output_dir: PathBuf::from("out"),
            workers: 0,
            time_zone: "UTC".into(),
            weekdays: WORKING_DAYS.iter().map(|d| d.to_string()).collect(),
        }
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub grid_start: Option<String>,
    pub grid_end: Option<String>,
    pub step_min: Option<u32>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaSetting {
    Fixed(DecayParameter),
    Calibrate,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CalibrationTarget {
    Trips(PathBuf),
    Marginals { path: PathBuf, observed_mean_cost_min: f64 },
}

/// Validated, path-resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub config_path: PathBuf,
    pub config_bytes: Vec<u8>,
    pub network: NetworkFiles,
    pub zones: PathBuf,
    pub events: PathBuf,
    pub grid: TimeGrid,
    pub max_frc: u8,
    pub sample_fraction: f64,
    pub seed: u64,
    pub alpha: AlphaSetting,
    pub calibration_target: Option<CalibrationTarget>,
    pub cost_basis: CostBasis,
    pub tolerance: f64,
    pub max_iter: usize,
    pub scenarios: Vec<ScenarioKind>,
    pub weekdays: Vec<Weekday>,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub time_zone: String,
}

impl Settings {
    /// Every input file, in a fixed order (for hashing and existence checks).
    pub fn input_files(&self) -> Vec<(&'static str, &Path)> {
        let mut v = vec![
            ("nodes", self.network.nodes.as_path()),
            ("arcs", self.network.arcs.as_path()),
            ("profiles", self.network.profiles.as_path()),
            ("zones", self.zones.as_path()),
            ("events", self.events.as_path()),
        ];
        match &self.calibration_target {
            Some(CalibrationTarget::Trips(p)) => v.push(("trips", p.as_path())),
            Some(CalibrationTarget::Marginals { path, .. }) => v.push(("marginals", path.as_path())),
            None => {}
        }
        v
    }
}

/// Reads and checks a config file. Problems are returned as a list.
pub fn load(path: &Path, overrides: &Overrides) -> Result<Settings, Vec<Issue>> {
    let bytes = std::fs::read(path).map_err(|e| vec![Issue::new(path, None, format!("cannot read config: {e}"))])?;
    let text = std::str::from_utf8(&bytes).map_err(|_| vec![Issue::new(path, None, "config is not UTF-8")])?;
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].lines().count().max(1) as u64);
        vec![Issue::new(path, line, e.message().to_string())]
    })?;
    resolve(path, bytes.clone(), raw, overrides)
}

fn resolve(path: &Path, config_bytes: Vec<u8>, raw: RawConfig, o: &Overrides) -> Result<Settings, Vec<Issue>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    let mut issues = Vec::new();
    let mut bad = |msg: String| issues.push(Issue::new(path, None, msg));

    let start = o.grid_start.as_deref().unwrap_or(&raw.grid.start);
    let end = o.grid_end.as_deref().unwrap_or(&raw.grid.end);
    let step = o.step_min.unwrap_or(raw.grid.step_min);
    let grid = match (parse_clock(start), parse_clock(end)) {
        (Ok(s), Ok(e)) => TimeGrid::new(s, e, step.saturating_mul(60)).map_err(|e| bad(format!("grid: {e}"))).ok(),
        (Err(e), _) | (_, Err(e)) => {
            bad(format!("grid: {e}"));
            None
        }
    };

    if raw.network.max_frc > dynacc_core::network::MAX_FRC {
        bad(format!("network.max_frc {} outside 0-7", raw.network.max_frc));
    }
    let f = raw.zones.sample_fraction;
    if !(f > 0.0 && f <= 1.0) {
        bad(format!("zones.sample_fraction {f} outside (0, 1]"));
    }

    let alpha = match &raw.accessibility.alpha {
        AlphaField::Value(a) => DecayParameter::new(*a).map(AlphaSetting::Fixed).map_err(|e| bad(format!("accessibility.alpha: {e}"))).ok(),
        AlphaField::Directive(d) if d == "calibrate" => Some(AlphaSetting::Calibrate),
        AlphaField::Directive(d) => {
            bad(format!("accessibility.alpha must be a number or \"calibrate\", got {d:?}"));
            None
        }
    };

    let target = match (&raw.inputs.trips, &raw.inputs.marginals, raw.calibration.observed_mean_cost_min) {
        (Some(_), Some(_), _) => {
            bad("give either inputs.trips or inputs.marginals, not both".into());
            None
        }
        (Some(t), None, _) => Some(CalibrationTarget::Trips(at(t))),
        (None, Some(m), Some(c)) if c.is_finite() && c > 0.0 => {
            Some(CalibrationTarget::Marginals { path: at(m), observed_mean_cost_min: c })
        }
        (None, Some(_), _) => {
            bad("inputs.marginals needs a positive calibration.observed_mean_cost_min".into());
            None
        }
        (None, None, _) => None,
    };
    if alpha == Some(AlphaSetting::Calibrate) && target.is_none() && !issues.iter().any(|i| i.reason.contains("marginals")) {
        issues.push(Issue::new(path, None, "alpha = \"calibrate\" needs inputs.trips or inputs.marginals"));
    }

    let mut scenarios = Vec::new();
    for name in &raw.accessibility.scenarios {
        match ScenarioKind::parse(name) {
            Ok(k) if !scenarios.contains(&k) => scenarios.push(k),
            Ok(_) => {}
            Err(e) => issues.push(Issue::new(path, None, format!("accessibility.scenarios: {e}"))),
        }
    }
    // the reference field is always produced; ratios are taken against it
    if !scenarios.contains(&ScenarioKind::Reference) {
        scenarios.insert(0, ScenarioKind::Reference);
    }

    let mut weekdays = Vec::new();
    for d in &raw.run.weekdays {
        match Weekday::from_str(d) {
            Ok(w) if !weekdays.contains(&w) => weekdays.push(w),
            Ok(_) => {}
            Err(_) => issues.push(Issue::new(path, None, format!("run.weekdays: unknown day {d:?}"))),
        }
    }
    if weekdays.is_empty() {
        issues.push(Issue::new(path, None, "run.weekdays is empty"));
    }
    if !(raw.calibration.tolerance > 0.0) || raw.calibration.max_iter == 0 {
        issues.push(Issue::new(path, None, "calibration.tolerance and max_iter must be positive"));
    }

    let settings = Settings {
        config_path: path.to_path_buf(),
        config_bytes,
        network: NetworkFiles { nodes: at(&raw.inputs.nodes), arcs: at(&raw.inputs.arcs), profiles: at(&raw.inputs.profiles) },
        zones: at(&raw.inputs.zones),
        events: at(&raw.inputs.events),
        grid: grid.unwrap_or_default(),
        max_frc: raw.network.max_frc,
        sample_fraction: f,
        seed: raw.zones.seed,
        alpha: alpha.unwrap_or(AlphaSetting::Calibrate),
        calibration_target: target,
        cost_basis: raw.calibration.cost,
        tolerance: raw.calibration.tolerance,
        max_iter: raw.calibration.max_iter,
        scenarios,
        weekdays,
        output_dir: o.output_dir.clone().unwrap_or_else(|| at(&raw.run.output_dir)),
        workers: o.workers.unwrap_or(raw.run.workers),
        time_zone: raw.run.time_zone,
    };
    for (name, p) in settings.input_files() {
        if !p.is_file() {
            issues.push(Issue::new(p, None, format!("{name} file not found")));
        }
    }
    if issues.is_empty() {
        Ok(settings)
    } else {
        Err(issues)
    }
}
