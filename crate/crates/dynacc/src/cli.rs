//! Command-line interface.
//!
//! Exit codes: 0 success, 2 validation failure, 3 runtime failure.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use dynacc_core::routing;
use dynacc_core::synthetic::{EventPlan, GridCity};

use crate::config::{self, Overrides, Settings};
use crate::exec::RayonPool;
use crate::fixture::{self, FixtureAlpha, FixtureSpec};
use crate::input::Issue;
use crate::{output, pipeline};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dynacc", version, about = "Time-of-day potential accessibility from road speeds and activity data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// Run configuration (TOML).
    #[arg(short, long)]
    pub config: PathBuf,
    /// First slot start, hh:mm.
    #[arg(long)]
    pub grid_start: Option<String>,
    /// End of the last slot, hh:mm.
    #[arg(long)]
    pub grid_end: Option<String>,
    /// Slot length in minutes.
    #[arg(long)]
    pub step_min: Option<u32>,
    /// Worker threads (0 = one per core).
    #[arg(short, long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(short, long)]
    pub output_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            grid_start: self.grid_start.clone(),
            grid_end: self.grid_end.clone(),
            step_min: self.step_min,
            workers: self.workers,
            output_dir: self.output_dir.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the config and all inputs without routing.
    Validate(ConfigArgs),
    /// Run the full pipeline and write every artifact.
    Run(ConfigArgs),
    /// Write one zone's 68-slot signature from a finished run.
    Profile {
        #[command(flatten)]
        args: ConfigArgs,
        /// Zone id.
        #[arg(short, long)]
        zone: String,
        /// Output file (default: <output_dir>/profile_<zone>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Calibrate the decay parameter only.
    Calibrate(ConfigArgs),
    /// Recompute summary tables from a field export.
    Stats {
        /// A `field.csv` written by `run`.
        #[arg(short, long)]
        field: PathBuf,
        /// Output directory (default: next to the field export).
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Write a synthetic grid-city input set with a ready-to-run config.
    Synth {
        #[arg(short, long)]
        dir: PathBuf,
        /// Junctions per side.
        #[arg(long, default_value_t = 10)]
        side: usize,
        /// Zones per side.
        #[arg(long, default_value_t = 5)]
        zones: usize,
        #[arg(long, default_value_t = 300)]
        users: usize,
        /// Constant speeds all day.
        #[arg(long)]
        free_flow: bool,
        /// Everyone stays home: a time-constant activity surface.
        #[arg(long)]
        static_activity: bool,
        /// Also write a trip file and configure calibration against it.
        #[arg(long)]
        calibrate: bool,
    },
}

enum Failure {
    Invalid(Vec<String>),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn issues(list: Vec<Issue>) -> Failure {
    Failure::Invalid(list.iter().map(ToString::to_string).collect())
}

fn load(args: &ConfigArgs) -> Result<Settings, Failure> {
    config::load(&args.config, &args.overrides()).map_err(issues)
}

fn load_valid(args: &ConfigArgs) -> Result<Settings, Failure> {
    let settings = load(args)?;
    let found = pipeline::validate(&settings);
    if found.is_empty() {
        Ok(settings)
    } else {
        Err(issues(found))
    }
}

fn pool(settings: &Settings) -> Result<RayonPool, Failure> {
    RayonPool::new(settings.workers).context("building worker pool").map_err(Failure::Runtime)
}

/// Runs a parsed command and returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(lines)) => {
            for l in &lines {
                eprintln!("{l}");
            }
            eprintln!("validation failed: {} problem(s)", lines.len());
            EXIT_INVALID
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate(args) => {
            load_valid(&args)?;
            println!("OK");
        }
        Command::Run(args) => {
            let settings = load_valid(&args)?;
            let exec = pool(&settings)?;
            let a = pipeline::execute_run(&settings, &exec, exec.workers())
                .with_context(|| format!("run failed; partial outputs in {}", settings.output_dir.join("failed").display()))?;
            println!(
                "wrote {} zones x {} slots, alpha {} -> {}",
                a.zone_ids.len(),
                settings.grid.len(),
                a.alpha.value(),
                settings.output_dir.display()
            );
        }
        Command::Profile { args, zone, out } => {
            let settings = load(&args)?;
            let path = settings.output_dir.join("field.csv");
            if !path.is_file() {
                return Err(Failure::Invalid(vec![format!("{}: no field export; run first", path.display())]));
            }
            let field = output::read_field(&path)?;
            let z = pipeline::zone_index(field.zone_ids(), &zone).map_err(|e| Failure::Invalid(vec![e.to_string()]))?;
            let out = out.unwrap_or_else(|| settings.output_dir.join(format!("profile_{zone}.csv")));
            output::write_profile(&out, &field, z)?;
            println!("{}", out.display());
        }
        Command::Calibrate(args) => {
            let settings = load_valid(&args)?;
            if settings.calibration_target.is_none() {
                return Err(Failure::Invalid(vec!["no calibration target: set inputs.trips or inputs.marginals".into()]));
            }
            let exec = pool(&settings)?;
            let prepared = pipeline::prepare(&settings, &exec)?;
            let arrival = match settings.cost_basis {
                config::CostBasis::Reference => {
                    let (dep, _) = routing::build_departure_cube_with(&exec, &prepared.net, &prepared.zones, &settings.grid);
                    Some(routing::regroup_by_arrival_with(&exec, &dep).map_err(anyhow::Error::from)?.0)
                }
                config::CostBasis::FreeFlow => None,
            };
            let costs = pipeline::calibration_costs(settings.cost_basis, &prepared, arrival.as_ref())?;
            let (result, observed) = pipeline::calibrate(&settings, &prepared.zones, &costs)?;
            std::fs::create_dir_all(&settings.output_dir).context("creating output directory")?;
            let path = settings.output_dir.join("calibration.json");
            output::write_calibration(&path, &result, observed, pipeline::cost_basis_name(settings.cost_basis))?;
            println!(
                "alpha {} ({} after {} evaluations) -> {}",
                result.alpha,
                if result.converged { "converged" } else { "not converged" },
                result.iterations.len(),
                path.display()
            );
        }
        Command::Stats { field, out_dir } => {
            if !field.is_file() {
                return Err(Failure::Invalid(vec![format!("{}: file not found", field.display())]));
            }
            let f = output::read_field(&field).map_err(|e| Failure::Invalid(vec![format!("{e:#}")]))?;
            let (summary, ratios, cv) = pipeline::summarize_field(&f)?;
            let dir = out_dir.unwrap_or_else(|| field.parent().map(PathBuf::from).unwrap_or_default());
            std::fs::create_dir_all(&dir).context("creating output directory")?;
            pipeline::write_summaries(&dir, &summary, &ratios, f.zone_ids(), &cv)?;
            println!("{}", dir.display());
        }
        Command::Synth { dir, side, zones, users, free_flow, static_activity, calibrate } => {
            let mut city = GridCity { side, ..GridCity::default() };
            if free_flow {
                city = city.free_flow();
            }
            let mut events = EventPlan { users, ..EventPlan::default() };
            if static_activity {
                events.work_hours = None;
            }
            let spec = FixtureSpec {
                city,
                zones_x: zones,
                zones_y: zones,
                events,
                alpha: if calibrate { FixtureAlpha::CalibrateFrom(-0.13) } else { FixtureSpec::default().alpha },
                ..FixtureSpec::default()
            };
            let config = fixture::write_fixture(&dir, &spec)?;
            println!("{}", config.display());
        }
    }
    Ok(())
}
