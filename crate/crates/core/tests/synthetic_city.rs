//! Whole pipeline on the synthetic grid city, core API only.

use dynacc_core::accessibility::{run_scenarios, DecayParameter, ScenarioKind, MADRID_ALPHA};
use dynacc_core::activity::{count_unique_users, normalize};
use dynacc_core::routing::{build_departure_cube, regroup_by_arrival};
use dynacc_core::synthetic::{self, EventPlan, GridCity};
use dynacc_core::time::TimeGrid;
use dynacc_core::zones::{self_potential_time, ZoneSystem};

fn run(city: &GridCity, plan: &EventPlan) -> dynacc_core::AccessibilityField {
    let net = synthetic::grid_city(city).unwrap().filter_by_frc(6).unwrap();
    let (mut zones, _) = ZoneSystem::new(synthetic::grid_zones(city, 4, 4), &net).unwrap();
    let st: Vec<f64> = (0..zones.len()).map(|z| self_potential_time(&zones, z, &net, 0.2, 42).unwrap().0.minutes).collect();
    zones.set_self_times(&st).unwrap();
    let grid = TimeGrid::default();
    let (dep, _) = build_departure_cube(&net, &zones, &grid);
    let (arr, _) = regroup_by_arrival(&dep).unwrap();
    let (raw, _) = count_unique_users(&synthetic::city_events(city, plan), &zones, &grid);
    let (surface, _) = normalize(&raw);
    run_scenarios(&arr, &surface, &st, DecayParameter::new(MADRID_ALPHA).unwrap(), &ScenarioKind::ALL).unwrap()
}

#[test]
fn every_scenario_is_positive_and_finite() {
    let f = run(&GridCity::default(), &EventPlan::default());
    for &k in f.scenarios() {
        for s in 0..f.grid().len() {
            assert!(f.slot_values(k, s).unwrap().iter().all(|p| p.is_finite() && *p > 0.0), "{} slot {s}", k.name());
        }
    }
}

#[test]
fn static_inputs_collapse_all_scenarios() {
    let city = GridCity::default().free_flow();
    let f = run(&city, &EventPlan { work_hours: None, ..EventPlan::default() });
    let reference = f.reference().to_vec();
    for &k in f.scenarios() {
        for s in 0..f.grid().len() {
            assert_eq!(f.slot_values(k, s).unwrap(), reference.as_slice(), "{} slot {s}", k.name());
        }
    }
}
