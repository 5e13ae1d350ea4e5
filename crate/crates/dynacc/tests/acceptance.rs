//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines always show in
//! `cargo test` output. Exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use dynacc::config::{self, Overrides};
use dynacc::exec::RayonPool;
use dynacc::fixture::{write_fixture, FixtureAlpha, FixtureSpec};
use dynacc::pipeline;
use dynacc_core::accessibility::{potential, run_scenarios, DecayParameter, ScenarioKind, MADRID_ALPHA};
use dynacc_core::activity::{normalize, ActivitySurface, RawCounts, MASS_UNITS};
use dynacc_core::calibration::{calibrate_alpha, gravity_trips, ObservedTrips, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use dynacc_core::network::{integrate_exit, ArcRecord, Junction, RoadNetwork, SpeedProfile, PROFILE_SLOTS};
use dynacc_core::routing::{build_departure_cube, regroup_by_arrival, shortest_arrivals, IndexingMode, TravelTimeCube};
use dynacc_core::stats::{coefficient_of_variation, ratios_vs_reference, SummaryRow};
use dynacc_core::synthetic::{self, EventPlan, GridCity};
use dynacc_core::time::TimeGrid;
use dynacc_core::zones::{composed_cost, self_potential_time, ZoneSystem};
use dynacc_core::JunctionId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

// ---------------------------------------------------------------------------
// 1. routing oracle

/// Independent arc integrator: walk 5-minute slots forward from `t`.
fn oracle_exit(length_m: f64, kmh: f64, factors: Option<&[f64]>, t0: f64) -> f64 {
    let v0 = kmh / 3.6;
    let Some(f) = factors else { return t0 + length_m / v0 };
    let (mut t, mut left) = (t0, length_m);
    loop {
        let k = (t / 300.0).floor();
        let v = v0 * f[(k as i64).rem_euclid(288) as usize];
        let end = (k + 1.0) * 300.0;
        if v * (end - t) >= left {
            return t + left / v;
        }
        left -= v * (end - t);
        t = end;
    }
}

struct RandomGraph {
    nodes: usize,
    arcs: Vec<(usize, usize, f64, f64, Option<usize>)>,
    profiles: Vec<Vec<f64>>,
}

fn random_profile(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..PROFILE_SLOTS).map(|_| rng.random_range(0.05..=2.0)).collect()
}

fn random_graph(rng: &mut ChaCha8Rng) -> RandomGraph {
    let nodes = rng.random_range(2..=12);
    let m = rng.random_range(1..=30);
    let profiles: Vec<Vec<f64>> = (0..3).map(|_| random_profile(rng)).collect();
    let arcs = (0..m)
        .map(|_| {
            let a = rng.random_range(0..nodes);
            let mut b = rng.random_range(0..nodes - 1);
            if b >= a {
                b += 1;
            }
            let profile = rng.random_bool(0.8).then(|| rng.random_range(0..3));
            (a, b, rng.random_range(50.0..8000.0), rng.random_range(5.0..120.0), profile)
        })
        .collect();
    RandomGraph { nodes, arcs, profiles }
}

impl RandomGraph {
    fn network(&self) -> RoadNetwork {
        let junctions = (0..self.nodes).map(|i| Junction::new(format!("n{i:02}"), i as f64, 0.0)).collect();
        let arcs = self
            .arcs
            .iter()
            .enumerate()
            .map(|(k, &(a, b, len, kmh, p))| {
                let rec = ArcRecord::new(format!("a{k:02}"), format!("n{a:02}"), format!("n{b:02}"), len, kmh, 3);
                match p {
                    Some(p) => rec.with_profile(format!("p{p}")),
                    None => rec,
                }
            })
            .collect();
        let profiles = self.profiles.iter().enumerate().map(|(i, f)| SpeedProfile::new(format!("p{i}"), f.clone()).unwrap()).collect();
        RoadNetwork::from_parts(junctions, arcs, profiles).unwrap()
    }

    /// Earliest arrival per node over every simple path from `origin`.
    fn exhaustive(&self, origin: usize, departure: f64) -> Vec<f64> {
        let mut best = vec![f64::INFINITY; self.nodes];
        let mut on_path = vec![false; self.nodes];
        self.dfs(origin, departure, &mut on_path, &mut best);
        best
    }

    fn dfs(&self, u: usize, t: f64, on_path: &mut [bool], best: &mut [f64]) {
        best[u] = best[u].min(t);
        on_path[u] = true;
        for &(a, b, len, kmh, p) in &self.arcs {
            if a == u && !on_path[b] {
                let exit = oracle_exit(len, kmh, p.map(|p| self.profiles[p].as_slice()), t);
                self.dfs(b, exit, on_path, best);
            }
        }
        on_path[u] = false;
    }
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut checked, mut worst) = (0usize, 0.0f64);
    for g in 0..200 {
        let graph = random_graph(&mut rng);
        let net = graph.network();
        for origin in 0..graph.nodes {
            let departure = rng.random_range(0.0..2.0 * 86_400.0);
            let got = shortest_arrivals(&net, JunctionId(origin as u32), departure).unwrap();
            let want = graph.exhaustive(origin, departure);
            for (v, &w) in want.iter().enumerate() {
                let id = net.junction_by_id(&format!("n{v:02}")).unwrap();
                let g_t = got.get(id);
                match (g_t, w.is_finite()) {
                    (None, false) => {}
                    (Some(x), true) => {
                        worst = worst.max((x - w).abs());
                        ensure!((x - w).abs() <= 1e-9, "graph {g} origin {origin} node {v}: {x} vs oracle {w}");
                    }
                    _ => return Err(format!("graph {g} origin {origin} node {v}: reachability differs ({g_t:?} vs {w})")),
                }
                checked += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!("{checked} labels on 200 graphs, max |diff| {worst:.2e} s, {:.2} s", elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// 2. FIFO

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for _ in 0..10_000 {
        let factors = random_profile(&mut rng);
        let len = rng.random_range(1.0..20_000.0);
        let kmh = rng.random_range(3.0..130.0);
        let t1 = rng.random_range(0.0..2.0 * 86_400.0);
        let t2 = t1 + if rng.random_bool(0.5) { rng.random_range(0.0..5.0) } else { rng.random_range(0.0..7200.0) };
        if integrate_exit(len, kmh, Some(&factors), t1) > integrate_exit(len, kmh, Some(&factors), t2) {
            violations += 1;
        }
    }
    ensure!(violations == 0, "{violations} FIFO violations");
    Ok("10000 cases, 0 violations".into())
}

// ---------------------------------------------------------------------------
// 3. free-flow reduction

fn floyd_warshall(net: &RoadNetwork) -> Vec<Vec<f64>> {
    let n = net.num_junctions();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for a in net.arcs() {
        let t = a.length_m / (a.free_flow_kmh / 3.6);
        let cell = &mut d[a.from.index()][a.to.index()];
        *cell = cell.min(t);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn criterion_3() -> Outcome {
    let city = GridCity::default().free_flow();
    let net = synthetic::grid_city(&city).unwrap().filter_by_frc(6).unwrap();
    let (zones, _) = ZoneSystem::new(synthetic::grid_zones(&city, 5, 5), &net).unwrap();
    let grid = TimeGrid::default();
    let (dep, _) = build_departure_cube(&net, &zones, &grid);
    let (arr, _) = regroup_by_arrival(&dep).unwrap();
    let fw = floyd_warshall(&net);
    let zs = zones.zones();
    let mut worst = 0.0f64;
    for (o, zo) in zs.iter().enumerate() {
        for (d, zd) in zs.iter().enumerate() {
            if o == d {
                continue;
            }
            let want = fw[zo.centroid_junction.index()][zd.centroid_junction.index()] / 60.0;
            for s in 0..grid.len() {
                for cube in [&dep, &arr] {
                    let got = cube.get(o, d, s).ok_or("unreachable cell")?;
                    worst = worst.max((got - want).abs());
                    ensure!((got - want).abs() <= 1e-9, "{o}->{d} slot {s} ({}): {got} vs {want}", cube.mode());
                }
            }
        }
    }
    Ok(format!("25 zones x 68 slots, departure and arrival cubes, max |diff| {worst:.2e} min"))
}

// ---------------------------------------------------------------------------
// 4. point check

fn criterion_4() -> Outcome {
    let alpha = DecayParameter::new(MADRID_ALPHA).unwrap();
    let p = potential(0, &[0.0, 100_000.0], &[Some(0.0), Some(10.0)], alpha).unwrap();
    let direct = 100_000.0 * (-1.2957849f64).exp();
    ensure!((p - direct).abs() <= 0.1, "P {p} vs direct {direct}");
    ensure!((p - 27_368.3).abs() <= 0.1, "P {p} vs 27368.3");
    Ok(format!("P = {p:.4}, direct evaluation {direct:.4}"))
}

// ---------------------------------------------------------------------------
// 5. scenario degeneracies

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("z{i}")).collect()
}

fn random_cube(rng: &mut ChaCha8Rng, n: usize, grid: TimeGrid) -> TravelTimeCube {
    let values = (0..n * n * grid.len()).map(|_| Some(rng.random_range(1.0..60.0))).collect();
    TravelTimeCube::from_values(ids(n), grid, IndexingMode::ByArrival, values).unwrap()
}

fn random_surface(rng: &mut ChaCha8Rng, n: usize, grid: TimeGrid) -> ActivitySurface {
    let counts = (0..n * grid.len()).map(|_| rng.random_range(1..500)).collect();
    normalize(&RawCounts::from_table(ids(n), grid, counts)).0
}

fn scenario_equal(f: &dynacc_core::AccessibilityField, a: ScenarioKind, b: ScenarioKind) -> Result<(), String> {
    for s in 0..f.grid().len() {
        let (x, y) = (f.slot_values(a, s).unwrap(), f.slot_values(b, s).unwrap());
        for (z, (p, q)) in x.iter().zip(y).enumerate() {
            ensure!(rel_close(*p, *q, 1e-9), "{} vs {} zone {z} slot {s}: {p} vs {q}", a.name(), b.name());
        }
    }
    Ok(())
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = TimeGrid::default();
    let n = 12;
    let alpha = DecayParameter::new(MADRID_ALPHA).unwrap();
    let self_times: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..5.0)).collect();
    let matrix: Vec<Option<f64>> = (0..n * n).map(|_| Some(rng.random_range(1.0..60.0))).collect();
    let constant_cube = TravelTimeCube::constant(ids(n), grid, IndexingMode::ByArrival, &matrix);
    let masses: Vec<f64> = random_surface(&mut rng, n, TimeGrid::new(0, 900, 900).unwrap()).slot_masses(0).to_vec();
    let constant_surface =
        ActivitySurface::from_masses(ids(n), grid, (0..grid.len()).flat_map(|_| masses.iter().copied()).collect());
    let dyn_cube = random_cube(&mut rng, n, grid);
    let dyn_surface = random_surface(&mut rng, n, grid);

    let f = run_scenarios(&constant_cube, &dyn_surface, &self_times, alpha, &ScenarioKind::ALL).unwrap();
    scenario_equal(&f, ScenarioKind::DynamicCongestion, ScenarioKind::Reference)?;
    let f = run_scenarios(&dyn_cube, &constant_surface, &self_times, alpha, &ScenarioKind::ALL).unwrap();
    scenario_equal(&f, ScenarioKind::DynamicAttractiveness, ScenarioKind::Reference)?;
    let f = run_scenarios(&constant_cube, &constant_surface, &self_times, alpha, &ScenarioKind::ALL).unwrap();
    for k in &ScenarioKind::ALL[1..] {
        scenario_equal(&f, *k, ScenarioKind::Reference)?;
    }
    Ok("constant cube, constant surface and both: equal to reference within 1e-9".into())
}

// ---------------------------------------------------------------------------
// 6. congestion monotonicity on the synthetic city

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = FixtureSpec { workers: 2, ..FixtureSpec::default() };
    let config = write_fixture(dir.path(), &spec).map_err(|e| e.to_string())?;
    let settings = config::load(&config, &Overrides::default()).map_err(|e| format!("{e:?}"))?;
    let pool = RayonPool::new(2).unwrap();
    let a = pipeline::execute_run(&settings, &pool, 2).map_err(|e| format!("{e:#}"))?;
    let n = a.zone_ids.len();
    ensure!(n >= 16, "only {n} zones");

    // a slot counts as peak when every trip arriving then also left inside the peak
    let longest = (0..n * n * settings.grid.len())
        .filter_map(|k| a.departure.get(k / (n * settings.grid.len()), (k / settings.grid.len()) % n, k % settings.grid.len()))
        .fold(0.0f64, f64::max);
    let lead = (longest * 60.0).ceil() as u32;
    let peak: Vec<usize> = settings
        .grid
        .slot_starts()
        .enumerate()
        .filter(|&(_, t)| spec.city.in_peak(t) && t >= lead && spec.city.in_peak(t - lead))
        .map(|(s, _)| s)
        .collect();
    ensure!(!peak.is_empty(), "no peak slots on the grid");

    let reference = a.field.reference();
    let mut strict = 0;
    for &s in &peak {
        let dc = a.field.slot_values(ScenarioKind::DynamicCongestion, s).unwrap();
        for z in 0..n {
            ensure!(dc[z] <= reference[z], "zone {} slot {s}: congestion {} > reference {}", a.zone_ids[z], dc[z], reference[z]);
            if dc[z] < reference[z] {
                strict += 1;
            }
        }
        let mean_dc = dc.iter().sum::<f64>() / n as f64;
        let mean_ref = reference.iter().sum::<f64>() / n as f64;
        ensure!(mean_dc < mean_ref, "slot {s}: mean congestion {mean_dc} not below reference {mean_ref}");
    }
    ensure!(strict >= 1, "no strict inequality");
    Ok(format!("{n} zones, {} peak slots, {strict} strict (zone, slot) cells", peak.len()))
}

// ---------------------------------------------------------------------------
// 7. calibration recovery

fn criterion_7() -> Outcome {
    // 20 zones over a free-flow grid city, costs composed from real routes
    let city = GridCity::default().free_flow();
    let net = synthetic::grid_city(&city).unwrap().filter_by_frc(6).unwrap();
    let (mut zones, _) = ZoneSystem::new(synthetic::grid_zones(&city, 5, 4), &net).unwrap();
    let n = zones.len();
    let st: Vec<f64> = (0..n).map(|z| self_potential_time(&zones, z, &net, 0.5, 3).unwrap().0.minutes).collect();
    zones.set_self_times(&st).unwrap();
    let fw = floyd_warshall(&net);
    let zs = zones.zones();
    let mut cost = Vec::with_capacity(n * n);
    for o in 0..n {
        for d in 0..n {
            let t = fw[zs[o].centroid_junction.index()][zs[d].centroid_junction.index()] / 60.0;
            cost.push(Some(composed_cost(o, d, &st, t)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let o: Vec<f64> = (0..n).map(|_| rng.random_range(200.0..2000.0)).collect();
    let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(200.0..2000.0)).collect();
    let k = o.iter().sum::<f64>() / d.iter().sum::<f64>();
    d.iter_mut().for_each(|v| *v *= k);
    let trips = gravity_trips(&o, &d, &cost, -0.13).map_err(|e| e.to_string())?;
    let observed = ObservedTrips::new(n, n, trips, cost.clone()).map_err(|e| e.to_string())?;

    let started = Instant::now();
    let r = calibrate_alpha(&observed.origins(), &observed.destinations(), &cost, observed.mean_cost(), DEFAULT_TOLERANCE, DEFAULT_MAX_ITER)
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure!(r.converged, "did not converge: {:?}", r.iterations);
    ensure!(r.iterations.len() <= 50, "{} iterations", r.iterations.len());
    ensure!((r.alpha + 0.13).abs() <= 1e-3, "alpha {}", r.alpha);
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("alpha {:.6} in {} evaluations, {:.3} s", r.alpha, r.iterations.len(), elapsed.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// 8. statistics conventions

fn criterion_8() -> Outcome {
    let cv = coefficient_of_variation(6771.15, 2772.49).unwrap();
    ensure!((cv - 40.95).abs() <= 0.01, "cv {cv}");
    let row = |mean: f64, cv: f64| SummaryRow { label: String::new(), n: 1010, min: 1.0, max: 1.0, mean, sd: 1.0, cv: Some(cv) };
    let reference = row(6771.15, 40.95);
    let cv_ratio = ratios_vs_reference(&row(1.0, 46.39), &reference).cv.unwrap();
    let mean_ratio = ratios_vs_reference(&row(6235.76, 1.0), &reference).mean.unwrap();
    ensure!((cv_ratio - 1.13).abs() <= 0.005, "cv ratio {cv_ratio}");
    ensure!((mean_ratio - 0.92).abs() <= 0.005, "mean ratio {mean_ratio}");
    Ok(format!("cv {cv:.4}, cv ratio {cv_ratio:.4}, mean ratio {mean_ratio:.4}"))
}

// ---------------------------------------------------------------------------
// 9. normalization

fn check_normalized(s: &ActivitySurface) -> Result<usize, String> {
    let mut nonempty = 0;
    for slot in 0..s.grid().len() {
        let total: u64 = s.raw().slot(slot).iter().sum();
        let sum: f64 = s.slot_masses(slot).iter().sum();
        if total == 0 {
            ensure!(sum == 0.0, "empty slot {slot} has mass {sum}");
        } else {
            ensure!((sum - MASS_UNITS).abs() <= 1e-6, "slot {slot} sums to {sum}");
            nonempty += 1;
        }
    }
    Ok(nonempty)
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let grid = TimeGrid::default();
    let mut slots = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..60);
        let counts = (0..n * grid.len())
            .map(|_| if rng.random_bool(0.3) { 0 } else { rng.random_range(0..1_000_000u64) })
            .collect();
        let mut counts: Vec<u64> = counts;
        // force a few empty slots
        let empty = rng.random_range(0..grid.len());
        counts[empty * n..(empty + 1) * n].fill(0);
        slots += check_normalized(&normalize(&RawCounts::from_table(ids(n), grid, counts)).0)?;
    }
    let city = GridCity::default();
    let net = synthetic::grid_city(&city).unwrap().filter_by_frc(6).unwrap();
    let (zones, _) = ZoneSystem::new(synthetic::grid_zones(&city, 5, 5), &net).unwrap();
    let events = synthetic::city_events(&city, &EventPlan::default());
    let (raw, _) = dynacc_core::activity::count_unique_users(&events, &zones, &grid);
    slots += check_normalized(&normalize(&raw).0)?;
    Ok(format!("{slots} non-empty slots sum to 100000 within 1e-6"))
}

// ---------------------------------------------------------------------------
// 10. regrouping

fn criterion_10() -> Outcome {
    let grid = TimeGrid::default();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 6;

    let matrix: Vec<Option<f64>> = (0..n * n).map(|_| Some(rng.random_range(1.0..90.0))).collect();
    let flat = TravelTimeCube::constant(ids(n), grid, IndexingMode::ByDeparture, &matrix);
    let (regrouped, _) = regroup_by_arrival(&flat).unwrap();
    for o in 0..n {
        for d in 0..n {
            for s in 0..grid.len() {
                ensure!(regrouped.get(o, d, s) == flat.get(o, d, s), "time-invariant cube changed at {o},{d},{s}");
            }
        }
    }

    // tt(dep) = a + b * dep (minutes, dep in seconds); FIFO needs 1 + 60 b > 0
    let mut linear = Vec::new();
    let mut params = Vec::new();
    for _ in 0..n * n {
        let a = rng.random_range(2.0..40.0);
        let b = rng.random_range(-0.004..0.004);
        params.push((a, b));
        linear.extend(grid.slot_starts().map(|t| Some(a + b * (t - grid.start()) as f64)));
    }
    let lin = TravelTimeCube::from_values(ids(n), grid, IndexingMode::ByDeparture, linear).unwrap();
    let (lin_arr, _) = regroup_by_arrival(&lin).unwrap();
    let mut queried = 0;
    let mut worst = 0.0f64;
    for (pair, &(a, b)) in params.iter().enumerate() {
        let first = grid.start() as f64 + 60.0 * a;
        let last_dep = grid.slot_start(grid.len() - 1) as f64;
        let last = last_dep + 60.0 * (a + b * (last_dep - grid.start() as f64));
        for (s, t) in grid.slot_starts().enumerate() {
            let t = t as f64;
            if t < first || t > last {
                continue;
            }
            // invert arrival = dep + 60 (a + b (dep - start))
            let dep = (t - 60.0 * a + 60.0 * b * grid.start() as f64) / (1.0 + 60.0 * b);
            let want = a + b * (dep - grid.start() as f64);
            let got = lin_arr.get(pair / n, pair % n, s).unwrap();
            worst = worst.max((got - want).abs());
            ensure!((got - want).abs() <= 1e-9, "pair {pair} slot {s}: {got} vs {want}");
            queried += 1;
        }
    }

    let rough = {
        let mut vals = Vec::new();
        for _ in 0..n * n {
            let mut tt: f64 = rng.random_range(5.0..30.0);
            for _ in 0..grid.len() {
                // keep departures FIFO: tt may drop by less than the 15 min step
                tt = (tt + rng.random_range(-10.0..10.0)).max(1.0);
                vals.push(Some(tt));
            }
        }
        TravelTimeCube::from_values(ids(n), grid, IndexingMode::ByDeparture, vals).unwrap()
    };
    let (rough_arr, _) = regroup_by_arrival(&rough).unwrap();
    for o in 0..n {
        for d in 0..n {
            let series = rough.pair_series(o, d);
            let lo = series.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for s in 0..grid.len() {
                let v = rough_arr.get(o, d, s).unwrap();
                ensure!(v >= lo && v <= hi, "pair {o},{d} slot {s}: {v} outside [{lo}, {hi}]");
            }
        }
    }
    Ok(format!("identity exact; linear reproduced at {queried} arrivals (max |diff| {worst:.1e}); bounds hold"))
}

// ---------------------------------------------------------------------------
// 11. determinism and performance

fn read_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_type().unwrap().is_file() && e.file_name() != "manifest.json")
        .map(|e| (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap()))
        .collect()
}

fn run_into(config: &Path, out: &Path, workers: usize) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let o = Overrides { output_dir: Some(out.to_path_buf()), workers: Some(workers), ..Default::default() };
    let settings = config::load(config, &o).map_err(|e| format!("{e:?}"))?;
    let pool = RayonPool::new(workers).unwrap();
    pipeline::execute_run(&settings, &pool, pool.workers()).map_err(|e| format!("{e:#}"))?;
    Ok(read_outputs(out))
}

fn criterion_11() -> Outcome {
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).max(2);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let spec = FixtureSpec { alpha: FixtureAlpha::CalibrateFrom(-0.13), ..FixtureSpec::default() };
    let config = write_fixture(dir.path(), &spec).map_err(|e| e.to_string())?;
    let one = run_into(&config, &dir.path().join("w1"), 1)?;
    let many = run_into(&config, &dir.path().join("wn"), workers)?;
    let again = run_into(&config, &dir.path().join("wn2"), workers)?;
    ensure!(one.len() >= 15, "only {} output files", one.len());
    ensure!(one == many, "1 vs {workers} workers differ in {:?}", differing(&one, &many));
    ensure!(many == again, "repeated runs differ in {:?}", differing(&many, &again));

    // 200 zones (20 x 10) on a 40 x 40 junction grid, full 68-slot run
    let big = FixtureSpec {
        city: GridCity { side: 40, ..GridCity::default() },
        zones_x: 20,
        zones_y: 10,
        events: EventPlan { users: 400, ..EventPlan::default() },
        ..FixtureSpec::default()
    };
    let big_dir = dir.path().join("big");
    let big_config = write_fixture(&big_dir, &big).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let o = Overrides { workers: Some(workers), ..Default::default() };
    let settings = config::load(&big_config, &o).map_err(|e| format!("{e:?}"))?;
    let pool = RayonPool::new(workers).unwrap();
    let a = pipeline::execute_run(&settings, &pool, workers).map_err(|e| format!("{e:#}"))?;
    let elapsed = started.elapsed();
    ensure!(a.zone_ids.len() == 200, "{} zones", a.zone_ids.len());
    ensure!(elapsed < Duration::from_secs(300), "200-zone run took {elapsed:?}");
    Ok(format!(
        "{} files identical across 1/{workers}/{workers} workers; 200 zones x 68 slots ({} searches) in {:.1} s on {workers} workers",
        one.len(),
        200 * 68,
        elapsed.as_secs_f64()
    ))
}

fn differing(a: &BTreeMap<String, Vec<u8>>, b: &BTreeMap<String, Vec<u8>>) -> Vec<String> {
    a.keys().chain(b.keys()).filter(|k| a.get(*k) != b.get(*k)).cloned().collect()
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("routing matches exhaustive path enumeration", criterion_1),
        ("arc traversal is FIFO", criterion_2),
        ("free-flow cube equals static shortest paths", criterion_3),
        ("potential point check", criterion_4),
        ("scenario degeneracies", criterion_5),
        ("congestion lowers peak accessibility", criterion_6),
        ("calibration recovers alpha", criterion_7),
        ("statistics conventions", criterion_8),
        ("surface normalization", criterion_9),
        ("arrival regrouping", criterion_10),
        ("determinism and performance", criterion_11),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} [{secs:.2} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
