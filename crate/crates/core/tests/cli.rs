use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use lastmile::bipartite::{BipartiteGraph, SearchOptions};
use lastmile::experiments::read_trip_records;
use lastmile::fare::FareConfig;
use lastmile::network::{generate_grid_city, RoutePlan};
use lastmile::planner::Planner;
use lastmile::service::PlanResponse;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lastmile"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn grid_graph(n: usize) -> BipartiteGraph {
    let net = generate_grid_city(n, n, 1.0, RoutePlan::RowsAndCols, 0).unwrap();
    BipartiteGraph::build(Arc::new(net), SearchOptions::default())
}

#[test]
fn build_graph_reports_counts_and_caches() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().to_str().unwrap();
    let first = ok(&["build-graph", "--grid", "4x4", "--cache-dir", cache]);
    assert!(first.contains("stops: 16"));
    assert!(first.contains("routes: 8"));
    let second = ok(&["build-graph", "--grid", "4x4", "--cache-dir", cache]);
    assert_eq!(first, second);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn fixture_network_loads() {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data/fixture10");
    let out = ok(&[
        "build-graph",
        "--stops",
        &format!("{data}/stops.csv"),
        "--routes",
        &format!("{data}/routes.json"),
    ]);
    assert!(out.contains("stops: 10"), "{out}");
    assert!(out.contains("edges: 32"), "{out}");
}

#[test]
fn plan_prints_the_library_answer() {
    let g = grid_graph(6);
    let a = g.network().stop_by_id("s000-000").unwrap().location;
    let b = g.network().stop_by_id("s004-005").unwrap().location;
    let (from, to) = (format!("{},{}", a.lat, a.lon), format!("{},{}", b.lat, b.lon));
    let out = ok(&[
        "plan",
        "--grid",
        "6x6",
        "--from",
        &from,
        "--to",
        &to,
        "--max-fare",
        "100",
    ]);
    let r: PlanResponse = serde_json::from_str(&out).unwrap();
    let fares = FareConfig::default();
    assert_eq!(r.plan, Planner::new(&g, &fares).solve(&r.query).unwrap());
}

#[test]
fn plan_errors_exit_nonzero_with_code() {
    let out = run(&[
        "plan",
        "--grid",
        "4x4",
        "--from",
        "28.6,77.2",
        "--to",
        "28.61,77.21",
        "--w-lm",
        "0.8",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("WeightConstraintViolated"));
    let out = run(&["plan", "--grid", "4x4", "--from", "not-a-point", "--to", "1,1"]);
    assert!(!out.status.success());
}

#[test]
fn experiment1_rows_can_be_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trips.csv");
    let summary = dir.path().join("summary.json");
    let args = [
        "experiment1",
        "--grid",
        "5x5",
        "--pairs",
        "12",
        "--seed",
        "4",
        "--preset",
        "baseline",
        "--max-fare",
        "60,120",
        "--w-lm",
        "0.2,0.5",
        "--out",
        csv.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ];
    ok(&args);
    let bytes = std::fs::read(&csv).unwrap();
    let records = read_trip_records(bytes.as_slice()).unwrap();
    assert_eq!(records.len(), 12 * 2 * 2 * 2);
    assert!(Path::new(&summary).exists());

    let g = grid_graph(5);
    let fares = FareConfig::default();
    let planner = Planner::new(&g, &fares);
    let mut solved = 0;
    for r in &records {
        match planner.solve(&r.query()) {
            Ok(p) => {
                assert_eq!(r.status, "ok");
                assert_eq!(r.entry_stop.as_deref(), Some(p.entry_stop.as_str()));
                assert_eq!(r.exit_stop.as_deref(), Some(p.exit_stop.as_str()));
                assert_eq!(r.fare_rs, Some(p.fare.total_rs));
                assert_eq!(r.cost, Some(p.cost));
                assert_eq!(r.total_distance_km, Some(p.total_distance_km));
                solved += 1;
            }
            Err(e) => assert_eq!(r.status, e.code()),
        }
    }
    assert!(solved > 0);

    // same seed, same bytes
    ok(&args);
    assert_eq!(std::fs::read(&csv).unwrap(), bytes);
}

#[test]
fn experiment2_and_coverage_write_csv() {
    let out = ok(&[
        "experiment2",
        "--grid",
        "4x4",
        "--radii-km",
        "0.5,1",
        "--samples",
        "20",
        "--bbox",
        "flat:28.6,28.6,77.2,77.3",
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("label,radius_km,coverage_pct"));
    assert_eq!(lines.len(), 1);

    let out = ok(&["experiment2", "--grid", "4x4", "--radii-km", "0.5,1", "--samples", "20"]);
    assert_eq!(out.lines().count(), 1 + 2 * 2);

    let out = ok(&[
        "coverage",
        "--grid",
        "4x4",
        "--radius-km",
        "0.5",
        "--montecarlo",
        "20000",
    ]);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    let pct = |row: &str| row.split(',').nth(2).unwrap().parse::<f64>().unwrap();
    assert!((pct(rows[0]) - pct(rows[1])).abs() < 1.5);
}

#[test]
fn fares_show_round_trips() {
    let out = ok(&["fares", "show"]);
    let toml_part: String = out
        .lines()
        .filter(|l| !l.starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    assert_eq!(FareConfig::from_toml(&toml_part).unwrap(), FareConfig::default());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "walk_free_km = -1.0\n").unwrap();
    assert!(!run(&["fares", "show", "--fares", bad.to_str().unwrap()])
        .status
        .success());
}
