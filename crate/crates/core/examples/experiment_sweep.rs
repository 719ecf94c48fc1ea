//! A small seeded sweep: CSV rows for every solve, then the paired
//! fare/distance comparison.

use std::sync::Arc;

use lastmile::bipartite::{BipartiteGraph, SearchOptions};
use lastmile::experiments::{run_experiment1, summarize_fare_distance, write_trip_records, ParameterGrid};
use lastmile::fare::FareConfig;
use lastmile::network::{generate_grid_city, RoutePlan};

fn main() -> anyhow::Result<()> {
    let net = generate_grid_city(10, 10, 1.0, RoutePlan::RowsAndCols, 0)?;
    let g = BipartiteGraph::build(Arc::new(net), SearchOptions::default());
    println!(
        "full grid would be {} combinations per pair",
        ParameterGrid::default().len()
    );
    let grid = ParameterGrid {
        max_fares: vec![60, 100],
        w_lm_values: vec![0.2, 0.5],
        lm_ranges_km: vec![2.0, 5.0],
        transfer_penalties_min: vec![0.0],
    };
    let records = run_experiment1(&g, &FareConfig::default(), 40, &grid, 42)?;
    let mut csv = Vec::new();
    write_trip_records(&records, &mut csv)?;
    let text = String::from_utf8(csv)?;
    for line in text.lines().take(4) {
        println!("{line}");
    }
    println!("... {} rows", records.len());
    let s = summarize_fare_distance(&records)?;
    println!("{}", serde_json::to_string_pretty(&s)?);
    Ok(())
}
