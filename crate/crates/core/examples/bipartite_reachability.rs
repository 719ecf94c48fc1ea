//! Build the direct-connection graph, inspect Pareto options between two
//! stops, and reuse a cached build.

use std::sync::Arc;

use lastmile::bipartite::{direct_reachability_ratio, BipartiteGraph, GraphCache, SearchOptions};
use lastmile::network::{generate_grid_city, load_network, RoutePlan};

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/fixture10");
    let stops = std::fs::read(format!("{dir}/stops.csv"))?;
    let routes = std::fs::read(format!("{dir}/routes.json"))?;
    let net = Arc::new(load_network(stops.as_slice(), routes.as_slice())?);
    let g = BipartiteGraph::build(net.clone(), SearchOptions::default());
    println!(
        "{} edges, direct reachability {:.3}",
        g.edge_count(),
        direct_reachability_ratio(&g)?
    );

    for (from, to) in [("N1", "S2"), ("W1", "S1"), ("M1", "E1")] {
        match g.edge_by_id(from, to) {
            Some(e) => {
                for o in &e.options {
                    let routes: Vec<&str> = o
                        .segments
                        .iter()
                        .map(|s| net.routes()[s.route as usize].id.as_str())
                        .collect();
                    println!(
                        "{from}->{to}: {} transfer(s), {:.1} min, {:.2} km via {routes:?}",
                        o.transfers, o.travel_time_min, o.ride_distance_km
                    );
                }
            }
            None => println!("{from}->{to}: unreachable"),
        }
    }

    let rows_only = Arc::new(generate_grid_city(3, 3, 1.0, RoutePlan::RowsOnly, 0)?);
    let g = BipartiteGraph::build(rows_only, SearchOptions::default());
    println!(
        "3x3 rows-only grid: direct reachability {}",
        direct_reachability_ratio(&g)?
    );

    let cache_dir = tempfile::tempdir()?;
    let cache = GraphCache::new(cache_dir.path());
    for _ in 0..2 {
        let (g, hit) = cache.load_or_build(net.clone(), &stops, &routes, SearchOptions::default())?;
        println!("cache {}: {} edges", if hit { "hit" } else { "miss" }, g.edge_count());
    }
    Ok(())
}
