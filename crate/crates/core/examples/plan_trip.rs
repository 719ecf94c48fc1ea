//! Plan a door-to-door trip on a grid city, list alternatives, and show why a
//! query can fail.

use std::sync::Arc;

use lastmile::bipartite::{BipartiteGraph, SearchOptions};
use lastmile::fare::FareConfig;
use lastmile::network::{generate_grid_city, GeoPoint, RoutePlan};
use lastmile::planner::{rank_plans, Planner, Query};

fn main() -> anyhow::Result<()> {
    let net = generate_grid_city(8, 8, 1.0, RoutePlan::RowsAndCols, 7)?;
    let g = BipartiteGraph::build(Arc::new(net), SearchOptions::default());
    let fares = FareConfig::default();
    let planner = Planner::new(&g, &fares);

    let origin = GeoPoint {
        lat: 28.556,
        lon: 77.112,
    };
    let dest = GeoPoint {
        lat: 28.600,
        lon: 77.160,
    };
    let mut q = Query::new(origin, dest);
    q.max_fare_rs = 100;
    let best = planner.solve(&q)?;
    println!(
        "best: {} -> {}, {} transfer(s), cost {:.2}, {}",
        best.entry_stop, best.exit_stop, best.transfers, best.cost, best.fare
    );
    println!(
        "  first mile {:?} {:.2} km, last mile {:?} {:.2} km, ride {:.2} km",
        best.first_leg_mode, best.lm_first_km, best.last_leg_mode, best.lm_last_km, best.pt_ride_km
    );
    for s in &best.segments {
        println!("  {} {:?}", s.route_id, s.stops);
    }

    let set = planner.enumerate_feasible(&q)?;
    println!("{} feasible plans; top 3:", set.plans.len());
    for p in rank_plans(&set, 3) {
        println!(
            "  {:>8.3} {:>4} Rs  {} -> {}",
            p.cost, p.fare.total_rs, p.entry_stop, p.exit_stop
        );
    }

    q.optimile_only = true;
    match planner.solve(&q) {
        Ok(p) => println!(
            "direct only: {} -> {}, cost {:.2}, {}",
            p.entry_stop, p.exit_stop, p.cost, p.fare
        ),
        Err(e) => println!("direct only: {e}"),
    }
    q.optimile_only = false;
    q.max_fare_rs = 5;
    println!("cap Rs 5: {:?}", planner.solve(&q).unwrap_err());
    let far = Query::new(GeoPoint { lat: 10.0, lon: 70.0 }, dest);
    println!("far away: {}", planner.solve(&far).unwrap_err());
    Ok(())
}
