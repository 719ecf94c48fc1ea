//! Score every feasible plan of one query and pick the most efficient.

use std::sync::Arc;

use lastmile::bipartite::{BipartiteGraph, SearchOptions};
use lastmile::fare::FareConfig;
use lastmile::metrics::{score_plan_set, EfficiencyWeights};
use lastmile::network::{generate_grid_city, GeoPoint, RoutePlan};
use lastmile::planner::{Planner, Query};

fn main() -> anyhow::Result<()> {
    let net = generate_grid_city(6, 6, 1.0, RoutePlan::RowsAndCols, 2)?;
    let g = BipartiteGraph::build(Arc::new(net), SearchOptions::default());
    let fares = FareConfig::default();
    let mut q = Query::new(
        GeoPoint {
            lat: 28.553,
            lon: 77.104,
        },
        GeoPoint {
            lat: 28.590,
            lon: 77.148,
        },
    );
    q.max_fare_rs = 90;
    let set = Planner::new(&g, &fares).enumerate_feasible(&q)?;
    for w in [EfficiencyWeights::default(), EfficiencyWeights::new(0.8, 0.2)?] {
        let scores = score_plan_set(&set, &w)?;
        let (i, s) = scores
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.lambda.total_cmp(&b.1.lambda))
            .unwrap();
        let p = &set.plans[i];
        println!(
            "w_c {:.1}: best of {} is {} -> {} ({:.2} km, cost {:.2}, Rs {}), C {:.3} E {:.3} lambda {:.3}",
            w.w_c,
            set.plans.len(),
            p.entry_stop,
            p.exit_stop,
            p.total_distance_km,
            p.cost,
            p.fare.total_rs,
            s.convenience,
            s.cost_effectiveness,
            s.lambda
        );
    }
    Ok(())
}
