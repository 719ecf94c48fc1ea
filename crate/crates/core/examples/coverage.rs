//! Stop-circle coverage of a box by grid and by sampling, and the mean area
//! reachable with direct connections.

use std::sync::Arc;

use lastmile::bipartite::{BipartiteGraph, SearchOptions};
use lastmile::coverage::{
    montecarlo_coverage_oracle, optimile_coverage, ptn_coverage, rasterize_circles, write_coverage_csv, BoundingBox,
};
use lastmile::network::{generate_grid_city, GeoPoint, RoutePlan};

fn main() -> anyhow::Result<()> {
    let center = GeoPoint { lat: 28.6, lon: 77.2 };
    let b = BoundingBox::around("10km", center, 10.0, 10.0)?;
    println!(
        "1 km circle in 10x10 km: grid {:.5}, sampled {:.5}, exact {:.5}",
        rasterize_circles(&[center], 1.0, &b, 50.0)?,
        montecarlo_coverage_oracle(&[center], 1.0, &b, 100_000, 1)?,
        std::f64::consts::PI / 100.0
    );

    let net = Arc::new(generate_grid_city(6, 6, 1.5, RoutePlan::RowsAndCols, 0)?);
    let g = BipartiteGraph::build(net.clone(), SearchOptions::default());
    let bbox = BoundingBox::of_network("city", &net, 1.0).unwrap();
    let mut reports = Vec::new();
    for r in [0.5, 1.0] {
        reports.push(ptn_coverage(&net, &bbox, r, 100.0)?);
        reports.push(optimile_coverage(&g, &bbox, r, 50, 9, 100.0)?);
    }
    write_coverage_csv(&reports, std::io::stdout())?;
    Ok(())
}
