//! Load the bundled ten-stop fixture, look up routes through an interchange,
//! and generate a synthetic grid city.

use lastmile::network::{generate_grid_city, haversine_km, load_network, RoutePlan};

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/fixture10");
    let net = load_network(
        std::fs::File::open(format!("{dir}/stops.csv"))?,
        std::fs::File::open(format!("{dir}/routes.json"))?,
    )?;
    println!("{} stops, {} routes", net.stop_count(), net.routes().len());
    println!("routes at HUB: {:?}", net.routes_by_stop("HUB").unwrap());
    for r in net.routes() {
        let km: f64 = r.leg_distances_km().iter().sum();
        println!(
            "  {:<6} {:<5} {} stops, {km:.2} km",
            r.id,
            r.mode,
            r.stop_sequence.len()
        );
    }
    let (a, b) = (net.stop_by_id("N1").unwrap(), net.stop_by_id("S2").unwrap());
    println!("N1 -> S2 straight line: {:.3} km", haversine_km(a.location, b.location));

    let grid = generate_grid_city(4, 5, 0.8, RoutePlan::RowsAndCols, 1)?;
    println!(
        "grid city: {} stops, routes {:?}",
        grid.stop_count(),
        grid.routes().iter().map(|r| r.id.as_str()).collect::<Vec<_>>()
    );
    let (lo, hi) = grid.extent().unwrap();
    println!("extent {lo} .. {hi}");
    Ok(())
}
