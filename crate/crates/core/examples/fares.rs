//! First/last-mile and slab fares, and loading a custom fare table.

use lastmile::fare::{lm_fare, pt_fare, trip_fare, FareConfig, PtRide};
use lastmile::network::PtMode;

fn main() -> anyhow::Result<()> {
    let cfg = FareConfig::default();
    for d in [0.4, 1.0, 3.2] {
        println!("LM {d} km -> Rs {}", lm_fare(d, &cfg)?);
    }
    for d in [3.0, 9.0] {
        println!(
            "bus {d} km -> Rs {}, metro -> Rs {}",
            pt_fare(PtMode::Bus, d, &cfg)?,
            pt_fare(PtMode::Metro, d, &cfg)?
        );
    }
    let rides = [
        PtRide::new(PtMode::Bus, 3.0),
        PtRide::new(PtMode::Bus, 2.5),
        PtRide::new(PtMode::Metro, 7.0),
    ];
    println!("trip: {}", trip_fare(0.3, 2.2, &rides, &cfg)?);

    let custom = FareConfig::from_toml(
        r#"
lm_base_rs = 20
lm_per_km_rs = 8
walk_free_km = 0.8
fare_per_boarding = true
bus_slabs = [{ upper_km = 5.0, fare_rs = 10 }, { fare_rs = 20 }]
metro_slabs = [{ upper_km = 10.0, fare_rs = 30 }, { fare_rs = 50 }]
"#,
    )
    .map_err(|e| anyhow::anyhow!(e))?;
    println!("custom table, per boarding: {}", trip_fare(0.3, 2.2, &rides, &custom)?);
    Ok(())
}
