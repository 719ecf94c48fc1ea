//! Area coverage of circle unions inside a bounding box.
//!
//! Coverage is the fraction of a box lying within some radius of a set of
//! stops. The primary estimator rasterizes the box in a local equirectangular
//! projection centred on the box and counts cells whose centre is covered.
//! A Monte Carlo estimator using haversine distances serves as an independent
//! check.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bipartite::BipartiteGraph;
use crate::network::{haversine_km, GeoPoint, TransitNetwork, EARTH_RADIUS_KM};

pub const DEFAULT_CELL_SIZE_M: f64 = 100.0;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum CoverageError {
    #[error("bounding box {0:?} has no area")]
    DegenerateBox(String),
    #[error("radius must be positive, got {0} km")]
    InvalidRadius(f64),
    #[error("cell size must be positive, got {0} m")]
    InvalidCellSize(f64),
    #[error("at least one sample is required")]
    NoSamples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
    #[serde(default)]
    pub label: String,
}

impl BoundingBox {
    pub fn new(
        label: impl Into<String>,
        min_lat: f64,
        max_lat: f64,
        min_lon: f64,
        max_lon: f64,
    ) -> Result<Self, CoverageError> {
        let b = BoundingBox {
            min_lat,
            max_lat,
            min_lon,
            max_lon,
            label: label.into(),
        };
        b.validate()?;
        Ok(b)
    }

    /// A box of `width_km` by `height_km` centred on `center`.
    pub fn around(
        label: impl Into<String>,
        center: GeoPoint,
        width_km: f64,
        height_km: f64,
    ) -> Result<Self, CoverageError> {
        let km_per_deg = EARTH_RADIUS_KM.to_radians();
        let half_lat = height_km / 2.0 / km_per_deg;
        let half_lon = width_km / 2.0 / (km_per_deg * center.lat.to_radians().cos());
        Self::new(
            label,
            center.lat - half_lat,
            center.lat + half_lat,
            center.lon - half_lon,
            center.lon + half_lon,
        )
    }

    /// Extent of a network's stops, grown by `margin_km` on every side.
    pub fn of_network(label: impl Into<String>, network: &TransitNetwork, margin_km: f64) -> Option<Self> {
        let (lo, hi) = network.extent()?;
        let km_per_deg = EARTH_RADIUS_KM.to_radians();
        let mid = (lo.lat + hi.lat) / 2.0;
        let dlat = margin_km / km_per_deg;
        let dlon = margin_km / (km_per_deg * mid.to_radians().cos());
        Self::new(label, lo.lat - dlat, hi.lat + dlat, lo.lon - dlon, hi.lon + dlon).ok()
    }

    pub fn validate(&self) -> Result<(), CoverageError> {
        let ok = [self.min_lat, self.max_lat, self.min_lon, self.max_lon]
            .iter()
            .all(|v| v.is_finite())
            && self.min_lat < self.max_lat
            && self.min_lon < self.max_lon
            && self.min_lat >= -90.0
            && self.max_lat <= 90.0;
        if ok {
            Ok(())
        } else {
            Err(CoverageError::DegenerateBox(self.label.clone()))
        }
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint {
            lat: (self.min_lat + self.max_lat) / 2.0,
            lon: (self.min_lon + self.max_lon) / 2.0,
        }
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        (self.min_lat..=self.max_lat).contains(&p.lat) && (self.min_lon..=self.max_lon).contains(&p.lon)
    }

    /// Uniform in latitude and longitude.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> GeoPoint {
        GeoPoint {
            lat: rng.random_range(self.min_lat..self.max_lat),
            lon: rng.random_range(self.min_lon..self.max_lon),
        }
    }
}

/// Occupancy lattice over a bounding box.
#[derive(Debug, Clone)]
pub struct CoverageGrid {
    cell_size_m: f64,
    nx: usize,
    ny: usize,
    step_x: f64,
    step_y: f64,
    lat0: f64,
    lon0: f64,
    cos_lat0: f64,
    half_w: f64,
    half_h: f64,
    occupancy: Vec<bool>,
}

const M_PER_RAD: f64 = EARTH_RADIUS_KM * 1000.0;

impl CoverageGrid {
    /// `ceil(extent / cell_size)` cells per axis; cells are shrunk so the
    /// lattice tiles the box exactly.
    pub fn new(bbox: &BoundingBox, cell_size_m: f64) -> Result<Self, CoverageError> {
        bbox.validate()?;
        if !(cell_size_m > 0.0 && cell_size_m.is_finite()) {
            return Err(CoverageError::InvalidCellSize(cell_size_m));
        }
        let c = bbox.center();
        let cos_lat0 = c.lat.to_radians().cos();
        let width = M_PER_RAD * (bbox.max_lon - bbox.min_lon).to_radians() * cos_lat0;
        let height = M_PER_RAD * (bbox.max_lat - bbox.min_lat).to_radians();
        let nx = (width / cell_size_m).ceil().max(1.0) as usize;
        let ny = (height / cell_size_m).ceil().max(1.0) as usize;
        Ok(CoverageGrid {
            cell_size_m,
            nx,
            ny,
            step_x: width / nx as f64,
            step_y: height / ny as f64,
            lat0: c.lat,
            lon0: c.lon,
            cos_lat0,
            half_w: width / 2.0,
            half_h: height / 2.0,
            occupancy: vec![false; nx * ny],
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn cell_size_m(&self) -> f64 {
        self.cell_size_m
    }

    /// Projected position in metres relative to the box centre.
    pub fn project(&self, p: GeoPoint) -> (f64, f64) {
        (
            M_PER_RAD * (p.lon - self.lon0).to_radians() * self.cos_lat0,
            M_PER_RAD * (p.lat - self.lat0).to_radians(),
        )
    }

    pub fn add_circle(&mut self, center: GeoPoint, radius_km: f64) {
        let (cx, cy) = self.project(center);
        let r = radius_km * 1000.0;
        let r2 = r * r;
        // cell (i, j) has centre (-half_w + (i + 0.5) step_x, -half_h + (j + 0.5) step_y)
        let j_lo = ((cy - r + self.half_h) / self.step_y - 0.5).ceil().max(0.0);
        let j_hi = ((cy + r + self.half_h) / self.step_y - 0.5)
            .floor()
            .min(self.ny as f64 - 1.0);
        if j_lo > j_hi {
            return;
        }
        for j in j_lo as usize..=j_hi as usize {
            let yc = -self.half_h + (j as f64 + 0.5) * self.step_y;
            let dy = yc - cy;
            let rem = r2 - dy * dy;
            if rem < 0.0 {
                continue;
            }
            let hw = rem.sqrt();
            let i_lo = ((cx - hw + self.half_w) / self.step_x - 0.5).ceil().max(0.0);
            let i_hi = ((cx + hw + self.half_w) / self.step_x - 0.5)
                .floor()
                .min(self.nx as f64 - 1.0);
            if i_lo > i_hi {
                continue;
            }
            let row = j * self.nx;
            for i in i_lo as usize..=i_hi as usize {
                // exact test guards against rounding at the run ends
                let dx = -self.half_w + (i as f64 + 0.5) * self.step_x - cx;
                if dx * dx + dy * dy <= r2 {
                    self.occupancy[row + i] = true;
                }
            }
        }
    }

    pub fn covered_cells(&self) -> usize {
        self.occupancy.iter().filter(|&&b| b).count()
    }

    pub fn covered_fraction(&self) -> f64 {
        self.covered_cells() as f64 / self.occupancy.len() as f64
    }

    pub fn clear(&mut self) {
        self.occupancy.fill(false);
    }
}

fn check_radius(radius_km: f64) -> Result<(), CoverageError> {
    if radius_km > 0.0 && radius_km.is_finite() {
        Ok(())
    } else {
        Err(CoverageError::InvalidRadius(radius_km))
    }
}

/// Fraction of grid cells whose centre lies within `radius_km` of a centre.
pub fn rasterize_circles(
    centers: &[GeoPoint],
    radius_km: f64,
    bbox: &BoundingBox,
    cell_size_m: f64,
) -> Result<f64, CoverageError> {
    check_radius(radius_km)?;
    let mut grid = CoverageGrid::new(bbox, cell_size_m)?;
    for &c in centers {
        grid.add_circle(c, radius_km);
    }
    Ok(grid.covered_fraction())
}

/// Fraction of `n_points` seeded uniform points within `radius_km`
/// (haversine) of any centre.
pub fn montecarlo_coverage_oracle(
    centers: &[GeoPoint],
    radius_km: f64,
    bbox: &BoundingBox,
    n_points: usize,
    seed: u64,
) -> Result<f64, CoverageError> {
    bbox.validate()?;
    check_radius(radius_km)?;
    if n_points == 0 {
        return Err(CoverageError::NoSamples);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..n_points)
        .filter(|_| {
            let p = bbox.sample(&mut rng);
            centers.iter().any(|&c| haversine_km(p, c) <= radius_km)
        })
        .count();
    Ok(hits as f64 / n_points as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverageKind {
    Ptn,
    Optimile,
}

impl fmt::Display for CoverageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoverageKind::Ptn => "ptn",
            CoverageKind::Optimile => "optimile",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoverageMethod {
    Grid,
    Montecarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub label: String,
    pub kind: CoverageKind,
    pub radius_km: f64,
    pub covered_fraction: f64,
    pub method: CoverageMethod,
    pub cell_size_m: f64,
    pub n_samples: Option<usize>,
    pub seed: Option<u64>,
}

/// One row of the exported coverage table.
#[derive(Debug, Serialize)]
struct CoverageRow<'a> {
    label: &'a str,
    radius_km: f64,
    coverage_pct: String,
    kind: CoverageKind,
    method: CoverageMethod,
    cell_size_m: f64,
    n_samples: Option<usize>,
    seed: Option<u64>,
}

/// Writes reports as CSV: `label,radius_km,coverage_pct,...`, percent with two
/// decimals.
pub fn write_coverage_csv<W: std::io::Write>(reports: &[CoverageReport], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    if reports.is_empty() {
        w.write_record([
            "label",
            "radius_km",
            "coverage_pct",
            "kind",
            "method",
            "cell_size_m",
            "n_samples",
            "seed",
        ])?;
    }
    for r in reports {
        w.serialize(CoverageRow {
            label: &r.label,
            radius_km: r.radius_km,
            coverage_pct: format!("{:.2}", r.covered_fraction * 100.0),
            kind: r.kind,
            method: r.method,
            cell_size_m: r.cell_size_m,
            n_samples: r.n_samples,
            seed: r.seed,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Coverage of circles around every stop of the network.
pub fn ptn_coverage(
    network: &TransitNetwork,
    bbox: &BoundingBox,
    radius_km: f64,
    cell_size_m: f64,
) -> Result<CoverageReport, CoverageError> {
    check_radius(radius_km)?;
    let mut grid = CoverageGrid::new(bbox, cell_size_m)?;
    for s in network.stops() {
        grid.add_circle(s.location, radius_km);
    }
    Ok(CoverageReport {
        label: bbox.label.clone(),
        kind: CoverageKind::Ptn,
        radius_km,
        covered_fraction: grid.covered_fraction(),
        method: CoverageMethod::Grid,
        cell_size_m,
        n_samples: None,
        seed: None,
    })
}

/// Coverage reachable from one location with direct connections only.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCoverage {
    pub source_stops: Vec<usize>,
    pub destination_stops: Vec<usize>,
    /// Coverage of the source-stop circles alone.
    pub source_fraction: f64,
    pub fraction: f64,
}

/// Source stops are those within `lm_radius_km` of `location`; destination
/// stops are every stop directly reachable from a source stop. Coverage is the
/// union of `lm_radius_km` circles around both sets.
pub fn location_coverage(
    graph: &BipartiteGraph,
    location: GeoPoint,
    bbox: &BoundingBox,
    lm_radius_km: f64,
    cell_size_m: f64,
) -> Result<SampleCoverage, CoverageError> {
    check_radius(lm_radius_km)?;
    let mut grid = CoverageGrid::new(bbox, cell_size_m)?;
    let net = graph.network();
    let sources: Vec<usize> = (0..net.stop_count())
        .filter(|&i| haversine_km(location, net.stop(i).location) <= lm_radius_km)
        .collect();
    let mut is_dest = vec![false; net.stop_count()];
    for &s in &sources {
        for e in graph.edges_from(s) {
            if e.direct().is_some() {
                is_dest[e.to as usize] = true;
            }
        }
    }
    for &s in &sources {
        grid.add_circle(net.stop(s).location, lm_radius_km);
    }
    let source_fraction = grid.covered_fraction();
    let destinations: Vec<usize> = (0..net.stop_count()).filter(|&i| is_dest[i]).collect();
    for &d in &destinations {
        grid.add_circle(net.stop(d).location, lm_radius_km);
    }
    Ok(SampleCoverage {
        source_stops: sources,
        destination_stops: destinations,
        source_fraction,
        fraction: grid.covered_fraction(),
    })
}

/// Seeded sample locations for [`optimile_coverage`].
pub fn sample_locations(bbox: &BoundingBox, n_samples: usize, seed: u64) -> Vec<GeoPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_samples).map(|_| bbox.sample(&mut rng)).collect()
}

/// Mean direct-connection coverage over `n_samples` seeded locations.
///
/// Samples run in parallel; the mean is summed in sample order so the report
/// is identical for any thread count.
pub fn optimile_coverage(
    graph: &BipartiteGraph,
    bbox: &BoundingBox,
    lm_radius_km: f64,
    n_samples: usize,
    seed: u64,
    cell_size_m: f64,
) -> Result<CoverageReport, CoverageError> {
    if n_samples == 0 {
        return Err(CoverageError::NoSamples);
    }
    check_radius(lm_radius_km)?;
    CoverageGrid::new(bbox, cell_size_m)?;
    let fractions = sample_locations(bbox, n_samples, seed)
        .into_par_iter()
        .map(|p| location_coverage(graph, p, bbox, lm_radius_km, cell_size_m).map(|s| s.fraction))
        .collect::<Result<Vec<f64>, _>>()?;
    let mean = fractions.iter().sum::<f64>() / n_samples as f64;
    Ok(CoverageReport {
        label: bbox.label.clone(),
        kind: CoverageKind::Optimile,
        radius_km: lm_radius_km,
        covered_fraction: mean,
        method: CoverageMethod::Grid,
        cell_size_m,
        n_samples: Some(n_samples),
        seed: Some(seed),
    })
}
