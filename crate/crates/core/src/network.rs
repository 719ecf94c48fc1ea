//! Stops, routes and the static transit network.
//!
//! A network is loaded from a stops table (`id,name,lat,lon,mode`) and a JSON
//! array of routes, or generated as a synthetic grid city. Once built it is
//! immutable; every other module reads it through shared references.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for every distance in the crate.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("duplicate stop id {0:?}")]
    DuplicateStopId(String),
    #[error("route {route:?} references unknown stop {stop:?}")]
    UnknownStopInRoute { route: String, stop: String },
    #[error("route {0:?} has fewer than two stops")]
    RouteTooShort(String),
    #[error("route {route:?} has a non-positive leg time at leg {leg}")]
    NonPositiveLegTime { route: String, leg: usize },
    #[error("route {route:?} lists {got} leg times for {expected} legs")]
    LegCountMismatch { route: String, expected: usize, got: usize },
    #[error("route {route:?} visits stop {stop:?} twice in a row")]
    RepeatedStop { route: String, stop: String },
    #[error("duplicate route id {0:?}")]
    DuplicateRouteId(String),
    #[error("invalid location for stop {stop:?}: lat {lat}, lon {lon}")]
    InvalidLocation { stop: String, lat: f64, lon: f64 },
    #[error("unknown stop {0:?}")]
    UnknownStop(String),
    #[error("negative distance {0} km")]
    NegativeDistance(f64),
    #[error("grid must be at least 2x2 with positive spacing (got {rows}x{cols}, {spacing_km} km)")]
    InvalidGridShape { rows: usize, cols: usize, spacing_km: f64 },
    #[error("stops file: {0}")]
    Csv(#[from] csv::Error),
    #[error("routes file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A WGS84 position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Returns `None` unless both coordinates are finite and in range.
    pub fn new(lat: f64, lon: f64) -> Option<Self> {
        let p = GeoPoint { lat, lon };
        p.is_valid().then_some(p)
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.lat, self.lon)
    }
}

/// Great-circle distance in kilometres.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PtMode {
    Bus,
    Metro,
}

impl PtMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PtMode::Bus => "bus",
            PtMode::Metro => "metro",
        }
    }
}

impl fmt::Display for PtMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Every way a leg can be travelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TravelMode {
    Bus,
    Metro,
    Lm,
    Walk,
}

impl From<PtMode> for TravelMode {
    fn from(m: PtMode) -> Self {
        match m {
            PtMode::Bus => TravelMode::Bus,
            PtMode::Metro => TravelMode::Metro,
        }
    }
}

/// Cruise speeds in km/h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Speeds {
    pub bus_kmh: f64,
    pub metro_kmh: f64,
    pub lm_kmh: f64,
    pub walk_kmh: f64,
}

impl Default for Speeds {
    fn default() -> Self {
        Speeds {
            bus_kmh: 15.0,
            metro_kmh: 32.0,
            lm_kmh: 20.0,
            walk_kmh: 4.5,
        }
    }
}

impl Speeds {
    pub fn kmh(&self, mode: TravelMode) -> f64 {
        match mode {
            TravelMode::Bus => self.bus_kmh,
            TravelMode::Metro => self.metro_kmh,
            TravelMode::Lm => self.lm_kmh,
            TravelMode::Walk => self.walk_kmh,
        }
    }

    pub fn leg_time_minutes(&self, distance_km: f64, mode: TravelMode) -> Result<f64, NetworkError> {
        if distance_km < 0.0 || distance_km.is_nan() {
            return Err(NetworkError::NegativeDistance(distance_km));
        }
        Ok(distance_km / self.kmh(mode) * 60.0)
    }
}

/// Travel time at the default speeds.
pub fn leg_time_minutes(distance_km: f64, mode: TravelMode) -> Result<f64, NetworkError> {
    Speeds::default().leg_time_minutes(distance_km, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub id: String,
    pub name: String,
    pub location: GeoPoint,
    pub mode: PtMode,
}

/// A directed sequence of stops with per-leg travel times.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub id: String,
    pub mode: PtMode,
    pub stop_sequence: Vec<String>,
    pub leg_times: Vec<f64>,
    // resolved against the owning network
    stop_idx: Vec<usize>,
    leg_km: Vec<f64>,
}

impl Route {
    /// Indices into [`TransitNetwork::stops`], aligned with `stop_sequence`.
    pub fn stop_indices(&self) -> &[usize] {
        &self.stop_idx
    }

    /// Haversine length of each leg.
    pub fn leg_distances_km(&self) -> &[f64] {
        &self.leg_km
    }
}

/// On-disk form of a route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRecord {
    pub id: String,
    pub mode: PtMode,
    pub stops: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leg_times_min: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StopRow {
    id: String,
    name: String,
    lat: f64,
    lon: f64,
    mode: PtMode,
}

#[derive(Debug, Clone, Default)]
pub struct TransitNetwork {
    stops: Vec<Stop>,
    routes: Vec<Route>,
    stop_index: HashMap<String, usize>,
    routes_by_stop: Vec<Vec<usize>>,
}

impl TransitNetwork {
    /// Validates stops and routes and builds the lookup indices.
    ///
    /// Routes without leg times get them from the haversine leg length at the
    /// route mode's speed in `speeds`.
    pub fn new(stops: Vec<Stop>, routes: Vec<RouteRecord>, speeds: &Speeds) -> Result<Self, NetworkError> {
        let mut stop_index = HashMap::with_capacity(stops.len());
        for (i, s) in stops.iter().enumerate() {
            if !s.location.is_valid() {
                return Err(NetworkError::InvalidLocation {
                    stop: s.id.clone(),
                    lat: s.location.lat,
                    lon: s.location.lon,
                });
            }
            if stop_index.insert(s.id.clone(), i).is_some() {
                return Err(NetworkError::DuplicateStopId(s.id.clone()));
            }
        }

        let mut route_ids = HashSet::new();
        let mut resolved = Vec::with_capacity(routes.len());
        for rec in routes {
            if !route_ids.insert(rec.id.clone()) {
                return Err(NetworkError::DuplicateRouteId(rec.id));
            }
            if rec.stops.len() < 2 {
                return Err(NetworkError::RouteTooShort(rec.id));
            }
            let mut stop_idx = Vec::with_capacity(rec.stops.len());
            for sid in &rec.stops {
                let i = *stop_index.get(sid).ok_or_else(|| NetworkError::UnknownStopInRoute {
                    route: rec.id.clone(),
                    stop: sid.clone(),
                })?;
                if stop_idx.last() == Some(&i) {
                    return Err(NetworkError::RepeatedStop {
                        route: rec.id.clone(),
                        stop: sid.clone(),
                    });
                }
                stop_idx.push(i);
            }
            let leg_km: Vec<f64> = stop_idx
                .windows(2)
                .map(|w| haversine_km(stops[w[0]].location, stops[w[1]].location))
                .collect();
            let leg_times = match rec.leg_times_min {
                Some(times) => {
                    if times.len() != leg_km.len() {
                        return Err(NetworkError::LegCountMismatch {
                            route: rec.id,
                            expected: leg_km.len(),
                            got: times.len(),
                        });
                    }
                    times
                }
                None => leg_km
                    .iter()
                    .map(|&d| speeds.leg_time_minutes(d, rec.mode.into()))
                    .collect::<Result<_, _>>()?,
            };
            // NaN fails this test too
            if let Some(leg) = leg_times.iter().position(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(NetworkError::NonPositiveLegTime { route: rec.id, leg });
            }
            resolved.push(Route {
                id: rec.id,
                mode: rec.mode,
                stop_sequence: rec.stops,
                leg_times,
                stop_idx,
                leg_km,
            });
        }

        let mut routes_by_stop = vec![Vec::new(); stops.len()];
        for (ri, r) in resolved.iter().enumerate() {
            for &si in &r.stop_idx {
                if routes_by_stop[si].last() != Some(&ri) {
                    routes_by_stop[si].push(ri);
                }
            }
        }
        // loop routes can revisit a stop non-consecutively
        for list in &mut routes_by_stop {
            list.dedup();
            list.sort_unstable();
            list.dedup();
        }

        Ok(TransitNetwork {
            stops,
            routes: resolved,
            stop_index,
            routes_by_stop,
        })
    }

    pub fn stops(&self) -> &[Stop] {
        &self.stops
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn stop_count(&self) -> usize {
        self.stops.len()
    }

    pub fn stop(&self, idx: usize) -> &Stop {
        &self.stops[idx]
    }

    pub fn stop_idx(&self, id: &str) -> Option<usize> {
        self.stop_index.get(id).copied()
    }

    pub fn stop_by_id(&self, id: &str) -> Option<&Stop> {
        self.stop_idx(id).map(|i| &self.stops[i])
    }

    /// Indices of routes serving the stop, ascending.
    pub fn routes_at(&self, stop_idx: usize) -> &[usize] {
        &self.routes_by_stop[stop_idx]
    }

    /// Route ids serving a stop, or `None` for an unknown id.
    pub fn routes_by_stop(&self, stop_id: &str) -> Option<Vec<&str>> {
        let i = self.stop_idx(stop_id)?;
        Some(
            self.routes_by_stop[i]
                .iter()
                .map(|&r| self.routes[r].id.as_str())
                .collect(),
        )
    }

    /// Smallest lat/lon rectangle containing every stop.
    pub fn extent(&self) -> Option<(GeoPoint, GeoPoint)> {
        let first = self.stops.first()?.location;
        let (mut lo, mut hi) = (first, first);
        for s in &self.stops[1..] {
            lo.lat = lo.lat.min(s.location.lat);
            lo.lon = lo.lon.min(s.location.lon);
            hi.lat = hi.lat.max(s.location.lat);
            hi.lon = hi.lon.max(s.location.lon);
        }
        Some((lo, hi))
    }

    pub fn route_records(&self) -> Vec<RouteRecord> {
        self.routes
            .iter()
            .map(|r| RouteRecord {
                id: r.id.clone(),
                mode: r.mode,
                stops: r.stop_sequence.clone(),
                leg_times_min: Some(r.leg_times.clone()),
            })
            .collect()
    }

    /// Writes the stops table and routes document.
    pub fn save<W1: Write, W2: Write>(&self, stops_out: W1, routes_out: W2) -> Result<(), NetworkError> {
        let mut w = csv::Writer::from_writer(stops_out);
        for s in &self.stops {
            w.serialize(StopRow {
                id: s.id.clone(),
                name: s.name.clone(),
                lat: s.location.lat,
                lon: s.location.lon,
                mode: s.mode,
            })?;
        }
        w.flush()?;
        serde_json::to_writer_pretty(routes_out, &self.route_records())?;
        Ok(())
    }
}

/// Reads a stops table with header `id,name,lat,lon,mode`.
pub fn read_stops<R: Read>(source: R) -> Result<Vec<Stop>, NetworkError> {
    let mut rdr = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for row in rdr.deserialize::<StopRow>() {
        let row = row?;
        out.push(Stop {
            id: row.id,
            name: row.name,
            location: GeoPoint {
                lat: row.lat,
                lon: row.lon,
            },
            mode: row.mode,
        });
    }
    Ok(out)
}

pub fn read_routes<R: Read>(source: R) -> Result<Vec<RouteRecord>, NetworkError> {
    Ok(serde_json::from_reader(source)?)
}

pub fn load_network<R1: Read, R2: Read>(stops_source: R1, routes_source: R2) -> Result<TransitNetwork, NetworkError> {
    load_network_with(stops_source, routes_source, &Speeds::default())
}

pub fn load_network_with<R1: Read, R2: Read>(
    stops_source: R1,
    routes_source: R2,
    speeds: &Speeds,
) -> Result<TransitNetwork, NetworkError> {
    let stops = read_stops(stops_source)?;
    let routes = read_routes(routes_source)?;
    TransitNetwork::new(stops, routes, speeds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutePlan {
    RowsAndCols,
    RowsOnly,
}

/// South-west corner of generated grid cities.
pub const GRID_ORIGIN: GeoPoint = GeoPoint { lat: 28.55, lon: 77.10 };

/// Builds a synthetic grid city of one-way bus routes.
///
/// Stop `(r, c)` has id `s{r:03}-{c:03}`. Row routes alternate east/west and
/// column routes alternate north/south; the seed picks the direction of the
/// first row and first column. Longitude spacing is computed at the grid's
/// middle latitude.
pub fn generate_grid_city(
    rows: usize,
    cols: usize,
    spacing_km: f64,
    route_plan: RoutePlan,
    seed: u64,
) -> Result<TransitNetwork, NetworkError> {
    if rows < 2 || cols < 2 || !(spacing_km > 0.0 && spacing_km.is_finite()) {
        return Err(NetworkError::InvalidGridShape { rows, cols, spacing_km });
    }
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let first_row_east: bool = rng.random();
    let first_col_north: bool = rng.random();

    let km_per_deg = EARTH_RADIUS_KM * std::f64::consts::PI / 180.0;
    let dlat = spacing_km / km_per_deg;
    let mid_lat = GRID_ORIGIN.lat + dlat * (rows - 1) as f64 / 2.0;
    let dlon = spacing_km / (km_per_deg * mid_lat.to_radians().cos());

    let id = |r: usize, c: usize| format!("s{r:03}-{c:03}");
    let mut stops = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            stops.push(Stop {
                id: id(r, c),
                name: format!("Row {r} / Col {c}"),
                location: GeoPoint {
                    lat: GRID_ORIGIN.lat + dlat * r as f64,
                    lon: GRID_ORIGIN.lon + dlon * c as f64,
                },
                mode: PtMode::Bus,
            });
        }
    }

    let mut routes = Vec::new();
    for r in 0..rows {
        let mut seq: Vec<String> = (0..cols).map(|c| id(r, c)).collect();
        if (r % 2 == 0) != first_row_east {
            seq.reverse();
        }
        routes.push(RouteRecord {
            id: format!("row-{r:03}"),
            mode: PtMode::Bus,
            stops: seq,
            leg_times_min: None,
        });
    }
    if route_plan == RoutePlan::RowsAndCols {
        for c in 0..cols {
            let mut seq: Vec<String> = (0..rows).map(|r| id(r, c)).collect();
            if (c % 2 == 0) != first_col_north {
                seq.reverse();
            }
            routes.push(RouteRecord {
                id: format!("col-{c:03}"),
                mode: PtMode::Bus,
                stops: seq,
                leg_times_min: None,
            });
        }
    }
    TransitNetwork::new(stops, routes, &Speeds::default())
}
