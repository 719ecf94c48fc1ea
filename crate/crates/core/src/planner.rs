//! Door-to-door trip planning over the bipartite graph.
//!
//! A query adds two floating endpoints to the precomputed connection table:
//! the origin links to every stop within the first/last-mile range, and every
//! stop within range of the destination links to it. A trip is then the
//! vector `(origin, entry stop, exit stop, destination)`. Its cost is
//!
//! ```text
//! cost = w_lm * (tt_first + tt_last) + w_pt * (tt_pt + transfer_penalty * transfers)
//! ```
//!
//! and the planner returns the cheapest trip whose fare is strictly below the
//! user's cap.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bipartite::{BipartiteGraph, ConnectionOption, DEFAULT_MAX_TRANSFERS};
use crate::fare::{trip_fare, FareBreakdown, FareConfig, FareError, PtRide, Rupees};
use crate::network::{haversine_km, GeoPoint, Speeds, TravelMode};

/// Tolerance on `w_lm + w_pt = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PlanError {
    #[error("no stop within range of the {0}")]
    NoCandidateStops(Side),
    #[error("no transit connection between any pair of candidate stops")]
    NoConnection,
    #[error("every connection costs at least the fare cap")]
    FareInfeasible,
    #[error("weights must be positive and sum to 1 (w_lm = {w_lm}, w_pt = {w_pt})")]
    WeightConstraintViolated { w_lm: f64, w_pt: f64 },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error(transparent)]
    Fare(#[from] FareError),
}

impl PlanError {
    /// Stable machine-readable name, used by the HTTP API.
    pub fn code(&self) -> &'static str {
        match self {
            PlanError::NoCandidateStops(_) => "NoCandidateStops",
            PlanError::NoConnection => "NoConnection",
            PlanError::FareInfeasible => "FareInfeasible",
            PlanError::WeightConstraintViolated { .. } => "WeightConstraintViolated",
            PlanError::InvalidQuery(_) => "InvalidQuery",
            PlanError::Fare(_) => "FareError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Entry,
    Exit,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Entry => "origin",
            Side::Exit => "destination",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub origin: GeoPoint,
    pub destination: GeoPoint,
    pub max_fare_rs: Rupees,
    pub w_lm: f64,
    pub w_pt: f64,
    pub lm_range_km: f64,
    pub transfer_penalty_min: f64,
    pub optimile_only: bool,
    pub max_transfers: u32,
}

impl Query {
    /// A query with the baseline preferences: fare cap Rs 60, `w_lm = 0.2`,
    /// `w_pt = 0.8`, 5 km first/last-mile range, no transfer penalty.
    pub fn new(origin: GeoPoint, destination: GeoPoint) -> Self {
        Query {
            origin,
            destination,
            max_fare_rs: 60,
            w_lm: 0.2,
            w_pt: 0.8,
            lm_range_km: 5.0,
            transfer_penalty_min: 0.0,
            optimile_only: false,
            max_transfers: DEFAULT_MAX_TRANSFERS,
        }
    }

    /// Sets `w_lm` and `w_pt = 1 - w_lm`.
    pub fn with_lm_weight(mut self, w_lm: f64) -> Self {
        self.w_lm = w_lm;
        self.w_pt = 1.0 - w_lm;
        self
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        check_weights(self.w_lm, self.w_pt)?;
        if !self.origin.is_valid() || !self.destination.is_valid() {
            return Err(PlanError::InvalidQuery("coordinates out of range".into()));
        }
        if !(self.lm_range_km > 0.0 && self.lm_range_km.is_finite()) {
            return Err(PlanError::InvalidQuery("lm_range_km must be positive".into()));
        }
        if self.max_fare_rs == 0 {
            return Err(PlanError::InvalidQuery("max_fare_rs must be positive".into()));
        }
        if !(self.transfer_penalty_min >= 0.0 && self.transfer_penalty_min.is_finite()) {
            return Err(PlanError::InvalidQuery(
                "transfer_penalty_min must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

fn check_weights(w_lm: f64, w_pt: f64) -> Result<(), PlanError> {
    if w_lm > 0.0 && w_pt > 0.0 && (w_lm + w_pt - 1.0).abs() <= WEIGHT_SUM_TOLERANCE {
        Ok(())
    } else {
        Err(PlanError::WeightConstraintViolated { w_lm, w_pt })
    }
}

/// Weighted travel-time cost of a trip.
pub fn plan_cost(
    tt_lm: f64,
    tt_pt: f64,
    transfers: u32,
    w_lm: f64,
    w_pt: f64,
    transfer_penalty_min: f64,
) -> Result<f64, PlanError> {
    check_weights(w_lm, w_pt)?;
    Ok(weighted_cost(tt_lm, tt_pt, transfers, w_lm, w_pt, transfer_penalty_min))
}

#[inline]
fn weighted_cost(tt_lm: f64, tt_pt: f64, transfers: u32, w_lm: f64, w_pt: f64, tau: f64) -> f64 {
    w_lm * tt_lm + w_pt * (tt_pt + tau * transfers as f64)
}

/// A first or last mile: walked when short enough, otherwise by LM service.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LmLeg {
    pub distance_km: f64,
    pub time_min: f64,
    pub mode: TravelMode,
}

/// A stop reachable from a query endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateStop {
    pub stop: usize,
    pub distance_km: f64,
}

/// One `(entry, exit, option)` triple with its fare, before weighting.
#[derive(Debug, Clone)]
pub struct Connection<'g> {
    pub entry: usize,
    pub exit: usize,
    pub first: LmLeg,
    pub last: LmLeg,
    pub option: &'g ConnectionOption,
    pub fare: FareBreakdown,
}

impl Connection<'_> {
    pub fn tt_lm(&self) -> f64 {
        self.first.time_min + self.last.time_min
    }

    pub fn total_distance_km(&self) -> f64 {
        self.first.distance_km + self.option.ride_distance_km + self.last.distance_km
    }

    /// Assumes weights already validated.
    pub fn cost(&self, w_lm: f64, w_pt: f64, tau: f64) -> f64 {
        weighted_cost(
            self.tt_lm(),
            self.option.travel_time_min,
            self.option.transfers,
            w_lm,
            w_pt,
            tau,
        )
    }
}

/// Every connection of one query geometry, with no fare cap applied.
#[derive(Debug, Clone)]
pub struct Connections<'g> {
    pub entry_candidates: usize,
    pub exit_candidates: usize,
    pub items: Vec<Connection<'g>>,
}

impl<'g> Connections<'g> {
    /// Why no plan exists under `max_fare_rs`, if none does.
    pub fn infeasibility(&self, max_fare_rs: Rupees) -> Option<PlanError> {
        if self.entry_candidates == 0 {
            Some(PlanError::NoCandidateStops(Side::Entry))
        } else if self.exit_candidates == 0 {
            Some(PlanError::NoCandidateStops(Side::Exit))
        } else if self.items.is_empty() {
            Some(PlanError::NoConnection)
        } else if self.items.iter().all(|c| c.fare.total_rs >= max_fare_rs) {
            Some(PlanError::FareInfeasible)
        } else {
            None
        }
    }
}

/// Ordering used by `solve` and `rank_plans`: cost, then fare, then total
/// distance, then entry and exit stop ids, then transfers.
#[derive(Debug, Clone, Copy)]
pub struct PlanKey<'a> {
    pub cost: f64,
    pub fare_rs: Rupees,
    pub distance_km: f64,
    pub entry_id: &'a str,
    pub exit_id: &'a str,
    pub transfers: u32,
}

impl PlanKey<'_> {
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.fare_rs.cmp(&other.fare_rs))
            .then(self.distance_km.total_cmp(&other.distance_km))
            .then_with(|| self.entry_id.cmp(other.entry_id))
            .then_with(|| self.exit_id.cmp(other.exit_id))
            .then(self.transfers.cmp(&other.transfers))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSegment {
    pub route_id: String,
    pub mode: crate::network::PtMode,
    pub from_stop: String,
    pub to_stop: String,
    /// Stops visited, boarding and alighting stops included.
    pub stops: Vec<String>,
    pub distance_km: f64,
    pub travel_time_min: f64,
}

/// A solved trip `(origin, entry, exit, destination)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub entry_stop: String,
    pub exit_stop: String,
    pub entry_location: GeoPoint,
    pub exit_location: GeoPoint,
    pub first_leg_mode: TravelMode,
    pub last_leg_mode: TravelMode,
    pub tt_lm_first: f64,
    pub tt_lm_last: f64,
    pub tt_pt: f64,
    pub transfers: u32,
    pub lm_first_km: f64,
    pub lm_last_km: f64,
    pub pt_ride_km: f64,
    pub fare: FareBreakdown,
    pub cost: f64,
    pub total_distance_km: f64,
    pub travel_time_min: f64,
    pub segments: Vec<PlanSegment>,
}

impl Plan {
    pub fn key(&self) -> PlanKey<'_> {
        PlanKey {
            cost: self.cost,
            fare_rs: self.fare.total_rs,
            distance_km: self.total_distance_km,
            entry_id: &self.entry_stop,
            exit_id: &self.exit_stop,
            transfers: self.transfers,
        }
    }

    pub fn fare_per_km(&self) -> f64 {
        if self.total_distance_km > 0.0 {
            self.fare.total_rs as f64 / self.total_distance_km
        } else {
            0.0
        }
    }
}

/// All feasible plans of one query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanSet {
    pub query: Query,
    pub plans: Vec<Plan>,
    #[serde(skip)]
    empty_reason: Option<PlanError>,
}

impl PlanSet {
    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    /// `Some` exactly when the set is empty.
    pub fn empty_reason(&self) -> Option<&PlanError> {
        self.empty_reason.as_ref()
    }
}

/// Solves queries against one shared graph. Cheap to construct; holds only
/// references.
#[derive(Debug, Clone, Copy)]
pub struct Planner<'a> {
    graph: &'a BipartiteGraph,
    fares: &'a FareConfig,
    speeds: Speeds,
}

impl<'a> Planner<'a> {
    pub fn new(graph: &'a BipartiteGraph, fares: &'a FareConfig) -> Self {
        Planner {
            graph,
            fares,
            speeds: Speeds::default(),
        }
    }

    pub fn with_speeds(mut self, speeds: Speeds) -> Self {
        self.speeds = speeds;
        self
    }

    pub fn graph(&self) -> &'a BipartiteGraph {
        self.graph
    }

    pub fn fares(&self) -> &'a FareConfig {
        self.fares
    }

    /// Stops within `lm_range_km` of `point`, in stop order.
    pub fn candidate_stops(&self, point: GeoPoint, lm_range_km: f64) -> Vec<CandidateStop> {
        candidate_stops(self.graph, point, lm_range_km)
    }

    pub fn lm_leg(&self, distance_km: f64) -> LmLeg {
        let mode = if distance_km <= self.fares.walk_free_km {
            TravelMode::Walk
        } else {
            TravelMode::Lm
        };
        LmLeg {
            distance_km,
            time_min: distance_km / self.speeds.kmh(mode) * 60.0,
            mode,
        }
    }

    /// Every `(entry, exit, option)` triple for the query geometry.
    pub fn connections(
        &self,
        origin: GeoPoint,
        destination: GeoPoint,
        lm_range_km: f64,
        max_transfers: u32,
        optimile_only: bool,
    ) -> Result<Connections<'a>, PlanError> {
        let entries = self.candidate_stops(origin, lm_range_km);
        let exits = self.candidate_stops(destination, lm_range_km);
        let max_t = if optimile_only { 0 } else { max_transfers };
        let mut items = Vec::new();
        let mut rides = Vec::new();
        for a in &entries {
            let first = self.lm_leg(a.distance_km);
            for b in &exits {
                let Some(edge) = self.graph.edge(a.stop, b.stop) else {
                    continue;
                };
                let last = self.lm_leg(b.distance_km);
                for option in edge.options.iter().filter(|o| o.transfers <= max_t) {
                    rides.clear();
                    rides.extend(option.segments.iter().map(|s| PtRide::new(s.mode, s.distance_km)));
                    let fare = trip_fare(first.distance_km, last.distance_km, &rides, self.fares)?;
                    items.push(Connection {
                        entry: a.stop,
                        exit: b.stop,
                        first,
                        last,
                        option,
                        fare,
                    });
                }
            }
        }
        Ok(Connections {
            entry_candidates: entries.len(),
            exit_candidates: exits.len(),
            items,
        })
    }

    fn query_connections(&self, query: &Query) -> Result<Connections<'a>, PlanError> {
        query.validate()?;
        self.connections(
            query.origin,
            query.destination,
            query.lm_range_km,
            query.max_transfers,
            query.optimile_only,
        )
    }

    pub fn connection_key<'k>(&'k self, c: &Connection<'_>, query: &Query) -> PlanKey<'k> {
        let net = self.graph.network();
        PlanKey {
            cost: c.cost(query.w_lm, query.w_pt, query.transfer_penalty_min),
            fare_rs: c.fare.total_rs,
            distance_km: c.total_distance_km(),
            entry_id: &net.stop(c.entry).id,
            exit_id: &net.stop(c.exit).id,
            transfers: c.option.transfers,
        }
    }

    /// Materializes a connection as a [`Plan`] under the query's weights.
    pub fn to_plan(&self, c: &Connection<'_>, query: &Query) -> Plan {
        let net = self.graph.network();
        let segments = c
            .option
            .segments
            .iter()
            .map(|s| {
                let route = &net.routes()[s.route as usize];
                let stops: Vec<String> = route.stop_sequence[s.board_pos as usize..=s.alight_pos as usize].to_vec();
                PlanSegment {
                    route_id: route.id.clone(),
                    mode: s.mode,
                    from_stop: stops[0].clone(),
                    to_stop: stops[stops.len() - 1].clone(),
                    stops,
                    distance_km: s.distance_km,
                    travel_time_min: s.travel_time_min,
                }
            })
            .collect();
        let (entry, exit) = (net.stop(c.entry), net.stop(c.exit));
        Plan {
            entry_stop: entry.id.clone(),
            exit_stop: exit.id.clone(),
            entry_location: entry.location,
            exit_location: exit.location,
            first_leg_mode: c.first.mode,
            last_leg_mode: c.last.mode,
            tt_lm_first: c.first.time_min,
            tt_lm_last: c.last.time_min,
            tt_pt: c.option.travel_time_min,
            transfers: c.option.transfers,
            lm_first_km: c.first.distance_km,
            lm_last_km: c.last.distance_km,
            pt_ride_km: c.option.ride_distance_km,
            fare: c.fare,
            cost: c.cost(query.w_lm, query.w_pt, query.transfer_penalty_min),
            total_distance_km: c.total_distance_km(),
            travel_time_min: c.first.time_min + c.option.travel_time_min + c.last.time_min,
            segments,
        }
    }

    /// All plans whose fare is strictly below the cap.
    pub fn enumerate_feasible(&self, query: &Query) -> Result<PlanSet, PlanError> {
        let conns = self.query_connections(query)?;
        let plans: Vec<Plan> = conns
            .items
            .iter()
            .filter(|c| c.fare.total_rs < query.max_fare_rs)
            .map(|c| self.to_plan(c, query))
            .collect();
        let empty_reason = conns.infeasibility(query.max_fare_rs);
        Ok(PlanSet {
            query: query.clone(),
            plans,
            empty_reason,
        })
    }

    /// The minimum-cost feasible plan.
    pub fn solve(&self, query: &Query) -> Result<Plan, PlanError> {
        let conns = self.query_connections(query)?;
        if let Some(e) = conns.infeasibility(query.max_fare_rs) {
            return Err(e);
        }
        let best = conns
            .items
            .iter()
            .filter(|c| c.fare.total_rs < query.max_fare_rs)
            .min_by(|x, y| self.connection_key(x, query).total_cmp(&self.connection_key(y, query)))
            .expect("feasible set is non-empty");
        Ok(self.to_plan(best, query))
    }
}

/// Stops within `lm_range_km` of `point`, as `(stop index, distance)`.
pub fn candidate_stops(graph: &BipartiteGraph, point: GeoPoint, lm_range_km: f64) -> Vec<CandidateStop> {
    graph
        .network()
        .stops()
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            let d = haversine_km(point, s.location);
            (d <= lm_range_km).then_some(CandidateStop {
                stop: i,
                distance_km: d,
            })
        })
        .collect()
}

/// Plans sorted by [`PlanKey`], truncated to `limit`.
pub fn rank_plans(plan_set: &PlanSet, limit: usize) -> Vec<Plan> {
    let mut plans: Vec<&Plan> = plan_set.plans.iter().collect();
    plans.sort_by(|a, b| a.key().total_cmp(&b.key()));
    plans.into_iter().take(limit).cloned().collect()
}
