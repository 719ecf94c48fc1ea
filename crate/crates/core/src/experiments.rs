//! Experiment harness: parameter sweeps over sampled trips and coverage
//! tables.
//!
//! Experiment 1 samples origin-destination pairs once and solves each pair
//! under every parameter combination, with and without the direct-connection
//! restriction. Experiment 2 tabulates network and direct-reachability
//! coverage per bounding box and radius.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bipartite::BipartiteGraph;
use crate::coverage::{optimile_coverage, ptn_coverage, BoundingBox, CoverageError, CoverageReport};
use crate::fare::{FareConfig, Rupees};
use crate::metrics::{
    convenience_of, cost_effectiveness_of, efficiency, normalize_value, EfficiencyWeights, MetricsError, PathScore,
};
use crate::network::GeoPoint;
use crate::planner::{Connection, Planner, Query};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExperimentError {
    #[error("invalid parameter grid: {0}")]
    InvalidGrid(String),
    #[error("at least one pair is required")]
    NoPairs,
    #[error("cannot sample pairs: {0}")]
    Sampling(String),
    #[error("no pair succeeded in both modes")]
    NoComparablePairs,
    #[error(transparent)]
    Coverage(#[from] CoverageError),
}

/// Sweep axes. Every combination of one value per axis is one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    pub max_fares: Vec<Rupees>,
    pub w_lm_values: Vec<f64>,
    pub lm_ranges_km: Vec<f64>,
    pub transfer_penalties_min: Vec<f64>,
}

impl Default for ParameterGrid {
    /// Fares `50 + 10n` for `n` in 0..=45, `w_lm = 0.1 + 0.1n` for `n` in 0..=4,
    /// ranges {2, 5, 10} km, no transfer penalty.
    fn default() -> Self {
        ParameterGrid {
            max_fares: (0..=45).map(|n| 50 + 10 * n).collect(),
            w_lm_values: (0..=4).map(|n| (n + 1) as f64 / 10.0).collect(),
            lm_ranges_km: vec![2.0, 5.0, 10.0],
            transfer_penalties_min: vec![0.0],
        }
    }
}

impl ParameterGrid {
    /// The single baseline setting: Rs 60, `w_lm = 0.2`, 5 km.
    pub fn baseline() -> Self {
        ParameterGrid {
            max_fares: vec![60],
            w_lm_values: vec![0.2],
            lm_ranges_km: vec![5.0],
            transfer_penalties_min: vec![0.0],
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: &str| Err(ExperimentError::InvalidGrid(m.into()));
        if self.max_fares.is_empty()
            || self.w_lm_values.is_empty()
            || self.lm_ranges_km.is_empty()
            || self.transfer_penalties_min.is_empty()
        {
            return bad("every axis needs at least one value");
        }
        if self.max_fares.contains(&0) {
            return bad("fares must be positive");
        }
        if !self.w_lm_values.iter().all(|&w| w > 0.0 && w <= 0.5) {
            return bad("w_lm values must lie in (0, 0.5]");
        }
        if !self.lm_ranges_km.iter().all(|&r| r > 0.0 && r.is_finite()) {
            return bad("ranges must be positive");
        }
        if !self.transfer_penalties_min.iter().all(|&t| t >= 0.0 && t.is_finite()) {
            return bad("transfer penalties must be non-negative");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.max_fares.len() * self.w_lm_values.len() * self.lm_ranges_km.len() * self.transfer_penalties_min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Combinations with range outermost, then penalty, then `w_lm`, then fare.
    pub fn combinations(&self) -> Vec<Params> {
        let mut out = Vec::with_capacity(self.len());
        for &lm_range_km in &self.lm_ranges_km {
            for &transfer_penalty_min in &self.transfer_penalties_min {
                for &w_lm in &self.w_lm_values {
                    for &max_fare_rs in &self.max_fares {
                        out.push(Params {
                            max_fare_rs,
                            w_lm,
                            lm_range_km,
                            transfer_penalty_min,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub max_fare_rs: Rupees,
    pub w_lm: f64,
    pub lm_range_km: f64,
    pub transfer_penalty_min: f64,
}

impl Params {
    pub fn query(&self, origin: GeoPoint, destination: GeoPoint, optimile_only: bool, max_transfers: u32) -> Query {
        let mut q = Query::new(origin, destination).with_lm_weight(self.w_lm);
        q.max_fare_rs = self.max_fare_rs;
        q.lm_range_km = self.lm_range_km;
        q.transfer_penalty_min = self.transfer_penalty_min;
        q.optimile_only = optimile_only;
        q.max_transfers = max_transfers;
        q
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdPair {
    pub id: usize,
    pub origin: GeoPoint,
    pub destination: GeoPoint,
}

/// Where pair endpoints are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSampler {
    /// Uniform over the stops' bounding box.
    NetworkExtent,
    /// Pick a box by weight, then a uniform point inside it; endpoints are
    /// drawn independently.
    Weighted(Vec<(BoundingBox, f64)>),
}

pub fn sample_pairs(
    graph: &BipartiteGraph,
    sampler: &PairSampler,
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<OdPair>, ExperimentError> {
    if n_pairs == 0 {
        return Err(ExperimentError::NoPairs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match sampler {
        PairSampler::NetworkExtent => {
            let bbox = BoundingBox::of_network("extent", graph.network(), 0.0)
                .ok_or_else(|| ExperimentError::Sampling("network extent has no area".into()))?;
            Ok((0..n_pairs)
                .map(|id| OdPair {
                    id,
                    origin: bbox.sample(&mut rng),
                    destination: bbox.sample(&mut rng),
                })
                .collect())
        }
        PairSampler::Weighted(boxes) => {
            for (b, _) in boxes {
                b.validate()?;
            }
            let pick = WeightedIndex::new(boxes.iter().map(|(_, w)| *w))
                .map_err(|e| ExperimentError::Sampling(e.to_string()))?;
            Ok((0..n_pairs)
                .map(|id| {
                    let origin = boxes[pick.sample(&mut rng)].0.sample(&mut rng);
                    let destination = boxes[pick.sample(&mut rng)].0.sample(&mut rng);
                    OdPair {
                        id,
                        origin,
                        destination,
                    }
                })
                .collect())
        }
    }
}

pub const STATUS_OK: &str = "ok";

/// One solved (or failed) query of the sweep. Plan columns are empty when
/// `status` is an error code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub pair_id: usize,
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub dest_lat: f64,
    pub dest_lon: f64,
    pub max_fare_rs: Rupees,
    pub w_lm: f64,
    pub w_pt: f64,
    pub lm_range_km: f64,
    pub transfer_penalty_min: f64,
    pub max_transfers: u32,
    pub optimile: bool,
    pub status: String,
    pub entry_stop: Option<String>,
    pub exit_stop: Option<String>,
    pub transfers: Option<u32>,
    pub fare_rs: Option<Rupees>,
    pub pt_fare_rs: Option<Rupees>,
    pub lm_fare_rs: Option<Rupees>,
    pub fare_per_km: Option<f64>,
    pub travel_time_min: Option<f64>,
    pub total_distance_km: Option<f64>,
    pub cost: Option<f64>,
    pub feasible_plans: Option<usize>,
    pub convenience: Option<f64>,
    pub cost_effectiveness: Option<f64>,
    pub c_norm: Option<f64>,
    pub e_norm: Option<f64>,
    pub lambda: Option<f64>,
}

impl TripRecord {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    pub fn params(&self) -> Params {
        Params {
            max_fare_rs: self.max_fare_rs,
            w_lm: self.w_lm,
            lm_range_km: self.lm_range_km,
            transfer_penalty_min: self.transfer_penalty_min,
        }
    }

    pub fn query(&self) -> Query {
        self.params().query(
            GeoPoint {
                lat: self.origin_lat,
                lon: self.origin_lon,
            },
            GeoPoint {
                lat: self.dest_lat,
                lon: self.dest_lon,
            },
            self.optimile,
            self.max_transfers,
        )
    }

    pub fn score(&self) -> Option<PathScore> {
        Some(PathScore {
            convenience: self.convenience?,
            cost_effectiveness: self.cost_effectiveness?,
            c_norm: self.c_norm?,
            e_norm: self.e_norm?,
            lambda: self.lambda?,
        })
    }

    fn blank(pair: &OdPair, p: &Params, optimile: bool, max_transfers: u32, status: &str) -> Self {
        TripRecord {
            pair_id: pair.id,
            origin_lat: pair.origin.lat,
            origin_lon: pair.origin.lon,
            dest_lat: pair.destination.lat,
            dest_lon: pair.destination.lon,
            max_fare_rs: p.max_fare_rs,
            w_lm: p.w_lm,
            w_pt: 1.0 - p.w_lm,
            lm_range_km: p.lm_range_km,
            transfer_penalty_min: p.transfer_penalty_min,
            max_transfers,
            optimile,
            status: status.to_string(),
            entry_stop: None,
            exit_stop: None,
            transfers: None,
            fare_rs: None,
            pt_fare_rs: None,
            lm_fare_rs: None,
            fare_per_km: None,
            travel_time_min: None,
            total_distance_km: None,
            cost: None,
            feasible_plans: None,
            convenience: None,
            cost_effectiveness: None,
            c_norm: None,
            e_norm: None,
            lambda: None,
        }
    }
}

fn metrics_code(e: &MetricsError) -> &'static str {
    match e {
        MetricsError::ZeroCost => "ZeroCost",
        MetricsError::ZeroFare => "ZeroFare",
        MetricsError::EmptySet => "EmptySet",
        MetricsError::WeightConstraintViolated { .. } => "WeightConstraintViolated",
    }
}

/// Experiment 1 settings.
#[derive(Debug, Clone)]
pub struct Experiment1 {
    pub n_pairs: usize,
    pub grid: ParameterGrid,
    pub seed: u64,
    pub sampler: PairSampler,
    pub weights: EfficiencyWeights,
}

impl Experiment1 {
    pub fn new(n_pairs: usize, grid: ParameterGrid, seed: u64) -> Self {
        Experiment1 {
            n_pairs,
            grid,
            seed,
            sampler: PairSampler::NetworkExtent,
            weights: EfficiencyWeights::default(),
        }
    }

    pub fn run(&self, graph: &BipartiteGraph, fares: &FareConfig) -> Result<Vec<TripRecord>, ExperimentError> {
        let pairs = sample_pairs(graph, &self.sampler, self.n_pairs, self.seed)?;
        run_pairs(graph, fares, &pairs, &self.grid, &self.weights)
    }
}

/// Experiment 1 with uniform pairs over the network extent and default
/// efficiency weights.
pub fn run_experiment1(
    graph: &BipartiteGraph,
    fares: &FareConfig,
    n_pairs: usize,
    grid: &ParameterGrid,
    seed: u64,
) -> Result<Vec<TripRecord>, ExperimentError> {
    Experiment1::new(n_pairs, grid.clone(), seed).run(graph, fares)
}

/// Solves every pair under every combination. Records come out pair-major,
/// then in [`ParameterGrid::combinations`] order, unrestricted before
/// direct-only. Pairs run in parallel; assembly is by index.
pub fn run_pairs(
    graph: &BipartiteGraph,
    fares: &FareConfig,
    pairs: &[OdPair],
    grid: &ParameterGrid,
    weights: &EfficiencyWeights,
) -> Result<Vec<TripRecord>, ExperimentError> {
    grid.validate()?;
    weights
        .validate()
        .map_err(|e| ExperimentError::InvalidGrid(e.to_string()))?;
    let planner = Planner::new(graph, fares);
    let per_pair: Vec<Vec<TripRecord>> = pairs
        .par_iter()
        .map(|pair| sweep_pair(&planner, pair, grid, weights))
        .collect();
    Ok(per_pair.into_iter().flatten().collect())
}

/// Running extremes and best connection over a fare-sorted prefix.
#[derive(Clone, Copy)]
struct Prefix {
    best: usize,
    c_lo: f64,
    c_hi: f64,
    e_lo: f64,
    e_hi: f64,
    error: Option<&'static str>,
}

fn sweep_pair(
    planner: &Planner<'_>,
    pair: &OdPair,
    grid: &ParameterGrid,
    weights: &EfficiencyWeights,
) -> Vec<TripRecord> {
    let max_t = planner.graph().max_transfers();
    let combos = grid.combinations();
    let mut slots: Vec<Option<TripRecord>> = vec![None; combos.len() * 2];
    let per_range = grid.transfer_penalties_min.len() * grid.w_lm_values.len() * grid.max_fares.len();
    for (ri, &range) in grid.lm_ranges_km.iter().enumerate() {
        for optimile in [false, true] {
            let slot_of = |ci: usize| ci * 2 + optimile as usize;
            let conns = match planner.connections(pair.origin, pair.destination, range, max_t, optimile) {
                Ok(c) => c,
                Err(e) => {
                    for ci in ri * per_range..(ri + 1) * per_range {
                        slots[slot_of(ci)] = Some(TripRecord::blank(pair, &combos[ci], optimile, max_t, e.code()));
                    }
                    continue;
                }
            };
            let mut order: Vec<usize> = (0..conns.items.len()).collect();
            order.sort_by_key(|&i| conns.items[i].fare.total_rs);
            let sorted_fares: Vec<Rupees> = order.iter().map(|&i| conns.items[i].fare.total_rs).collect();
            let e_vals: Vec<Result<f64, MetricsError>> = order
                .iter()
                .map(|&i| {
                    let c = &conns.items[i];
                    cost_effectiveness_of(c.total_distance_km(), c.fare.total_rs as f64)
                })
                .collect();

            let mut ci = ri * per_range;
            for &tau in &grid.transfer_penalties_min {
                for &w_lm in &grid.w_lm_values {
                    let p0 = Params {
                        max_fare_rs: grid.max_fares[0],
                        w_lm,
                        lm_range_km: range,
                        transfer_penalty_min: tau,
                    };
                    let q0 = p0.query(pair.origin, pair.destination, optimile, max_t);
                    let prefix = prefixes(planner, &conns.items, &order, &e_vals, &q0);
                    for &fare_cap in &grid.max_fares {
                        let p = Params {
                            max_fare_rs: fare_cap,
                            ..p0
                        };
                        let rec = match conns.infeasibility(fare_cap) {
                            Some(e) => TripRecord::blank(pair, &p, optimile, max_t, e.code()),
                            None => {
                                let k = sorted_fares.partition_point(|&f| f < fare_cap);
                                let q = p.query(pair.origin, pair.destination, optimile, max_t);
                                record_ok(planner, pair, &p, &q, &conns.items, &prefix[k - 1], k, weights)
                            }
                        };
                        slots[slot_of(ci)] = Some(rec);
                        ci += 1;
                    }
                }
            }
        }
    }
    slots.into_iter().map(|r| r.expect("every slot filled")).collect()
}

fn prefixes(
    planner: &Planner<'_>,
    items: &[Connection<'_>],
    order: &[usize],
    e_vals: &[Result<f64, MetricsError>],
    query: &Query,
) -> Vec<Prefix> {
    let mut out: Vec<Prefix> = Vec::with_capacity(order.len());
    for (pos, &i) in order.iter().enumerate() {
        let c = &items[i];
        let cv = convenience_of(
            c.total_distance_km(),
            c.cost(query.w_lm, query.w_pt, query.transfer_penalty_min),
        );
        let ev = &e_vals[pos];
        let mut p = match out.last() {
            Some(prev) => *prev,
            None => Prefix {
                best: i,
                c_lo: f64::INFINITY,
                c_hi: f64::NEG_INFINITY,
                e_lo: f64::INFINITY,
                e_hi: f64::NEG_INFINITY,
                error: None,
            },
        };
        if planner
            .connection_key(c, query)
            .total_cmp(&planner.connection_key(&items[p.best], query))
            .is_lt()
        {
            p.best = i;
        }
        match (&cv, ev) {
            (Ok(cv), Ok(ev)) => {
                p.c_lo = p.c_lo.min(*cv);
                p.c_hi = p.c_hi.max(*cv);
                p.e_lo = p.e_lo.min(*ev);
                p.e_hi = p.e_hi.max(*ev);
            }
            (Err(e), _) | (_, Err(e)) => {
                p.error.get_or_insert(metrics_code(e));
            }
        }
        out.push(p);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn record_ok(
    planner: &Planner<'_>,
    pair: &OdPair,
    p: &Params,
    q: &Query,
    items: &[Connection<'_>],
    prefix: &Prefix,
    feasible: usize,
    weights: &EfficiencyWeights,
) -> TripRecord {
    let max_t = q.max_transfers;
    if let Some(code) = prefix.error {
        return TripRecord::blank(pair, p, q.optimile_only, max_t, code);
    }
    let plan = planner.to_plan(&items[prefix.best], q);
    let mut score = PathScore {
        convenience: convenience_of(plan.total_distance_km, plan.cost).expect("checked in prefix"),
        cost_effectiveness: cost_effectiveness_of(plan.total_distance_km, plan.fare.total_rs as f64)
            .expect("checked in prefix"),
        c_norm: 0.0,
        e_norm: 0.0,
        lambda: 0.0,
    };
    score.c_norm = normalize_value(score.convenience, prefix.c_lo, prefix.c_hi);
    score.e_norm = normalize_value(score.cost_effectiveness, prefix.e_lo, prefix.e_hi);
    score.lambda = efficiency(&score, weights).expect("weights validated");
    TripRecord {
        entry_stop: Some(plan.entry_stop.clone()),
        exit_stop: Some(plan.exit_stop.clone()),
        transfers: Some(plan.transfers),
        fare_rs: Some(plan.fare.total_rs),
        pt_fare_rs: Some(plan.fare.pt_rs),
        lm_fare_rs: Some(plan.fare.lm_rs()),
        fare_per_km: Some(plan.fare_per_km()),
        travel_time_min: Some(plan.travel_time_min),
        total_distance_km: Some(plan.total_distance_km),
        cost: Some(plan.cost),
        feasible_plans: Some(feasible),
        convenience: Some(score.convenience),
        cost_effectiveness: Some(score.cost_effectiveness),
        c_norm: Some(score.c_norm),
        e_norm: Some(score.e_norm),
        lambda: Some(score.lambda),
        ..TripRecord::blank(pair, p, q.optimile_only, max_t, STATUS_OK)
    }
}

/// Header plus one row per record.
pub fn write_trip_records<W: std::io::Write>(records: &[TripRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(TRIP_COLUMNS)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trip_records<R: std::io::Read>(input: R) -> Result<Vec<TripRecord>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub const TRIP_COLUMNS: [&str; 29] = [
    "pair_id",
    "origin_lat",
    "origin_lon",
    "dest_lat",
    "dest_lon",
    "max_fare_rs",
    "w_lm",
    "w_pt",
    "lm_range_km",
    "transfer_penalty_min",
    "max_transfers",
    "optimile",
    "status",
    "entry_stop",
    "exit_stop",
    "transfers",
    "fare_rs",
    "pt_fare_rs",
    "lm_fare_rs",
    "fare_per_km",
    "travel_time_min",
    "total_distance_km",
    "cost",
    "feasible_plans",
    "convenience",
    "cost_effectiveness",
    "c_norm",
    "e_norm",
    "lambda",
];

/// Location and spread of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub median: f64,
    /// median absolute deviation from the median
    pub mad: f64,
    /// population standard deviation
    pub std_dev: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Option<Spread> {
        let median = median(values)?;
        let dev: Vec<f64> = values.iter().map(|v| (v - median).abs()).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        Some(Spread {
            median,
            mad: median_of(dev),
            std_dev: var.sqrt(),
        })
    }
}

/// Middle value, or the mean of the two middle values.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(median_of(values.to_vec()))
    }
}

fn median_of(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub fare_rs: Spread,
    pub distance_km: Spread,
    pub mean_lambda: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyTally {
    /// pairs where the direct-only plan scores strictly higher
    pub optimile_higher: usize,
    pub equal: usize,
    pub unrestricted_higher: usize,
}

/// Paired comparison of direct-only and unrestricted plans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub comparable_pairs: usize,
    pub optimile: ModeSummary,
    pub unrestricted: ModeSummary,
    /// optimile median fare over unrestricted median fare
    pub fare_ratio: f64,
    pub distance_ratio: f64,
    pub efficiency: EfficiencyTally,
}

/// Compares records of the same pair and parameters; only combinations
/// where both modes succeeded enter the medians.
pub fn summarize_fare_distance(records: &[TripRecord]) -> Result<ExperimentSummary, ExperimentError> {
    use std::collections::BTreeMap;
    type Key = (usize, Rupees, u64, u64, u64);
    let key = |r: &TripRecord| -> Key {
        (
            r.pair_id,
            r.max_fare_rs,
            r.w_lm.to_bits(),
            r.lm_range_km.to_bits(),
            r.transfer_penalty_min.to_bits(),
        )
    };
    let mut by_key: BTreeMap<Key, [Option<&TripRecord>; 2]> = BTreeMap::new();
    let (mut fail_opt, mut fail_unr) = (0, 0);
    for r in records {
        if !r.is_ok() {
            if r.optimile {
                fail_opt += 1;
            } else {
                fail_unr += 1;
            }
            continue;
        }
        by_key.entry(key(r)).or_default()[r.optimile as usize] = Some(r);
    }
    let both: Vec<(&TripRecord, &TripRecord)> = by_key.values().filter_map(|[u, o]| Some(((*u)?, (*o)?))).collect();
    if both.is_empty() {
        return Err(ExperimentError::NoComparablePairs);
    }
    let optimile = mode_summary(both.iter().map(|p| p.1), fail_opt);
    let unrestricted = mode_summary(both.iter().map(|p| p.0), fail_unr);
    let mut tally = EfficiencyTally {
        optimile_higher: 0,
        equal: 0,
        unrestricted_higher: 0,
    };
    for (u, o) in &both {
        match o.lambda.partial_cmp(&u.lambda) {
            Some(std::cmp::Ordering::Greater) => tally.optimile_higher += 1,
            Some(std::cmp::Ordering::Less) => tally.unrestricted_higher += 1,
            _ => tally.equal += 1,
        }
    }
    Ok(ExperimentSummary {
        comparable_pairs: both.len(),
        fare_ratio: optimile.fare_rs.median / unrestricted.fare_rs.median,
        distance_ratio: optimile.distance_km.median / unrestricted.distance_km.median,
        optimile,
        unrestricted,
        efficiency: tally,
    })
}

fn mode_summary<'a>(records: impl Iterator<Item = &'a TripRecord>, failures: usize) -> ModeSummary {
    let (mut fares, mut dists, mut lam) = (Vec::new(), Vec::new(), 0.0);
    for r in records {
        fares.push(r.fare_rs.unwrap_or(0) as f64);
        dists.push(r.total_distance_km.unwrap_or(0.0));
        lam += r.lambda.unwrap_or(0.0);
    }
    ModeSummary {
        mean_lambda: lam / fares.len() as f64,
        fare_rs: Spread::of(&fares).expect("non-empty"),
        distance_km: Spread::of(&dists).expect("non-empty"),
        failures,
    }
}

/// Reports per valid box plus the boxes skipped as degenerate.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment2Output {
    pub reports: Vec<CoverageReport>,
    pub skipped: Vec<(String, CoverageError)>,
}

/// For each box and radius: network coverage, then direct-reachability
/// coverage. All boxes and radii share one sample seed.
pub fn run_experiment2(
    graph: &BipartiteGraph,
    bboxes: &[BoundingBox],
    radii_km: &[f64],
    n_samples: usize,
    seed: u64,
    cell_size_m: f64,
) -> Result<Experiment2Output, ExperimentError> {
    let mut out = Experiment2Output {
        reports: Vec::new(),
        skipped: Vec::new(),
    };
    for b in bboxes {
        if let Err(e) = b.validate() {
            out.skipped.push((b.label.clone(), e));
            continue;
        }
        for &r in radii_km {
            out.reports.push(ptn_coverage(graph.network(), b, r, cell_size_m)?);
            out.reports
                .push(optimile_coverage(graph, b, r, n_samples, seed, cell_size_m)?);
        }
    }
    Ok(out)
}
