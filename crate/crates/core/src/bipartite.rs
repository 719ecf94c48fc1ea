//! Stop-to-stop connection table.
//!
//! The transit network is flattened into a bipartite graph: every ordered
//! pair of stops `(u, v)` that can be travelled within `K` transfers gets a
//! single edge, labelled with the Pareto set of `(travel time, transfers)`
//! options. Trip planning then only ever needs paths of depth one.
//!
//! Labels come from a round-based route scan per origin (round `t` allows
//! `t + 1` boardings). Within a round, ties on travel time are broken by the
//! shorter ride distance.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::network::{PtMode, TransitNetwork};

/// Default maximum number of transfers precomputed per pair.
pub const DEFAULT_MAX_TRANSFERS: u32 = 2;

const SNAPSHOT_FORMAT: &str = "lastmile-bipartite/1";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unknown stop {0:?}")]
    UnknownStop(String),
    #[error("network has {0} stops; at least two are needed")]
    DegenerateNetwork(usize),
    #[error("graph snapshot does not match the network: {0}")]
    SnapshotMismatch(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub max_transfers: u32,
    /// Minutes added to the travel time for every transfer.
    pub transfer_dwell_min: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_transfers: DEFAULT_MAX_TRANSFERS,
            transfer_dwell_min: 0.0,
        }
    }
}

impl SearchOptions {
    pub fn with_max_transfers(max_transfers: u32) -> Self {
        SearchOptions {
            max_transfers,
            ..Default::default()
        }
    }
}

/// One vehicle ride: board `route` at position `board_pos` of its stop
/// sequence and alight at `alight_pos`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RideSegment {
    pub route: u32,
    pub board_pos: u32,
    pub alight_pos: u32,
    pub mode: PtMode,
    pub distance_km: f64,
    pub travel_time_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionOption {
    /// In-vehicle minutes plus transfer dwell.
    pub travel_time_min: f64,
    pub transfers: u32,
    pub ride_distance_km: f64,
    pub segments: Vec<RideSegment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectEdge {
    pub from: u32,
    pub to: u32,
    /// Ascending transfers, strictly descending travel time.
    pub options: Vec<ConnectionOption>,
}

impl DirectEdge {
    pub fn direct(&self) -> Option<&ConnectionOption> {
        self.options.first().filter(|o| o.transfers == 0)
    }
}

/// Best arrival at a stop plus the ride that produced it.
#[derive(Debug, Clone, Copy)]
struct Label {
    time: f64,
    dist: f64,
    route: u32,
    board_pos: u32,
    alight_pos: u32,
}

#[inline]
fn lex_less(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Runs the round-based route scan from `origin` (a stop index) and returns,
/// per stop index, the Pareto options reaching it. The origin's own entry is
/// always empty.
pub fn transfer_search_idx(
    network: &TransitNetwork,
    origin: usize,
    opts: &SearchOptions,
) -> Vec<Vec<ConnectionOption>> {
    let n = network.stop_count();
    let rounds = opts.max_transfers as usize + 1;
    let mut labels: Vec<Vec<Option<Label>>> = Vec::with_capacity(rounds);
    let mut marked: Vec<usize> = vec![origin];

    for round in 0..rounds {
        let mut cur: Vec<Option<Label>> = match labels.last() {
            Some(prev) => prev.clone(),
            None => vec![None; n],
        };
        // boarding value at stop s for this round
        let board_at = |s: usize| -> Option<(f64, f64)> {
            if round == 0 {
                (s == origin).then_some((0.0, 0.0))
            } else {
                labels[round - 1][s].map(|l| (l.time + opts.transfer_dwell_min, l.dist))
            }
        };

        // earliest marked position per route
        let mut start: Vec<Option<usize>> = vec![None; network.routes().len()];
        for &s in &marked {
            for &ri in network.routes_at(s) {
                let pos = network.routes()[ri]
                    .stop_indices()
                    .iter()
                    .position(|&x| x == s)
                    .expect("routes_by_stop is consistent");
                start[ri] = Some(start[ri].map_or(pos, |p: usize| p.min(pos)));
            }
        }

        let mut improved = vec![false; n];
        for (ri, first) in start.iter().enumerate() {
            let Some(first) = *first else { continue };
            let route = &network.routes()[ri];
            let seq = route.stop_indices();
            let mut carried: Option<((f64, f64), usize)> = None;
            for j in first..seq.len() {
                let s = seq[j];
                if let Some((val, board_pos)) = carried {
                    if s != origin && cur[s].is_none_or(|l| lex_less(val, (l.time, l.dist))) {
                        cur[s] = Some(Label {
                            time: val.0,
                            dist: val.1,
                            route: ri as u32,
                            board_pos: board_pos as u32,
                            alight_pos: j as u32,
                        });
                        improved[s] = true;
                    }
                }
                if let Some(b) = board_at(s) {
                    if carried.is_none_or(|(c, _)| lex_less(b, c)) {
                        carried = Some((b, j));
                    }
                }
                if let Some(((t, d), _)) = carried.as_mut() {
                    if j + 1 < seq.len() {
                        *t += route.leg_times[j];
                        *d += route.leg_distances_km()[j];
                    }
                }
            }
        }
        marked = (0..n).filter(|&s| improved[s]).collect();
        labels.push(cur);
        if marked.is_empty() {
            break;
        }
    }

    let mut out = vec![Vec::new(); n];
    for (v, slot) in out.iter_mut().enumerate() {
        if v == origin {
            continue;
        }
        let mut best: Option<f64> = None;
        for round in 0..labels.len() {
            let Some(l) = labels[round][v] else { continue };
            if best.is_some_and(|b| l.time >= b) {
                continue;
            }
            let segments = backtrack(network, &labels, round, v);
            best = Some(l.time);
            slot.push(ConnectionOption {
                travel_time_min: l.time,
                transfers: segments.len() as u32 - 1,
                ride_distance_km: l.dist,
                segments,
            });
        }
    }
    out
}

fn backtrack(
    network: &TransitNetwork,
    labels: &[Vec<Option<Label>>],
    mut round: usize,
    mut stop: usize,
) -> Vec<RideSegment> {
    let mut segs = Vec::new();
    loop {
        let label = labels[round][stop].expect("label on the backtrack chain");
        // inherited labels are equal to the previous round's; find the round
        // that set this one, since its ride boarded from the round before
        while round > 0 && labels[round - 1][stop].is_some_and(|p| p.time == label.time && p.dist == label.dist) {
            round -= 1;
        }
        let r = &network.routes()[label.route as usize];
        let (mut km, mut min) = (0.0, 0.0);
        for leg in label.board_pos as usize..label.alight_pos as usize {
            km += r.leg_distances_km()[leg];
            min += r.leg_times[leg];
        }
        segs.push(RideSegment {
            route: label.route,
            board_pos: label.board_pos,
            alight_pos: label.alight_pos,
            mode: r.mode,
            distance_km: km,
            travel_time_min: min,
        });
        if round == 0 {
            break;
        }
        stop = r.stop_indices()[label.board_pos as usize];
        round -= 1;
    }
    segs.reverse();
    segs
}

/// Pareto options from the stop with id `origin` to every stop.
pub fn transfer_search(
    network: &TransitNetwork,
    origin: &str,
    opts: &SearchOptions,
) -> Result<Vec<Vec<ConnectionOption>>, GraphError> {
    let o = network
        .stop_idx(origin)
        .ok_or_else(|| GraphError::UnknownStop(origin.to_string()))?;
    Ok(transfer_search_idx(network, o, opts))
}

/// The remodelled network: one labelled edge per connected ordered stop pair.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    network: Arc<TransitNetwork>,
    options: SearchOptions,
    edges: Vec<Vec<DirectEdge>>,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    format: String,
    options: SearchOptions,
    stop_ids: Vec<String>,
    edges: Vec<DirectEdge>,
}

impl BipartiteGraph {
    /// Builds every origin's table in parallel; the result does not depend on
    /// the thread schedule.
    pub fn build(network: Arc<TransitNetwork>, opts: SearchOptions) -> Self {
        let edges = (0..network.stop_count())
            .into_par_iter()
            .map(|o| {
                transfer_search_idx(&network, o, &opts)
                    .into_iter()
                    .enumerate()
                    .filter(|(_, options)| !options.is_empty())
                    .map(|(to, options)| DirectEdge {
                        from: o as u32,
                        to: to as u32,
                        options,
                    })
                    .collect()
            })
            .collect();
        BipartiteGraph {
            network,
            options: opts,
            edges,
        }
    }

    pub fn network(&self) -> &TransitNetwork {
        &self.network
    }

    pub fn network_arc(&self) -> &Arc<TransitNetwork> {
        &self.network
    }

    pub fn options(&self) -> &SearchOptions {
        &self.options
    }

    pub fn max_transfers(&self) -> u32 {
        self.options.max_transfers
    }

    /// Outgoing edges of a stop index, sorted by destination index.
    pub fn edges_from(&self, from: usize) -> &[DirectEdge] {
        &self.edges[from]
    }

    pub fn edge(&self, from: usize, to: usize) -> Option<&DirectEdge> {
        let list = &self.edges[from];
        list.binary_search_by_key(&(to as u32), |e| e.to).ok().map(|i| &list[i])
    }

    pub fn edge_by_id(&self, from: &str, to: &str) -> Option<&DirectEdge> {
        let (f, t) = (self.network.stop_idx(from)?, self.network.stop_idx(to)?);
        self.edge(f, t)
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    pub fn to_json_bytes(&self) -> Result<Vec<u8>, GraphError> {
        let snap = Snapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            options: self.options,
            stop_ids: self.network.stops().iter().map(|s| s.id.clone()).collect(),
            edges: self.edges.iter().flatten().cloned().collect(),
        };
        Ok(serde_json::to_vec(&snap)?)
    }

    pub fn from_json_slice(network: Arc<TransitNetwork>, bytes: &[u8]) -> Result<Self, GraphError> {
        let snap: Snapshot = serde_json::from_slice(bytes)?;
        if snap.format != SNAPSHOT_FORMAT {
            return Err(GraphError::SnapshotMismatch(format!("format {:?}", snap.format)));
        }
        let ids_match = snap.stop_ids.len() == network.stop_count()
            && snap.stop_ids.iter().zip(network.stops()).all(|(a, b)| *a == b.id);
        if !ids_match {
            return Err(GraphError::SnapshotMismatch("stop ids differ".into()));
        }
        let n = network.stop_count();
        let mut edges = vec![Vec::new(); n];
        for e in snap.edges {
            let (f, t) = (e.from as usize, e.to as usize);
            if f >= n || t >= n || f == t {
                return Err(GraphError::SnapshotMismatch(format!("bad edge {f}->{t}")));
            }
            edges[f].push(e);
        }
        for list in &edges {
            if list.windows(2).any(|w| w[0].to >= w[1].to) {
                return Err(GraphError::SnapshotMismatch("edges out of order".into()));
            }
        }
        Ok(BipartiteGraph {
            network,
            options: snap.options,
            edges,
        })
    }
}

/// Fraction of ordered stop pairs joined by a zero-transfer connection.
pub fn direct_reachability_ratio(graph: &BipartiteGraph) -> Result<f64, GraphError> {
    let n = graph.network().stop_count();
    if n < 2 {
        return Err(GraphError::DegenerateNetwork(n));
    }
    let direct = graph.edges.iter().flatten().filter(|e| e.direct().is_some()).count();
    Ok(direct as f64 / (n * (n - 1)) as f64)
}

/// Content hash of the network files plus search options.
pub fn cache_key(stops_bytes: &[u8], routes_bytes: &[u8], opts: &SearchOptions) -> String {
    let mut h = Sha256::new();
    for part in [stops_bytes, routes_bytes] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part);
    }
    h.update(opts.max_transfers.to_le_bytes());
    h.update(opts.transfer_dwell_min.to_bits().to_le_bytes());
    hex::encode(h.finalize())
}

/// Directory of serialized graphs keyed by [`cache_key`].
#[derive(Debug, Clone)]
pub struct GraphCache {
    dir: PathBuf,
}

impl GraphCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        GraphCache { dir: dir.into() }
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    /// Returns the graph and whether it came from the cache.
    pub fn load_or_build(
        &self,
        network: Arc<TransitNetwork>,
        stops_bytes: &[u8],
        routes_bytes: &[u8],
        opts: SearchOptions,
    ) -> Result<(BipartiteGraph, bool), GraphError> {
        let path = self.path_for(&cache_key(stops_bytes, routes_bytes, &opts));
        if path.exists() {
            let bytes = std::fs::read(&path)?;
            if let Ok(g) = BipartiteGraph::from_json_slice(network.clone(), &bytes) {
                return Ok((g, true));
            }
        }
        let g = BipartiteGraph::build(network, opts);
        write_atomic(&path, &g.to_json_bytes()?)?;
        Ok((g, false))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("json.tmp");
    let mut f = std::fs::File::create(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    std::fs::rename(tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{generate_grid_city, GeoPoint, RoutePlan, RouteRecord, Speeds, Stop};

    fn net(n_stops: usize, routes: &[(&str, &[usize], &[f64])]) -> TransitNetwork {
        let stops = (0..n_stops)
            .map(|i| Stop {
                id: format!("S{i}"),
                name: String::new(),
                location: GeoPoint {
                    lat: 28.6 + 0.01 * i as f64,
                    lon: 77.2,
                },
                mode: PtMode::Bus,
            })
            .collect();
        let routes = routes
            .iter()
            .map(|(id, seq, times)| RouteRecord {
                id: id.to_string(),
                mode: PtMode::Bus,
                stops: seq.iter().map(|i| format!("S{i}")).collect(),
                leg_times_min: Some(times.to_vec()),
            })
            .collect();
        TransitNetwork::new(stops, routes, &Speeds::default()).unwrap()
    }

    #[test]
    fn single_route_sums_legs() {
        // A=S0, B=S1, C=S2
        let n = Arc::new(net(3, &[("r", &[0, 1, 2], &[5.0, 7.0])]));
        let g = BipartiteGraph::build(n, SearchOptions::default());
        let e = g.edge_by_id("S0", "S2").unwrap();
        assert_eq!(e.options.len(), 1);
        assert_eq!(e.options[0].travel_time_min, 12.0);
        assert_eq!(e.options[0].transfers, 0);
        assert!(g.edge_by_id("S2", "S0").is_none());
    }

    #[test]
    fn interchange_needs_one_transfer() {
        // S0 -> X(S2) on r1, X -> S1 on r2
        let n = Arc::new(net(3, &[("r1", &[0, 2], &[4.0]), ("r2", &[2, 1], &[6.0])]));
        let g0 = BipartiteGraph::build(n.clone(), SearchOptions::with_max_transfers(0));
        assert!(g0.edge_by_id("S0", "S1").is_none());
        let g1 = BipartiteGraph::build(n, SearchOptions::with_max_transfers(1));
        let e = g1.edge_by_id("S0", "S1").unwrap();
        assert_eq!(e.options.len(), 1);
        assert_eq!(e.options[0].transfers, 1);
        assert_eq!(e.options[0].travel_time_min, 10.0);
        assert_eq!(e.options[0].segments.len(), 2);
    }

    #[test]
    fn search_from_unserved_origin() {
        let n = net(3, &[("r", &[1, 2], &[3.0])]);
        let out = transfer_search(&n, "S0", &SearchOptions::default()).unwrap();
        assert!(out.iter().all(Vec::is_empty));
        assert!(matches!(
            transfer_search(&n, "nope", &SearchOptions::default()),
            Err(GraphError::UnknownStop(_))
        ));
    }

    #[test]
    fn prefix_sums_on_a_line() {
        let n = net(5, &[("r", &[0, 1, 2, 3, 4], &[2.0, 3.0, 4.0, 5.0])]);
        let out = transfer_search(&n, "S0", &SearchOptions::default()).unwrap();
        let times: Vec<f64> = out[1..].iter().map(|o| o[0].travel_time_min).collect();
        assert_eq!(times, vec![2.0, 5.0, 9.0, 14.0]);
    }

    #[test]
    fn diamond_keeps_faster_transfer_path() {
        // S0 -> S1 -> S3 totals 20, S0 -> S2 -> S3 totals 18
        let n = net(
            4,
            &[
                ("a1", &[0, 1], &[10.0]),
                ("a2", &[1, 3], &[10.0]),
                ("b1", &[0, 2], &[9.0]),
                ("b2", &[2, 3], &[9.0]),
            ],
        );
        let out = transfer_search(&n, "S0", &SearchOptions::default()).unwrap();
        assert_eq!(out[3].len(), 1);
        assert_eq!(out[3][0].travel_time_min, 18.0);
        assert_eq!(out[3][0].transfers, 1);
    }

    #[test]
    fn pareto_keeps_slow_direct_and_fast_transfer() {
        let n = net(3, &[("slow", &[0, 1, 2], &[20.0, 20.0]), ("f1", &[0, 1], &[5.0])]);
        let out = transfer_search(&n, "S0", &SearchOptions::default()).unwrap();
        let opts: Vec<(f64, u32)> = out[2].iter().map(|o| (o.travel_time_min, o.transfers)).collect();
        assert_eq!(opts, vec![(40.0, 0), (25.0, 1)]);
    }

    #[test]
    fn dwell_is_added_per_transfer() {
        let n = net(3, &[("r1", &[0, 1], &[4.0]), ("r2", &[1, 2], &[6.0])]);
        let opts = SearchOptions {
            max_transfers: 2,
            transfer_dwell_min: 3.0,
        };
        let out = transfer_search(&n, "S0", &opts).unwrap();
        assert_eq!(out[2][0].travel_time_min, 13.0);
    }

    #[test]
    fn loop_route_reboarding() {
        // S0 S1 S2 S0 S3: S3 reachable from S1 via the loop
        let n = net(4, &[("loop", &[0, 1, 2, 0, 3], &[1.0, 1.0, 1.0, 1.0])]);
        let out = transfer_search(&n, "S1", &SearchOptions::default()).unwrap();
        assert_eq!(out[3][0].travel_time_min, 3.0);
        assert!(out[1].is_empty());
        let out = transfer_search(&n, "S0", &SearchOptions::default()).unwrap();
        // boarding at the second S0 is faster
        assert_eq!(out[3][0].travel_time_min, 1.0);
        assert_eq!(out[3][0].segments[0].board_pos, 3);
    }

    #[test]
    fn rows_only_grid_has_no_cross_row_direct_edge() {
        let g = generate_grid_city(3, 3, 1.0, RoutePlan::RowsOnly, 1).unwrap();
        let g = BipartiteGraph::build(Arc::new(g), SearchOptions::with_max_transfers(0));
        for e in g.edges.iter().flatten() {
            let (a, b) = (
                &g.network().stop(e.from as usize).id,
                &g.network().stop(e.to as usize).id,
            );
            assert_eq!(a[..4], b[..4], "{a} -> {b}");
        }
    }

    #[test]
    fn reachability_ratios() {
        // one-way route over all stops: half of the ordered pairs
        let n = Arc::new(net(6, &[("r", &[0, 1, 2, 3, 4, 5], &[1.0; 5])]));
        let g = BipartiteGraph::build(n, SearchOptions::default());
        assert_eq!(direct_reachability_ratio(&g).unwrap(), 0.5);

        let empty = Arc::new(net(4, &[]));
        let g = BipartiteGraph::build(empty, SearchOptions::default());
        assert_eq!(direct_reachability_ratio(&g).unwrap(), 0.0);

        let one = Arc::new(net(1, &[]));
        let g = BipartiteGraph::build(one, SearchOptions::default());
        assert!(matches!(
            direct_reachability_ratio(&g),
            Err(GraphError::DegenerateNetwork(1))
        ));
    }

    #[test]
    fn rows_only_grid_ratio_by_enumeration() {
        let net = generate_grid_city(3, 3, 1.0, RoutePlan::RowsOnly, 9).unwrap();
        // count ordered pairs (u, v) where some route visits u before v
        let n = net.stop_count();
        let mut count = 0;
        for u in 0..n {
            for v in 0..n {
                if u != v
                    && net.routes().iter().any(|r| {
                        let s = r.stop_indices();
                        let (pu, pv) = (s.iter().position(|&x| x == u), s.iter().rposition(|&x| x == v));
                        matches!((pu, pv), (Some(a), Some(b)) if a < b)
                    })
                {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 9);
        let g = BipartiteGraph::build(Arc::new(net), SearchOptions::default());
        assert_eq!(direct_reachability_ratio(&g).unwrap(), count as f64 / 72.0);
        assert_eq!(direct_reachability_ratio(&g).unwrap(), 0.125);
    }

    #[test]
    fn snapshot_round_trip_and_cache() {
        let net = Arc::new(generate_grid_city(4, 4, 1.0, RoutePlan::RowsAndCols, 2).unwrap());
        let (mut s, mut r) = (Vec::new(), Vec::new());
        net.save(&mut s, &mut r).unwrap();
        let fresh = BipartiteGraph::build(net.clone(), SearchOptions::default());
        let bytes = fresh.to_json_bytes().unwrap();

        let dir = tempfile::tempdir().unwrap();
        let cache = GraphCache::new(dir.path());
        let (g1, hit1) = cache
            .load_or_build(net.clone(), &s, &r, SearchOptions::default())
            .unwrap();
        let (g2, hit2) = cache
            .load_or_build(net.clone(), &s, &r, SearchOptions::default())
            .unwrap();
        assert!(!hit1);
        assert!(hit2);
        assert_eq!(g1.to_json_bytes().unwrap(), bytes);
        assert_eq!(g2.to_json_bytes().unwrap(), bytes);

        let other = cache_key(&s, &r, &SearchOptions::with_max_transfers(1));
        assert_ne!(other, cache_key(&s, &r, &SearchOptions::default()));

        let wrong = Arc::new(generate_grid_city(3, 3, 1.0, RoutePlan::RowsAndCols, 2).unwrap());
        assert!(BipartiteGraph::from_json_slice(wrong, &bytes).is_err());
    }
}
