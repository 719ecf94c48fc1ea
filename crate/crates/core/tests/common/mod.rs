//! Random networks and brute-force reference implementations shared by the
//! integration tests. Nothing here calls into the library's search, fare or
//! cost code; only the data types are shared.
#![allow(dead_code)]

use std::sync::Arc;

use lastmile::bipartite::{BipartiteGraph, ConnectionOption, SearchOptions};
use lastmile::network::{GeoPoint, PtMode, RouteRecord, Speeds, Stop, TransitNetwork};
use lastmile::planner::{PlanError, Query, Side};
use rand::seq::SliceRandom;
use rand::Rng;

pub const CENTER: GeoPoint = GeoPoint { lat: 28.6, lon: 77.2 };
/// Half-width of the stop box, degrees (about 4.4 km north-south).
pub const HALF_DEG: f64 = 0.04;

pub fn random_mode<R: Rng>(rng: &mut R) -> PtMode {
    if rng.random_bool(0.5) {
        PtMode::Bus
    } else {
        PtMode::Metro
    }
}

/// At most 25 stops and 6 routes; every route visits distinct stops and has
/// integer leg times between 1 and 10 minutes.
pub fn random_network<R: Rng>(rng: &mut R) -> TransitNetwork {
    let n = rng.random_range(4..=25);
    let stops: Vec<Stop> = (0..n)
        .map(|i| Stop {
            id: format!("S{i:02}"),
            name: format!("Stop {i}"),
            location: GeoPoint {
                lat: CENTER.lat + rng.random_range(-HALF_DEG..HALF_DEG),
                lon: CENTER.lon + rng.random_range(-HALF_DEG..HALF_DEG),
            },
            mode: random_mode(rng),
        })
        .collect();
    let n_routes = rng.random_range(1..=6);
    let mut ids: Vec<usize> = (0..n).collect();
    let routes = (0..n_routes)
        .map(|r| {
            ids.shuffle(rng);
            let len = rng.random_range(2..=n.min(8));
            let seq: Vec<String> = ids[..len].iter().map(|&i| stops[i].id.clone()).collect();
            let times = (1..len).map(|_| rng.random_range(1..=10) as f64).collect();
            RouteRecord {
                id: format!("R{r}"),
                mode: random_mode(rng),
                stops: seq,
                leg_times_min: Some(times),
            }
        })
        .collect();
    TransitNetwork::new(stops, routes, &Speeds::default()).expect("generated network is valid")
}

pub fn random_graph<R: Rng>(rng: &mut R) -> BipartiteGraph {
    BipartiteGraph::build(Arc::new(random_network(rng)), SearchOptions::default())
}

pub fn random_point<R: Rng>(rng: &mut R) -> GeoPoint {
    let h = HALF_DEG * 1.25;
    GeoPoint {
        lat: CENTER.lat + rng.random_range(-h..h),
        lon: CENTER.lon + rng.random_range(-h..h),
    }
}

/// A uniform point, or half the time a point within about 1 km of a stop.
pub fn random_endpoint<R: Rng>(rng: &mut R, net: &TransitNetwork) -> GeoPoint {
    if rng.random_bool(0.5) {
        let s = net.stop(rng.random_range(0..net.stop_count())).location;
        GeoPoint {
            lat: s.lat + rng.random_range(-0.008..0.008),
            lon: s.lon + rng.random_range(-0.008..0.008),
        }
    } else {
        random_point(rng)
    }
}

pub fn random_query<R: Rng>(rng: &mut R, net: &TransitNetwork) -> Query {
    let (o, d) = (random_endpoint(rng, net), random_endpoint(rng, net));
    let mut q = Query::new(o, d).with_lm_weight(rng.random_range(0.01..=0.5));
    q.max_fare_rs = rng.random_range(30..=200);
    q.lm_range_km = [1.0, 2.0, 3.0, 5.0][rng.random_range(0..4)];
    q.transfer_penalty_min = [0.0, 5.0][rng.random_range(0..2)];
    q.optimile_only = rng.random_bool(0.5);
    q
}

// ---- label oracle ----------------------------------------------------------

/// Best `(time, distance)` over journeys from `origin` to each stop using at
/// most `k` rides, for `k = 1..=max_rides`, by plain relaxation over every
/// (route, board position, alight position) triple.
pub fn exhaustive_labels(net: &TransitNetwork, origin: usize, max_rides: usize) -> Vec<Vec<Option<(f64, f64)>>> {
    let n = net.stop_count();
    let mut prev: Vec<Option<(f64, f64)>> = vec![None; n];
    prev[origin] = Some((0.0, 0.0));
    let mut out = Vec::with_capacity(max_rides);
    for _ in 0..max_rides {
        let mut cur = prev.clone();
        for route in net.routes() {
            let seq = route.stop_indices();
            for i in 0..seq.len() {
                let Some((t0, d0)) = prev[seq[i]] else { continue };
                let (mut t, mut d) = (t0, d0);
                let legs = route.leg_times.iter().zip(route.leg_distances_km());
                for ((&lt, &ld), &s) in legs.zip(&seq[1..]).skip(i) {
                    t += lt;
                    d += ld;
                    let better = match cur[s] {
                        None => true,
                        Some((bt, bd)) => t < bt || (t == bt && d < bd),
                    };
                    if better {
                        cur[s] = Some((t, d));
                    }
                }
            }
        }
        out.push(cur.clone());
        prev = cur;
    }
    // the origin itself is never a destination
    for round in &mut out {
        round[origin] = None;
    }
    out
}

/// Pareto `(transfers, time, distance)` triples from exhaustive labels.
pub fn exhaustive_pareto(labels: &[Vec<Option<(f64, f64)>>], dest: usize) -> Vec<(u32, f64, f64)> {
    let mut front = Vec::new();
    let mut best = f64::INFINITY;
    for (k, round) in labels.iter().enumerate() {
        if let Some((t, d)) = round[dest] {
            if t < best {
                best = t;
                front.push((k as u32, t, d));
            }
        }
    }
    front
}

/// Checks a stored option's segments against the network: chained stops,
/// correct endpoints, and per-segment sums.
pub fn check_segments(net: &TransitNetwork, from: usize, to: usize, o: &ConnectionOption) -> Result<(), String> {
    if o.segments.len() as u32 != o.transfers + 1 {
        return Err(format!("{} segments for {} transfers", o.segments.len(), o.transfers));
    }
    let mut at = from;
    let (mut t, mut d) = (0.0, 0.0);
    for s in &o.segments {
        let r = &net.routes()[s.route as usize];
        let (b, a) = (s.board_pos as usize, s.alight_pos as usize);
        if !(b < a && a < r.stop_indices().len()) {
            return Err(format!("bad positions {b}..{a} on {}", r.id));
        }
        if r.stop_indices()[b] != at {
            return Err(format!(
                "segment boards at {} but the trip is at {}",
                r.stop_indices()[b],
                at
            ));
        }
        if r.mode != s.mode {
            return Err("segment mode differs from route mode".into());
        }
        let st: f64 = r.leg_times[b..a].iter().sum();
        let sd: f64 = r.leg_distances_km()[b..a].iter().sum();
        if (st - s.travel_time_min).abs() > 1e-9 || (sd - s.distance_km).abs() > 1e-9 {
            return Err("segment sums disagree with the route".into());
        }
        t += st;
        d += sd;
        at = r.stop_indices()[a];
    }
    if at != to {
        return Err(format!("trip ends at {at}, expected {to}"));
    }
    if (t - o.travel_time_min).abs() > 1e-9 || (d - o.ride_distance_km).abs() > 1e-9 {
        return Err("option totals disagree with its segments".into());
    }
    Ok(())
}

/// Compares every edge of `graph` with the exhaustive labels. Returns the
/// number of edges checked.
pub fn check_graph_against_labels(graph: &BipartiteGraph) -> Result<usize, String> {
    let net = graph.network();
    let max_rides = graph.max_transfers() as usize + 1;
    let mut checked = 0;
    for u in 0..net.stop_count() {
        let labels = exhaustive_labels(net, u, max_rides);
        for v in 0..net.stop_count() {
            let want = exhaustive_pareto(&labels, v);
            let got: Vec<&ConnectionOption> = graph.edge(u, v).map(|e| e.options.iter().collect()).unwrap_or_default();
            if want.len() != got.len() {
                return Err(format!(
                    "{}->{}: expected {} options, got {}",
                    net.stop(u).id,
                    net.stop(v).id,
                    want.len(),
                    got.len()
                ));
            }
            for ((k, t, d), o) in want.iter().zip(&got) {
                if o.transfers != *k || o.travel_time_min != *t || (o.ride_distance_km - d).abs() > 1e-9 {
                    return Err(format!(
                        "{}->{}: expected ({k}, {t}, {d}), got ({}, {}, {})",
                        net.stop(u).id,
                        net.stop(v).id,
                        o.transfers,
                        o.travel_time_min,
                        o.ride_distance_km
                    ));
                }
                check_segments(net, u, v, o).map_err(|e| format!("{}->{}: {e}", net.stop(u).id, net.stop(v).id))?;
            }
            checked += usize::from(!want.is_empty());
        }
    }
    Ok(checked)
}

// ---- solver oracle ---------------------------------------------------------

pub fn ref_haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * 6371.0 * h.sqrt().min(1.0).asin()
}

/// Minutes and Rupees of a first/last-mile leg under the default tariff.
pub fn ref_lm(d: f64) -> (f64, u32) {
    if d <= 0.5 {
        (d / 4.5 * 60.0, 0)
    } else {
        let extra = if d <= 1.0 { 0 } else { (d - 1.0).ceil() as u32 };
        (d / 20.0 * 60.0, 25 + 10 * extra)
    }
}

pub fn ref_slab(mode: PtMode, d: f64) -> u32 {
    let table: &[(f64, u32)] = match mode {
        PtMode::Bus => &[(4.0, 5), (8.0, 10), (12.0, 15), (f64::INFINITY, 25)],
        PtMode::Metro => &[
            (2.0, 10),
            (5.0, 20),
            (12.0, 30),
            (21.0, 40),
            (32.0, 50),
            (f64::INFINITY, 60),
        ],
    };
    table.iter().find(|(up, _)| d <= *up).map(|&(_, f)| f).unwrap()
}

/// One lookup per mode on that mode's total ride distance.
pub fn ref_pt_fare(o: &ConnectionOption) -> u32 {
    let mut km = [0.0f64; 2];
    let mut used = [false; 2];
    for s in &o.segments {
        let i = usize::from(s.mode == PtMode::Metro);
        km[i] += s.distance_km;
        used[i] = true;
    }
    let mut f = 0;
    if used[0] {
        f += ref_slab(PtMode::Bus, km[0]);
    }
    if used[1] {
        f += ref_slab(PtMode::Metro, km[1]);
    }
    f
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefPlan {
    pub entry: String,
    pub exit: String,
    pub transfers: u32,
    pub cost: f64,
    pub fare: u32,
    pub distance_km: f64,
}

/// Enumerates every (entry, exit, option) triple, keeps those strictly
/// under the cap, and returns them sorted by the planner's tie-break order,
/// or the reason none exist.
pub fn ref_solve_all(graph: &BipartiteGraph, q: &Query) -> Result<Vec<RefPlan>, PlanError> {
    let net = graph.network();
    let near = |p: GeoPoint| -> Vec<(usize, f64)> {
        (0..net.stop_count())
            .map(|i| (i, ref_haversine_km(p, net.stop(i).location)))
            .filter(|&(_, d)| d <= q.lm_range_km)
            .collect()
    };
    let (entries, exits) = (near(q.origin), near(q.destination));
    if entries.is_empty() {
        return Err(PlanError::NoCandidateStops(Side::Entry));
    }
    if exits.is_empty() {
        return Err(PlanError::NoCandidateStops(Side::Exit));
    }
    let max_t = if q.optimile_only { 0 } else { q.max_transfers };
    let mut any = false;
    let mut plans = Vec::new();
    for &(a, da) in &entries {
        for &(b, db) in &exits {
            let Some(edge) = graph.edge(a, b) else { continue };
            for o in edge.options.iter().filter(|o| o.transfers <= max_t) {
                any = true;
                let ((t1, f1), (t2, f2)) = (ref_lm(da), ref_lm(db));
                let fare = f1 + f2 + ref_pt_fare(o);
                if fare >= q.max_fare_rs {
                    continue;
                }
                let cost =
                    q.w_lm * (t1 + t2) + q.w_pt * (o.travel_time_min + q.transfer_penalty_min * o.transfers as f64);
                plans.push(RefPlan {
                    entry: net.stop(a).id.clone(),
                    exit: net.stop(b).id.clone(),
                    transfers: o.transfers,
                    cost,
                    fare,
                    distance_km: da + o.ride_distance_km + db,
                });
            }
        }
    }
    if !any {
        return Err(PlanError::NoConnection);
    }
    if plans.is_empty() {
        return Err(PlanError::FareInfeasible);
    }
    plans.sort_by(|x, y| {
        x.cost
            .total_cmp(&y.cost)
            .then(x.fare.cmp(&y.fare))
            .then(x.distance_km.total_cmp(&y.distance_km))
            .then_with(|| x.entry.cmp(&y.entry))
            .then_with(|| x.exit.cmp(&y.exit))
            .then(x.transfers.cmp(&y.transfers))
    });
    Ok(plans)
}

/// Outcome of comparing one library answer with the reference.
#[derive(Debug, Default, Clone, Copy)]
pub struct OracleTally {
    pub solved: usize,
    pub infeasible: usize,
    /// Library pick differs from the reference pick only by a sub-1e-9 cost
    /// tie.
    pub near_ties: usize,
}

pub fn compare_with_reference(
    graph: &BipartiteGraph,
    q: &Query,
    got: &Result<lastmile::Plan, PlanError>,
    tally: &mut OracleTally,
) -> Result<(), String> {
    let want = ref_solve_all(graph, q);
    match (want, got) {
        (Err(w), Err(g)) => {
            if &w != g {
                return Err(format!("expected {w:?}, got {g:?}"));
            }
            tally.infeasible += 1;
        }
        (Ok(all), Ok(p)) => {
            let best = &all[0];
            let same = p.entry_stop == best.entry && p.exit_stop == best.exit && p.transfers == best.transfers;
            if !same {
                // accept only a floating-point tie on cost with identical fare
                let alt = all
                    .iter()
                    .find(|r| r.entry == p.entry_stop && r.exit == p.exit_stop && r.transfers == p.transfers);
                match alt {
                    Some(r) if (r.cost - best.cost).abs() <= 1e-9 && r.fare == best.fare => tally.near_ties += 1,
                    _ => {
                        return Err(format!(
                            "expected {best:?}, got {} -> {} ({} transfers, cost {})",
                            p.entry_stop, p.exit_stop, p.transfers, p.cost
                        ))
                    }
                }
            } else {
                if p.fare.total_rs != best.fare {
                    return Err(format!("fare {} vs reference {}", p.fare.total_rs, best.fare));
                }
                if (p.cost - best.cost).abs() > 1e-9 || (p.total_distance_km - best.distance_km).abs() > 1e-9 {
                    return Err(format!(
                        "cost/distance ({}, {}) vs reference ({}, {})",
                        p.cost, p.total_distance_km, best.cost, best.distance_km
                    ));
                }
            }
            if p.fare.total_rs >= q.max_fare_rs {
                return Err("plan violates the fare cap".into());
            }
            tally.solved += 1;
        }
        (w, g) => {
            return Err(format!(
                "expected {:?}, got {:?}",
                w.map(|v| v[0].clone()),
                g.as_ref().map(|p| (&p.entry_stop, &p.exit_stop))
            ))
        }
    }
    Ok(())
}
