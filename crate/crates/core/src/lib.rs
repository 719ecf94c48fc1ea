//! First/last-mile aware transit trip planning.
//!
//! A transit network of stops and routes is remodelled as a graph with one
//! edge per ordered stop pair that can be travelled within a bounded number of
//! transfers ([`bipartite`]). A trip query then only has to pick an entry stop
//! near the origin and an exit stop near the destination: the planner
//! ([`planner`]) minimizes a weighted travel-time cost over those pairs under
//! a fare cap, with fares from [`fare`]. Plans are compared with the
//! efficiency scores in [`metrics`], and [`coverage`] measures how much of an
//! area the network and its direct connections reach. [`experiments`] runs
//! seeded sweeps over both; [`service`] exposes the planner over HTTP.
//!
//! Runnable examples, one per capability, live in `examples/`:
//!
//! | example | shows |
//! |---|---|
//! | `load_network` | reading stops/routes, grid cities, route lookups |
//! | `bipartite_reachability` | connection options, Pareto sets, graph cache |
//! | `plan_trip` | solving a query, ranked alternatives, failure reasons |
//! | `fares` | first/last-mile and slab fares, TOML config |
//! | `efficiency_scores` | convenience, cost-effectiveness and efficiency |
//! | `coverage` | grid and Monte Carlo coverage, direct-reach coverage |
//! | `experiment_sweep` | parameter sweep, CSV export, paired summary |
//! | `http_service` | the HTTP API in-process |

pub mod bipartite;
pub mod coverage;
pub mod experiments;
pub mod fare;
pub mod metrics;
pub mod network;
pub mod planner;
pub mod service;

pub use bipartite::{BipartiteGraph, ConnectionOption, DirectEdge, SearchOptions};
pub use coverage::{BoundingBox, CoverageReport};
pub use fare::{FareBreakdown, FareConfig, Rupees};
pub use metrics::{EfficiencyWeights, PathScore};
pub use network::{GeoPoint, PtMode, Stop, TransitNetwork};
pub use planner::{Plan, PlanError, PlanSet, Planner, Query};
