//! HTTP API over a shared, immutable graph.
//!
//! `GET /healthz`, `GET /network/stops`, `GET /plan` and `GET /schema/plan`.
//! Errors are `{"error": {"code", "message"}}` with the planner's error name
//! as `code`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::QueryRejection;
use axum::extract::{Query as QueryParams, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use crate::bipartite::BipartiteGraph;
use crate::fare::{FareConfig, Rupees};
use crate::metrics::{score_plan_set, EfficiencyWeights, PathScore};
use crate::network::{GeoPoint, PtMode};
use crate::planner::{Plan, PlanError, Planner, Query};

/// Response schema for `/plan`, also served at `/schema/plan`.
pub const PLAN_SCHEMA: &str = include_str!("../schema/plan_response.schema.json");

pub const DEFAULT_PLAN_LIMIT: usize = 5;
pub const MAX_PLAN_LIMIT: usize = 50;
/// Largest accepted `w_lm`; the sweep never weights first/last miles above
/// transit.
pub const MAX_W_LM: f64 = 0.5;

pub struct AppState {
    pub graph: Arc<BipartiteGraph>,
    pub fares: FareConfig,
    pub weights: EfficiencyWeights,
}

impl AppState {
    pub fn new(graph: Arc<BipartiteGraph>, fares: FareConfig) -> Self {
        AppState {
            graph,
            fares,
            weights: EfficiencyWeights::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ApiError {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    pub error: ApiError,
}

/// Planner error plus HTTP status.
#[derive(Debug)]
pub struct HttpError(pub StatusCode, pub ApiError);

impl From<PlanError> for HttpError {
    fn from(e: PlanError) -> Self {
        let status = match e {
            PlanError::NoCandidateStops(_) | PlanError::NoConnection => StatusCode::NOT_FOUND,
            PlanError::FareInfeasible => StatusCode::UNPROCESSABLE_ENTITY,
            PlanError::WeightConstraintViolated { .. } | PlanError::InvalidQuery(_) | PlanError::Fare(_) => {
                StatusCode::BAD_REQUEST
            }
        };
        HttpError(
            status,
            ApiError {
                code: e.code().to_string(),
                message: e.to_string(),
            },
        )
    }
}

impl IntoResponse for HttpError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
    pub stops: usize,
    pub routes: usize,
    pub edges: usize,
    pub max_transfers: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StopView {
    pub id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    pub mode: PtMode,
}

/// `/plan` query string. Omitted preferences take the baseline values.
#[derive(Debug, Clone, Deserialize)]
pub struct PlanParams {
    pub from_lat: f64,
    pub from_lon: f64,
    pub to_lat: f64,
    pub to_lon: f64,
    pub max_fare: Option<Rupees>,
    pub w_lm: Option<f64>,
    pub lm_range_km: Option<f64>,
    pub transfer_penalty_min: Option<f64>,
    pub optimile: Option<bool>,
    pub limit: Option<usize>,
}

impl PlanParams {
    pub fn to_query(&self, max_transfers: u32) -> Result<Query, PlanError> {
        let w_lm = self.w_lm.unwrap_or(0.2);
        if !(w_lm > 0.0 && w_lm <= MAX_W_LM) {
            return Err(PlanError::WeightConstraintViolated { w_lm, w_pt: 1.0 - w_lm });
        }
        let mut q = Query::new(
            GeoPoint {
                lat: self.from_lat,
                lon: self.from_lon,
            },
            GeoPoint {
                lat: self.to_lat,
                lon: self.to_lon,
            },
        )
        .with_lm_weight(w_lm);
        if let Some(f) = self.max_fare {
            q.max_fare_rs = f;
        }
        if let Some(r) = self.lm_range_km {
            q.lm_range_km = r;
        }
        if let Some(t) = self.transfer_penalty_min {
            q.transfer_penalty_min = t;
        }
        q.optimile_only = self.optimile.unwrap_or(false);
        q.max_transfers = max_transfers;
        q.validate()?;
        Ok(q)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RankedPlan {
    pub rank: usize,
    pub plan: Plan,
    pub score: PathScore,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PlanResponse {
    pub query: Query,
    pub plan: Plan,
    pub score: PathScore,
    /// Runners-up in rank order, starting at rank 2.
    pub alternatives: Vec<RankedPlan>,
    pub feasible_plans: usize,
}

/// Solves one request: best plan, runners-up, and scores relative to the
/// whole feasible set.
pub fn plan_response(state: &AppState, params: &PlanParams) -> Result<PlanResponse, PlanError> {
    let limit = params.limit.unwrap_or(DEFAULT_PLAN_LIMIT);
    if limit == 0 || limit > MAX_PLAN_LIMIT {
        return Err(PlanError::InvalidQuery(format!(
            "limit must be in 1..={MAX_PLAN_LIMIT}"
        )));
    }
    let query = params.to_query(state.graph.max_transfers())?;
    let planner = Planner::new(&state.graph, &state.fares);
    let set = planner.enumerate_feasible(&query)?;
    if let Some(e) = set.empty_reason() {
        return Err(e.clone());
    }
    let scores = score_plan_set(&set, &state.weights)
        .map_err(|e| PlanError::InvalidQuery(format!("cannot score plans: {e}")))?;
    let mut order: Vec<usize> = (0..set.plans.len()).collect();
    order.sort_by(|&a, &b| set.plans[a].key().total_cmp(&set.plans[b].key()));
    let mut ranked = order.into_iter().take(limit).enumerate().map(|(r, i)| RankedPlan {
        rank: r + 1,
        plan: set.plans[i].clone(),
        score: scores[i],
    });
    let best = ranked.next().expect("non-empty feasible set");
    Ok(PlanResponse {
        query,
        plan: best.plan,
        score: best.score,
        alternatives: ranked.collect(),
        feasible_plans: set.plans.len(),
    })
}

async fn healthz(State(state): State<Arc<AppState>>) -> Json<Health> {
    let net = state.graph.network();
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        stops: net.stop_count(),
        routes: net.routes().len(),
        edges: state.graph.edge_count(),
        max_transfers: state.graph.max_transfers(),
    })
}

async fn stops(State(state): State<Arc<AppState>>) -> Json<Vec<StopView>> {
    Json(
        state
            .graph
            .network()
            .stops()
            .iter()
            .map(|s| StopView {
                id: s.id.clone(),
                name: s.name.clone(),
                lat: s.location.lat,
                lon: s.location.lon,
                mode: s.mode,
            })
            .collect(),
    )
}

async fn plan(
    State(state): State<Arc<AppState>>,
    params: Result<QueryParams<PlanParams>, QueryRejection>,
) -> Result<Json<PlanResponse>, HttpError> {
    let QueryParams(params) = params.map_err(|e| PlanError::InvalidQuery(e.body_text()))?;
    // planning is CPU-bound
    let res = tokio::task::spawn_blocking(move || plan_response(&state, &params))
        .await
        .map_err(|e| {
            HttpError(
                StatusCode::INTERNAL_SERVER_ERROR,
                ApiError {
                    code: "Internal".into(),
                    message: e.to_string(),
                },
            )
        })?;
    Ok(Json(res?))
}

async fn schema() -> impl IntoResponse {
    (
        [(axum::http::header::CONTENT_TYPE, "application/schema+json")],
        PLAN_SCHEMA,
    )
}

/// Routes without a UI mount.
pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/network/stops", get(stops))
        .route("/plan", get(plan))
        .route("/schema/plan", get(schema))
        .with_state(state)
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub addr: SocketAddr,
    /// Static bundle mounted under `/ui`.
    pub ui_dir: Option<PathBuf>,
}

pub fn app(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let r = router(state);
    match ui_dir {
        Some(dir) => r.nest_service("/ui", ServeDir::new(dir)),
        None => r,
    }
}

/// Serves until ctrl-c or SIGTERM.
pub async fn serve(state: Arc<AppState>, config: ServeConfig) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(config.addr).await?;
    axum::serve(listener, app(state, config.ui_dir))
        .with_graceful_shutdown(shutdown_signal())
        .await
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
