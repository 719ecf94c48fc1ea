//! Drive the HTTP API in-process, without opening a socket.

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use tower::ServiceExt;

use lastmile::bipartite::{BipartiteGraph, SearchOptions};
use lastmile::fare::FareConfig;
use lastmile::network::{generate_grid_city, RoutePlan};
use lastmile::service::{router, AppState};

#[tokio::main]
async fn main() -> anyhow::Result<()> {
    let net = generate_grid_city(6, 6, 1.0, RoutePlan::RowsAndCols, 0)?;
    let g = Arc::new(BipartiteGraph::build(Arc::new(net), SearchOptions::default()));
    let app = router(Arc::new(AppState::new(g, FareConfig::default())));
    for uri in [
        "/healthz",
        "/plan?from_lat=28.553&from_lon=77.104&to_lat=28.590&to_lon=77.148&max_fare=90&limit=2",
        "/plan?from_lat=28.553&from_lon=77.104&to_lat=28.590&to_lon=77.148&w_lm=0.8",
        "/plan?from_lat=28.553&from_lon=77.104&to_lat=28.590&to_lon=77.148&max_fare=5",
    ] {
        let res = app.clone().oneshot(Request::get(uri).body(Body::empty())?).await?;
        let status = res.status();
        let body = res.into_body().collect().await?.to_bytes();
        let text = String::from_utf8_lossy(&body);
        println!("{status} {uri}\n  {}", text.chars().take(160).collect::<String>());
    }
    Ok(())
}
