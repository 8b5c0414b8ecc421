//! HTTP+JSON session service.
//!
//! Every session-scoped response carries the session revision, in the JSON
//! body and in the `x-cgs-revision` header. Mutations name the revision
//! they were issued against and are rejected with 409 when it is stale.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use cgs_core::layout::svg::render_svg;
use cgs_core::layout::{LayoutParams, Pin, Point};
use cgs_core::visible::{stats_csv, EdgePayload, PathResult, PilePayload, SearchHit};
use cgs_core::SessionOptions;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;
use crate::store::{ApiSession, AppState, GraphInfo};

pub const REVISION_HEADER: &str = "x-cgs-revision";

type Shared = Arc<AppState>;
type ApiResult = Result<Response, ApiError>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/graphs", get(list_graphs))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_info).delete(delete_session))
        .route("/sessions/{id}/visible", get(visible))
        .route("/sessions/{id}/expand", post(expand))
        .route("/sessions/{id}/collapse", post(collapse))
        .route("/sessions/{id}/ungroup", post(ungroup))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/depth", post(depth))
        .route("/sessions/{id}/options", post(set_options))
        .route("/sessions/{id}/layout", get(layout))
        .route("/sessions/{id}/drag", post(drag))
        .route("/sessions/{id}/svg", get(svg))
        .route("/sessions/{id}/stats", get(stats))
        .route("/sessions/{id}/path", get(path))
        .route("/sessions/{id}/search", get(search))
        .route("/sessions/{id}/port/{port}/hidden", get(port_hidden))
        .route("/sessions/{id}/pile/{pile}/members", get(pile_members))
        .fallback(|| async { ApiError::NotFound("no such endpoint".into()) })
        .with_state(state)
}

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(e.to_string()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ApiError> {
    q.map(|Query(t)| t).map_err(|e| ApiError::BadRequest(e.body_text()))
}

fn with_revision(mut r: Response, revision: u64) -> Response {
    r.headers_mut()
        .insert(REVISION_HEADER, HeaderValue::from(revision));
    r
}

fn raw(revision: u64, content_type: &'static str, bytes: Vec<u8>) -> Response {
    let r = ([(header::CONTENT_TYPE, content_type)], bytes).into_response();
    with_revision(r, revision)
}

fn json<T: Serialize>(revision: u64, body: &T) -> Response {
    let bytes = serde_json::to_vec(body).expect("response serializes");
    raw(revision, "application/json", bytes)
}

/// Runs `f` on the session with its lock held, off the async workers.
async fn on_session<T, F>(state: &Shared, id: &str, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut ApiSession) -> Result<T, ApiError> + Send + 'static,
{
    let s: Arc<Mutex<ApiSession>> = state.get(id)?;
    tokio::task::spawn_blocking(move || {
        let mut guard = s.lock().map_err(|_| ApiError::Internal("session lock poisoned".into()))?;
        f(&mut guard)
    })
    .await
    .map_err(|e| ApiError::Internal(e.to_string()))?
}

#[derive(Serialize)]
struct GraphList {
    graphs: Vec<GraphInfo>,
}

async fn list_graphs(State(state): State<Shared>) -> ApiResult {
    let graphs = state
        .library
        .list()
        .map_err(|e| ApiError::Internal(format!("{}: {e}", state.library.dir().display())))?;
    let body = serde_json::to_vec(&GraphList { graphs }).expect("serializes");
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    graph: String,
    #[serde(default)]
    options: SessionOptions,
}

#[derive(Serialize)]
struct SessionInfo {
    id: String,
    graph: String,
    revision: u64,
    options: SessionOptions,
    expanded: Vec<String>,
}

fn info(s: &ApiSession) -> SessionInfo {
    SessionInfo {
        id: s.id.clone(),
        graph: s.graph.clone(),
        revision: s.revision(),
        options: s.session.options(),
        expanded: s.session.expanded_paths(),
    }
}

async fn create_session(State(state): State<Shared>, body: Bytes) -> ApiResult {
    let req: CreateSession = parse_body(&body)?;
    req.options.validate()?;
    let st = state.clone();
    let s = tokio::task::spawn_blocking(move || st.create(&req.graph, req.options))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    let body = info(&s.lock().unwrap());
    let mut r = json(body.revision, &body);
    *r.status_mut() = StatusCode::CREATED;
    Ok(r)
}

async fn session_info(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let body = on_session(&state, &id, |s| Ok(info(s))).await?;
    Ok(json(body.revision, &body))
}

async fn delete_session(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    state.remove(&id)?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn visible(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let (rev, bytes) = on_session(&state, &id, |s| Ok((s.revision(), s.visible_json()?))).await?;
    Ok(raw(rev, "application/json", bytes.to_vec()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathMutation {
    path: String,
    revision: u64,
}

#[derive(Serialize)]
struct Mutated {
    revision: u64,
    expanded: Vec<String>,
}

async fn mutate<F>(state: Shared, id: String, revision: u64, f: F) -> ApiResult
where
    F: FnOnce(&mut ApiSession) -> Result<(), ApiError> + Send + 'static,
{
    let body = on_session(&state, &id, move |s| {
        s.check_revision(revision)?;
        f(s)?;
        Ok(Mutated {
            revision: s.revision(),
            expanded: s.session.expanded_paths(),
        })
    })
    .await?;
    Ok(json(body.revision, &body))
}

async fn expand(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: PathMutation = parse_body(&body)?;
    mutate(state, id, req.revision, move |s| Ok(s.session.expand(&req.path).map(drop)?)).await
}

async fn collapse(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: PathMutation = parse_body(&body)?;
    mutate(state, id, req.revision, move |s| Ok(s.session.collapse(&req.path).map(drop)?)).await
}

async fn ungroup(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: PathMutation = parse_body(&body)?;
    mutate(state, id, req.revision, move |s| Ok(s.session.ungroup(&req.path).map(drop)?)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RevisionOnly {
    revision: u64,
}

async fn undo(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: RevisionOnly = parse_body(&body)?;
    mutate(state, id, req.revision, |s| Ok(s.session.undo().map(drop)?)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DepthMutation {
    depth: usize,
    revision: u64,
}

async fn depth(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: DepthMutation = parse_body(&body)?;
    mutate(state, id, req.revision, move |s| {
        s.session.expand_to_depth(req.depth);
        Ok(())
    })
    .await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OptionsMutation {
    options: SessionOptions,
    revision: u64,
}

async fn set_options(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: OptionsMutation = parse_body(&body)?;
    req.options.validate()?;
    mutate(state, id, req.revision, move |s| Ok(s.session.set_options(req.options)?)).await
}

/// Layout parameters from a query string; numbers and flags arrive as
/// text. `scale` is taken out first when the caller accepts it.
fn layout_params(mut q: HashMap<String, String>, with_scale: bool) -> Result<(LayoutParams, f64), ApiError> {
    let scale = match q.remove("scale").filter(|_| with_scale) {
        Some(s) => s
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v > 0.0)
            .ok_or_else(|| ApiError::BadRequest(format!("invalid scale {s:?}")))?,
        None => 1.0,
    };
    let map: serde_json::Map<String, serde_json::Value> = q
        .into_iter()
        .map(|(k, v)| {
            let value = if let Ok(n) = v.parse::<f64>() {
                serde_json::json!(n)
            } else if let Ok(b) = v.parse::<bool>() {
                serde_json::json!(b)
            } else {
                serde_json::json!(v)
            };
            (k, value)
        })
        .collect();
    let params: LayoutParams =
        serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    Ok((params, scale))
}

type RawQuery = Result<Query<HashMap<String, String>>, QueryRejection>;

async fn layout(State(state): State<Shared>, Path(id): Path<String>, q: RawQuery) -> ApiResult {
    let (params, _) = layout_params(query(q)?, false)?;
    let (rev, bytes) = on_session(&state, &id, move |s| {
        let b = s.layout_json(&params)?;
        Ok((s.revision(), b))
    })
    .await?;
    Ok(raw(rev, "application/json", bytes.to_vec()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DragRequest {
    node: String,
    at: Point,
    revision: u64,
    #[serde(default)]
    params: LayoutParams,
}

async fn drag(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: DragRequest = parse_body(&body)?;
    let (rev, bytes) = on_session(&state, &id, move |s| {
        s.check_revision(req.revision)?;
        // the drag is relative to this revision's layout
        s.layout_json(&req.params)?;
        let pin = Pin {
            node: req.node,
            at: req.at,
        };
        let b = s.drag(&req.params, &pin)?;
        Ok((s.revision(), b))
    })
    .await?;
    Ok(raw(rev, "application/json", bytes.to_vec()))
}

async fn svg(State(state): State<Shared>, Path(id): Path<String>, q: RawQuery) -> ApiResult {
    let (params, scale) = layout_params(query(q)?, true)?;
    let (rev, text) = on_session(&state, &id, move |s| {
        s.layout_json(&params)?;
        let l = s.current_layout().ok_or_else(|| ApiError::Internal("no layout".into()))?;
        Ok((s.revision(), render_svg(l, scale)))
    })
    .await?;
    Ok(raw(rev, "image/svg+xml", text.into_bytes()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsQuery {
    depth: Option<usize>,
}

async fn stats(State(state): State<Shared>, Path(id): Path<String>, q: Result<Query<StatsQuery>, QueryRejection>) -> ApiResult {
    let q = query(q)?;
    let (rev, csv) = on_session(&state, &id, move |s| {
        let depth = q.depth.unwrap_or_else(|| s.session.graph().tree.max_depth());
        Ok((s.revision(), stats_csv(&s.session.stats_by_depth(depth)?)))
    })
    .await?;
    Ok(raw(rev, "text/csv", csv.into_bytes()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PathQuery {
    from: String,
    to: String,
}

#[derive(Serialize)]
struct PathBody {
    revision: u64,
    #[serde(flatten)]
    result: PathResult,
}

async fn path(State(state): State<Shared>, Path(id): Path<String>, q: Result<Query<PathQuery>, QueryRejection>) -> ApiResult {
    let q = query(q)?;
    let body = on_session(&state, &id, move |s| {
        let result = s.session.find_path(&q.from, &q.to)?;
        Ok(PathBody {
            revision: s.revision(),
            result,
        })
    })
    .await?;
    Ok(json(body.revision, &body))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchQuery {
    q: String,
}

#[derive(Serialize)]
struct SearchBody {
    revision: u64,
    query: String,
    hits: Vec<SearchHit>,
}

async fn search(State(state): State<Shared>, Path(id): Path<String>, q: Result<Query<SearchQuery>, QueryRejection>) -> ApiResult {
    let q = query(q)?;
    let body = on_session(&state, &id, move |s| {
        let hits = s.session.search(&q.q)?;
        Ok(SearchBody {
            revision: s.revision(),
            query: q.q,
            hits,
        })
    })
    .await?;
    Ok(json(body.revision, &body))
}

#[derive(Serialize)]
struct HiddenBody {
    revision: u64,
    port: String,
    edges: Vec<EdgePayload>,
}

async fn port_hidden(State(state): State<Shared>, Path((id, port)): Path<(String, String)>) -> ApiResult {
    let body = on_session(&state, &id, move |s| {
        let vis = s.session.derive_visible()?;
        let edges = vis.reveal_hidden(&port)?.into_iter().map(|i| vis.edge_payload(i)).collect();
        Ok(HiddenBody {
            revision: s.revision(),
            port,
            edges,
        })
    })
    .await?;
    Ok(json(body.revision, &body))
}

#[derive(Serialize)]
struct PileBody {
    revision: u64,
    #[serde(flatten)]
    pile: PilePayload,
}

async fn pile_members(State(state): State<Shared>, Path((id, pile)): Path<(String, String)>) -> ApiResult {
    let body = on_session(&state, &id, move |s| {
        let vis = s.session.derive_visible()?;
        let p = vis.pile(&pile).ok_or_else(|| ApiError::NotFound(format!("unknown pile {pile}")))?;
        Ok(PileBody {
            revision: s.revision(),
            pile: vis.pile_payload(p),
        })
    })
    .await?;
    Ok(json(body.revision, &body))
}
