use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, RawQuery, State};
use axum::http::header::{CONTENT_TYPE, ETAG, IF_MATCH, LOCATION};
use axum::http::{HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::Serialize;
use serde_json::{Map, Value};
use tower_http::services::ServeDir;
use v2v_core::analytics::{csv_tables, usage_report, AnalyticsLog, RecordType, ReportOptions, DEFAULT_TOP_FRACTION};
use v2v_core::geo::{check_zoom, cluster_layout_with, cluster_map_points_with, map_points, palette};
use v2v_core::model::{Collection, OutputKind};
use v2v_core::query::{filter_voices_with, select_voices, strategies_for_goal};
use v2v_core::store::{Dataset, FileBackend, ImportBundle, Snapshot, StoreError};
use v2v_core::Execution;

use crate::auth::Planner;
use crate::error::{ApiError, ApiResult};
use crate::params;
use crate::views::{output_cards, project_view, voice_card, Paged};

/// Free-form submissions from the community feedback page.
#[derive(Debug, Default)]
pub struct FeedbackLog {
    path: Option<PathBuf>,
    count: Mutex<usize>,
}

impl FeedbackLog {
    pub const FILE_NAME: &'static str = "feedback.ndjson";

    pub fn open(data_dir: &Path) -> Self {
        let path = data_dir.join(Self::FILE_NAME);
        let count = std::fs::read_to_string(&path).map(|t| t.lines().count()).unwrap_or(0);
        Self { path: Some(path), count: Mutex::new(count) }
    }

    fn append(&self, body: Map<String, Value>) -> Result<String, ApiError> {
        let mut count = self.count.lock().expect("feedback lock poisoned");
        let id = format!("fb{:06}", *count + 1);
        let record = serde_json::json!({"id": id, "received_at": Utc::now(), "body": body});
        if let Some(path) = &self.path {
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| ApiError::internal(format!("{}: {e}", path.display())))?;
            writeln!(f, "{record}").map_err(|e| ApiError::internal(e.to_string()))?;
        }
        *count += 1;
        Ok(id)
    }

    pub fn len(&self) -> usize {
        *self.count.lock().expect("feedback lock poisoned")
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone)]
pub struct AppState {
    pub dataset: Arc<Dataset>,
    pub analytics: Arc<AnalyticsLog>,
    pub feedback: Arc<FeedbackLog>,
    pub planner_token: Option<String>,
    pub exec: Execution,
}

impl AppState {
    pub fn in_memory(planner_token: Option<String>) -> Self {
        Self {
            dataset: Arc::new(Dataset::in_memory()),
            analytics: Arc::new(AnalyticsLog::in_memory()),
            feedback: Arc::new(FeedbackLog::default()),
            planner_token,
            exec: Execution::default(),
        }
    }

    /// Persistent state under `data_dir`: `dataset.json`, `analytics.ndjson`
    /// and `feedback.ndjson`.
    pub fn open(data_dir: &Path, planner_token: Option<String>) -> anyhow::Result<Self> {
        let dataset = Dataset::open(FileBackend::new(data_dir)?)?;
        let analytics = AnalyticsLog::open(data_dir)?;
        Ok(Self {
            dataset: Arc::new(dataset),
            analytics: Arc::new(analytics),
            feedback: Arc::new(FeedbackLog::open(data_dir)),
            planner_token,
            exec: Execution::default(),
        })
    }

    fn loaded(&self) -> ApiResult<Arc<Snapshot>> {
        let snap = self.dataset.snapshot();
        if snap.is_loaded() {
            Ok(snap)
        } else {
            Err(StoreError::NoDataset.into())
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct StaticDirs {
    /// Built web bundle served at `/`.
    pub web: Option<PathBuf>,
    /// Audio files served at `/media`.
    pub media: Option<PathBuf>,
}

pub fn router(state: AppState, dirs: StaticDirs) -> Router {
    let mut app = Router::new()
        .route("/api/health", get(health))
        .route("/api/project", get(project))
        .route("/api/topics", get(topics).post(create_topic))
        .route("/api/events", get(events))
        .route("/api/sub-geographies", get(sub_geographies))
        .route("/api/voices", get(voices))
        .route("/api/voices/{id}", get(voice).patch(patch_voice))
        .route("/api/outputs", get(outputs).post(create_output))
        .route("/api/outputs/{id}", get(output).patch(patch_output))
        .route("/api/map/clusters", get(clusters))
        .route("/api/cluster-layout", get(cluster_layout))
        .route("/api/analytics/events", post(ingest_events))
        .route("/api/analytics/heartbeats", post(ingest_heartbeats))
        .route("/api/analytics/report", get(analytics_report))
        .route("/api/analytics/report.csv", get(analytics_report_csv))
        .route("/api/analytics/export", get(analytics_export))
        .route("/api/feedback", post(feedback))
        .route("/api/admin/import", post(admin_import))
        .route("/api/admin/export", get(admin_export))
        .with_state(state);
    if let Some(media) = dirs.media {
        app = app.nest_service("/media", ServeDir::new(media));
    }
    if let Some(web) = dirs.web {
        app = app.fallback_service(ServeDir::new(web));
    }
    app.layer(tower_http::trace::TraceLayer::new_for_http())
}

fn json_with_etag<T: Serialize>(status: StatusCode, revision: u64, body: &T) -> Response {
    let mut resp = (status, Json(body)).into_response();
    resp.headers_mut().insert(ETAG, HeaderValue::from_str(&format!("\"{revision}\"")).expect("ascii"));
    resp
}

/// Expected revision from `If-Match`; `"3"`, `W/"3"` and `3` are accepted.
fn expected_revision(headers: &HeaderMap) -> ApiResult<u64> {
    let raw = headers.get(IF_MATCH).ok_or_else(ApiError::precondition_required)?;
    let s = raw.to_str().map_err(|_| ApiError::bad_request("If-Match is not ascii"))?.trim();
    let s = s.strip_prefix("W/").unwrap_or(s).trim_matches('"');
    s.parse().map_err(|_| ApiError::bad_request(format!("If-Match `{s}` is not a revision number")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

async fn health() -> Json<Value> {
    Json(serde_json::json!({"status": "ok"}))
}

async fn project(State(s): State<AppState>) -> ApiResult<Response> {
    let snap = s.loaded()?;
    let view = project_view(&snap).ok_or_else(|| ApiError::not_found("dataset has no project"))?;
    Ok(Json(view).into_response())
}

async fn topics(State(s): State<AppState>) -> ApiResult<Response> {
    let snap = s.loaded()?;
    Ok(Json(&snap.corpus().topics).into_response())
}

async fn events(State(s): State<AppState>) -> ApiResult<Response> {
    let snap = s.loaded()?;
    Ok(Json(&snap.corpus().events).into_response())
}

async fn sub_geographies(State(s): State<AppState>) -> ApiResult<Response> {
    let snap = s.loaded()?;
    Ok(Json(&snap.corpus().sub_geographies).into_response())
}

async fn voices(State(s): State<AppState>, RawQuery(q): RawQuery) -> ApiResult<Response> {
    let q = params::voice_list(q.as_deref())?;
    let snap = s.loaded()?;
    let page = filter_voices_with(snap.corpus(), &q.filter, q.sort, q.page, s.exec)?;
    let body = Paged {
        total: page.total,
        offset: q.page.offset,
        limit: q.page.limit,
        items: page.voices.into_iter().map(|v| voice_card(&snap, v)).collect(),
    };
    Ok(Json(body).into_response())
}

async fn voice(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let snap = s.loaded()?;
    let v = snap.corpus().voice(&id).ok_or_else(|| ApiError::not_found(format!("voice `{id}` not found")))?;
    let card = voice_card(&snap, v);
    Ok(json_with_etag(StatusCode::OK, card.revision, &card))
}

async fn outputs(State(s): State<AppState>, RawQuery(q): RawQuery) -> ApiResult<Response> {
    let q = params::output_list(q.as_deref())?;
    let snap = s.loaded()?;
    let corpus = snap.corpus();
    let selected: Vec<_> = match &q.goal_id {
        Some(goal) => strategies_for_goal(corpus, goal)?,
        None => corpus.outputs.iter().collect(),
    };
    let selected = selected.into_iter().filter(|o| q.kind.is_none_or(|k| o.kind == k));
    Ok(Json(output_cards(corpus, selected)).into_response())
}

async fn output(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let snap = s.loaded()?;
    let o = snap.corpus().output(&id).ok_or_else(|| ApiError::not_found(format!("output `{id}` not found")))?;
    let card = output_cards(snap.corpus(), [o]).pop().expect("one card");
    Ok(json_with_etag(StatusCode::OK, o.revision, &card))
}

#[derive(Serialize)]
struct ClusterResponse<'a> {
    zoom: u8,
    total_points: usize,
    clusters: &'a [v2v_core::geo::MapCluster],
}

async fn clusters(State(s): State<AppState>, RawQuery(q): RawQuery) -> ApiResult<Response> {
    let q = params::clusters(q.as_deref())?;
    let zoom = check_zoom(q.zoom)?;
    let snap = s.loaded()?;
    let corpus = snap.corpus();
    let points = map_points(select_voices(corpus, &q.filter, s.exec));
    let clusters = cluster_map_points_with(&points, zoom, q.bbox.as_ref(), &palette(corpus), s.exec)?;
    let total_points = clusters.iter().map(|c| c.size()).sum();
    Ok(Json(ClusterResponse { zoom, total_points, clusters: &clusters }).into_response())
}

async fn cluster_layout(State(s): State<AppState>, RawQuery(q): RawQuery) -> ApiResult<Response> {
    let scheme = params::layout_scheme(q.as_deref())?;
    let snap = s.loaded()?;
    let circles = cluster_layout_with(snap.corpus(), scheme, s.exec);
    Ok(Json(serde_json::json!({"scheme": scheme, "circles": circles})).into_response())
}

fn object(body: &[u8]) -> ApiResult<Map<String, Value>> {
    match serde_json::from_slice::<Value>(body) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(ApiError::bad_request("body must be a JSON object")),
        Err(e) => Err(ApiError::bad_request(format!("malformed JSON: {e}"))),
    }
}

const VOICE_EDITABLE: [&str; 3] = ["topic_ids", "output_ids", "uncited_rationale"];

/// Applies a top-level merge patch to the stored body of `collection/id`,
/// guarded by the revision the client last saw.
async fn patch_document(
    s: &AppState,
    collection: Collection,
    id: String,
    expected: u64,
    patch: Map<String, Value>,
) -> ApiResult<u64> {
    let dataset = Arc::clone(&s.dataset);
    blocking(move || {
        if !dataset.snapshot().is_loaded() {
            return Err(StoreError::NoDataset.into());
        }
        let doc = dataset
            .get_document(collection, &id)
            .ok_or_else(|| ApiError::not_found(format!("{collection}/{id} not found")))?;
        if doc.revision != expected {
            return Err(StoreError::Conflict { collection, id, expected, current: doc.revision }.into());
        }
        let mut body = doc.body;
        let obj = body.as_object_mut().expect("stored documents are objects");
        for (k, v) in patch {
            if v.is_null() {
                obj.remove(&k);
            } else {
                obj.insert(k, v);
            }
        }
        Ok(dataset.write_document(collection, &id, body, expected)?)
    })
    .await
}

async fn patch_voice(
    State(s): State<AppState>,
    _: Planner,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let expected = expected_revision(&headers)?;
    let patch = object(&body)?;
    if let Some(k) = patch.keys().find(|k| !VOICE_EDITABLE.contains(&k.as_str())) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "field_not_editable",
            format!("`{k}` is not editable; editable fields: {}", VOICE_EDITABLE.join(", ")),
        ));
    }
    let rev = patch_document(&s, Collection::Voices, id.clone(), expected, patch).await?;
    let snap = s.dataset.snapshot();
    let v = snap.corpus().voice(&id).expect("just written");
    Ok(json_with_etag(StatusCode::OK, rev, &voice_card(&snap, v)))
}

async fn patch_output(
    State(s): State<AppState>,
    _: Planner,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let expected = expected_revision(&headers)?;
    let mut patch = object(&body)?;
    if patch.contains_key("id") && patch.get("id") != Some(&Value::String(id.clone())) {
        return Err(ApiError::bad_request("output id cannot be changed"));
    }
    // the stored revision is authoritative
    patch.remove("revision");
    let rev = patch_document(&s, Collection::Outputs, id.clone(), expected, patch).await?;
    let snap = s.dataset.snapshot();
    let o = snap.corpus().output(&id).expect("just written");
    let card = output_cards(snap.corpus(), [o]).pop().expect("one card");
    Ok(json_with_etag(StatusCode::OK, rev, &card))
}

async fn create_output(State(s): State<AppState>, _: Planner, body: Bytes) -> ApiResult<Response> {
    let mut obj = object(&body)?;
    obj.remove("revision");
    let snap = s.loaded()?;
    let id = match obj.get("id") {
        Some(Value::String(id)) if !id.trim().is_empty() => id.clone(),
        Some(_) => return Err(ApiError::bad_request("`id` must be a non-empty string")),
        None => {
            let kind: OutputKind = obj
                .get("kind")
                .and_then(Value::as_str)
                .ok_or_else(|| ApiError::bad_request("`kind` is required"))?
                .parse()
                .map_err(ApiError::bad_request)?;
            let n = (1..).find(|n| snap.corpus().output(&format!("{}-{n}", kind.as_str())).is_none()).expect("unbounded");
            format!("{}-{n}", kind.as_str())
        }
    };
    obj.insert("id".to_owned(), Value::String(id.clone()));
    let dataset = Arc::clone(&s.dataset);
    let doc_id = id.clone();
    let rev = blocking(move || Ok(dataset.write_document(Collection::Outputs, &doc_id, Value::Object(obj), 0)?)).await?;
    let snap = s.dataset.snapshot();
    let o = snap.corpus().output(&id).expect("just written");
    let card = output_cards(snap.corpus(), [o]).pop().expect("one card");
    let mut resp = json_with_etag(StatusCode::CREATED, rev, &card);
    resp.headers_mut()
        .insert(LOCATION, HeaderValue::from_str(&format!("/api/outputs/{id}")).map_err(|e| ApiError::bad_request(e.to_string()))?);
    Ok(resp)
}

fn slug(name: &str) -> String {
    let s: String = name
        .to_lowercase()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
        .collect();
    s.split('-').filter(|p| !p.is_empty()).collect::<Vec<_>>().join("-")
}

async fn create_topic(State(s): State<AppState>, _: Planner, body: Bytes) -> ApiResult<Response> {
    let mut obj = object(&body)?;
    let snap = s.loaded()?;
    let name = obj
        .get("name")
        .and_then(Value::as_str)
        .filter(|n| !n.trim().is_empty())
        .ok_or_else(|| ApiError::bad_request("`name` is required"))?
        .to_owned();
    let id = match obj.get("id").and_then(Value::as_str) {
        Some(id) => id.to_owned(),
        None => slug(&name),
    };
    if id.is_empty() {
        return Err(ApiError::bad_request("topic id is empty"));
    }
    obj.insert("id".to_owned(), Value::String(id.clone()));
    obj.entry("color_index").or_insert_with(|| Value::from(snap.corpus().next_color_index()));
    let dataset = Arc::clone(&s.dataset);
    let doc_id = id.clone();
    let rev = blocking(move || Ok(dataset.write_document(Collection::Topics, &doc_id, Value::Object(obj), 0)?)).await?;
    let doc = s.dataset.get_document(Collection::Topics, &id).expect("just written");
    Ok(json_with_etag(StatusCode::CREATED, rev, &doc.body))
}

/// NDJSON, or a JSON array of records, converted to NDJSON lines.
fn ndjson_body(headers: &HeaderMap, body: &[u8]) -> ApiResult<String> {
    let text = std::str::from_utf8(body).map_err(|_| ApiError::bad_request("body is not utf-8"))?;
    let is_json = headers
        .get(CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|ct| ct.starts_with("application/json"));
    if is_json || text.trim_start().starts_with('[') {
        match serde_json::from_str::<Value>(text) {
            Ok(Value::Array(items)) => Ok(items.iter().map(|v| v.to_string() + "\n").collect()),
            Ok(v @ Value::Object(_)) => Ok(v.to_string() + "\n"),
            Ok(_) => Err(ApiError::bad_request("expected an array of records")),
            Err(e) => Err(ApiError::bad_request(format!("malformed JSON: {e}"))),
        }
    } else {
        Ok(text.to_owned())
    }
}

async fn ingest(s: AppState, headers: HeaderMap, body: Bytes, kind: RecordType) -> ApiResult<Response> {
    let text = ndjson_body(&headers, &body)?;
    let log = Arc::clone(&s.analytics);
    let report = blocking(move || Ok(log.ingest_ndjson(&text, Some(kind))?)).await?;
    Ok(Json(report).into_response())
}

async fn ingest_events(State(s): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    ingest(s, headers, body, RecordType::Event).await
}

async fn ingest_heartbeats(State(s): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    ingest(s, headers, body, RecordType::Heartbeat).await
}

fn report_options(raw: Option<&str>) -> ApiResult<ReportOptions> {
    let q = params::report(raw)?;
    Ok(ReportOptions {
        from: q.from,
        to: q.to,
        outlier_filter: q.outlier_filter.unwrap_or(true),
        top_fraction: q.top_fraction.unwrap_or(DEFAULT_TOP_FRACTION),
    })
}

async fn analytics_report(State(s): State<AppState>, _: Planner, RawQuery(q): RawQuery) -> ApiResult<Response> {
    let opts = report_options(q.as_deref())?;
    let snap = s.dataset.snapshot();
    let corpus = snap.is_loaded().then(|| snap.corpus());
    let report = usage_report(&s.analytics.records(), corpus, &opts, s.exec)?;
    Ok(Json(report).into_response())
}

/// One CSV table per request: `?table=feature_usage|transitions|devices`.
async fn analytics_report_csv(State(s): State<AppState>, _: Planner, RawQuery(q): RawQuery) -> ApiResult<Response> {
    let raw = q.unwrap_or_default();
    let (table, rest): (Vec<_>, Vec<_>) = form_urlencoded::parse(raw.as_bytes())
        .into_owned()
        .partition(|(k, _)| k == "table");
    let table = table.into_iter().next().map(|(_, v)| v).unwrap_or_else(|| "feature_usage".to_owned());
    let rest = form_urlencoded::Serializer::new(String::new()).extend_pairs(rest).finish();
    let opts = report_options(Some(&rest))?;
    let snap = s.dataset.snapshot();
    let report = usage_report(&s.analytics.records(), snap.is_loaded().then(|| snap.corpus()), &opts, s.exec)?;
    let mut tables = csv_tables(&report)?;
    let csv = tables
        .remove(format!("{table}.csv").as_str())
        .ok_or_else(|| ApiError::bad_request(format!("unknown table `{table}`")))?;
    Ok(([(CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

async fn analytics_export(State(s): State<AppState>, _: Planner) -> Response {
    ([(CONTENT_TYPE, "application/x-ndjson")], s.analytics.export_ndjson()).into_response()
}

async fn feedback(State(s): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let obj = object(&body)?;
    if obj.is_empty() {
        return Err(ApiError::bad_request("feedback is empty"));
    }
    let fb = Arc::clone(&s.feedback);
    let id = blocking(move || fb.append(obj)).await?;
    Ok((StatusCode::CREATED, Json(serde_json::json!({"id": id}))).into_response())
}

async fn admin_import(State(s): State<AppState>, _: Planner, RawQuery(q): RawQuery, body: Bytes) -> ApiResult<Response> {
    let mode = params::import_mode(q.as_deref())?;
    let text = String::from_utf8(body.to_vec()).map_err(|_| ApiError::bad_request("body is not utf-8"))?;
    let dataset = Arc::clone(&s.dataset);
    let report = blocking(move || Ok(dataset.import_bundle(ImportBundle::parse(&text)?, mode)?)).await?;
    Ok(Json(report).into_response())
}

async fn admin_export(State(s): State<AppState>, _: Planner) -> Response {
    ([(CONTENT_TYPE, "application/json")], s.dataset.export_bundle().to_text()).into_response()
}
