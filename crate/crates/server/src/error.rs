use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use serde::Serialize;
use v2v_core::analytics::AnalyticsError;
use v2v_core::geo::GeoError;
use v2v_core::model::Issue;
use v2v_core::query::QueryError;
use v2v_core::store::StoreError;

/// Problem document returned for every non-2xx response.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Problem {
    #[serde(rename = "type")]
    pub kind: String,
    pub title: String,
    pub status: u16,
    /// Stable machine-readable error code.
    pub code: &'static str,
    pub detail: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub issues: Vec<Issue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub current_revision: Option<u64>,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub detail: String,
    pub issues: Vec<Issue>,
    pub current_revision: Option<u64>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, detail: impl Into<String>) -> Self {
        Self { status, code, detail: detail.into(), issues: Vec::new(), current_revision: None }
    }

    pub fn bad_request(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", detail)
    }

    pub fn not_found(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", detail)
    }

    pub fn unauthorized(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthorized", detail)
    }

    pub fn forbidden() -> Self {
        Self::new(StatusCode::FORBIDDEN, "forbidden", "planner role required")
    }

    pub fn precondition_required() -> Self {
        Self::new(StatusCode::PRECONDITION_REQUIRED, "revision_required", "send the expected revision in If-Match")
    }

    pub fn internal(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", detail)
    }

    pub fn problem(&self) -> Problem {
        Problem {
            kind: format!("urn:v2v:problem:{}", self.code),
            title: self.status.canonical_reason().unwrap_or("error").to_owned(),
            status: self.status.as_u16(),
            code: self.code,
            detail: self.detail.clone(),
            issues: self.issues.clone(),
            current_revision: self.current_revision,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::to_vec(&self.problem()).expect("problem serializes");
        (self.status, [(header::CONTENT_TYPE, "application/problem+json")], body).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let detail = e.to_string();
        match e {
            StoreError::Parse(_) | StoreError::InvalidDocument(_) => {
                Self::new(StatusCode::BAD_REQUEST, "invalid_document", detail)
            }
            StoreError::Version(_) => Self::new(StatusCode::BAD_REQUEST, "unsupported_version", detail),
            StoreError::Validation(report) => Self {
                issues: report.errors.clone(),
                ..Self::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", detail)
            },
            StoreError::Conflict { current, .. } => Self {
                current_revision: Some(current),
                ..Self::new(StatusCode::CONFLICT, "revision_conflict", detail)
            },
            StoreError::NotFound { .. } => Self::not_found(detail),
            StoreError::NoDataset => Self::new(StatusCode::SERVICE_UNAVAILABLE, "no_dataset", detail),
            StoreError::Io(_) => Self::internal(detail),
        }
    }
}

impl From<QueryError> for ApiError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::InvalidPage(_) | QueryError::NotAGoal(_) => Self::bad_request(e.to_string()),
            QueryError::UnknownOutput(_) => Self::not_found(e.to_string()),
        }
    }
}

impl From<GeoError> for ApiError {
    fn from(e: GeoError) -> Self {
        Self::bad_request(e.to_string())
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(e: AnalyticsError) -> Self {
        match e {
            AnalyticsError::Io(_) => Self::internal(e.to_string()),
            _ => Self::bad_request(e.to_string()),
        }
    }
}

pub type ApiResult<T> = Result<T, ApiError>;
