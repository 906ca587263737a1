//! Bearer-token roles. No `Authorization` header means the public role; a
//! header that does not carry the planner token is rejected outright.

use axum::extract::FromRequestParts;
use axum::http::header::AUTHORIZATION;
use axum::http::request::Parts;

use crate::api::AppState;
use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Public,
    Planner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Principal {
    pub role: Role,
}

impl Principal {
    pub fn require_planner(self) -> Result<(), ApiError> {
        match self.role {
            Role::Planner => Ok(()),
            Role::Public => Err(ApiError::forbidden()),
        }
    }
}

/// Wrapper extractor that only admits planners.
#[derive(Debug, Clone, Copy)]
pub struct Planner;

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

pub fn resolve(header: Option<&str>, planner_token: Option<&str>) -> Result<Principal, ApiError> {
    let Some(header) = header else {
        return Ok(Principal { role: Role::Public });
    };
    let token = header
        .strip_prefix("Bearer ")
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .ok_or_else(|| ApiError::unauthorized("malformed Authorization header"))?;
    match planner_token {
        Some(expected) if constant_time_eq(token.as_bytes(), expected.as_bytes()) => {
            Ok(Principal { role: Role::Planner })
        }
        _ => Err(ApiError::unauthorized("invalid bearer token")),
    }
}

impl FromRequestParts<AppState> for Principal {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        let header = match parts.headers.get(AUTHORIZATION) {
            None => None,
            Some(v) => Some(v.to_str().map_err(|_| ApiError::unauthorized("malformed Authorization header"))?),
        };
        resolve(header, state.planner_token.as_deref())
    }
}

impl FromRequestParts<AppState> for Planner {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &AppState) -> Result<Self, Self::Rejection> {
        Principal::from_request_parts(parts, state).await?.require_planner()?;
        Ok(Planner)
    }
}
