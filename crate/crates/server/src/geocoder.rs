//! Geocoding provider selection from the environment, and the HTTP adapter
//! for Google's Address Validation API.
//!
//! | variable | meaning |
//! |---|---|
//! | `GEOCODER_PROVIDER` | `stub` (default) or `http` |
//! | `GEOCODER_KEY` | API key, required for `http` |
//! | `GEOCODER_RATE` | requests per second, optional |
//! | `GEOCODER_URL` | endpoint override for `http` |
//! | `GEOCODER_REGION` | CLDR region code hint, optional |
//! | `GEOCODER_STUB_FIXTURE` | JSON table replacing the bundled stub fixture |

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use v2v_core::geo::{Candidate, GeoError, GeocodeProvider, Geocoder, ProviderError, StubProvider};
use v2v_core::model::LatLon;

pub const DEFAULT_URL: &str = "https://addressvalidation.googleapis.com/v1:validateAddress";

pub struct AddressValidationProvider {
    client: reqwest::blocking::Client,
    url: String,
    key: String,
    region: Option<String>,
}

impl AddressValidationProvider {
    pub fn new(key: String, url: Option<String>, region: Option<String>) -> Result<Self, GeoError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(10))
            .build()
            .map_err(|e| GeoError::Config(e.to_string()))?;
        Ok(Self { client, url: url.unwrap_or_else(|| DEFAULT_URL.to_owned()), key, region })
    }
}

#[derive(Debug, Deserialize)]
struct ValidateResponse {
    result: Option<ValidateResult>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct ValidateResult {
    verdict: Option<Verdict>,
    geocode: Option<Geocode>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
struct Verdict {
    geocode_granularity: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Geocode {
    location: Option<Location>,
}

#[derive(Debug, Deserialize)]
struct Location {
    latitude: f64,
    longitude: f64,
}

fn granularity_confidence(g: Option<&str>) -> f64 {
    match g {
        Some("SUB_PREMISE" | "PREMISE") => 1.0,
        Some("PREMISE_PROXIMITY") => 0.8,
        Some("BLOCK") => 0.6,
        Some("ROUTE") => 0.5,
        _ => 0.3,
    }
}

/// Extracts the best candidate from a `validateAddress` response body.
pub fn parse_response(body: &str) -> Result<Option<Candidate>, ProviderError> {
    let resp: ValidateResponse = serde_json::from_str(body).map_err(|e| ProviderError(format!("bad response: {e}")))?;
    let Some(result) = resp.result else {
        return Ok(None);
    };
    let Some(loc) = result.geocode.and_then(|g| g.location) else {
        return Ok(None);
    };
    let coordinates = LatLon::new(loc.latitude, loc.longitude);
    if !coordinates.is_valid() {
        return Err(ProviderError(format!("out-of-range coordinates {},{}", loc.latitude, loc.longitude)));
    }
    let granularity = result.verdict.and_then(|v| v.geocode_granularity);
    Ok(Some(Candidate { coordinates, confidence: granularity_confidence(granularity.as_deref()) }))
}

impl GeocodeProvider for AddressValidationProvider {
    fn name(&self) -> &str {
        "google_address_validation"
    }

    fn lookup(&self, text: &str) -> Result<Option<Candidate>, ProviderError> {
        let mut address = json!({"addressLines": [text]});
        if let Some(r) = &self.region {
            address["regionCode"] = json!(r);
        }
        let resp = self
            .client
            .post(&self.url)
            .query(&[("key", &self.key)])
            .json(&json!({"address": address}))
            .send()
            .map_err(|e| ProviderError(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| ProviderError(e.to_string()))?;
        if status == reqwest::StatusCode::BAD_REQUEST {
            // the service rejects text it cannot read as an address
            return Ok(None);
        }
        if !status.is_success() {
            return Err(ProviderError(format!("HTTP {status}")));
        }
        parse_response(&body)
    }
}

/// Provider chosen by `GEOCODER_PROVIDER`, wrapped in a cached geocoder.
pub fn geocoder_from_env() -> Result<Geocoder<Box<dyn GeocodeProvider>>, GeoError> {
    let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
    let provider: Box<dyn GeocodeProvider> = match var("GEOCODER_PROVIDER").as_deref().unwrap_or("stub") {
        "stub" => match var("GEOCODER_STUB_FIXTURE") {
            Some(path) => {
                let text = std::fs::read_to_string(&path).map_err(|e| GeoError::Config(format!("{path}: {e}")))?;
                Box::new(StubProvider::from_fixture(&text)?)
            }
            None => Box::new(StubProvider::bundled()),
        },
        "http" => {
            let key = var("GEOCODER_KEY").ok_or_else(|| GeoError::Config("GEOCODER_KEY is not set".into()))?;
            Box::new(AddressValidationProvider::new(key, var("GEOCODER_URL"), var("GEOCODER_REGION"))?)
        }
        other => return Err(GeoError::Config(format!("unknown GEOCODER_PROVIDER `{other}`"))),
    };
    let mut geocoder = Geocoder::new(provider);
    if let Some(rate) = var("GEOCODER_RATE") {
        let rate: f64 = rate.parse().map_err(|_| GeoError::Config(format!("GEOCODER_RATE `{rate}`")))?;
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(GeoError::Config(format!("GEOCODER_RATE must be positive, got {rate}")));
        }
        geocoder = geocoder.with_rate_limit(rate);
    }
    Ok(geocoder)
}
