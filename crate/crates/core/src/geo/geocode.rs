//! Location-text → coordinates through a pluggable provider, with an exact
//! text cache, a token-bucket rate limit and capped exponential backoff.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::GeoError;
use crate::model::LatLon;

/// Fixture shipped with the offline stub provider.
pub const STUB_FIXTURE: &str = include_str!("../../fixtures/geocoder_stub.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    #[serde(flatten)]
    pub coordinates: LatLon,
    pub confidence: f64,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("geocoding provider failed: {0}")]
pub struct ProviderError(pub String);

pub trait GeocodeProvider: Send + Sync {
    fn name(&self) -> &str;
    /// `Ok(None)` when the provider understood the request but found no match.
    fn lookup(&self, text: &str) -> Result<Option<Candidate>, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeocodeResult {
    pub input_text: String,
    pub coordinates: LatLon,
    pub confidence: f64,
    pub provider: String,
    pub cached_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GeocodeOutcome {
    Resolved(GeocodeResult),
    Unresolved { input_text: String, reason: String },
}

/// What the cache remembers per input text.
pub type CachedLookup = GeocodeOutcome;

/// Deterministic offline provider backed by a text → candidate table.
#[derive(Debug, Default)]
pub struct StubProvider {
    entries: HashMap<String, Candidate>,
    calls: AtomicUsize,
}

impl StubProvider {
    pub fn from_fixture(json: &str) -> Result<Self, GeoError> {
        let entries: HashMap<String, Candidate> =
            serde_json::from_str(json).map_err(|e| GeoError::Config(format!("stub fixture: {e}")))?;
        Ok(Self { entries, calls: AtomicUsize::new(0) })
    }

    pub fn bundled() -> Self {
        Self::from_fixture(STUB_FIXTURE).expect("bundled fixture parses")
    }

    /// Number of lookups served so far.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl GeocodeProvider for StubProvider {
    fn name(&self) -> &str {
        "stub"
    }

    fn lookup(&self, text: &str) -> Result<Option<Candidate>, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(self.entries.get(text).copied())
    }
}

impl<P: GeocodeProvider + ?Sized> GeocodeProvider for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn lookup(&self, text: &str) -> Result<Option<Candidate>, ProviderError> {
        (**self).lookup(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            base_delay: Duration::from_millis(200),
            max_delay: Duration::from_secs(5),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `attempt` (1-based).
    pub fn delay(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.base_delay.saturating_mul(factor).min(self.max_delay)
    }
}

/// Blocking token bucket shared by concurrent callers.
#[derive(Debug)]
pub struct TokenBucket {
    rate_per_sec: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn new(rate_per_sec: f64, capacity: f64) -> Self {
        assert!(rate_per_sec > 0.0 && capacity >= 1.0, "token bucket needs positive rate and capacity ≥ 1");
        Self {
            rate_per_sec,
            capacity,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Takes one token, sleeping until one is available.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut guard = self.state.lock().expect("token bucket poisoned");
                let (tokens, last) = &mut *guard;
                let now = Instant::now();
                *tokens = (*tokens + now.duration_since(*last).as_secs_f64() * self.rate_per_sec).min(self.capacity);
                *last = now;
                if *tokens >= 1.0 {
                    *tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - *tokens) / self.rate_per_sec)
            };
            std::thread::sleep(wait);
        }
    }
}

pub struct Geocoder<P> {
    provider: P,
    cache: Mutex<BTreeMap<String, CachedLookup>>,
    limiter: Option<TokenBucket>,
    retry: RetryPolicy,
}

impl<P: GeocodeProvider> Geocoder<P> {
    pub fn new(provider: P) -> Self {
        Self {
            provider,
            cache: Mutex::new(BTreeMap::new()),
            limiter: None,
            retry: RetryPolicy::default(),
        }
    }

    /// Limits provider calls to `requests_per_sec`.
    pub fn with_rate_limit(mut self, requests_per_sec: f64) -> Self {
        self.limiter = Some(TokenBucket::new(requests_per_sec, requests_per_sec.max(1.0)));
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn provider(&self) -> &P {
        &self.provider
    }

    pub fn seed_cache(&self, entries: BTreeMap<String, CachedLookup>) {
        self.cache.lock().expect("geocode cache poisoned").extend(entries);
    }

    pub fn cache_entries(&self) -> BTreeMap<String, CachedLookup> {
        self.cache.lock().expect("geocode cache poisoned").clone()
    }

    /// Resolves `text`. Cached outcomes (resolved or "no match") are reused
    /// for identical text; provider failures are retried and, once retries
    /// are exhausted, reported as unresolved without being cached.
    pub fn geocode(&self, text: &str) -> Result<GeocodeOutcome, GeoError> {
        if text.trim().is_empty() {
            return Err(GeoError::EmptyInput);
        }
        if let Some(hit) = self.cache.lock().expect("geocode cache poisoned").get(text) {
            return Ok(hit.clone());
        }

        let mut last_error = None;
        for attempt in 1..=self.retry.max_attempts.max(1) {
            if attempt > 1 {
                std::thread::sleep(self.retry.delay(attempt - 1));
            }
            if let Some(limiter) = &self.limiter {
                limiter.acquire();
            }
            match self.provider.lookup(text) {
                Ok(found) => {
                    let outcome = match found {
                        Some(c) if c.coordinates.is_valid() && (0.0..=1.0).contains(&c.confidence) => {
                            GeocodeOutcome::Resolved(GeocodeResult {
                                input_text: text.to_owned(),
                                coordinates: c.coordinates,
                                confidence: c.confidence,
                                provider: self.provider.name().to_owned(),
                                cached_at: Utc::now(),
                            })
                        }
                        Some(_) => GeocodeOutcome::Unresolved {
                            input_text: text.to_owned(),
                            reason: "provider returned out-of-range result".to_owned(),
                        },
                        None => GeocodeOutcome::Unresolved {
                            input_text: text.to_owned(),
                            reason: "no match".to_owned(),
                        },
                    };
                    self.cache
                        .lock()
                        .expect("geocode cache poisoned")
                        .insert(text.to_owned(), outcome.clone());
                    return Ok(outcome);
                }
                Err(e) => last_error = Some(e),
            }
        }
        Ok(GeocodeOutcome::Unresolved {
            input_text: text.to_owned(),
            reason: last_error.map(|e| e.to_string()).unwrap_or_default(),
        })
    }
}
