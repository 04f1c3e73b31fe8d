//! Backend dispatch with caching, replay and request throttling.

use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde_json::json;

use super::backend::{BackendConfig, BackendKind};
use super::cache::TranscriptCache;
use super::mock::{mock_noisy_respond_detailed, oracle_response, Script};
use super::prompt::Prompt;
use super::{http, ErrorRecord, QueryError, Transcript};
use crate::floorplan::{ConnectivityGraph, NavTask};
use crate::grammar::{parse_response, Profile};

/// What a query is about. Mocks answer from the graph; the HTTP backend
/// only sees the prompt.
#[derive(Debug, Clone, Copy)]
pub struct QueryContext<'a> {
    pub graph: &'a ConnectivityGraph,
    pub task: &'a NavTask,
    pub trial: u32,
    pub profile: Profile,
}

struct TokenBucket {
    rate: f64,
    tokens: f64,
    last: Instant,
}

struct Limiter {
    max_in_flight: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
    bucket: Option<Mutex<TokenBucket>>,
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().unwrap() -= 1;
        self.0.freed.notify_one();
    }
}

impl Limiter {
    fn new(max_in_flight: usize, rate: Option<f64>) -> Self {
        Self {
            max_in_flight: max_in_flight.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            bucket: rate.map(|rate| {
                Mutex::new(TokenBucket {
                    rate,
                    tokens: 1.0,
                    last: Instant::now(),
                })
            }),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap();
        while *n >= self.max_in_flight {
            n = self.freed.wait(n).unwrap();
        }
        *n += 1;
        drop(n);
        if let Some(bucket) = &self.bucket {
            loop {
                let mut b = bucket.lock().unwrap();
                let now = Instant::now();
                b.tokens = (b.tokens + now.duration_since(b.last).as_secs_f64() * b.rate).min(1.0);
                b.last = now;
                if b.tokens >= 1.0 {
                    b.tokens -= 1.0;
                    break;
                }
                let wait = Duration::from_secs_f64((1.0 - b.tokens) / b.rate);
                drop(b);
                std::thread::sleep(wait);
            }
        }
        Permit(self)
    }
}

/// Shareable across threads; each query is independent.
pub struct VlmClient {
    backend: BackendConfig,
    backend_id: String,
    cache: Option<TranscriptCache>,
    replay: bool,
    script: Option<Script>,
    http: Option<reqwest::blocking::Client>,
    limiter: Limiter,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl VlmClient {
    /// `replay` serves only cached transcripts and never touches a backend.
    pub fn new(backend: BackendConfig, cache: Option<TranscriptCache>, replay: bool) -> Result<Self, QueryError> {
        backend.validate()?;
        if replay && cache.is_none() {
            return Err(QueryError::BadConfig("replay needs a transcript cache".into()));
        }
        let script = match (&backend.kind, &backend.script) {
            (BackendKind::MockScripted, Some(path)) if !replay => Some(Script::load(path)?),
            _ => None,
        };
        let http = if backend.kind == BackendKind::HttpChat && !replay {
            Some(
                reqwest::blocking::Client::builder()
                    .timeout(Duration::from_secs_f64(backend.timeout_secs))
                    .build()
                    .map_err(|e| QueryError::BadConfig(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(Self {
            backend_id: backend.identity(),
            limiter: Limiter::new(backend.in_flight, backend.requests_per_second),
            backend,
            cache,
            replay,
            script,
            http,
        })
    }

    pub fn backend(&self) -> &BackendConfig {
        &self.backend
    }

    pub fn backend_id(&self) -> &str {
        &self.backend_id
    }

    /// Cached transcript if there is one; otherwise asks the backend and
    /// caches the result unless the exchange failed. Transport-level failures
    /// come back inside the transcript's `error`, never as a panic.
    pub fn query(&self, prompt: &Prompt, ctx: &QueryContext<'_>) -> Result<Transcript, QueryError> {
        if let Some(cache) = &self.cache {
            if let Some(t) = cache.get(&prompt.hash, &self.backend_id, ctx.trial) {
                return Ok(t);
            }
            if self.replay {
                return Err(QueryError::ReplayMiss {
                    path: cache.path(&prompt.hash, &self.backend_id, ctx.trial).display().to_string(),
                });
            }
        }

        let started = Instant::now();
        let (request, result, attempts) = self.dispatch(prompt, ctx);
        // Mocks leave the clock out so their transcripts are reproducible.
        let live = !self.backend.kind.is_mock();
        let mut transcript = Transcript {
            prompt_hash: prompt.hash.clone(),
            backend_id: self.backend_id.clone(),
            task_key: ctx.task.key(),
            trial: ctx.trial,
            request,
            response_text: None,
            parsed: None,
            parse_error: None,
            error: None,
            attempts,
            latency_ms: if live { started.elapsed().as_millis() as u64 } else { 0 },
            timestamp_ms: if live { now_ms() } else { 0 },
        };
        match result {
            Ok(text) => {
                match parse_response(&text, ctx.profile) {
                    Ok(plan) => transcript.parsed = Some(plan),
                    Err(e) => transcript.parse_error = Some(e.to_string()),
                }
                transcript.response_text = Some(text);
                if let Some(cache) = &self.cache {
                    cache.put(&transcript)?;
                }
            }
            Err(e) => {
                log::warn!("query {} trial {} failed: {e}", ctx.task.key(), ctx.trial);
                transcript.error = Some(ErrorRecord::from(&e));
            }
        }
        Ok(transcript)
    }

    fn dispatch(&self, prompt: &Prompt, ctx: &QueryContext<'_>) -> (serde_json::Value, Result<String, QueryError>, u32) {
        let mock_request = || {
            json!({
                "backend": self.backend.kind.as_str(),
                "task": ctx.task.key(),
                "trial": ctx.trial,
            })
        };
        match self.backend.kind {
            BackendKind::MockOracle => (mock_request(), oracle_response(ctx.graph, ctx.task), 1),
            BackendKind::MockNoisy => {
                let p = self.backend.p_error_for(ctx.task.difficulty);
                let seed = self.backend.seed.unwrap_or_default();
                let result =
                    mock_noisy_respond_detailed(ctx.task, ctx.graph, seed, ctx.trial, p, &self.backend.corruptions)
                        .map(|(text, _)| text);
                (mock_request(), result, 1)
            }
            BackendKind::MockScripted => {
                let script = self.script.as_ref().expect("script loaded for scripted backend");
                (mock_request(), script.respond(ctx.task, ctx.trial), 1)
            }
            BackendKind::HttpChat => {
                let request = http::request_body(&self.backend, prompt, false);
                let var = self.backend.credential_env.clone().unwrap_or_default();
                let credential = match std::env::var(&var) {
                    Ok(c) if !c.is_empty() => c,
                    _ => return (request, Err(QueryError::MissingCredential(var)), 0),
                };
                let _permit = self.limiter.acquire();
                let client = self.http.as_ref().expect("http client built for http backend");
                let exchange = http::send(client, &self.backend, prompt, &credential);
                (request, exchange.result, exchange.attempts)
            }
        }
    }
}
