//! TimeMap lookups over HTTP.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use statecrawl_core::{parse_timemap, ArchiveBackend, LookupError, UriR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    pub timeout_secs: f64,
    pub attempts: u32,
    /// First retry delay; doubled on each further attempt.
    pub backoff_ms: u64,
    /// Concurrent requests allowed per endpoint host.
    pub per_host: usize,
    /// Minimum gap between request starts on one host.
    pub politeness_ms: u64,
    pub workers: usize,
    pub max_body_bytes: u64,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            timeout_secs: 30.0,
            attempts: 3,
            backoff_ms: 500,
            per_host: 4,
            politeness_ms: 100,
            workers: 8,
            max_body_bytes: 64 * 1024 * 1024,
        }
    }
}

impl LiveConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.timeout_secs.is_finite() && self.timeout_secs > 0.0) {
            return Err("live.timeout_secs must be positive".into());
        }
        if self.attempts == 0 {
            return Err("live.attempts must be at least 1".into());
        }
        if self.per_host == 0 || self.workers == 0 {
            return Err("live.per_host and live.workers must be at least 1".into());
        }
        Ok(())
    }
}

/// `{uri}` in the template is replaced by the canonical URI; without it the
/// URI is appended.
pub fn request_url(endpoint: &str, uri: &UriR) -> String {
    if endpoint.contains("{uri}") {
        endpoint.replace("{uri}", uri.canonical())
    } else {
        format!("{endpoint}{}", uri.canonical())
    }
}

fn host_of(url: &str) -> &str {
    let rest = url.split_once("://").map_or(url, |(_, r)| r);
    rest.split(['/', '?', '#']).next().unwrap_or(rest)
}

#[derive(Default)]
struct Slot {
    active: usize,
    last_start: Option<Instant>,
}

/// Per-host concurrency cap and start spacing.
struct HostGate {
    cap: usize,
    gap: Duration,
    slots: Mutex<BTreeMap<String, Slot>>,
    freed: Condvar,
}

impl HostGate {
    fn acquire(&self, host: &str) {
        let mut slots = self.slots.lock().expect("host gate poisoned");
        loop {
            let slot = slots.entry(host.to_string()).or_default();
            let wait = slot
                .last_start
                .map(|t| self.gap.saturating_sub(t.elapsed()))
                .unwrap_or_default();
            if slot.active < self.cap && wait.is_zero() {
                slot.active += 1;
                slot.last_start = Some(Instant::now());
                return;
            }
            slots = if slot.active < self.cap {
                self.freed.wait_timeout(slots, wait).expect("host gate poisoned").0
            } else {
                self.freed.wait(slots).expect("host gate poisoned")
            };
        }
    }

    fn release(&self, host: &str) {
        let mut slots = self.slots.lock().expect("host gate poisoned");
        if let Some(slot) = slots.get_mut(host) {
            slot.active -= 1;
        }
        self.freed.notify_all();
    }
}

pub struct LiveArchive {
    agent: ureq::Agent,
    endpoint: String,
    config: LiveConfig,
    gate: HostGate,
    requests: AtomicU64,
}

enum Attempt {
    Done(Result<u64, LookupError>),
    Retry(LookupError),
}

impl LiveArchive {
    pub fn new(endpoint: impl Into<String>, config: LiveConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            endpoint: endpoint.into(),
            gate: HostGate {
                cap: config.per_host.max(1),
                gap: Duration::from_millis(config.politeness_ms),
                slots: Mutex::new(BTreeMap::new()),
                freed: Condvar::new(),
            },
            config,
            requests: AtomicU64::new(0),
        }
    }

    /// HTTP requests issued so far, retries included.
    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    fn attempt(&self, url: &str, uri: &UriR) -> Attempt {
        let host = host_of(url);
        self.gate.acquire(host);
        self.requests.fetch_add(1, Ordering::Relaxed);
        let outcome = self.agent.get(url).call();
        self.gate.release(host);
        let mut response = match outcome {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(LookupError::Network(e.to_string())),
        };
        match response.status().as_u16() {
            200 => {
                let body = response
                    .body_mut()
                    .with_config()
                    .limit(self.config.max_body_bytes)
                    .read_to_string();
                match body {
                    Ok(text) => Attempt::Done(
                        parse_timemap(&text, uri.clone())
                            .map(|tm| tm.memento_count())
                            .map_err(LookupError::Parse),
                    ),
                    Err(e) => Attempt::Retry(LookupError::Network(e.to_string())),
                }
            }
            404 => Attempt::Done(Ok(0)),
            code @ (429 | 500..=599) => Attempt::Retry(LookupError::Status(code)),
            code => Attempt::Done(Err(LookupError::Status(code))),
        }
    }
}

impl ArchiveBackend for LiveArchive {
    fn lookup(&self, uri: &UriR) -> Result<u64, LookupError> {
        let url = request_url(&self.endpoint, uri);
        let mut delay = Duration::from_millis(self.config.backoff_ms);
        let mut last = LookupError::Backend("no attempts made".into());
        for attempt in 0..self.config.attempts {
            if attempt > 0 {
                thread::sleep(delay);
                delay *= 2;
            }
            match self.attempt(&url, uri) {
                Attempt::Done(result) => return result,
                Attempt::Retry(e) => {
                    log::debug!("{url}: attempt {} failed: {e}", attempt + 1);
                    last = e;
                }
            }
        }
        Err(last)
    }

    fn lookup_all(&self, uris: &[UriR]) -> Vec<Result<u64, LookupError>> {
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<Option<Result<u64, LookupError>>>> = Mutex::new(vec![None; uris.len()]);
        let workers = self.config.workers.clamp(1, uris.len().max(1));
        thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(uri) = uris.get(i) else { break };
                    let result = self.lookup(uri);
                    results.lock().expect("results poisoned")[i] = Some(result);
                });
            }
        });
        results
            .into_inner()
            .expect("results poisoned")
            .into_iter()
            .map(|r| r.expect("every index visited"))
            .collect()
    }
}
