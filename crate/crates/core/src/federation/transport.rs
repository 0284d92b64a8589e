use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use chrono::{DateTime, TimeDelta, Utc};

use crate::catalogue::{ApiRequest, Catalogue};

/// Status, lowercase headers and body of a remote response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportResponse {
    pub status: u16,
    pub headers: Vec<(String, String)>,
    pub body: Vec<u8>,
}

impl TransportResponse {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("cannot reach {url}: {message}")]
pub struct TransportError {
    pub url: String,
    pub message: String,
}

/// GET access to peer catalogues.
pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<TransportResponse, TransportError>;
}

/// Blocking HTTP client. Must not be called from inside an async runtime.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> HttpTransport {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .expect("HTTP client without TLS always builds");
        HttpTransport { client }
    }
}

impl Default for HttpTransport {
    fn default() -> Self {
        HttpTransport::new(Duration::from_secs(30))
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<TransportResponse, TransportError> {
        let fail = |e: reqwest::Error| TransportError {
            url: url.to_owned(),
            message: e.to_string(),
        };
        let resp = self.client.get(url).send().map_err(fail)?;
        let status = resp.status().as_u16();
        let headers = resp
            .headers()
            .iter()
            .filter_map(|(k, v)| Some((k.as_str().to_owned(), v.to_str().ok()?.to_owned())))
            .collect();
        let body = resp.bytes().map_err(fail)?.to_vec();
        Ok(TransportResponse { status, headers, body })
    }
}

/// Routes requests straight to catalogues registered under their base URL,
/// so several nodes can talk to each other inside one process.
#[derive(Default)]
pub struct InProcessTransport {
    nodes: RwLock<BTreeMap<String, Arc<Catalogue>>>,
    requests: AtomicUsize,
}

impl InProcessTransport {
    pub fn new() -> InProcessTransport {
        InProcessTransport::default()
    }

    pub fn register(&self, base_url: &str, catalogue: Arc<Catalogue>) {
        self.nodes
            .write()
            .expect("transport lock")
            .insert(base_url.trim_end_matches('/').to_owned(), catalogue);
    }

    /// Number of requests served so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

impl Transport for InProcessTransport {
    fn get(&self, url: &str) -> Result<TransportResponse, TransportError> {
        self.requests.fetch_add(1, Ordering::SeqCst);
        let nodes = self.nodes.read().expect("transport lock");
        let found = nodes.iter().find_map(|(base, c)| {
            let rest = url.strip_prefix(base.as_str())?;
            (rest.is_empty() || rest.starts_with('/')).then_some((rest, c))
        });
        let Some((rest, catalogue)) = found else {
            return Err(TransportError {
                url: url.to_owned(),
                message: "no node registered at this address".into(),
            });
        };
        let resp = catalogue.handle(&ApiRequest::get(rest));
        Ok(TransportResponse {
            status: resp.status,
            headers: resp.headers,
            body: resp.body,
        })
    }
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock(Mutex<DateTime<Utc>>);

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> ManualClock {
        ManualClock(Mutex::new(start))
    }

    pub fn advance(&self, seconds: i64) {
        *self.0.lock().expect("clock lock") += TimeDelta::seconds(seconds);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.0.lock().expect("clock lock")
    }
}
