//! Bounded-concurrency page fetching with per-request timeouts.

use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};

use crate::error::RegistryError;
use crate::fixtures;
use crate::registry::{require_arg, BackendStatus, Registry};

pub const DEFAULT_FETCH_TIMEOUT: Duration = Duration::from_secs(5);
pub const DEFAULT_MAX_PARALLEL: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PageStatus {
    Ok,
    Timeout,
    /// `code` is the HTTP status, absent for transport failures.
    Error { code: Option<u16> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawPage {
    pub url: String,
    pub status: PageStatus,
    /// Present exactly when `status` is `Ok`.
    pub body: Option<String>,
    /// Seconds spent on this request.
    pub latency: f64,
}

impl RawPage {
    pub fn ok(url: impl Into<String>, body: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            status: PageStatus::Ok,
            body: Some(body.into()),
            latency: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageError {
    pub code: Option<u16>,
    pub message: String,
}

#[async_trait]
pub trait PageSource: Send + Sync {
    fn name(&self) -> &str;

    async fn get(&self, url: &str) -> Result<String, PageError>;

    async fn health(&self) -> BackendStatus {
        BackendStatus::Ok
    }
}

/// Fetches every URL, at most `max_parallel` in flight, each bounded by
/// `timeout`. Output is in input order with one page per URL; failures are
/// reported per page and never abort the batch.
pub async fn fetch_all(
    urls: &[String],
    source: &dyn PageSource,
    timeout: Duration,
    max_parallel: usize,
) -> Vec<RawPage> {
    stream::iter(urls.iter().cloned())
        .map(|url| async move {
            let start = Instant::now();
            let outcome = tokio::time::timeout(timeout, source.get(&url)).await;
            let latency = start.elapsed().as_secs_f64();
            let (status, body) = match outcome {
                Ok(Ok(body)) => (PageStatus::Ok, Some(body)),
                Ok(Err(e)) => (PageStatus::Error { code: e.code }, None),
                Err(_) => (PageStatus::Timeout, None),
            };
            RawPage {
                url,
                status,
                body,
                latency,
            }
        })
        .buffered(max_parallel.max(1))
        .collect()
        .await
}

pub struct HttpPageSource {
    client: reqwest::Client,
}

impl HttpPageSource {
    pub fn new(timeout: Duration) -> Self {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("webglm/", env!("CARGO_PKG_VERSION")))
            .build()
            .expect("http client builds");
        Self { client }
    }
}

#[async_trait]
impl PageSource for HttpPageSource {
    fn name(&self) -> &str {
        "http"
    }

    async fn get(&self, url: &str) -> Result<String, PageError> {
        let resp = self.client.get(url).send().await.map_err(|e| PageError {
            code: e.status().map(|s| s.as_u16()),
            message: e.to_string(),
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(PageError {
                code: Some(status.as_u16()),
                message: format!("status {status}"),
            });
        }
        resp.text().await.map_err(|e| PageError {
            code: None,
            message: e.to_string(),
        })
    }
}

/// In-memory pages keyed by URL, with optional artificial latency.
#[derive(Debug, Clone, Default)]
pub struct FixturePageSource {
    pages: HashMap<String, String>,
    delays: HashMap<String, Duration>,
    default_delay: Option<Duration>,
}

impl FixturePageSource {
    pub fn new(pages: HashMap<String, String>) -> Self {
        Self {
            pages,
            ..Self::default()
        }
    }

    pub fn builtin() -> Self {
        Self::new(fixtures::builtin_pages().into_iter().collect())
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| RegistryError::Load(format!("{}: {e}", path.display())))?;
        let pages: HashMap<String, String> = serde_json::from_str(&raw)
            .map_err(|e| RegistryError::Load(format!("{}: {e}", path.display())))?;
        Ok(Self::new(pages))
    }

    pub fn with_delay(mut self, url: impl Into<String>, delay: Duration) -> Self {
        self.delays.insert(url.into(), delay);
        self
    }

    pub fn with_default_delay(mut self, delay: Duration) -> Self {
        self.default_delay = Some(delay);
        self
    }
}

#[async_trait]
impl PageSource for FixturePageSource {
    fn name(&self) -> &str {
        "fixture"
    }

    async fn get(&self, url: &str) -> Result<String, PageError> {
        if let Some(d) = self.delays.get(url).copied().or(self.default_delay) {
            tokio::time::sleep(d).await;
        }
        self.pages.get(url).cloned().ok_or(PageError {
            code: Some(404),
            message: format!("no fixture page for {url}"),
        })
    }
}

pub fn page_source_registry(timeout: Duration) -> Registry<dyn PageSource> {
    let mut reg: Registry<dyn PageSource> = Registry::new("page source");
    reg.register("http", "live HTTP(S) fetching", move |_| {
        Ok(Arc::new(HttpPageSource::new(timeout)))
    });
    reg.register("stub", "built-in demo pages", |_| {
        Ok(Arc::new(FixturePageSource::builtin()))
    });
    reg.register("fixture", "JSON file {\"url\": \"html\"}", |arg| {
        let path = require_arg("page source", "fixture", arg)?;
        Ok(Arc::new(FixturePageSource::load(Path::new(path))?))
    });
    reg
}
