//! Coarse web search: question in, candidate page URLs out.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::Deserialize;

use crate::error::{RegistryError, SearchError};
use crate::fixtures;
use crate::model::Question;
use crate::registry::{require_arg, BackendStatus, Registry};

pub const DEFAULT_MAX_RESULTS: usize = 10;

#[async_trait]
pub trait SearchProvider: Send + Sync {
    fn name(&self) -> &str;

    /// Ordered URL list for `query`, at most `max_results` long.
    async fn search(&self, query: &str, max_results: usize) -> Result<Vec<String>, SearchError>;

    /// Must not issue a billable query.
    async fn health(&self) -> BackendStatus {
        BackendStatus::Ok
    }
}

/// Runs the provider, deduplicates URLs keeping first occurrence, and
/// truncates to `max_results`.
pub async fn search(
    question: &Question,
    provider: &dyn SearchProvider,
    max_results: usize,
) -> Result<Vec<String>, SearchError> {
    let raw = provider.search(&question.text, max_results).await?;
    let mut seen = HashSet::new();
    Ok(raw
        .into_iter()
        .filter(|u| seen.insert(u.clone()))
        .take(max_results)
        .collect())
}

/// Canned query → URLs mapping. The `*` key, when present, answers any
/// query not listed explicitly.
#[derive(Debug, Clone, Default)]
pub struct FixtureSearchProvider {
    results: HashMap<String, Vec<String>>,
    delay: Option<Duration>,
}

impl FixtureSearchProvider {
    pub fn new(results: HashMap<String, Vec<String>>) -> Self {
        Self {
            results,
            delay: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| RegistryError::Load(format!("{}: {e}", path.display())))?;
        let results: HashMap<String, Vec<String>> = serde_json::from_str(&raw)
            .map_err(|e| RegistryError::Load(format!("{}: {e}", path.display())))?;
        Ok(Self::new(results))
    }

    /// Answers every query with the built-in demo corpus.
    pub fn builtin() -> Self {
        let mut results = HashMap::new();
        results.insert("*".to_string(), fixtures::builtin_urls());
        Self::new(results)
    }

    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = Some(delay);
        self
    }
}

#[async_trait]
impl SearchProvider for FixtureSearchProvider {
    fn name(&self) -> &str {
        "fixture"
    }

    async fn search(&self, query: &str, _max_results: usize) -> Result<Vec<String>, SearchError> {
        if let Some(d) = self.delay {
            tokio::time::sleep(d).await;
        }
        Ok(self
            .results
            .get(query)
            .or_else(|| self.results.get("*"))
            .cloned()
            .unwrap_or_default())
    }
}

/// JSON-over-HTTP search backend.
///
/// Issues `GET <endpoint>?q=<query>&count=<n>` with a bearer key and accepts
/// either a bare array of URLs, `{"urls": [...]}`, or
/// `{"results": [{"url": ...}, ...]}`.
pub struct HttpSearchProvider {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::Client,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SearchResponse {
    Plain(Vec<String>),
    Urls { urls: Vec<String> },
    Results { results: Vec<SearchHit> },
}

#[derive(Deserialize)]
struct SearchHit {
    url: String,
}

impl HttpSearchProvider {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .expect("http client builds");
        Self {
            endpoint: endpoint.into(),
            api_key,
            client,
        }
    }
}

#[async_trait]
impl SearchProvider for HttpSearchProvider {
    fn name(&self) -> &str {
        "http"
    }

    async fn search(&self, query: &str, max_results: usize) -> Result<Vec<String>, SearchError> {
        let mut req = self
            .client
            .get(&self.endpoint)
            .query(&[("q", query), ("count", &max_results.to_string())]);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .await
            .map_err(|e| SearchError::Unreachable(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            return Err(SearchError::QuotaExceeded);
        }
        if !status.is_success() {
            return Err(SearchError::Unreachable(format!("status {status}")));
        }
        let body: SearchResponse = resp
            .json()
            .await
            .map_err(|e| SearchError::InvalidResponse(e.to_string()))?;
        Ok(match body {
            SearchResponse::Plain(urls) | SearchResponse::Urls { urls } => urls,
            SearchResponse::Results { results } => results.into_iter().map(|h| h.url).collect(),
        })
    }

    async fn health(&self) -> BackendStatus {
        match self.client.head(&self.endpoint).send().await {
            Ok(_) => BackendStatus::Ok,
            Err(_) => BackendStatus::Unreachable,
        }
    }
}

/// Placeholder used when no provider is configured.
pub struct UnconfiguredSearch;

#[async_trait]
impl SearchProvider for UnconfiguredSearch {
    fn name(&self) -> &str {
        "unconfigured"
    }

    async fn search(&self, _query: &str, _max: usize) -> Result<Vec<String>, SearchError> {
        Err(SearchError::Unreachable("no search provider configured".into()))
    }

    async fn health(&self) -> BackendStatus {
        BackendStatus::Unconfigured
    }
}

pub struct SearchEnv {
    pub url: Option<String>,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

pub fn search_registry(env: SearchEnv) -> Registry<dyn SearchProvider> {
    let env = Arc::new(env);
    let mut reg: Registry<dyn SearchProvider> = Registry::new("search provider");
    reg.register("stub", "built-in demo corpus for any query", |_| {
        Ok(Arc::new(FixtureSearchProvider::builtin()))
    });
    reg.register("fixture", "JSON file {\"query\": [urls]}", |arg| {
        let path = require_arg("search provider", "fixture", arg)?;
        Ok(Arc::new(FixtureSearchProvider::load(Path::new(path))?))
    });
    let http_env = env.clone();
    reg.register("http", "HTTP provider at SEARCH_PROVIDER_URL (or http:<url>)", move |arg| {
        let url = arg.map(str::to_string).or_else(|| http_env.url.clone());
        Ok(match url {
            Some(url) => Arc::new(HttpSearchProvider::new(
                url,
                http_env.api_key.clone(),
                http_env.timeout,
            )),
            None => Arc::new(UnconfiguredSearch),
        })
    });
    reg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(text: &str) -> Question {
        Question::new("1", text).unwrap()
    }

    #[tokio::test]
    async fn dedups_in_order() {
        let mut m = HashMap::new();
        m.insert("q".to_string(), vec!["u1".into(), "u2".into(), "u2".into()]);
        let p = FixtureSearchProvider::new(m);
        assert_eq!(search(&q("q"), &p, 10).await.unwrap(), ["u1", "u2"]);
    }

    #[tokio::test]
    async fn truncates() {
        let mut m = HashMap::new();
        m.insert("*".to_string(), (0..10).map(|i| format!("u{i}")).collect());
        let p = FixtureSearchProvider::new(m);
        assert_eq!(search(&q("any"), &p, 3).await.unwrap(), ["u0", "u1", "u2"]);
    }

    #[tokio::test]
    async fn unconfigured_is_an_error() {
        let err = search(&q("x"), &UnconfiguredSearch, 3).await.unwrap_err();
        assert!(matches!(err, SearchError::Unreachable(_)));
    }
}
