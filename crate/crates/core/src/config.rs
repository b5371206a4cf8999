//! Runtime settings: TOML file, then environment, then command-line flags.
//! Backends are named by registry spec strings and built from here.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::bootstrap::llm::{llm_registry, model_spec, LlmClient, LlmEnv};
use crate::bootstrap::BootstrapConfig;
use crate::clock::{Clock, FrozenClock, SystemClock};
use crate::error::{FormatError, RegistryError};
use crate::preference::scorer::{scorer_registry, AnswerScorer};
use crate::retriever::fetch::page_source_registry;
use crate::retriever::rank::ranker_registry;
use crate::retriever::search::{search_registry, SearchEnv};
use crate::retriever::{Retriever, RetrieverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSettings {
    /// `stub`, `fixture:<path>` or `http[:<url>]`.
    pub provider: String,
    pub url: Option<String>,
    pub api_key: Option<String>,
    pub max_results: usize,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            provider: "http".into(),
            url: None,
            api_key: None,
            max_results: crate::retriever::search::DEFAULT_MAX_RESULTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchSettings {
    /// `http`, `stub` or `fixture:<path>`.
    pub source: String,
    pub timeout_ms: u64,
    pub max_parallel: usize,
}

impl Default for FetchSettings {
    fn default() -> Self {
        Self {
            source: "http".into(),
            timeout_ms: crate::retriever::fetch::DEFAULT_FETCH_TIMEOUT.as_millis() as u64,
            max_parallel: crate::retriever::fetch::DEFAULT_MAX_PARALLEL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankSettings {
    /// `bm25`, `tfidf` or `dense:<path>`.
    pub ranker: String,
    pub top_k: usize,
}

impl Default for RankSettings {
    fn default() -> Self {
        Self {
            ranker: "bm25".into(),
            top_k: crate::retriever::rank::DEFAULT_TOP_K,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSettings {
    /// `stub[:mode]`, or a model name served at `endpoint`.
    pub model: Option<String>,
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
    pub timeout_ms: u64,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self {
            model: None,
            endpoint: None,
            api_key: None,
            timeout_ms: crate::bootstrap::llm::DEFAULT_LLM_TIMEOUT.as_millis() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceSettings {
    pub bind: String,
    pub log_path: Option<PathBuf>,
    pub n_candidates: usize,
    /// Report every stage time as zero so responses are reproducible.
    pub frozen_clock: bool,
}

impl Default for ServiceSettings {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            log_path: None,
            n_candidates: 4,
            frozen_clock: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    pub seed: u64,
    pub search: SearchSettings,
    pub fetch: FetchSettings,
    pub rank: RankSettings,
    pub llm: LlmSettings,
    /// `stub` or `linear:<path>`.
    pub scorer: Option<String>,
    pub service: ServiceSettings,
    pub bootstrap: BootstrapConfig,
}

pub const ENV_VARS: [&str; 9] = [
    "SEARCH_PROVIDER_URL",
    "SEARCH_API_KEY",
    "FETCH_TIMEOUT_MS",
    "MAX_PARALLEL_FETCH",
    "TOP_K",
    "LLM_ENDPOINT",
    "LLM_API_KEY",
    "LLM_MODEL",
    "LOG_PATH",
];

fn parse_num<T: std::str::FromStr>(var: &str, value: &str) -> Result<T, FormatError> {
    value
        .trim()
        .parse()
        .map_err(|_| FormatError::Invalid(format!("{var}: `{value}` is not a valid number")))
}

impl Settings {
    pub fn from_toml(text: &str) -> Result<Self, FormatError> {
        toml::from_str(text).map_err(|e| FormatError::Invalid(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FormatError::Invalid(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Overrides fields from the documented environment variables. Empty
    /// values are ignored.
    pub fn apply_env<F>(&mut self, get: F) -> Result<(), FormatError>
    where
        F: Fn(&str) -> Option<String>,
    {
        let get = |k: &str| get(k).filter(|v| !v.trim().is_empty());
        if let Some(v) = get("SEARCH_PROVIDER_URL") {
            self.search.url = Some(v);
        }
        if let Some(v) = get("SEARCH_API_KEY") {
            self.search.api_key = Some(v);
        }
        if let Some(v) = get("FETCH_TIMEOUT_MS") {
            self.fetch.timeout_ms = parse_num("FETCH_TIMEOUT_MS", &v)?;
        }
        if let Some(v) = get("MAX_PARALLEL_FETCH") {
            self.fetch.max_parallel = parse_num("MAX_PARALLEL_FETCH", &v)?;
        }
        if let Some(v) = get("TOP_K") {
            self.rank.top_k = parse_num("TOP_K", &v)?;
        }
        if let Some(v) = get("LLM_ENDPOINT") {
            self.llm.endpoint = Some(v);
        }
        if let Some(v) = get("LLM_API_KEY") {
            self.llm.api_key = Some(v);
        }
        if let Some(v) = get("LLM_MODEL") {
            self.llm.model = Some(v);
        }
        if let Some(v) = get("LOG_PATH") {
            self.service.log_path = Some(PathBuf::from(v));
        }
        Ok(())
    }

    pub fn apply_process_env(&mut self) -> Result<(), FormatError> {
        self.apply_env(|k| std::env::var(k).ok())
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        let positive = [
            ("fetch.timeout_ms", self.fetch.timeout_ms as usize),
            ("fetch.max_parallel", self.fetch.max_parallel),
            ("rank.top_k", self.rank.top_k),
            ("search.max_results", self.search.max_results),
            ("service.n_candidates", self.service.n_candidates),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(FormatError::Invalid(format!("{name} must be at least 1")));
            }
        }
        self.bootstrap.filter.validate()
    }

    pub fn retriever_config(&self) -> RetrieverConfig {
        RetrieverConfig {
            max_results: self.search.max_results,
            fetch_timeout: Duration::from_millis(self.fetch.timeout_ms),
            max_parallel: self.fetch.max_parallel,
            top_k: self.rank.top_k,
        }
    }

    pub fn clock(&self) -> Arc<dyn Clock> {
        if self.service.frozen_clock {
            Arc::new(FrozenClock)
        } else {
            Arc::new(SystemClock::new())
        }
    }

    pub fn build_retriever(&self) -> Result<Retriever, RegistryError> {
        let cfg = self.retriever_config();
        let search = search_registry(SearchEnv {
            url: self.search.url.clone(),
            api_key: self.search.api_key.clone(),
            timeout: cfg.fetch_timeout,
        })
        .build(&self.search.provider)?;
        let pages = page_source_registry(cfg.fetch_timeout).build(&self.fetch.source)?;
        let ranker = ranker_registry().build(&self.rank.ranker)?;
        Ok(Retriever::new(search, pages, ranker, cfg).with_clock(self.clock()))
    }

    /// Without a model name, an endpoint implies its default model and no
    /// endpoint leaves the model unconfigured.
    pub fn build_llm(&self) -> Result<Arc<dyn LlmClient>, RegistryError> {
        let reg = llm_registry(LlmEnv {
            endpoint: self.llm.endpoint.clone(),
            api_key: self.llm.api_key.clone(),
            timeout: Some(Duration::from_millis(self.llm.timeout_ms)),
        });
        let spec = match &self.llm.model {
            Some(m) => model_spec(m),
            None => "http".to_string(),
        };
        reg.build(&spec)
    }

    pub fn build_scorer(&self) -> Result<Arc<dyn AnswerScorer>, RegistryError> {
        scorer_registry().build(self.scorer.as_deref().unwrap_or("stub"))
    }
}
