//! Language model backends.

use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use serde::{Deserialize, Serialize};

use super::prompt::{build_prompt, parse_prompt_target, PromptSpec};
use crate::error::{LlmError, RegistryError};
use crate::registry::{BackendStatus, Registry};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            max_tokens: 512,
            temperature: 0.7,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LlmCapabilities {
    /// Safe to issue overlapping requests.
    pub concurrent: bool,
    /// Same prompt and seed give the same text.
    pub honors_seed: bool,
}

#[async_trait]
pub trait LlmClient: Send + Sync {
    fn name(&self) -> &str;

    fn capabilities(&self) -> LlmCapabilities;

    async fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, LlmError>;

    async fn health(&self) -> BackendStatus {
        BackendStatus::Ok
    }
}

/// Builds the prompt for `spec` and returns the model's raw answer markup.
pub async fn generate_raw_answer(
    spec: &PromptSpec,
    client: &dyn LlmClient,
    params: &GenerationParams,
) -> Result<String, LlmError> {
    let prompt = build_prompt(spec);
    let text = client.generate(&prompt, params).await?;
    let text = text.trim();
    if text.is_empty() {
        return Err(LlmError::Refusal);
    }
    Ok(text.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StubMode {
    /// Quotes a seed-dependent run of whole references, each cited.
    Quote,
    /// First sentence of reference 1, cited.
    Echo,
    /// Fluent text with no citations and nothing taken from the references.
    Prose,
    /// Like `Quote`, but the first segment cites an index past the end.
    Miscite,
    Timeout,
    RateLimited,
}

impl StubMode {
    pub const NAMES: [&'static str; 6] =
        ["quote", "echo", "prose", "miscite", "timeout", "ratelimit"];

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "quote" => Self::Quote,
            "echo" => Self::Echo,
            "prose" => Self::Prose,
            "miscite" => Self::Miscite,
            "timeout" => Self::Timeout,
            "ratelimit" => Self::RateLimited,
            _ => return None,
        })
    }
}

/// Deterministic offline model. Reads the references back out of the
/// prompt, so its output depends only on prompt and seed.
#[derive(Debug, Clone)]
pub struct StubLlmClient {
    mode: StubMode,
}

impl StubLlmClient {
    pub fn new(mode: StubMode) -> Self {
        Self { mode }
    }

    fn quote(refs: &[crate::model::Reference], seed: u64, miscite: bool) -> String {
        let n = refs.len();
        let k = n.min(2 + (seed % 3) as usize);
        let start = (seed as usize) % n;
        (0..k)
            .map(|i| {
                let r = &refs[(start + i) % n];
                let cite = if miscite && i == 0 { n as u32 + 4 } else { r.index };
                format!("{}[{}]", r.text.trim(), cite)
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[async_trait]
impl LlmClient for StubLlmClient {
    fn name(&self) -> &str {
        "stub"
    }

    fn capabilities(&self) -> LlmCapabilities {
        LlmCapabilities {
            concurrent: true,
            honors_seed: true,
        }
    }

    async fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, LlmError> {
        let (refs, question) = parse_prompt_target(prompt);
        match self.mode {
            StubMode::Timeout => return Err(LlmError::Timeout),
            StubMode::RateLimited => return Err(LlmError::RateLimited),
            StubMode::Prose => {
                let topic = question.unwrap_or_default();
                let words = topic.split_whitespace().count();
                return Ok(format!(
                    "Honestly it is hard to be sure about that one; people I have asked tend to disagree, and a {words} word question deserves more thought than I can give it here."
                ));
            }
            _ => {}
        }
        if refs.is_empty() {
            return Err(LlmError::Refusal);
        }
        Ok(match self.mode {
            StubMode::Echo => {
                let text = refs[0].text.trim();
                let first = match text.find(['.', '!', '?']) {
                    Some(end) => &text[..=end],
                    None => text,
                };
                format!("{first}[{}]", refs[0].index)
            }
            StubMode::Miscite => Self::quote(&refs, params.seed, true),
            _ => Self::quote(&refs, params.seed, false),
        })
    }
}

/// Text-completion endpoint speaking the common
/// `{"model","prompt","max_tokens","temperature","seed"}` ->
/// `{"choices":[{"text"}]}` protocol.
pub struct HttpLlmClient {
    client: reqwest::Client,
    endpoint: String,
    api_key: Option<String>,
    model: String,
}

impl HttpLlmClient {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        model: impl Into<String>,
        timeout: Duration,
    ) -> Self {
        Self {
            client: reqwest::Client::builder()
                .timeout(timeout)
                .build()
                .expect("http client"),
            endpoint: endpoint.into(),
            api_key,
            model: model.into(),
        }
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    message: Option<Message>,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

#[async_trait]
impl LlmClient for HttpLlmClient {
    fn name(&self) -> &str {
        "http"
    }

    fn capabilities(&self) -> LlmCapabilities {
        // Hosted models rarely guarantee seeded determinism.
        LlmCapabilities {
            concurrent: true,
            honors_seed: false,
        }
    }

    async fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String, LlmError> {
        let body = serde_json::json!({
            "model": self.model,
            "prompt": prompt,
            "max_tokens": params.max_tokens,
            "temperature": params.temperature,
            "seed": params.seed,
        });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::Unreachable(e.to_string())
            }
        })?;
        match resp.status().as_u16() {
            429 => return Err(LlmError::RateLimited),
            408 | 504 => return Err(LlmError::Timeout),
            s if !(200..300).contains(&s) => {
                return Err(LlmError::Unreachable(format!("status {s}")))
            }
            _ => {}
        }
        let parsed: Completion = resp.json().await.map_err(|e| {
            if e.is_timeout() {
                LlmError::Timeout
            } else {
                LlmError::Unreachable(format!("bad completion body: {e}"))
            }
        })?;
        let choice = parsed.choices.into_iter().next().ok_or(LlmError::Refusal)?;
        let text = choice
            .text
            .or(choice.message.map(|m| m.content))
            .unwrap_or_default();
        if text.trim().is_empty() {
            return Err(LlmError::Refusal);
        }
        Ok(text)
    }

    async fn health(&self) -> BackendStatus {
        match self.client.head(&self.endpoint).send().await {
            Ok(_) => BackendStatus::Ok,
            Err(_) => BackendStatus::Unreachable,
        }
    }
}

pub struct UnconfiguredLlm;

#[async_trait]
impl LlmClient for UnconfiguredLlm {
    fn name(&self) -> &str {
        "unconfigured"
    }

    fn capabilities(&self) -> LlmCapabilities {
        LlmCapabilities {
            concurrent: true,
            honors_seed: false,
        }
    }

    async fn generate(&self, _prompt: &str, _params: &GenerationParams) -> Result<String, LlmError> {
        Err(LlmError::Unconfigured)
    }

    async fn health(&self) -> BackendStatus {
        BackendStatus::Unconfigured
    }
}

#[derive(Debug, Clone, Default)]
pub struct LlmEnv {
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
    pub timeout: Option<Duration>,
}

pub const DEFAULT_LLM_TIMEOUT: Duration = Duration::from_secs(60);

/// `stub[:mode]` for the offline model, `http:<model>` for a completion
/// endpoint.
pub fn llm_registry(env: LlmEnv) -> Registry<dyn LlmClient> {
    let env = Arc::new(env);
    let mut reg: Registry<dyn LlmClient> = Registry::new("language model");
    reg.register(
        "stub",
        "deterministic offline model; modes: quote (default), echo, prose, miscite, timeout, ratelimit",
        |arg| {
            let mode = match arg {
                None => StubMode::Quote,
                Some(m) => StubMode::parse(m).ok_or_else(|| {
                    RegistryError::Load(format!(
                        "unknown stub mode `{m}`; known: {}",
                        StubMode::NAMES.join(", ")
                    ))
                })?,
            };
            Ok(Arc::new(StubLlmClient::new(mode)) as Arc<dyn LlmClient>)
        },
    );
    reg.register(
        "http",
        "completion endpoint from LLM_ENDPOINT; argument is the model name",
        move |arg| {
            let model = arg.unwrap_or("default").to_string();
            match &env.endpoint {
                Some(url) => Ok(Arc::new(HttpLlmClient::new(
                    url.clone(),
                    env.api_key.clone(),
                    model,
                    env.timeout.unwrap_or(DEFAULT_LLM_TIMEOUT),
                )) as Arc<dyn LlmClient>),
                None => Ok(Arc::new(UnconfiguredLlm) as Arc<dyn LlmClient>),
            }
        },
    );
    reg
}

/// Maps an `LLM_MODEL` value onto a registry spec: `stub...` names the
/// offline model, anything else is a model served from `LLM_ENDPOINT`.
pub fn model_spec(model: &str) -> String {
    if model == "stub" || model.starts_with("stub:") || model.starts_with("http") {
        model.to_string()
    } else {
        format!("http:{model}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_answer_markup, references_from_texts, Question};

    fn prompt(refs: &[&str]) -> String {
        build_prompt(&PromptSpec::new(
            Question::new("q", "why is it so?").unwrap(),
            references_from_texts(refs),
        ))
    }

    #[tokio::test]
    async fn quote_is_seeded() {
        let c = StubLlmClient::new(StubMode::Quote);
        let p = prompt(&["alpha one.", "beta two.", "gamma three.", "delta four."]);
        let mut params = GenerationParams::default();
        let a = c.generate(&p, &params).await.unwrap();
        assert_eq!(a, c.generate(&p, &params).await.unwrap());
        assert_eq!(a, "alpha one.[1] beta two.[2]");
        params.seed = 1;
        let b = c.generate(&p, &params).await.unwrap();
        assert_eq!(b, "beta two.[2] gamma three.[3] delta four.[4]");
    }

    #[tokio::test]
    async fn echo_cites_first_sentence() {
        let c = StubLlmClient::new(StubMode::Echo);
        let p = prompt(&["Tides follow the moon. The sun matters less.", "other"]);
        let g = GenerationParams::default();
        assert_eq!(c.generate(&p, &g).await.unwrap(), "Tides follow the moon.[1]");
    }

    #[tokio::test]
    async fn miscite_goes_out_of_range() {
        let c = StubLlmClient::new(StubMode::Miscite);
        let raw = c
            .generate(&prompt(&["a b c.", "d e f."]), &GenerationParams::default())
            .await
            .unwrap();
        let ans = parse_answer_markup(&raw);
        assert!(ans.distinct_citations().contains(&6));
    }

    #[tokio::test]
    async fn prose_has_no_citations() {
        let c = StubLlmClient::new(StubMode::Prose);
        let raw = c
            .generate(&prompt(&["a b c."]), &GenerationParams::default())
            .await
            .unwrap();
        assert_eq!(parse_answer_markup(&raw).citation_count(), 0);
    }

    #[tokio::test]
    async fn failure_modes() {
        let p = prompt(&["x"]);
        let g = GenerationParams::default();
        assert_eq!(
            StubLlmClient::new(StubMode::Timeout).generate(&p, &g).await,
            Err(LlmError::Timeout)
        );
        assert_eq!(
            StubLlmClient::new(StubMode::RateLimited).generate(&p, &g).await,
            Err(LlmError::RateLimited)
        );
    }

    #[test]
    fn registry_and_model_names() {
        let reg = llm_registry(LlmEnv::default());
        assert!(reg.build("stub:echo").is_ok());
        assert!(reg.build("stub:nope").is_err());
        assert_eq!(model_spec("stub"), "stub");
        assert_eq!(model_spec("glm-10b"), "http:glm-10b");
    }

    #[tokio::test]
    async fn http_without_endpoint_is_unconfigured() {
        let reg = llm_registry(LlmEnv::default());
        let c = reg.build("http:any").unwrap();
        assert_eq!(c.health().await, BackendStatus::Unconfigured);
    }
}
