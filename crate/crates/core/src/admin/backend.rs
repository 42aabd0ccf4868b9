//! Respondent backends: the trait, an OpenAI-style chat-completions HTTP
//! client, and a replay backend that re-serves stored transcripts.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admin::store::TranscriptStore;
use crate::admin::{Decoding, PromptTemplateId, Questionnaire};
use crate::corpus::{ItemId, Language};

/// Everything a backend may need to answer one run.
#[derive(Debug)]
pub struct BackendRequest<'a> {
    pub respondent_id: &'a str,
    pub questionnaire: Questionnaire,
    pub prompt_id: PromptTemplateId,
    pub run_index: u32,
    pub language: Language,
    pub decoding: Decoding,
    /// The fully rendered prompt to send.
    pub prompt_text: &'a str,
    /// Items the prompt covers, in prompt order.
    pub item_ids: &'a [ItemId],
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("HTTP {status}: {detail}")]
    Http { status: u16, detail: String },

    #[error("network error: {0}")]
    Network(String),

    #[error("malformed backend response: {0}")]
    Protocol(String),

    #[error("no stored run for {respondent_id}/{questionnaire}/{prompt_id}-{run_index}")]
    ReplayExhausted {
        respondent_id: String,
        questionnaire: Questionnaire,
        prompt_id: PromptTemplateId,
        run_index: u32,
    },

    #[error("{0}")]
    Other(String),
}

impl BackendError {
    /// Whether another attempt at the same run could plausibly succeed.
    pub fn is_retriable(&self) -> bool {
        match self {
            BackendError::Http { status, .. } => *status == 429 || *status >= 500,
            BackendError::Network(_) => true,
            BackendError::Protocol(_) => false,
            BackendError::ReplayExhausted { .. } => false,
            BackendError::Other(_) => false,
        }
    }
}

/// A questionnaire respondent. Implementations must either tolerate
/// concurrent `answer` calls or declare `max_parallelism` of 1.
pub trait RespondentBackend: Send + Sync {
    fn answer(&self, request: &BackendRequest) -> Result<String, BackendError>;

    fn max_parallelism(&self) -> usize {
        1
    }
}

/// Connection settings for [`HttpBackend`]. The auth token is referenced by
/// environment-variable name and read at request time; the value itself is
/// never stored or serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    /// Full chat-completions endpoint URL.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token, if the
    /// endpoint needs one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_max_parallelism")]
    pub max_parallelism: usize,
    /// Retries inside one `answer` call for rate limits and server errors.
    #[serde(default = "default_max_retries")]
    pub max_retries: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_prompt: Option<String>,
}

fn default_timeout_secs() -> u64 {
    120
}

fn default_max_parallelism() -> usize {
    4
}

fn default_max_retries() -> u32 {
    3
}

/// Blocking chat-completions client. Sends each prompt as a fresh
/// single-message conversation and returns the first choice's content.
pub struct HttpBackend {
    config: BackendConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    fn bearer_token(&self) -> Result<Option<String>, BackendError> {
        match &self.config.auth_env {
            None => Ok(None),
            Some(name) => match std::env::var(name) {
                Ok(value) => Ok(Some(value)),
                Err(_) => Err(BackendError::Other(format!(
                    "auth environment variable {name} is not set"
                ))),
            },
        }
    }

    fn send_once(&self, body: &serde_json::Value) -> Result<String, BackendError> {
        let mut request = self.agent.post(&self.config.endpoint);
        if let Some(token) = self.bearer_token()? {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = request
            .send_json(body)
            .map_err(|e| BackendError::Network(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Network(e.to_string()))?;
        if !(200..300).contains(&status) {
            let detail: String = text.chars().take(300).collect();
            return Err(BackendError::Http { status, detail });
        }
        let parsed: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| BackendError::Protocol(format!("response is not JSON: {e}")))?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| {
                BackendError::Protocol("response lacks choices[0].message.content".into())
            })
    }
}

impl RespondentBackend for HttpBackend {
    fn answer(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let mut messages = Vec::new();
        if let Some(system) = &self.config.system_prompt {
            messages.push(serde_json::json!({"role": "system", "content": system}));
        }
        messages.push(serde_json::json!({"role": "user", "content": request.prompt_text}));
        let mut body = serde_json::json!({
            "model": self.config.model,
            "messages": messages,
        });
        if let Some(t) = request.decoding.temperature {
            body["temperature"] = serde_json::json!(t);
        }
        if let Some(m) = request.decoding.max_tokens {
            body["max_tokens"] = serde_json::json!(m);
        }

        let mut delay = Duration::from_millis(100);
        let mut last = None;
        for attempt in 0..=self.config.max_retries {
            match self.send_once(&body) {
                Ok(reply) => return Ok(reply),
                Err(e) => {
                    let retriable = e.is_retriable();
                    last = Some(e);
                    if !retriable || attempt == self.config.max_retries {
                        break;
                    }
                    std::thread::sleep(delay);
                    delay = (delay * 2).min(Duration::from_secs(2));
                }
            }
        }
        Err(last.expect("loop ran at least once"))
    }

    fn max_parallelism(&self) -> usize {
        self.config.max_parallelism
    }
}

/// Serves answers from a transcript store instead of a live model. The reply
/// is the stored verbatim raw reply, so replayed sessions carve and validate
/// exactly like the original ones.
pub struct ReplayBackend {
    store: TranscriptStore,
    /// Replay this respondent's transcripts regardless of the requesting id;
    /// `None` uses the id from the request.
    source_respondent: Option<String>,
}

impl ReplayBackend {
    pub fn new(store: TranscriptStore) -> Self {
        Self { store, source_respondent: None }
    }

    pub fn for_respondent(store: TranscriptStore, respondent_id: impl Into<String>) -> Self {
        Self { store, source_respondent: Some(respondent_id.into()) }
    }
}

impl RespondentBackend for ReplayBackend {
    fn answer(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let respondent = self
            .source_respondent
            .as_deref()
            .unwrap_or(request.respondent_id);
        let record = self
            .store
            .load_run(respondent, request.questionnaire, request.prompt_id, request.run_index)
            .map_err(|e| BackendError::Other(e.to_string()))?;
        match record {
            Some(record) => match record.raw_reply {
                Some(raw) => Ok(raw),
                // Per-item recordings have no single raw reply; rebuild a
                // numbered form that carves back to the same items.
                None => Ok(record
                    .items
                    .iter()
                    .enumerate()
                    .map(|(k, item)| format!("{}. {}", k + 1, item.raw_text))
                    .collect::<Vec<_>>()
                    .join("\n")),
            },
            None => Err(BackendError::ReplayExhausted {
                respondent_id: respondent.to_owned(),
                questionnaire: request.questionnaire,
                prompt_id: request.prompt_id,
                run_index: request.run_index,
            }),
        }
    }

    fn max_parallelism(&self) -> usize {
        8
    }
}
