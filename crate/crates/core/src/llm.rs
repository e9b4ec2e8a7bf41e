//! Blocking chat-completion client shared by the synonym oracle and the
//! prompt translator.
//!
//! Speaks the OpenAI-compatible `/chat/completions` shape: a JSON body with
//! `model`, `messages` and `temperature`, answered by `choices[0].message
//! .content`. Transport failures, 429 and 5xx answers are retried with
//! exponential backoff; other statuses fail immediately.

use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default environment variable holding the bearer token.
pub const DEFAULT_API_KEY_ENV: &str = "LSC_LLM_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("LLM endpoint unreachable after {attempts} attempt(s): {message}")]
    Unavailable { attempts: u32, message: String },
    #[error("LLM endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed LLM response: {0}")]
    MalformedResponse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ResponseMessage,
}

#[derive(Debug, Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Environment variable read for the bearer token; unset means no
    /// `Authorization` header.
    pub api_key_env: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub temperature: f64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            timeout_secs: 30.0,
            max_retries: 2,
            backoff_ms: 500,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChatClient {
    config: LlmConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl ChatClient {
    /// Builds a client, reading the token from `config.api_key_env`.
    pub fn new(config: LlmConfig) -> ChatClient {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty());
        ChatClient::with_api_key(config, api_key)
    }

    pub fn with_api_key(config: LlmConfig, api_key: Option<String>) -> ChatClient {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        ChatClient {
            config,
            api_key,
            agent,
        }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    /// The JSON body sent for `messages`.
    pub fn request_body(&self, messages: &[ChatMessage]) -> String {
        serde_json::to_string(&ChatRequest {
            model: &self.config.model,
            messages,
            temperature: self.config.temperature,
        })
        .expect("chat request serializes")
    }

    /// Sends `messages` and returns the first choice's content.
    pub fn complete(&self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let body = self.request_body(messages);
        let attempts = self.config.max_retries + 1;
        let mut last_failure = String::new();

        for attempt in 0..attempts {
            if attempt > 0 {
                let wait = self
                    .config
                    .backoff_ms
                    .saturating_mul(1 << (attempt - 1).min(16));
                thread::sleep(Duration::from_millis(wait));
            }
            let mut request = self
                .agent
                .post(&self.config.endpoint)
                .header("Content-Type", "application/json");
            if let Some(key) = &self.api_key {
                request = request.header("Authorization", &format!("Bearer {key}"));
            }
            let mut response = match request.send(body.as_str()) {
                Ok(r) => r,
                Err(e) => {
                    log::warn!("LLM request attempt {} failed: {e}", attempt + 1);
                    last_failure = e.to_string();
                    continue;
                }
            };
            let status = response.status().as_u16();
            let text = response.body_mut().read_to_string().unwrap_or_default();
            match status {
                200 => return parse_completion(&text),
                429 | 500..=599 => {
                    log::warn!("LLM request attempt {} got HTTP {status}", attempt + 1);
                    last_failure = format!("HTTP {status}");
                }
                _ => return Err(LlmError::Status { status, body: text }),
            }
        }
        Err(LlmError::Unavailable {
            attempts,
            message: last_failure,
        })
    }
}

fn parse_completion(body: &str) -> Result<String, LlmError> {
    let parsed: ChatResponse =
        serde_json::from_str(body).map_err(|e| LlmError::MalformedResponse(e.to_string()))?;
    parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| LlmError::MalformedResponse("no completion content".into()))
}

/// First balanced `{...}` object in `text`, for completions that wrap JSON
/// in prose or code fences.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, ch) in text[start..].char_indices() {
        if in_string {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}
