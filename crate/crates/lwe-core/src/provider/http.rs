//! Chat-completions HTTP backend.
//!
//! Speaks the OpenAI-compatible `/chat/completions` wire shape, so any
//! conforming gateway works by pointing `LWE_BASE_URL` at it. Retries
//! transient failures with exponential backoff and records one usage entry
//! per attempt when the retry policy asks for per-attempt accounting.

use std::collections::BTreeSet;
use std::fs;
use std::thread;
use std::time::Duration;

use base64::Engine as _;
use serde::Deserialize;
use serde_json::{json, Value};

use super::ledger::{CallTranscript, LedgerRecorder};
use super::{CallOutput, CallTag, ModelRequest, Provider, ProviderError};
use crate::core::{ImageRef, RetryPolicy};

/// Connection settings for a chat-completions endpoint.
#[derive(Clone, Debug)]
pub struct HttpConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub retry: RetryPolicy,
    /// Call kinds whose requests carry the case image when one exists.
    pub attach_images: BTreeSet<CallTag>,
}

impl HttpConfig {
    pub fn new(model: impl Into<String>) -> Self {
        HttpConfig {
            base_url: "https://api.openai.com/v1".to_string(),
            model: model.into(),
            api_key: None,
            retry: RetryPolicy::default(),
            attach_images: [
                CallTag::Judge,
                CallTag::ConsistencyCheck,
                CallTag::BuildEvalPrompt,
                CallTag::Feedback,
            ]
            .into_iter()
            .collect(),
        }
    }

    /// Reads `LWE_API_KEY` and `LWE_BASE_URL` on top of the defaults.
    pub fn from_env(model: impl Into<String>) -> Self {
        let mut config = Self::new(model);
        if let Ok(key) = std::env::var("LWE_API_KEY") {
            if !key.is_empty() {
                config.api_key = Some(key);
            }
        }
        if let Ok(url) = std::env::var("LWE_BASE_URL") {
            if !url.is_empty() {
                config.base_url = url;
            }
        }
        config
    }
}

pub struct HttpProvider {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    name: String,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

impl HttpProvider {
    pub fn new(config: HttpConfig) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(config.retry.timeout_ms))
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        let name = format!("http:{}", config.model);
        Ok(HttpProvider {
            config,
            client,
            name,
        })
    }

    fn image_part(&self, image: &ImageRef) -> Result<Value, ProviderError> {
        let url = match image {
            ImageRef::Inline { base64, media_type } => {
                format!("data:{media_type};base64,{base64}")
            }
            ImageRef::Text(s) if image.is_url() => s.clone(),
            ImageRef::Text(path) => {
                let bytes = fs::read(path).map_err(|e| {
                    ProviderError::Config(format!("cannot read image {path}: {e}"))
                })?;
                let media_type = match path.rsplit('.').next() {
                    Some("jpg") | Some("jpeg") => "image/jpeg",
                    Some("gif") => "image/gif",
                    Some("webp") => "image/webp",
                    _ => "image/png",
                };
                format!(
                    "data:{media_type};base64,{}",
                    base64::engine::general_purpose::STANDARD.encode(bytes)
                )
            }
        };
        Ok(json!({"type": "image_url", "image_url": {"url": url}}))
    }

    fn request_body(&self, request: &ModelRequest) -> Result<Value, ProviderError> {
        let content = match &request.image {
            Some(image) if self.config.attach_images.contains(&request.call_tag) => {
                json!([
                    {"type": "text", "text": request.text},
                    self.image_part(image)?,
                ])
            }
            _ => json!(request.text),
        };
        let mut body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": content}],
            "temperature": request.temperature,
        });
        if let Some(max) = request.max_output {
            body["max_tokens"] = json!(max);
        }
        Ok(body)
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let base = self.config.retry.initial_backoff_ms.saturating_mul(1 << (attempt - 1));
        let millis = if self.config.retry.jitter {
            let factor: f64 = rand::random_range(0.5..1.5);
            (base as f64 * factor) as u64
        } else {
            base
        };
        Duration::from_millis(millis)
    }
}

enum AttemptOutcome {
    Success(String),
    Retryable(ProviderError),
    Fatal(ProviderError),
}

impl Provider for HttpProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn complete(
        &self,
        request: &ModelRequest,
        ledger: &LedgerRecorder,
    ) -> Result<CallOutput, ProviderError> {
        let body = self.request_body(request)?;
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let max_attempts = self.config.retry.max_attempts.max(1);
        let mut last_error = None;
        for attempt in 1..=max_attempts {
            let mut call = self.client.post(&url).json(&body);
            if let Some(key) = &self.config.api_key {
                call = call.bearer_auth(key);
            }
            let outcome = match call.send() {
                Err(e) => AttemptOutcome::Retryable(ProviderError::Transport {
                    message: e.to_string(),
                    attempts: attempt,
                }),
                Ok(response) => {
                    let status = response.status();
                    let raw = response.text().unwrap_or_default();
                    if self.config.retry.log_attempt_usage || status.is_success() {
                        ledger.append(
                            request.call_tag,
                            request.case_id.clone(),
                            &request.text,
                            &raw,
                            self.name(),
                        );
                    }
                    if status.is_success() {
                        match serde_json::from_str::<ChatResponse>(&raw) {
                            Ok(parsed) => match parsed
                                .choices
                                .into_iter()
                                .next()
                                .and_then(|c| c.message.content)
                            {
                                Some(content) => AttemptOutcome::Success(content),
                                None => AttemptOutcome::Fatal(ProviderError::MalformedResponse(
                                    "response carries no message content".to_string(),
                                )),
                            },
                            Err(e) => AttemptOutcome::Fatal(ProviderError::MalformedResponse(
                                format!("unparseable response body: {e}"),
                            )),
                        }
                    } else if status.as_u16() == 401 || status.as_u16() == 403 {
                        AttemptOutcome::Fatal(ProviderError::Auth(format!(
                            "status {status}: {}",
                            raw.chars().take(200).collect::<String>()
                        )))
                    } else if status.as_u16() == 429 {
                        AttemptOutcome::Retryable(ProviderError::RateLimited {
                            message: format!("status {status}"),
                            attempts: attempt,
                        })
                    } else if status.is_server_error() {
                        AttemptOutcome::Retryable(ProviderError::Transport {
                            message: format!("status {status}"),
                            attempts: attempt,
                        })
                    } else {
                        AttemptOutcome::Fatal(ProviderError::Transport {
                            message: format!(
                                "status {status}: {}",
                                raw.chars().take(200).collect::<String>()
                            ),
                            attempts: attempt,
                        })
                    }
                }
            };
            match outcome {
                AttemptOutcome::Success(content) => {
                    let usage = ledger
                        .snapshot()
                        .entries
                        .last()
                        .cloned()
                        .expect("success attempt was just logged");
                    ledger.record_transcript(CallTranscript {
                        usage_id: usage.id.clone(),
                        call_tag: request.call_tag,
                        case_id: request.case_id.clone(),
                        request: request.text.clone(),
                        response: content.clone(),
                    });
                    return Ok(CallOutput {
                        text: content,
                        usage,
                    });
                }
                AttemptOutcome::Fatal(error) => return Err(error),
                AttemptOutcome::Retryable(error) => {
                    last_error = Some(error);
                    if attempt < max_attempts {
                        thread::sleep(self.backoff(attempt));
                    }
                }
            }
        }
        Err(last_error.unwrap_or_else(|| ProviderError::Transport {
            message: "no attempts were made".to_string(),
            attempts: 0,
        }))
    }
}
