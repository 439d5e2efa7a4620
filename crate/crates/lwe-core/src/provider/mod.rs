//! Model backends and the usage ledger.
//!
//! A [`Provider`] turns a [`ModelRequest`] into response text and appends
//! exactly one [`ledger::UsageEntry`] per completed call (HTTP retries can
//! add one per attempt that returned a body, configurable). Two backends
//! ship: a chat-completion HTTP client and a deterministic simulator that
//! the acceptance suite drives.

pub mod ledger;
pub mod sim;

#[cfg(feature = "http")]
pub mod http;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core::ImageRef;
use ledger::{LedgerRecorder, UsageEntry};

/// Why a model call is being made; every ledger entry carries one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallTag {
    Judge,
    ConsistencyCheck,
    BuildEvalPrompt,
    Feedback,
    Refine,
    Summarize,
}

impl CallTag {
    pub const ALL: [CallTag; 6] = [
        CallTag::Judge,
        CallTag::ConsistencyCheck,
        CallTag::BuildEvalPrompt,
        CallTag::Feedback,
        CallTag::Refine,
        CallTag::Summarize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CallTag::Judge => "judge",
            CallTag::ConsistencyCheck => "consistency_check",
            CallTag::BuildEvalPrompt => "build_eval_prompt",
            CallTag::Feedback => "feedback",
            CallTag::Refine => "refine",
            CallTag::Summarize => "summarize",
        }
    }
}

impl std::fmt::Display for CallTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One model invocation: a single user-role message body.
#[derive(Clone, Debug)]
pub struct ModelRequest {
    pub text: String,
    /// Forwarded when the backend is multimodal and the tag's attachment
    /// policy allows it; never counted in character accounting.
    pub image: Option<ImageRef>,
    pub temperature: f64,
    pub call_tag: CallTag,
    /// Case this call belongs to, when case-specific; stamped onto the
    /// ledger entry.
    pub case_id: Option<String>,
    pub max_output: Option<u32>,
}

impl ModelRequest {
    pub fn new(text: impl Into<String>, call_tag: CallTag) -> Self {
        ModelRequest {
            text: text.into(),
            image: None,
            temperature: 0.0,
            call_tag,
            case_id: None,
            max_output: None,
        }
    }

    pub fn with_case(mut self, case_id: impl Into<String>) -> Self {
        self.case_id = Some(case_id.into());
        self
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn with_image(mut self, image: Option<ImageRef>) -> Self {
        self.image = image;
        self
    }
}

/// Response text plus the accounting entry for the final attempt.
#[derive(Clone, Debug)]
pub struct CallOutput {
    pub text: String,
    pub usage: UsageEntry,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { message: String, attempts: u32 },
    #[error("authentication rejected: {0}")]
    Auth(String),
    #[error("rate limited after {attempts} attempt(s): {message}")]
    RateLimited { message: String, attempts: u32 },
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("simulated judge got a request matching no registered case: {0}")]
    UnknownCase(String),
    #[error("provider configuration: {0}")]
    Config(String),
}

/// A model backend. Implementations must be safe to share across threads;
/// the engine itself calls sequentially.
pub trait Provider: Send + Sync {
    /// Stable name recorded on every usage entry.
    fn name(&self) -> &str;

    /// Completes one request, appending usage to `ledger`.
    fn complete(
        &self,
        request: &ModelRequest,
        ledger: &LedgerRecorder,
    ) -> Result<CallOutput, ProviderError>;
}
