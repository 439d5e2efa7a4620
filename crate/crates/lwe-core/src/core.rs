//! Domain types shared by every other module.
//!
//! These are immutable value objects plus the canonicalization rule that
//! makes verdicts comparable across presentation orders. Behavior beyond
//! invariant checking lives elsewhere.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised by the domain types themselves.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CoreError {
    /// An `Invalid` verdict cannot be canonicalized to a preferred response.
    #[error("invalid verdict cannot be canonicalized: {0}")]
    InvalidVerdict(String),
    /// A record or config violated a structural invariant.
    #[error("invariant violation: {0}")]
    Invariant(String),
}

/// Which underlying response occupies the "Assistant A" slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresentationOrder {
    /// `response_a` is shown as Assistant A.
    Canonical,
    /// `response_b` is shown as Assistant A.
    Swapped,
}

impl PresentationOrder {
    /// The opposite order. `o.swap().swap() == o`.
    pub fn swap(self) -> Self {
        match self {
            PresentationOrder::Canonical => PresentationOrder::Swapped,
            PresentationOrder::Swapped => PresentationOrder::Canonical,
        }
    }
}

impl fmt::Display for PresentationOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PresentationOrder::Canonical => write!(f, "canonical"),
            PresentationOrder::Swapped => write!(f, "swapped"),
        }
    }
}

/// The label extracted from a judge response.
///
/// `Invalid` always carries the reason text, so the "reason present iff
/// invalid" invariant holds by construction.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "value", content = "reason")]
pub enum Verdict {
    A,
    B,
    Invalid(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        !matches!(self, Verdict::Invalid(_))
    }

    /// The raw label for valid verdicts.
    pub fn label(&self) -> Option<&'static str> {
        match self {
            Verdict::A => Some("A"),
            Verdict::B => Some("B"),
            Verdict::Invalid(_) => None,
        }
    }

    pub fn invalid_reason(&self) -> Option<&str> {
        match self {
            Verdict::Invalid(reason) => Some(reason),
            _ => None,
        }
    }
}

/// Presentation-independent identity of the chosen (or gold) response.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferredResponse {
    /// The response stored as `response_a`.
    First,
    /// The response stored as `response_b`.
    Second,
}

/// Maps a valid verdict under a presentation order to the underlying
/// response it picked.
///
/// | verdict | order     | preferred |
/// |---------|-----------|-----------|
/// | A       | Canonical | First     |
/// | A       | Swapped   | Second    |
/// | B       | Canonical | Second    |
/// | B       | Swapped   | First     |
pub fn canonicalize(
    verdict: &Verdict,
    order: PresentationOrder,
) -> Result<PreferredResponse, CoreError> {
    match (verdict, order) {
        (Verdict::A, PresentationOrder::Canonical) => Ok(PreferredResponse::First),
        (Verdict::A, PresentationOrder::Swapped) => Ok(PreferredResponse::Second),
        (Verdict::B, PresentationOrder::Canonical) => Ok(PreferredResponse::Second),
        (Verdict::B, PresentationOrder::Swapped) => Ok(PreferredResponse::First),
        (Verdict::Invalid(reason), _) => Err(CoreError::InvalidVerdict(reason.clone())),
    }
}

/// Reference to an image attached to a test case.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ImageRef {
    /// Inline payload: base64 bytes plus media type.
    Inline { base64: String, media_type: String },
    /// A file path or URL; URLs are recognized by their scheme.
    Text(String),
}

impl ImageRef {
    pub fn is_url(&self) -> bool {
        matches!(self, ImageRef::Text(t) if t.starts_with("http://") || t.starts_with("https://"))
    }
}

/// One pairwise comparison instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageRef>,
    pub response_a: String,
    pub response_b: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<PreferredResponse>,
}

impl TestCase {
    /// View of this case under a presentation order.
    pub fn view(&self, order: PresentationOrder) -> CaseView<'_> {
        CaseView { case: self, order }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.id.is_empty() {
            return Err(CoreError::Invariant("case id is empty".into()));
        }
        if self.response_a.is_empty() || self.response_b.is_empty() {
            return Err(CoreError::Invariant(format!(
                "case {}: responses must be non-empty",
                self.id
            )));
        }
        Ok(())
    }
}

/// A test case as presented to the judge: `answer_a` is whatever occupies
/// the Assistant-A slot under the view's order.
#[derive(Clone, Copy, Debug)]
pub struct CaseView<'a> {
    case: &'a TestCase,
    order: PresentationOrder,
}

impl<'a> CaseView<'a> {
    pub fn case(&self) -> &'a TestCase {
        self.case
    }

    pub fn order(&self) -> PresentationOrder {
        self.order
    }

    pub fn question(&self) -> &'a str {
        &self.case.question
    }

    /// Text shown in the Assistant-A slot.
    pub fn answer_a(&self) -> &'a str {
        match self.order {
            PresentationOrder::Canonical => &self.case.response_a,
            PresentationOrder::Swapped => &self.case.response_b,
        }
    }

    /// Text shown in the Assistant-B slot.
    pub fn answer_b(&self) -> &'a str {
        match self.order {
            PresentationOrder::Canonical => &self.case.response_b,
            PresentationOrder::Swapped => &self.case.response_a,
        }
    }

    /// The same case with the slots exchanged.
    pub fn swapped(&self) -> CaseView<'a> {
        CaseView {
            case: self.case,
            order: self.order.swap(),
        }
    }
}

/// View presenting `response_b` in the Assistant-A slot. Gold, id, question
/// and image are untouched: gold names a response identity, not a slot.
pub fn swap_case(case: &TestCase) -> CaseView<'_> {
    case.view(PresentationOrder::Swapped)
}

/// One judged case as stored in the result set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub case_id: String,
    pub strategy: StrategyKind,
    pub order: PresentationOrder,
    /// The tailored prompt P_t, or the rendered fixed prompt for
    /// fixed-prompt strategies.
    pub eval_prompt: String,
    pub raw_output: String,
    pub verdict: Verdict,
    /// Canonicalized choice; absent iff the verdict is invalid.
    pub preferred: Option<PreferredResponse>,
    /// Ids of the usage-ledger entries behind this judgment.
    pub call_ids: Vec<String>,
    /// Position t in processing order.
    pub sequence_index: u64,
}

impl JudgmentRecord {
    /// Builds a record, deriving `preferred` from the verdict and order.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        case_id: impl Into<String>,
        strategy: StrategyKind,
        order: PresentationOrder,
        eval_prompt: impl Into<String>,
        raw_output: impl Into<String>,
        verdict: Verdict,
        call_ids: Vec<String>,
        sequence_index: u64,
    ) -> Self {
        let preferred = canonicalize(&verdict, order).ok();
        JudgmentRecord {
            case_id: case_id.into(),
            strategy,
            order,
            eval_prompt: eval_prompt.into(),
            raw_output: raw_output.into(),
            verdict,
            preferred,
            call_ids,
            sequence_index,
        }
    }

    /// Checks the `preferred`/`verdict` coupling; run before persistence.
    pub fn validate(&self) -> Result<(), CoreError> {
        let expected = canonicalize(&self.verdict, self.order).ok();
        if self.preferred != expected {
            return Err(CoreError::Invariant(format!(
                "record {}: preferred {:?} does not match canonicalize({:?}, {})",
                self.case_id, self.preferred, self.verdict, self.order
            )));
        }
        Ok(())
    }
}

/// Parsed self-feedback for one judged case.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackItem {
    /// Score on the template's 1-5 scale; out-of-range values are dropped.
    pub score: Option<i64>,
    pub label: Option<String>,
    pub learned_tips: Option<String>,
    pub reasoning: Option<String>,
    /// The unparsed response; always present, and what refinement consumes.
    pub raw: String,
}

/// One element of the refine batch.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackBatchEntry {
    /// The evaluation prompt the judgment was made with.
    pub eval_prompt: String,
    /// The rendered example block shown to the judge.
    pub case_rendering: String,
    pub judgment_raw: String,
    pub feedback: FeedbackItem,
}

impl FeedbackBatchEntry {
    pub fn validate(&self) -> Result<(), CoreError> {
        if self.eval_prompt.is_empty()
            || self.case_rendering.is_empty()
            || self.judgment_raw.is_empty()
            || self.feedback.raw.is_empty()
        {
            return Err(CoreError::Invariant(
                "feedback batch entry has an empty required field".into(),
            ));
        }
        Ok(())
    }
}

/// The evolving meta-prompt plus its feedback buffer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaPromptState {
    pub text: String,
    /// Buffered feedback F; never reaches the batch size between case
    /// iterations (it is flushed into a refinement at that point).
    pub feedback_buffer: Vec<FeedbackBatchEntry>,
    pub refinement_count: u64,
    pub summarization_count: u64,
}

impl MetaPromptState {
    pub fn new(text: impl Into<String>) -> Self {
        MetaPromptState {
            text: text.into(),
            feedback_buffer: Vec::new(),
            refinement_count: 0,
            summarization_count: 0,
        }
    }
}

/// The six judging strategies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Vanilla,
    Cot,
    MajorityVoting,
    SampleSpecific,
    Lwe,
    SelectiveLwe,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Vanilla,
        StrategyKind::Cot,
        StrategyKind::MajorityVoting,
        StrategyKind::SampleSpecific,
        StrategyKind::Lwe,
        StrategyKind::SelectiveLwe,
    ];

    /// The CLI/config spelling.
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Vanilla => "vanilla",
            StrategyKind::Cot => "cot",
            StrategyKind::MajorityVoting => "majority",
            StrategyKind::SampleSpecific => "sample-specific",
            StrategyKind::Lwe => "lwe",
            StrategyKind::SelectiveLwe => "selective-lwe",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vanilla" => Ok(StrategyKind::Vanilla),
            "cot" => Ok(StrategyKind::Cot),
            "majority" => Ok(StrategyKind::MajorityVoting),
            "sample-specific" => Ok(StrategyKind::SampleSpecific),
            "lwe" => Ok(StrategyKind::Lwe),
            "selective-lwe" => Ok(StrategyKind::SelectiveLwe),
            other => Err(format!(
                "unknown strategy '{other}' (expected one of: vanilla, cot, majority, \
                 sample-specific, lwe, selective-lwe)"
            )),
        }
    }
}

/// Retry behavior for remote providers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff_ms: u64,
    pub jitter: bool,
    /// When true, every HTTP attempt that returns a body gets its own
    /// ledger entry; otherwise only the final outcome is recorded.
    pub log_attempt_usage: bool,
    pub timeout_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            initial_backoff_ms: 1000,
            jitter: true,
            log_attempt_usage: true,
            timeout_ms: 120_000,
        }
    }
}

/// Run-level constants shared by all strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub strategy: StrategyKind,
    /// Feedback batch size b.
    pub batch_size: u32,
    /// Meta-prompt length (in characters) above which it is summarized.
    pub summarize_threshold: usize,
    /// Judge both presentation orders so consistency metrics are defined.
    pub paired_evaluation: bool,
    /// Sample count for majority voting; odd so valid labels cannot tie.
    pub majority_k: u32,
    pub judge_temperature: f64,
    pub majority_temperature: f64,
    pub seed: u64,
    pub retry: RetryPolicy,
    /// Abort the run on the first provider failure instead of recording an
    /// invalid verdict and continuing.
    pub fail_fast: bool,
    /// Compare raw A/B labels in the consistency gate and metric instead of
    /// canonicalized identities (ablation switch).
    pub literal_consistency: bool,
}

impl RunConfig {
    pub fn new(strategy: StrategyKind) -> Self {
        RunConfig {
            strategy,
            batch_size: 4,
            summarize_threshold: 10_000,
            paired_evaluation: false,
            majority_k: 5,
            judge_temperature: 0.0,
            majority_temperature: 0.7,
            seed: 0,
            retry: RetryPolicy::default(),
            fail_fast: false,
            literal_consistency: false,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.batch_size < 1 {
            return Err(CoreError::Invariant("batch_size must be >= 1".into()));
        }
        if self.summarize_threshold == 0 {
            return Err(CoreError::Invariant(
                "summarize_threshold must be > 0".into(),
            ));
        }
        if self.majority_k < 1 || self.majority_k % 2 == 0 {
            return Err(CoreError::Invariant("majority_k must be odd".into()));
        }
        if self.judge_temperature < 0.0 || self.majority_temperature < 0.0 {
            return Err(CoreError::Invariant("temperatures must be >= 0".into()));
        }
        Ok(())
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::new(StrategyKind::Vanilla)
    }
}

/// Character length as the cost model counts it: Unicode scalars, not bytes.
pub fn char_len(s: &str) -> u64 {
    s.chars().count() as u64
}
