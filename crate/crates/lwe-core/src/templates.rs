//! The seven prompt templates and their render/parse operations.
//!
//! Templates live as external text assets (embedded at build time, loadable
//! from a directory for audits) so their byte-exactness is checkable: a
//! checksum test pins each asset. Placeholder syntax is literal `{name}`
//! with names drawn from a fixed vocabulary; anything else in braces is
//! passed through untouched, which keeps the literal `{{"score": ...}}`
//! output-format line in the feedback template inert.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde_json::Value;
use thiserror::Error;

use crate::core::{CaseView, FeedbackItem, PresentationOrder, TestCase};

/// Marker that precedes the refined meta-prompt in refine responses.
pub const OPTIMIZED_META_MARKER: &str = "[[[Optimized Meta Prompt]]]";

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("missing binding for placeholder {{{0}}}")]
    MissingBinding(String),
    #[error("template contains unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("binding {{{0}}} is not used by this template")]
    UnusedBinding(String),
    #[error("refinement produced an empty meta-prompt")]
    EmptyRefinement,
    #[error("missing template asset {0}")]
    MissingAsset(String),
    #[error("template asset io: {0}")]
    Io(#[from] std::io::Error),
}

/// Identifies one template asset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateId {
    VanillaJudge,
    CoTJudge,
    InitialMetaPrompt,
    ExamplePlaceholder,
    FeedbackRequest,
    RefineRequest,
    SummarizeRequest,
}

impl TemplateId {
    pub const ALL: [TemplateId; 7] = [
        TemplateId::VanillaJudge,
        TemplateId::CoTJudge,
        TemplateId::InitialMetaPrompt,
        TemplateId::ExamplePlaceholder,
        TemplateId::FeedbackRequest,
        TemplateId::RefineRequest,
        TemplateId::SummarizeRequest,
    ];

    /// File name of the on-disk asset.
    pub fn asset_name(self) -> &'static str {
        match self {
            TemplateId::VanillaJudge => "vanilla_judge.txt",
            TemplateId::CoTJudge => "cot_judge.txt",
            TemplateId::InitialMetaPrompt => "initial_meta_prompt.txt",
            TemplateId::ExamplePlaceholder => "example_placeholder.txt",
            TemplateId::FeedbackRequest => "feedback_request.txt",
            TemplateId::RefineRequest => "refine_request.txt",
            TemplateId::SummarizeRequest => "summarize_request.txt",
        }
    }

    fn index(self) -> usize {
        TemplateId::ALL.iter().position(|t| *t == self).unwrap()
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.asset_name())
    }
}

/// Placeholder names render understands.
pub const PLACEHOLDER_NAMES: [&str; 7] = [
    "question",
    "answer_a",
    "answer_b",
    "meta_prompt",
    "evaluation_prompt",
    "judgment",
    "batch",
];

/// Placeholder-name to text map for one render call.
///
/// A render succeeds only when the map covers exactly the placeholders the
/// template uses: a missing binding and an unused binding are both errors.
#[derive(Clone, Debug, Default)]
pub struct RenderBindings {
    map: BTreeMap<&'static str, String>,
}

impl RenderBindings {
    pub fn new() -> Self {
        RenderBindings::default()
    }

    /// Adds a binding; `name` must be one of [`PLACEHOLDER_NAMES`].
    pub fn set(mut self, name: &'static str, value: impl Into<String>) -> Self {
        debug_assert!(
            PLACEHOLDER_NAMES.contains(&name),
            "unknown placeholder name {name}"
        );
        self.map.insert(name, value.into());
        self
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.map.get(name).map(String::as_str)
    }

    /// Bindings for a case as presented under `order`.
    pub fn for_case(view: CaseView<'_>) -> Self {
        RenderBindings::new()
            .set("question", view.question())
            .set("answer_a", view.answer_a())
            .set("answer_b", view.answer_b())
    }
}

/// Immutable set of the seven template texts.
#[derive(Clone, Debug)]
pub struct TemplateStore {
    texts: [String; 7],
}

impl TemplateStore {
    /// The assets compiled into the binary.
    pub fn embedded() -> Self {
        TemplateStore {
            texts: [
                include_str!("../assets/templates/vanilla_judge.txt").to_string(),
                include_str!("../assets/templates/cot_judge.txt").to_string(),
                include_str!("../assets/templates/initial_meta_prompt.txt").to_string(),
                include_str!("../assets/templates/example_placeholder.txt").to_string(),
                include_str!("../assets/templates/feedback_request.txt").to_string(),
                include_str!("../assets/templates/refine_request.txt").to_string(),
                include_str!("../assets/templates/summarize_request.txt").to_string(),
            ],
        }
    }

    /// Loads the seven assets from a directory (same file names as the
    /// embedded set).
    pub fn from_dir(dir: &Path) -> Result<Self, TemplateError> {
        let mut texts: [String; 7] = Default::default();
        for id in TemplateId::ALL {
            let path = dir.join(id.asset_name());
            if !path.is_file() {
                return Err(TemplateError::MissingAsset(path.display().to_string()));
            }
            texts[id.index()] = std::fs::read_to_string(path)?;
        }
        Ok(TemplateStore { texts })
    }

    /// Raw template text.
    pub fn text(&self, id: TemplateId) -> &str {
        &self.texts[id.index()]
    }

    /// Substitutes each `{placeholder}` literally; no other transformation.
    pub fn render(&self, id: TemplateId, bindings: &RenderBindings) -> Result<String, TemplateError> {
        let template = self.text(id);
        let mut out = String::with_capacity(template.len());
        let mut used: Vec<&str> = Vec::new();
        let bytes = template.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] == b'{' {
                if let Some((name, end)) = placeholder_at(template, i) {
                    if !PLACEHOLDER_NAMES.contains(&name) {
                        return Err(TemplateError::UnknownPlaceholder(name.to_string()));
                    }
                    match bindings.get(name) {
                        Some(value) => out.push_str(value),
                        None => return Err(TemplateError::MissingBinding(name.to_string())),
                    }
                    if !used.contains(&name) {
                        // borrow from the static vocabulary, not the template
                        used.push(
                            PLACEHOLDER_NAMES
                                .iter()
                                .copied()
                                .find(|n| *n == name)
                                .unwrap(),
                        );
                    }
                    i = end;
                    continue;
                }
            }
            let ch = template[i..].chars().next().unwrap();
            out.push(ch);
            i += ch.len_utf8();
        }
        for name in bindings.map.keys() {
            if !used.contains(name) {
                return Err(TemplateError::UnusedBinding(name.to_string()));
            }
        }
        Ok(out)
    }

    /// Renders the example block for a case under an order.
    pub fn render_example(
        &self,
        case: &TestCase,
        order: PresentationOrder,
    ) -> Result<String, TemplateError> {
        self.render(
            TemplateId::ExamplePlaceholder,
            &RenderBindings::for_case(case.view(order)),
        )
    }
}

/// Returns `Some((name, end_index))` when `template[start..]` opens a
/// well-formed `{name}` placeholder: lowercase ascii letters or underscores
/// only, closed by `}`.
fn placeholder_at(template: &str, start: usize) -> Option<(&str, usize)> {
    let rest = &template[start + 1..];
    let close = rest.find('}')?;
    let name = &rest[..close];
    if name.is_empty() || !name.bytes().all(|b| b == b'_' || b.is_ascii_lowercase()) {
        return None;
    }
    Some((name, start + 1 + close + 1))
}

/// The evaluation prompt followed by a blank line and the rendered example
/// block; this is the exact judge input for tailored prompts.
pub fn compose_judge_input(
    store: &TemplateStore,
    eval_prompt: &str,
    case: &TestCase,
    order: PresentationOrder,
) -> Result<String, TemplateError> {
    Ok(format!(
        "{eval_prompt}\n\n{}",
        store.render_example(case, order)?
    ))
}

/// Best-effort extraction of the feedback record's four fields from the
/// first JSON object found in `raw`. Parsing never fails: on any problem
/// the result carries only `raw`.
pub fn parse_feedback(raw: &str) -> FeedbackItem {
    let mut item = FeedbackItem {
        raw: raw.to_string(),
        ..FeedbackItem::default()
    };
    let Some(obj) = first_json_object(raw) else {
        return item;
    };
    item.score = obj.get("score").and_then(int_in_scale);
    item.label = obj.get("label").and_then(as_text);
    item.learned_tips = obj
        .get("learned tips")
        .or_else(|| obj.get("learned_tips"))
        .and_then(as_text);
    item.reasoning = obj
        .get("reasoning")
        .or_else(|| obj.get("reasoning_or_explanation"))
        .and_then(as_text);
    item
}

fn int_in_scale(v: &Value) -> Option<i64> {
    let n = match v {
        Value::Number(n) => n.as_i64()?,
        Value::String(s) => s.trim().parse().ok()?,
        _ => return None,
    };
    (1..=5).contains(&n).then_some(n)
}

fn as_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

/// Scans for the first balanced `{...}` region that parses as a JSON
/// object. Tolerates prose around the record and the doubled-brace form the
/// template itself prints.
fn first_json_object(raw: &str) -> Option<serde_json::Map<String, Value>> {
    for (pos, _) in raw.match_indices('{') {
        let Some(end) = balanced_end(raw, pos) else {
            continue;
        };
        if let Ok(Value::Object(map)) = serde_json::from_str(&raw[pos..end]) {
            return Some(map);
        }
    }
    None
}

/// Index one past the `}` matching the `{` at `start`, honoring JSON string
/// literals and escapes.
fn balanced_end(raw: &str, start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, ch) in raw[start..].char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Pulls the refined meta-prompt out of a refine response: everything after
/// the last `[[[Optimized Meta Prompt]]]` marker, stripped of leading and
/// trailing blank lines; without the marker, the response itself stripped
/// the same way.
pub fn parse_refined_meta(raw: &str) -> Result<String, TemplateError> {
    let tail = match raw.rfind(OPTIMIZED_META_MARKER) {
        Some(pos) => &raw[pos + OPTIMIZED_META_MARKER.len()..],
        None => raw,
    };
    let trimmed = trim_blank_lines(tail);
    if trimmed.trim().is_empty() {
        return Err(TemplateError::EmptyRefinement);
    }
    Ok(trimmed.to_string())
}

/// Drops leading and trailing lines that are empty or whitespace-only,
/// leaving interior structure intact.
fn trim_blank_lines(text: &str) -> &str {
    let mut start = 0;
    for line in text.split_inclusive('\n') {
        if line.trim().is_empty() {
            start += line.len();
        } else {
            break;
        }
    }
    let mut end = text.len();
    while end > start {
        let line_start = text[..end].rfind('\n').map(|p| p + 1).unwrap_or(0);
        let last = &text[line_start..end];
        if last.trim().is_empty() && line_start > start {
            // drop the trailing blank line together with the newline before it
            end = line_start.saturating_sub(1);
        } else if last.trim().is_empty() {
            end = line_start;
        } else {
            break;
        }
    }
    &text[start..end]
}
