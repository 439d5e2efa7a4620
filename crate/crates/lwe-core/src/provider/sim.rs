//! Deterministic scripted model backend.
//!
//! The simulator answers every call kind the engine makes, recognizing
//! requests purely from their text (sentinel substrings unique to each
//! template, the rendered example block for judge calls), so the engine
//! cannot tell it apart from a remote model. All stochastic behavior comes
//! from keyed hash draws, making full runs replayable byte-for-byte and the
//! positional-bias case set recomputable by tests.

use std::collections::{BTreeSet, HashMap};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::ledger::{CallTranscript, LedgerRecorder};
use super::{CallOutput, ModelRequest, Provider, ProviderError};
use crate::core::{char_len, PreferredResponse, PresentationOrder, TestCase};
use crate::templates::OPTIMIZED_META_MARKER;

/// Knobs for the simulated judge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulatorParams {
    pub seed: u64,
    /// Probability a plain-prompt judgment picks the gold response.
    pub p_plain: f64,
    /// Probability under a tailored (sample-specific) prompt.
    pub p_tailored: f64,
    /// Probability a case is positionally biased: its plain-prompt verdict
    /// favors whichever response sits in the Assistant-A slot.
    pub flip_prob: f64,
    /// Additive bump to `p_tailored` per meta-prompt refinement, capped so
    /// the effective probability stays in [0,1].
    pub improvement_per_refine: f64,
}

impl SimulatorParams {
    pub fn new(seed: u64) -> Self {
        SimulatorParams {
            seed,
            p_plain: 0.5,
            p_tailored: 0.7,
            flip_prob: 0.3,
            improvement_per_refine: 0.02,
        }
    }

    pub fn validate(&self) -> Result<(), ProviderError> {
        for (name, v) in [
            ("p_plain", self.p_plain),
            ("p_tailored", self.p_tailored),
            ("flip_prob", self.flip_prob),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ProviderError::Config(format!(
                    "{name} must be in [0,1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Whether a judge request carries the fixed template or a tailored prompt.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PromptKind {
    Plain,
    Tailored,
}

/// Uniform draw in [0,1) keyed by the seed and a part list; independent of
/// call order, so any component can be re-derived standalone.
pub fn unit_draw(seed: u64, parts: &[&str]) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in parts {
        hasher.update([0x1f]);
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    (u64::from_be_bytes(word) >> 11) as f64 / (1u64 << 53) as f64
}

/// Sentence fragments of the judge-request sentinels used for request
/// classification.
const PLAIN_JUDGE_SENTINEL: &str = "Please act as an impartial judge";
const BUILD_SENTINEL: &str = "Output exactly ONLY THE PROMPT.";
const SUMMARIZE_SENTINEL: &str =
    "You are a helpful assistant that summarizes and shortens text.";
const REFINE_SENTINEL: &str = "[[[The Start of Batch examples & Meta Feedback]]]";
const FEEDBACK_SENTINEL: &str = "[[[The Start of Evaluation Prompt & Judgment]]]";
const META_START: &str = "[[[The Start of Current Meta Prompt]]]";
const META_END: &str = "[[[The End of Current Meta Prompt]]]";
const META_REVISION_MARKER: &str = "(meta revision ";
const PROMPT_REVISION_MARKER: &str = "(rev ";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RequestKind {
    Summarize,
    Refine,
    Feedback,
    BuildEvalPrompt,
    Judge,
}

fn classify(text: &str) -> RequestKind {
    if text.contains(SUMMARIZE_SENTINEL) {
        RequestKind::Summarize
    } else if text.contains(REFINE_SENTINEL) {
        RequestKind::Refine
    } else if text.contains(FEEDBACK_SENTINEL) {
        RequestKind::Feedback
    } else if text.contains(BUILD_SENTINEL) {
        RequestKind::BuildEvalPrompt
    } else {
        RequestKind::Judge
    }
}

/// Deterministic model backend constructed over a dataset.
pub struct SimulatedProvider {
    params: SimulatorParams,
    /// (question, slot-A text, slot-B text) of both presentations per case.
    registry: HashMap<(String, String, String), RegisteredCase>,
    /// Extra characters each refinement adds to the meta-prompt; lets tests
    /// script summarization-threshold crossings.
    meta_growth: usize,
    /// Per (case, order) sample index for temperature > 0 calls.
    sample_counters: Mutex<HashMap<(String, PresentationOrder), u64>>,
    positional: BTreeSet<String>,
}

#[derive(Clone, Debug)]
struct RegisteredCase {
    id: String,
    order: PresentationOrder,
    gold: Option<PreferredResponse>,
}

impl SimulatedProvider {
    pub fn new(params: SimulatorParams, cases: &[TestCase]) -> Result<Self, ProviderError> {
        params.validate()?;
        let mut registry = HashMap::new();
        let mut positional = BTreeSet::new();
        for case in cases {
            for order in [PresentationOrder::Canonical, PresentationOrder::Swapped] {
                let view = case.view(order);
                registry.entry((
                    case.question.clone(),
                    view.answer_a().to_string(),
                    view.answer_b().to_string(),
                ))
                .or_insert(RegisteredCase {
                    id: case.id.clone(),
                    order,
                    gold: case.gold,
                });
            }
            if unit_draw(params.seed, &[&case.id, "flip"]) < params.flip_prob {
                positional.insert(case.id.clone());
            }
        }
        Ok(SimulatedProvider {
            params,
            registry,
            meta_growth: 0,
            sample_counters: Mutex::new(HashMap::new()),
            positional,
        })
    }

    /// Sets how many characters each refinement adds to the meta-prompt.
    pub fn with_meta_growth(mut self, chars: usize) -> Self {
        self.meta_growth = chars;
        self
    }

    pub fn params(&self) -> &SimulatorParams {
        &self.params
    }

    /// Ground truth: ids of cases whose plain-prompt verdict follows the
    /// Assistant-A slot instead of the correctness draw.
    pub fn positional_ids(&self) -> &BTreeSet<String> {
        &self.positional
    }

    /// The verdict text for a judge call, given the recognized case.
    ///
    /// A correctness draw keyed by (seed, case id) succeeds with the
    /// prompt-kind probability plus `refinements` improvement bumps.
    /// Positionally biased cases ignore that draw under plain prompts and
    /// favor the Assistant-A slot; tailored prompts always use the draw,
    /// which is what lets sample-specific prompting beat position bias.
    pub fn simulate_judge(
        &self,
        case: &TestCase,
        order: PresentationOrder,
        kind: PromptKind,
        refinements: u64,
    ) -> String {
        self.judge_text(&case.id, case.gold, order, kind, refinements, 0.0)
    }

    fn judge_text(
        &self,
        case_id: &str,
        gold: Option<PreferredResponse>,
        order: PresentationOrder,
        kind: PromptKind,
        refinements: u64,
        temperature: f64,
    ) -> String {
        let label = if kind == PromptKind::Plain && self.positional.contains(case_id) {
            "[[A]]"
        } else {
            let draw = if temperature > 0.0 {
                let mut counters = self.sample_counters.lock().unwrap();
                let k = counters
                    .entry((case_id.to_string(), order))
                    .or_insert(0);
                let sample = *k;
                *k += 1;
                unit_draw(
                    self.params.seed,
                    &[case_id, "sample", &order.to_string(), &sample.to_string()],
                )
            } else {
                unit_draw(self.params.seed, &[case_id])
            };
            let base = match kind {
                PromptKind::Plain => self.params.p_plain,
                PromptKind::Tailored => self.params.p_tailored,
            };
            let p_eff = (base + refinements as f64 * self.params.improvement_per_refine)
                .clamp(0.0, 1.0);
            let correct = draw < p_eff;
            let gold = gold.unwrap_or(PreferredResponse::First);
            let picked = if correct {
                gold
            } else {
                match gold {
                    PreferredResponse::First => PreferredResponse::Second,
                    PreferredResponse::Second => PreferredResponse::First,
                }
            };
            match (picked, order) {
                (PreferredResponse::First, PresentationOrder::Canonical)
                | (PreferredResponse::Second, PresentationOrder::Swapped) => "[[A]]",
                _ => "[[B]]",
            }
        };
        format!("After weighing both responses against the question, the better answer is {label}.")
    }

    fn lookup_case(&self, text: &str) -> Result<&RegisteredCase, ProviderError> {
        let block = parse_example_block(text).ok_or_else(|| {
            ProviderError::UnknownCase(format!(
                "no example block found in request ({} chars)",
                char_len(text)
            ))
        })?;
        self.registry
            .get(&block)
            .ok_or_else(|| ProviderError::UnknownCase(format!("question: {:.60}", block.0)))
    }

    fn build_response(&self, text: &str) -> Result<String, ProviderError> {
        let case = self.lookup_case(text)?;
        // Build requests carry the meta-prompt bare (marker blocks exist
        // only in the refine and summarize request layouts), so read the
        // revision phrase from the whole request.
        let rev = parse_meta_revision(text).unwrap_or(0);
        Ok(format!(
            "Tailored evaluation prompt (rev {rev}) for case {id}: weigh each response against \
             the question's actual requirements, verify factual claims, and prefer the answer \
             that is more complete, relevant, and precise. Give your final verdict as '[[A]]' \
             or '[[B]]'.",
            id = case.id
        ))
    }

    fn judge_response(&self, text: &str, temperature: f64) -> Result<String, ProviderError> {
        let case = self.lookup_case(text)?;
        let kind = if text.contains(PLAIN_JUDGE_SENTINEL) {
            PromptKind::Plain
        } else {
            PromptKind::Tailored
        };
        let refinements = if kind == PromptKind::Tailored {
            parse_prompt_revision(text).unwrap_or(0)
        } else {
            0
        };
        Ok(self.judge_text(
            &case.id,
            case.gold,
            case.order,
            kind,
            refinements,
            temperature,
        ))
    }

    fn feedback_response(&self, text: &str) -> Result<String, ProviderError> {
        let case = self.lookup_case(text)?;
        Ok(format!(
            r#"{{"score": 4, "label": "Not sure", "learned tips": "Verify each claim against the question before judging (case {id}).", "reasoning": "Scripted inspection of the judgment for case {id}."}}"#,
            id = case.id
        ))
    }

    fn refine_response(&self, text: &str) -> String {
        let meta = meta_section(text).unwrap_or("");
        let rev = parse_meta_revision(meta).unwrap_or(0) + 1;
        let target = char_len(meta) as usize + self.meta_growth;
        let body = scripted_meta(rev, false, target);
        format!("{OPTIMIZED_META_MARKER}\n{body}")
    }

    fn summarize_response(&self, text: &str) -> String {
        let meta = meta_section(text).unwrap_or("");
        let rev = parse_meta_revision(meta).unwrap_or(0);
        let target = (char_len(meta) as usize).div_ceil(2);
        scripted_meta(rev, true, target)
    }
}

/// Composes a scripted meta-prompt of roughly `target` characters carrying
/// its revision marker and the prompt-generation instruction the
/// classifier keys on.
fn scripted_meta(revision: u64, condensed: bool, target: usize) -> String {
    let style = if condensed { ", condensed" } else { "" };
    let mut body = format!(
        "Generate an evaluation prompt tailored to the given example, with example-specific \
         criteria and step-by-step checks that lead to a reliable verdict. \
         (meta revision {revision}{style})\n\nAccumulated evaluation tips:"
    );
    const TIP: &str =
        "\n- Verify every factual claim in both answers against the question before judging.";
    const TAIL: &str =
        "\n\nThe final judgment must be expressed only as `[[A]]' or `[[B]]'.\nOutput exactly ONLY THE PROMPT.";
    let tail_len = char_len(TAIL) as usize;
    let tip_len = char_len(TIP) as usize;
    while char_len(&body) as usize + tail_len + tip_len <= target {
        body.push_str(TIP);
    }
    body.push_str(TAIL);
    body
}

/// The meta-prompt embedded between the current-meta markers, if any.
fn meta_section(text: &str) -> Option<&str> {
    let start = text.find(META_START)? + META_START.len();
    let end = text[start..].find(META_END)? + start;
    Some(text[start..end].trim_matches('\n'))
}

fn parse_meta_revision(meta: &str) -> Option<u64> {
    parse_number_after(meta, META_REVISION_MARKER)
}

fn parse_prompt_revision(text: &str) -> Option<u64> {
    parse_number_after(text, PROMPT_REVISION_MARKER)
}

fn parse_number_after(text: &str, marker: &str) -> Option<u64> {
    let start = text.find(marker)? + marker.len();
    let digits: String = text[start..].chars().take_while(char::is_ascii_digit).collect();
    digits.parse().ok()
}

/// Extracts (question, slot-A answer, slot-B answer) from the last rendered
/// example block in a request.
fn parse_example_block(text: &str) -> Option<(String, String, String)> {
    const Q: &str = "[User Question]\n";
    const A_START: &str = "\n\n[The Start of Assistant A's Answer]\n";
    const A_END: &str = "\n[The End of Assistant A's Answer]";
    const B_START: &str = "\n\n[The Start of Assistant B's Answer]\n";
    const B_END: &str = "\n[The End of Assistant B's Answer]";

    let q_pos = text.rfind(Q)? + Q.len();
    let rest = &text[q_pos..];
    let a_marker = rest.find(A_START)?;
    let question = &rest[..a_marker];
    let rest = &rest[a_marker + A_START.len()..];
    let a_end = rest.find(A_END)?;
    let answer_a = &rest[..a_end];
    let rest = &rest[a_end..];
    let b_marker = rest.find(B_START)?;
    let rest = &rest[b_marker + B_START.len()..];
    let b_end = rest.find(B_END)?;
    let answer_b = &rest[..b_end];
    Some((
        question.to_string(),
        answer_a.to_string(),
        answer_b.to_string(),
    ))
}

impl Provider for SimulatedProvider {
    fn name(&self) -> &str {
        "sim"
    }

    fn complete(
        &self,
        request: &ModelRequest,
        ledger: &LedgerRecorder,
    ) -> Result<CallOutput, ProviderError> {
        let text = match classify(&request.text) {
            RequestKind::Summarize => self.summarize_response(&request.text),
            RequestKind::Refine => self.refine_response(&request.text),
            RequestKind::Feedback => self.feedback_response(&request.text)?,
            RequestKind::BuildEvalPrompt => self.build_response(&request.text)?,
            RequestKind::Judge => self.judge_response(&request.text, request.temperature)?,
        };
        let usage = ledger.append(
            request.call_tag,
            request.case_id.clone(),
            &request.text,
            &text,
            self.name(),
        );
        ledger.record_transcript(CallTranscript {
            usage_id: usage.id.clone(),
            call_tag: request.call_tag,
            case_id: request.case_id.clone(),
            request: request.text.clone(),
            response: text.clone(),
        });
        Ok(CallOutput { text, usage })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::provider::CallTag;
    use crate::templates::{compose_judge_input, RenderBindings, TemplateId, TemplateStore};

    fn cases(n: usize) -> Vec<TestCase> {
        (0..n)
            .map(|i| TestCase {
                id: format!("case-{i:03}"),
                question: format!("question {i}"),
                image: None,
                response_a: format!("first answer {i}"),
                response_b: format!("second answer {i}"),
                gold: Some(if i % 2 == 0 {
                    PreferredResponse::First
                } else {
                    PreferredResponse::Second
                }),
            })
            .collect()
    }

    fn judge_request(store: &TemplateStore, case: &TestCase, order: PresentationOrder) -> String {
        store
            .render(
                TemplateId::VanillaJudge,
                &RenderBindings::for_case(case.view(order)),
            )
            .unwrap()
    }

    #[test]
    fn q0_judges_identically_under_both_orders() {
        let data = cases(20);
        let mut params = SimulatorParams::new(11);
        params.flip_prob = 0.0;
        let sim = SimulatedProvider::new(params, &data).unwrap();
        let store = TemplateStore::embedded();
        let ledger = LedgerRecorder::new();
        for case in &data {
            let canonical = sim
                .complete(
                    &ModelRequest::new(
                        judge_request(&store, case, PresentationOrder::Canonical),
                        CallTag::Judge,
                    ),
                    &ledger,
                )
                .unwrap();
            let swapped = sim
                .complete(
                    &ModelRequest::new(
                        judge_request(&store, case, PresentationOrder::Swapped),
                        CallTag::Judge,
                    ),
                    &ledger,
                )
                .unwrap();
            let v1 = crate::extraction::extract_verdict(&canonical.text);
            let v2 = crate::extraction::extract_verdict(&swapped.text);
            assert_eq!(
                crate::core::canonicalize(&v1, PresentationOrder::Canonical).unwrap(),
                crate::core::canonicalize(&v2, PresentationOrder::Swapped).unwrap(),
                "case {}",
                case.id
            );
        }
        assert!(sim.positional_ids().is_empty());
    }

    #[test]
    fn q0_p1_is_always_gold_correct() {
        let data = cases(20);
        let mut params = SimulatorParams::new(5);
        params.flip_prob = 0.0;
        params.p_plain = 1.0;
        let sim = SimulatedProvider::new(params, &data).unwrap();
        let store = TemplateStore::embedded();
        let ledger = LedgerRecorder::new();
        for case in &data {
            for order in [PresentationOrder::Canonical, PresentationOrder::Swapped] {
                let out = sim
                    .complete(
                        &ModelRequest::new(judge_request(&store, case, order), CallTag::Judge),
                        &ledger,
                    )
                    .unwrap();
                let verdict = crate::extraction::extract_verdict(&out.text);
                let preferred = crate::core::canonicalize(&verdict, order).unwrap();
                assert_eq!(Some(preferred), case.gold);
            }
        }
    }

    #[test]
    fn q1_makes_every_case_positional_and_inconsistent() {
        let data = cases(10);
        let mut params = SimulatorParams::new(3);
        params.flip_prob = 1.0;
        let sim = SimulatedProvider::new(params, &data).unwrap();
        assert_eq!(sim.positional_ids().len(), data.len());
        let store = TemplateStore::embedded();
        let ledger = LedgerRecorder::new();
        for case in &data {
            let c = sim
                .complete(
                    &ModelRequest::new(
                        judge_request(&store, case, PresentationOrder::Canonical),
                        CallTag::Judge,
                    ),
                    &ledger,
                )
                .unwrap();
            let s = sim
                .complete(
                    &ModelRequest::new(
                        judge_request(&store, case, PresentationOrder::Swapped),
                        CallTag::Judge,
                    ),
                    &ledger,
                )
                .unwrap();
            assert!(c.text.contains("[[A]]"));
            assert!(s.text.contains("[[A]]"));
        }
    }

    #[test]
    fn replay_with_same_seed_is_byte_identical() {
        let data = cases(8);
        let params = SimulatorParams::new(42);
        let store = TemplateStore::embedded();
        let mut transcripts = Vec::new();
        for _ in 0..2 {
            let sim = SimulatedProvider::new(params, &data).unwrap();
            let ledger = LedgerRecorder::new();
            for case in &data {
                let req = ModelRequest::new(
                    judge_request(&store, case, PresentationOrder::Canonical),
                    CallTag::Judge,
                )
                .with_case(case.id.clone());
                sim.complete(&req, &ledger).unwrap();
            }
            transcripts.push(
                ledger
                    .transcripts()
                    .into_iter()
                    .map(|t| (t.request, t.response))
                    .collect::<Vec<_>>(),
            );
        }
        assert_eq!(transcripts[0], transcripts[1]);
    }

    #[test]
    fn positional_set_matches_independent_derivation() {
        let data = cases(200);
        let mut params = SimulatorParams::new(1234);
        params.flip_prob = 0.3;
        let sim = SimulatedProvider::new(params, &data).unwrap();
        // standalone re-derivation of the flip draws
        let mut expected = BTreeSet::new();
        for case in &data {
            let mut hasher = Sha256::new();
            hasher.update(1234u64.to_le_bytes());
            hasher.update([0x1f]);
            hasher.update(case.id.as_bytes());
            hasher.update([0x1f]);
            hasher.update(b"flip");
            let digest = hasher.finalize();
            let mut word = [0u8; 8];
            word.copy_from_slice(&digest[..8]);
            let draw = (u64::from_be_bytes(word) >> 11) as f64 / (1u64 << 53) as f64;
            if draw < 0.3 {
                expected.insert(case.id.clone());
            }
        }
        assert_eq!(sim.positional_ids(), &expected);
        assert!(!expected.is_empty() && expected.len() < 200);
    }

    #[test]
    fn tailored_prompts_ignore_position_bias() {
        let data = cases(40);
        let mut params = SimulatorParams::new(9);
        params.flip_prob = 1.0;
        params.p_tailored = 1.0;
        let sim = SimulatedProvider::new(params, &data).unwrap();
        let store = TemplateStore::embedded();
        let ledger = LedgerRecorder::new();
        for case in &data {
            // build a tailored prompt, then judge with it under both orders
            let build_input = format!(
                "{}\n\n{}",
                store.text(TemplateId::InitialMetaPrompt),
                store
                    .render_example(case, PresentationOrder::Canonical)
                    .unwrap()
            );
            let p = sim
                .complete(
                    &ModelRequest::new(build_input, CallTag::BuildEvalPrompt),
                    &ledger,
                )
                .unwrap()
                .text;
            assert!(p.contains("(rev 0)"));
            for order in [PresentationOrder::Canonical, PresentationOrder::Swapped] {
                let input = compose_judge_input(&store, &p, case, order).unwrap();
                let out = sim
                    .complete(&ModelRequest::new(input, CallTag::Judge), &ledger)
                    .unwrap();
                let verdict = crate::extraction::extract_verdict(&out.text);
                let preferred = crate::core::canonicalize(&verdict, order).unwrap();
                assert_eq!(Some(preferred), case.gold, "case {}", case.id);
            }
        }
    }

    #[test]
    fn refine_and_summarize_track_revisions_and_length() {
        let data = cases(1);
        let sim = SimulatedProvider::new(SimulatorParams::new(7), &data)
            .unwrap()
            .with_meta_growth(500);
        let ledger = LedgerRecorder::new();
        let store = TemplateStore::embedded();
        let meta0 = store.text(TemplateId::InitialMetaPrompt).to_string();
        let refine_req = store
            .render(
                TemplateId::RefineRequest,
                &RenderBindings::new()
                    .set("meta_prompt", meta0.clone())
                    .set("batch", "[Batch example 1]\nfeedback"),
            )
            .unwrap();
        let refined_raw = sim
            .complete(&ModelRequest::new(refine_req, CallTag::Refine), &ledger)
            .unwrap()
            .text;
        let refined = crate::templates::parse_refined_meta(&refined_raw).unwrap();
        assert!(refined.contains("(meta revision 1)"));
        assert!(refined.contains(BUILD_SENTINEL));
        let grown = char_len(&refined) as i64 - char_len(&meta0) as i64;
        assert!(
            (grown - 500).abs() < 120,
            "expected ~500 chars of growth, got {grown}"
        );

        let summarize_req = store
            .render(
                TemplateId::SummarizeRequest,
                &RenderBindings::new().set("meta_prompt", refined.clone()),
            )
            .unwrap();
        let summarized = sim
            .complete(&ModelRequest::new(summarize_req, CallTag::Summarize), &ledger)
            .unwrap()
            .text;
        assert!(summarized.contains("(meta revision 1, condensed)"));
        assert!(summarized.contains(BUILD_SENTINEL));
        let ratio = char_len(&summarized) as f64 / char_len(&refined) as f64;
        assert!((0.35..=0.65).contains(&ratio), "half-ish, got {ratio}");
    }

    #[test]
    fn unknown_case_is_rejected() {
        let data = cases(2);
        let sim = SimulatedProvider::new(SimulatorParams::new(7), &data).unwrap();
        let ledger = LedgerRecorder::new();
        let err = sim
            .complete(
                &ModelRequest::new("no example block at all", CallTag::Judge),
                &ledger,
            )
            .unwrap_err();
        assert!(matches!(err, ProviderError::UnknownCase(_)));
    }

    #[test]
    fn majority_samples_vary_but_are_order_keyed() {
        let data = cases(1);
        let mut params = SimulatorParams::new(21);
        params.flip_prob = 0.0;
        params.p_plain = 0.5;
        let store = TemplateStore::embedded();
        let collect = |sim: &SimulatedProvider| {
            let ledger = LedgerRecorder::new();
            (0..5)
                .map(|_| {
                    sim.complete(
                        &ModelRequest::new(
                            judge_request(&store, &data[0], PresentationOrder::Canonical),
                            CallTag::Judge,
                        )
                        .with_temperature(0.7),
                        &ledger,
                    )
                    .unwrap()
                    .text
                })
                .collect::<Vec<_>>()
        };
        let first = collect(&SimulatedProvider::new(params, &data).unwrap());
        let second = collect(&SimulatedProvider::new(params, &data).unwrap());
        assert_eq!(first, second, "fresh providers replay the same samples");
    }
}
