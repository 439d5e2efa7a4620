//! The learning strategies: an evolving meta-prompt that builds a tailored
//! evaluation prompt per case, collects feedback on its own judgments, and
//! refines itself in batches; plus the selective variant that spends that
//! machinery only on cases failing an order-swap screen.

use std::collections::HashMap;

use super::{Driver, EngineError, StrategyOutcome};
use crate::core::{
    canonicalize, char_len, FeedbackBatchEntry, JudgmentRecord, PresentationOrder, TestCase,
    Verdict,
};
use crate::provider::{CallTag, ModelRequest};
use crate::store::{Event, MetaKind, ReplayedRun};
use crate::templates::{
    compose_judge_input, parse_feedback, parse_refined_meta, RenderBindings, TemplateId,
};

/// Mutable meta-prompt state threaded through an adaptive phase.
struct LweState {
    meta: String,
    buffer: Vec<FeedbackBatchEntry>,
    refinements: u64,
    summarizations: u64,
}

/// Learning over the whole dataset.
pub(crate) fn run_lwe(
    driver: &mut Driver<'_, '_>,
    cases: &[TestCase],
    resumed: Option<&ReplayedRun>,
    initial_meta: Option<&str>,
) -> Result<StrategyOutcome, EngineError> {
    if cases.is_empty() {
        return Ok(StrategyOutcome {
            records: vec![],
            final_meta: None,
            inconsistent_ids: None,
        });
    }
    let mut state = init_state(driver, resumed, initial_meta)?;
    let indexed: Vec<(u64, &TestCase)> =
        cases.iter().enumerate().map(|(i, c)| (i as u64, c)).collect();
    let records = run_adaptive_cases(driver, &indexed, &mut state)?;
    Ok(StrategyOutcome {
        records,
        final_meta: Some(state.meta),
        inconsistent_ids: None,
    })
}

/// Gate every case on order-swap agreement, then learn only on the
/// disagreements. Consistent cases keep their gate verdicts as final.
pub(crate) fn run_selective(
    driver: &mut Driver<'_, '_>,
    cases: &[TestCase],
    resumed: Option<&ReplayedRun>,
    initial_meta: Option<&str>,
) -> Result<StrategyOutcome, EngineError> {
    let strategy = driver.config.strategy;
    let paired = driver.config.paired_evaluation;
    let temperature = driver.config.judge_temperature;
    let literal = driver.config.literal_consistency;
    let mut records = Vec::new();
    let mut consistent_ids: Vec<String> =
        resumed.map(|r| r.consistent_ids.clone()).unwrap_or_default();
    let mut inconsistent_ids: Vec<String> =
        resumed.map(|r| r.inconsistent_ids.clone()).unwrap_or_default();

    driver.phase("gate")?;
    for (i, case) in cases.iter().enumerate() {
        let unit = format!("gate:{}", case.id);
        if driver.is_done(&unit) {
            if consistent_ids.iter().any(|id| id == &case.id) {
                driver.tick();
            }
            continue;
        }
        driver.begin(&unit)?;
        let (c_prompt, c_raw, c_verdict, c_ids) = driver.judge_fixed(
            TemplateId::VanillaJudge,
            case,
            PresentationOrder::Canonical,
            CallTag::ConsistencyCheck,
            temperature,
        )?;
        let (s_prompt, s_raw, s_verdict, s_ids) = driver.judge_fixed(
            TemplateId::VanillaJudge,
            case,
            PresentationOrder::Swapped,
            CallTag::ConsistencyCheck,
            temperature,
        )?;
        let consistent = verdicts_agree(&c_verdict, &s_verdict, literal);
        driver.sink.append(&Event::Gate {
            case_id: case.id.clone(),
            consistent,
            canonical: c_verdict.clone(),
            swapped: s_verdict.clone(),
        })?;
        if consistent {
            let record = JudgmentRecord::new(
                case.id.clone(),
                strategy,
                PresentationOrder::Canonical,
                c_prompt,
                c_raw,
                c_verdict,
                c_ids,
                i as u64,
            );
            driver.emit_judgment(record.clone())?;
            records.push(record);
            if paired {
                let record = JudgmentRecord::new(
                    case.id.clone(),
                    strategy,
                    PresentationOrder::Swapped,
                    s_prompt,
                    s_raw,
                    s_verdict,
                    s_ids,
                    i as u64,
                );
                driver.emit_judgment(record.clone())?;
                records.push(record);
            }
            consistent_ids.push(case.id.clone());
        } else {
            inconsistent_ids.push(case.id.clone());
        }
        driver.commit(&unit)?;
        if consistent {
            driver.tick();
        }
    }

    driver.phase("lwe")?;
    if inconsistent_ids.is_empty() {
        return Ok(StrategyOutcome {
            records,
            final_meta: None,
            inconsistent_ids: Some(inconsistent_ids),
        });
    }
    let by_id: HashMap<&str, &TestCase> =
        cases.iter().map(|c| (c.id.as_str(), c)).collect();
    let base = cases.len() as u64;
    let targets: Vec<(u64, &TestCase)> = inconsistent_ids
        .iter()
        .enumerate()
        .map(|(j, id)| (base + j as u64, by_id[id.as_str()]))
        .collect();
    let mut state = init_state(driver, resumed, initial_meta)?;
    records.extend(run_adaptive_cases(driver, &targets, &mut state)?);
    Ok(StrategyOutcome {
        records,
        final_meta: Some(state.meta),
        inconsistent_ids: Some(inconsistent_ids),
    })
}

/// Two same-prompt verdicts agree when both are valid and prefer the same
/// response. The literal flag compares the raw A/B labels instead.
fn verdicts_agree(canonical: &Verdict, swapped: &Verdict, literal: bool) -> bool {
    if literal {
        match (canonical.label(), swapped.label()) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    } else {
        match (
            canonicalize(canonical, PresentationOrder::Canonical),
            canonicalize(swapped, PresentationOrder::Swapped),
        ) {
            (Ok(a), Ok(b)) => a == b,
            _ => false,
        }
    }
}

/// Establishes the meta-prompt, either fresh (inside an "init" unit) or from
/// replayed state when that unit already committed.
fn init_state(
    driver: &mut Driver<'_, '_>,
    resumed: Option<&ReplayedRun>,
    initial_meta: Option<&str>,
) -> Result<LweState, EngineError> {
    let mut state = LweState {
        meta: String::new(),
        buffer: resumed.map(|r| r.feedback_buffer.clone()).unwrap_or_default(),
        refinements: resumed.map(|r| r.refinement_count).unwrap_or(0),
        summarizations: resumed.map(|r| r.summarization_count).unwrap_or(0),
    };
    if driver.is_done("init") {
        state.meta = resumed
            .and_then(|r| r.meta_text.clone())
            .unwrap_or_default();
        return Ok(state);
    }
    driver.begin("init")?;
    state.meta = initial_meta
        .map(str::to_string)
        .unwrap_or_else(|| driver.templates.text(TemplateId::InitialMetaPrompt).to_string());
    driver.sink.append(&Event::Meta {
        kind: MetaKind::Init,
        text: state.meta.clone(),
    })?;
    maybe_summarize(driver, &mut state)?;
    driver.commit("init")?;
    Ok(state)
}

/// The per-case learning loop over an indexed slice of cases. Each case is
/// one unit: build a tailored prompt, judge (both presentations when
/// paired, reusing the same prompt), request feedback, and flush the buffer
/// into a refinement when it reaches the batch size or the phase ends.
fn run_adaptive_cases(
    driver: &mut Driver<'_, '_>,
    indexed: &[(u64, &TestCase)],
    state: &mut LweState,
) -> Result<Vec<JudgmentRecord>, EngineError> {
    let strategy = driver.config.strategy;
    let paired = driver.config.paired_evaluation;
    let temperature = driver.config.judge_temperature;
    let batch_size = driver.config.batch_size.max(1) as usize;
    let mut records = Vec::new();
    let total = indexed.len();
    for (pos, (seq, case)) in indexed.iter().enumerate() {
        let is_last = pos + 1 == total;
        let unit = format!("case:{}", case.id);
        if driver.is_done(&unit) {
            driver.tick();
            continue;
        }
        driver.begin(&unit)?;

        let example = driver
            .templates
            .render_example(case, PresentationOrder::Canonical)?;
        let mut build_request = ModelRequest::new(
            format!("{}\n\n{}", state.meta, example),
            CallTag::BuildEvalPrompt,
        )
        .with_case(case.id.clone())
        .with_temperature(temperature);
        build_request.image = case.image.clone();
        let built = driver.try_call(
            build_request,
            &format!("prompt construction for case {}", case.id),
        )?;
        let (eval_prompt, build_id) = match built {
            Some(out) => {
                let trimmed = out.text.trim().to_string();
                if trimmed.is_empty() {
                    driver.warn(format!("empty evaluation prompt for case {}", case.id))?;
                }
                (trimmed, Some(out.usage.id))
            }
            None => (String::new(), None),
        };

        // canonical judgment, remembering its composed input for feedback
        let mut feedback_basis: Option<(String, String)> = None;
        let (c_raw, c_verdict, mut c_ids) = if eval_prompt.is_empty() {
            (
                String::new(),
                Verdict::Invalid("empty-eval-prompt".to_string()),
                vec![],
            )
        } else {
            let input =
                compose_judge_input(driver.templates, &eval_prompt, case, PresentationOrder::Canonical)?;
            let (raw, verdict, ids) =
                driver.judge_text(input.clone(), case, CallTag::Judge, temperature)?;
            if !raw.is_empty() {
                feedback_basis = Some((input, raw.clone()));
            }
            (raw, verdict, ids)
        };
        if let Some(id) = build_id {
            c_ids.insert(0, id);
        }
        let record = JudgmentRecord::new(
            case.id.clone(),
            strategy,
            PresentationOrder::Canonical,
            eval_prompt.clone(),
            c_raw,
            c_verdict,
            c_ids,
            *seq,
        );
        driver.emit_judgment(record.clone())?;
        records.push(record);

        if paired {
            let (raw, verdict, ids) = if eval_prompt.is_empty() {
                (
                    String::new(),
                    Verdict::Invalid("empty-eval-prompt".to_string()),
                    vec![],
                )
            } else {
                let input = compose_judge_input(
                    driver.templates,
                    &eval_prompt,
                    case,
                    PresentationOrder::Swapped,
                )?;
                driver.judge_text(input, case, CallTag::Judge, temperature)?
            };
            let record = JudgmentRecord::new(
                case.id.clone(),
                strategy,
                PresentationOrder::Swapped,
                eval_prompt.clone(),
                raw,
                verdict,
                ids,
                *seq,
            );
            driver.emit_judgment(record.clone())?;
            records.push(record);
        }

        // self-feedback on the canonical judgment
        if let Some((judge_input, judgment_raw)) = feedback_basis {
            let request_text = driver.templates.render(
                TemplateId::FeedbackRequest,
                &RenderBindings::new()
                    .set("meta_prompt", state.meta.clone())
                    .set("evaluation_prompt", judge_input)
                    .set("judgment", judgment_raw.clone()),
            )?;
            let mut request = ModelRequest::new(request_text, CallTag::Feedback)
                .with_case(case.id.clone())
                .with_temperature(temperature);
            request.image = case.image.clone();
            if let Some(out) =
                driver.try_call(request, &format!("feedback for case {}", case.id))?
            {
                let entry = FeedbackBatchEntry {
                    eval_prompt: eval_prompt.clone(),
                    case_rendering: example.clone(),
                    judgment_raw,
                    feedback: parse_feedback(&out.text),
                };
                entry.validate()?;
                driver.sink.append(&Event::Feedback {
                    case_id: case.id.clone(),
                    entry: entry.clone(),
                })?;
                state.buffer.push(entry);
            }
        }

        if !state.buffer.is_empty() && (state.buffer.len() >= batch_size || is_last) {
            refine(driver, state)?;
            maybe_summarize(driver, state)?;
        }

        driver.commit(&unit)?;
        driver.tick();
    }
    Ok(records)
}

/// Folds the buffered feedback into the meta-prompt. The buffer clears even
/// when the refinement output is rejected, so one bad round cannot wedge
/// every later batch.
fn refine(driver: &mut Driver<'_, '_>, state: &mut LweState) -> Result<(), EngineError> {
    let batch_text = state
        .buffer
        .iter()
        .enumerate()
        .map(|(k, entry)| {
            format!(
                "[Batch example {}]\n[Evaluation Prompt]\n{}\n\n{}\n\n[Judgment]\n{}\n\n[Feedback]\n{}",
                k + 1,
                entry.eval_prompt,
                entry.case_rendering,
                entry.judgment_raw,
                entry.feedback.raw,
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n");
    let request_text = driver.templates.render(
        TemplateId::RefineRequest,
        &RenderBindings::new()
            .set("meta_prompt", state.meta.clone())
            .set("batch", batch_text),
    )?;
    let request = ModelRequest::new(request_text, CallTag::Refine)
        .with_temperature(driver.config.judge_temperature);
    if let Some(out) = driver.try_call(request, "meta-prompt refinement")? {
        match parse_refined_meta(&out.text) {
            Ok(text) => state.meta = text,
            Err(e) => driver.warn(format!("refinement output rejected: {e}"))?,
        }
    }
    state.buffer.clear();
    state.refinements += 1;
    driver.sink.append(&Event::Meta {
        kind: MetaKind::Refine,
        text: state.meta.clone(),
    })?;
    Ok(())
}

/// Compresses the meta-prompt once when it has outgrown the threshold.
/// Runs only at refinement boundaries (and init), so each crossing triggers
/// exactly one summarization.
fn maybe_summarize(driver: &mut Driver<'_, '_>, state: &mut LweState) -> Result<(), EngineError> {
    if char_len(&state.meta) <= driver.config.summarize_threshold as u64 {
        return Ok(());
    }
    let request_text = driver.templates.render(
        TemplateId::SummarizeRequest,
        &RenderBindings::new().set("meta_prompt", state.meta.clone()),
    )?;
    let request = ModelRequest::new(request_text, CallTag::Summarize)
        .with_temperature(driver.config.judge_temperature);
    if let Some(out) = driver.try_call(request, "meta-prompt summarization")? {
        let trimmed = out.text.trim();
        if trimmed.is_empty() {
            driver.warn("summarization returned empty text; keeping the long meta-prompt".to_string())?;
        } else {
            state.meta = trimmed.to_string();
            state.summarizations += 1;
            driver.sink.append(&Event::Meta {
                kind: MetaKind::Summarize,
                text: state.meta.clone(),
            })?;
        }
    }
    Ok(())
}
