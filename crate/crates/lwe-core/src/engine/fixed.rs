//! Strategies whose prompt never changes across the run: the fixed-template
//! judges, majority voting, and per-case prompt construction without
//! feedback.

use super::{Driver, EngineError, StrategyOutcome};
use crate::core::{JudgmentRecord, PresentationOrder, TestCase, Verdict};
use crate::extraction::extract_verdict;
use crate::provider::{CallTag, ModelRequest};
use crate::templates::{compose_judge_input, RenderBindings, TemplateId};

/// Vanilla and chain-of-thought: one templated judgment per presentation.
pub(crate) fn run_template(
    driver: &mut Driver<'_, '_>,
    cases: &[TestCase],
    template: TemplateId,
) -> Result<StrategyOutcome, EngineError> {
    let strategy = driver.config.strategy;
    let paired = driver.config.paired_evaluation;
    let temperature = driver.config.judge_temperature;
    let mut records = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let unit = format!("case:{}", case.id);
        if driver.is_done(&unit) {
            driver.tick();
            continue;
        }
        driver.begin(&unit)?;
        let orders: &[PresentationOrder] = if paired {
            &[PresentationOrder::Canonical, PresentationOrder::Swapped]
        } else {
            &[PresentationOrder::Canonical]
        };
        for &order in orders {
            let (prompt, raw, verdict, call_ids) =
                driver.judge_fixed(template, case, order, CallTag::Judge, temperature)?;
            let record = JudgmentRecord::new(
                case.id.clone(),
                strategy,
                order,
                prompt,
                raw,
                verdict,
                call_ids,
                i as u64,
            );
            driver.emit_judgment(record.clone())?;
            records.push(record);
        }
        driver.commit(&unit)?;
        driver.tick();
    }
    Ok(StrategyOutcome {
        records,
        final_meta: None,
        inconsistent_ids: None,
    })
}

/// Majority voting: k sampled judgments per presentation, majority of the
/// valid labels wins, ties and empty vote sets are invalid.
pub(crate) fn run_majority(
    driver: &mut Driver<'_, '_>,
    cases: &[TestCase],
) -> Result<StrategyOutcome, EngineError> {
    let strategy = driver.config.strategy;
    let paired = driver.config.paired_evaluation;
    let k = driver.config.majority_k.max(1);
    let temperature = driver.config.majority_temperature;
    let mut records = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let unit = format!("case:{}", case.id);
        if driver.is_done(&unit) {
            driver.tick();
            continue;
        }
        driver.begin(&unit)?;
        let orders: &[PresentationOrder] = if paired {
            &[PresentationOrder::Canonical, PresentationOrder::Swapped]
        } else {
            &[PresentationOrder::Canonical]
        };
        for &order in orders {
            let prompt = driver.templates.render(
                TemplateId::VanillaJudge,
                &RenderBindings::for_case(case.view(order)),
            )?;
            let mut raws = Vec::with_capacity(k as usize);
            let mut call_ids = Vec::new();
            let mut votes_a = 0u32;
            let mut votes_b = 0u32;
            for _ in 0..k {
                let (raw, verdict, ids) =
                    driver.judge_text(prompt.clone(), case, CallTag::Judge, temperature)?;
                match verdict {
                    Verdict::A => votes_a += 1,
                    Verdict::B => votes_b += 1,
                    Verdict::Invalid(_) => {}
                }
                raws.push(raw);
                call_ids.extend(ids);
            }
            let verdict = if votes_a == 0 && votes_b == 0 {
                Verdict::Invalid("majority: no valid votes".to_string())
            } else if votes_a > votes_b {
                Verdict::A
            } else if votes_b > votes_a {
                Verdict::B
            } else {
                Verdict::Invalid(format!("majority tie: A={votes_a}, B={votes_b}"))
            };
            let record = JudgmentRecord::new(
                case.id.clone(),
                strategy,
                order,
                prompt,
                raws.join("\n---\n"),
                verdict,
                call_ids,
                i as u64,
            );
            driver.emit_judgment(record.clone())?;
            records.push(record);
        }
        driver.commit(&unit)?;
        driver.tick();
    }
    Ok(StrategyOutcome {
        records,
        final_meta: None,
        inconsistent_ids: None,
    })
}

/// Per-case prompt construction from a fixed meta-prompt; no feedback loop.
pub(crate) fn run_sample_specific(
    driver: &mut Driver<'_, '_>,
    cases: &[TestCase],
    initial_meta: Option<&str>,
) -> Result<StrategyOutcome, EngineError> {
    let strategy = driver.config.strategy;
    let paired = driver.config.paired_evaluation;
    let temperature = driver.config.judge_temperature;
    let meta = initial_meta
        .map(str::to_string)
        .unwrap_or_else(|| driver.templates.text(TemplateId::InitialMetaPrompt).to_string());
    let mut records = Vec::new();
    for (i, case) in cases.iter().enumerate() {
        let unit = format!("case:{}", case.id);
        if driver.is_done(&unit) {
            driver.tick();
            continue;
        }
        driver.begin(&unit)?;
        let example = driver.templates.render_example(case, PresentationOrder::Canonical)?;
        let mut build_request =
            ModelRequest::new(format!("{meta}\n\n{example}"), CallTag::BuildEvalPrompt)
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
        let orders: &[PresentationOrder] = if paired {
            &[PresentationOrder::Canonical, PresentationOrder::Swapped]
        } else {
            &[PresentationOrder::Canonical]
        };
        for (which, &order) in orders.iter().enumerate() {
            let (raw, verdict, mut call_ids) = if eval_prompt.is_empty() {
                (
                    String::new(),
                    Verdict::Invalid("empty-eval-prompt".to_string()),
                    vec![],
                )
            } else {
                let input = compose_judge_input(driver.templates, &eval_prompt, case, order)?;
                let (raw, ids) = match driver.try_call(
                    {
                        let mut request = ModelRequest::new(input, CallTag::Judge)
                            .with_case(case.id.clone())
                            .with_temperature(temperature);
                        request.image = case.image.clone();
                        request
                    },
                    &format!("judgment for case {}", case.id),
                )? {
                    Some(out) => (out.text, vec![out.usage.id]),
                    None => (String::new(), vec![]),
                };
                let verdict = if raw.is_empty() {
                    Verdict::Invalid("provider-error".to_string())
                } else {
                    extract_verdict(&raw)
                };
                (raw, verdict, ids)
            };
            // the construction call belongs to the canonical record
            if which == 0 {
                if let Some(id) = build_id.clone() {
                    call_ids.insert(0, id);
                }
            }
            let record = JudgmentRecord::new(
                case.id.clone(),
                strategy,
                order,
                eval_prompt.clone(),
                raw,
                verdict,
                call_ids,
                i as u64,
            );
            driver.emit_judgment(record.clone())?;
            records.push(record);
        }
        driver.commit(&unit)?;
        driver.tick();
    }
    Ok(StrategyOutcome {
        records,
        final_meta: None,
        inconsistent_ids: None,
    })
}
