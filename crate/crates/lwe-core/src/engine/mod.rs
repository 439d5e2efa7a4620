//! Run orchestration for the six judging strategies.
//!
//! The engine walks a materialized dataset, drives the provider through the
//! right call sequence for the configured strategy, and streams everything
//! it does to an event sink as bracketed units of work. It never touches
//! the filesystem itself; persistence and resume live behind the sink and
//! the replayed state handed in by the caller.

mod adaptive;
mod fixed;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::core::{
    CoreError, JudgmentRecord, PresentationOrder, RunConfig, StrategyKind, TestCase, Verdict,
};
use crate::extraction::extract_verdict;
use crate::provider::ledger::{LedgerRecorder, UsageLedger};
use crate::provider::{CallOutput, CallTag, ModelRequest, Provider, ProviderError};
use crate::store::{Event, EventSink, ReplayedRun, StoreError};
use crate::templates::{TemplateError, TemplateId, TemplateStore};

#[derive(Debug, Error)]
pub enum EngineError {
    /// A provider failure under fail-fast, or any other condition that
    /// stopped the run mid-flight. The log keeps its completed units.
    #[error("run aborted: {0}")]
    Aborted(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Core(#[from] CoreError),
}

/// Everything a finished (or resumed-to-finish) run produced.
#[derive(Debug)]
pub struct RunResult {
    pub records: Vec<JudgmentRecord>,
    /// Final meta-prompt text, for strategies that evolve one.
    pub final_meta: Option<String>,
    pub ledger: UsageLedger,
    pub config_snapshot: RunConfig,
    /// Case ids in evaluation order.
    pub dataset_order: Vec<String>,
    /// Cases the order-swap gate routed into the adaptive phase.
    pub inconsistent_ids: Option<Vec<String>>,
}

pub type ProgressFn<'a> = &'a mut dyn FnMut(usize, usize);

/// Shared per-run machinery handed to the strategy loops.
pub(crate) struct Driver<'a, 'f> {
    provider: &'a dyn Provider,
    templates: &'a TemplateStore,
    config: RunConfig,
    sink: &'a mut dyn EventSink,
    recorder: LedgerRecorder,
    cursor: usize,
    done_units: BTreeSet<String>,
    seen_phases: BTreeSet<String>,
    progress: Option<ProgressFn<'f>>,
    total_cases: usize,
    completed_cases: usize,
}

impl<'a, 'f> Driver<'a, 'f> {
    fn drain_usage(&mut self) -> Result<(), EngineError> {
        for entry in self.recorder.entries_since(self.cursor) {
            self.sink.append(&Event::Usage { entry })?;
        }
        self.cursor = self.recorder.len();
        Ok(())
    }

    fn warn(&mut self, message: String) -> Result<(), EngineError> {
        self.sink.append(&Event::Warning { message })?;
        Ok(())
    }

    /// One provider call with usage streamed to the sink. Failures abort
    /// under fail-fast; otherwise they are logged and surface as `None` for
    /// the caller to degrade gracefully.
    fn try_call(
        &mut self,
        request: ModelRequest,
        context: &str,
    ) -> Result<Option<CallOutput>, EngineError> {
        let result = self.provider.complete(&request, &self.recorder);
        self.drain_usage()?;
        match result {
            Ok(output) => Ok(Some(output)),
            Err(e) if self.config.fail_fast => {
                Err(EngineError::Aborted(format!("{context}: {e}")))
            }
            Err(e) => {
                self.warn(format!("{context}: {e}"))?;
                Ok(None)
            }
        }
    }

    /// Renders the fixed template for a case and judges it.
    fn judge_fixed(
        &mut self,
        template: TemplateId,
        case: &TestCase,
        order: PresentationOrder,
        tag: CallTag,
        temperature: f64,
    ) -> Result<(String, String, Verdict, Vec<String>), EngineError> {
        let prompt = self.templates.render(
            template,
            &crate::templates::RenderBindings::for_case(case.view(order)),
        )?;
        let (raw, verdict, call_ids) = self.judge_text(prompt.clone(), case, tag, temperature)?;
        Ok((prompt, raw, verdict, call_ids))
    }

    /// Judges an already-composed input, degrading provider failures to an
    /// invalid verdict.
    fn judge_text(
        &mut self,
        input: String,
        case: &TestCase,
        tag: CallTag,
        temperature: f64,
    ) -> Result<(String, Verdict, Vec<String>), EngineError> {
        let mut request = ModelRequest::new(input, tag)
            .with_case(case.id.clone())
            .with_temperature(temperature);
        request.image = case.image.clone();
        match self.try_call(request, &format!("judgment for case {}", case.id))? {
            Some(output) => {
                let verdict = extract_verdict(&output.text);
                Ok((output.text, verdict, vec![output.usage.id]))
            }
            None => Ok((
                String::new(),
                Verdict::Invalid("provider-error".to_string()),
                vec![],
            )),
        }
    }

    fn emit_judgment(&mut self, record: JudgmentRecord) -> Result<(), EngineError> {
        record.validate()?;
        self.sink.append(&Event::Judgment { record })?;
        Ok(())
    }

    fn begin(&mut self, unit: &str) -> Result<(), EngineError> {
        self.sink.append(&Event::Begin { unit: unit.to_string() })?;
        Ok(())
    }

    fn commit(&mut self, unit: &str) -> Result<(), EngineError> {
        self.sink.append(&Event::Commit { unit: unit.to_string() })?;
        self.done_units.insert(unit.to_string());
        Ok(())
    }

    fn phase(&mut self, name: &str) -> Result<(), EngineError> {
        if self.seen_phases.insert(name.to_string()) {
            self.sink.append(&Event::Phase { name: name.to_string() })?;
        }
        Ok(())
    }

    fn is_done(&self, unit: &str) -> bool {
        self.done_units.contains(unit)
    }

    fn tick(&mut self) {
        self.completed_cases += 1;
        if let Some(progress) = self.progress.as_mut() {
            progress(self.completed_cases, self.total_cases);
        }
    }
}

/// Runs the configured strategy over the cases, continuing from `resumed`
/// state when given. Records recovered from the log come back merged with
/// the newly produced ones.
#[allow(clippy::too_many_arguments)]
pub fn execute(
    provider: &dyn Provider,
    templates: &TemplateStore,
    cases: &[TestCase],
    config: &RunConfig,
    initial_meta: Option<&str>,
    sink: &mut dyn EventSink,
    resumed: Option<&ReplayedRun>,
    progress: Option<ProgressFn<'_>>,
) -> Result<RunResult, EngineError> {
    config.validate()?;
    let recorder = match resumed {
        Some(r) => LedgerRecorder::seeded(r.ledger_entries.clone()),
        None => LedgerRecorder::new(),
    };
    let cursor = recorder.len();
    let mut driver = Driver {
        provider,
        templates,
        config: config.clone(),
        sink,
        recorder,
        cursor,
        done_units: resumed.map(|r| r.done_units.clone()).unwrap_or_default(),
        seen_phases: resumed
            .map(|r| r.seen_phases.iter().cloned().collect())
            .unwrap_or_default(),
        progress,
        total_cases: cases.len(),
        completed_cases: 0,
    };
    let prior_records = resumed.map(|r| r.records.clone()).unwrap_or_default();

    let outcome = match config.strategy {
        StrategyKind::Vanilla => fixed::run_template(&mut driver, cases, TemplateId::VanillaJudge)?,
        StrategyKind::Cot => fixed::run_template(&mut driver, cases, TemplateId::CoTJudge)?,
        StrategyKind::MajorityVoting => fixed::run_majority(&mut driver, cases)?,
        StrategyKind::SampleSpecific => {
            fixed::run_sample_specific(&mut driver, cases, initial_meta)?
        }
        StrategyKind::Lwe => adaptive::run_lwe(&mut driver, cases, resumed, initial_meta)?,
        StrategyKind::SelectiveLwe => {
            adaptive::run_selective(&mut driver, cases, resumed, initial_meta)?
        }
    };

    let mut records = prior_records;
    records.extend(outcome.records);
    Ok(RunResult {
        records,
        final_meta: outcome.final_meta,
        ledger: driver.recorder.snapshot(),
        config_snapshot: config.clone(),
        dataset_order: cases.iter().map(|c| c.id.clone()).collect(),
        inconsistent_ids: outcome.inconsistent_ids,
    })
}

/// What a strategy loop produced this session (prior records excluded).
pub(crate) struct StrategyOutcome {
    pub records: Vec<JudgmentRecord>,
    pub final_meta: Option<String>,
    pub inconsistent_ids: Option<Vec<String>>,
}

fn forced(config: &RunConfig, strategy: StrategyKind) -> RunConfig {
    let mut config = config.clone();
    config.strategy = strategy;
    config
}

pub fn run_vanilla(
    provider: &dyn Provider,
    templates: &TemplateStore,
    cases: &[TestCase],
    config: &RunConfig,
    sink: &mut dyn EventSink,
) -> Result<RunResult, EngineError> {
    execute(
        provider,
        templates,
        cases,
        &forced(config, StrategyKind::Vanilla),
        None,
        sink,
        None,
        None,
    )
}

pub fn run_cot(
    provider: &dyn Provider,
    templates: &TemplateStore,
    cases: &[TestCase],
    config: &RunConfig,
    sink: &mut dyn EventSink,
) -> Result<RunResult, EngineError> {
    execute(
        provider,
        templates,
        cases,
        &forced(config, StrategyKind::Cot),
        None,
        sink,
        None,
        None,
    )
}

pub fn run_majority(
    provider: &dyn Provider,
    templates: &TemplateStore,
    cases: &[TestCase],
    config: &RunConfig,
    sink: &mut dyn EventSink,
) -> Result<RunResult, EngineError> {
    execute(
        provider,
        templates,
        cases,
        &forced(config, StrategyKind::MajorityVoting),
        None,
        sink,
        None,
        None,
    )
}

pub fn run_sample_specific(
    provider: &dyn Provider,
    templates: &TemplateStore,
    cases: &[TestCase],
    config: &RunConfig,
    initial_meta: Option<&str>,
    sink: &mut dyn EventSink,
) -> Result<RunResult, EngineError> {
    execute(
        provider,
        templates,
        cases,
        &forced(config, StrategyKind::SampleSpecific),
        initial_meta,
        sink,
        None,
        None,
    )
}

pub fn run_lwe(
    provider: &dyn Provider,
    templates: &TemplateStore,
    cases: &[TestCase],
    config: &RunConfig,
    initial_meta: Option<&str>,
    sink: &mut dyn EventSink,
) -> Result<RunResult, EngineError> {
    execute(
        provider,
        templates,
        cases,
        &forced(config, StrategyKind::Lwe),
        initial_meta,
        sink,
        None,
        None,
    )
}

pub fn run_selective_lwe(
    provider: &dyn Provider,
    templates: &TemplateStore,
    cases: &[TestCase],
    config: &RunConfig,
    initial_meta: Option<&str>,
    sink: &mut dyn EventSink,
) -> Result<RunResult, EngineError> {
    execute(
        provider,
        templates,
        cases,
        &forced(config, StrategyKind::SelectiveLwe),
        initial_meta,
        sink,
        None,
        None,
    )
}
