//! Pairwise LLM-as-a-judge evaluation engine.
//!
//! The crate drives six judging strategies over a dataset of pairwise
//! comparison cases: three with fixed prompts (vanilla, chain-of-thought,
//! majority voting) and three that tailor the evaluation prompt per case
//! (sample-specific, LWE, selective LWE). The LWE strategies evolve a
//! meta-prompt at test time from self-feedback, batched into refinements;
//! the selective variant gates that learning loop on order-swap
//! inconsistency so consistent cases stay cheap.
//!
//! Modules mirror the processing pipeline:
//!
//! - [`core`]: shared domain types (cases, verdicts, records, config)
//! - [`extraction`]: verdict extraction from free-form judge output
//! - [`templates`]: the seven prompt templates and their render/parse ops
//! - [`provider`]: model backends (HTTP chat-completion client, deterministic
//!   simulator) and the usage ledger behind cost accounting
//! - [`engine`]: the six strategies as sequential state machines
//! - [`metrics`]: accuracy, consistency, pair accuracy, relative cost and
//!   cumulative-accuracy curves
//! - [`store`]: dataset loading, seeded ordering, and resumable append-only
//!   run persistence

pub mod core;
pub mod engine;
pub mod extraction;
pub mod metrics;
pub mod provider;
pub mod store;
pub mod templates;
