//! Per-call character accounting, the basis of relative inference cost.

use std::collections::BTreeMap;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::CallTag;
use crate::core::char_len;

/// One model call's character accounting. Character counts are Unicode
/// scalar counts of the request and response texts; attached images count
/// zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageEntry {
    pub id: String,
    pub call_tag: CallTag,
    pub input_chars: u64,
    pub output_chars: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case_id: Option<String>,
    pub timestamp: DateTime<Utc>,
    pub provider_name: String,
}

/// Immutable collection of usage entries with the cost arithmetic on top.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UsageLedger {
    pub entries: Vec<UsageEntry>,
}

impl UsageLedger {
    pub fn new(entries: Vec<UsageEntry>) -> Self {
        UsageLedger { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of input and output characters over all entries.
    pub fn total_chars(&self) -> u64 {
        self.entries
            .iter()
            .map(|e| e.input_chars + e.output_chars)
            .sum()
    }

    /// Per-tag totals; the values always sum to [`UsageLedger::total_chars`].
    pub fn tag_totals(&self) -> BTreeMap<CallTag, u64> {
        let mut totals = BTreeMap::new();
        for e in &self.entries {
            *totals.entry(e.call_tag).or_insert(0) += e.input_chars + e.output_chars;
        }
        totals
    }

    /// Entries carrying a given tag.
    pub fn with_tag(&self, tag: CallTag) -> impl Iterator<Item = &UsageEntry> {
        self.entries.iter().filter(move |e| e.call_tag == tag)
    }
}

/// Full request/response text of one call, kept in memory for audits (the
/// one-sided-update check greps these); not persisted to the event log.
#[derive(Clone, Debug)]
pub struct CallTranscript {
    pub usage_id: String,
    pub call_tag: CallTag,
    pub case_id: Option<String>,
    pub request: String,
    pub response: String,
}

/// Append-only concurrent sink the providers write into during a run.
/// Entry ids are assigned at append time, establishing the total order.
#[derive(Debug, Default)]
pub struct LedgerRecorder {
    inner: Mutex<Inner>,
}

#[derive(Debug, Default)]
struct Inner {
    entries: Vec<UsageEntry>,
    transcripts: Vec<CallTranscript>,
}

impl LedgerRecorder {
    pub fn new() -> Self {
        LedgerRecorder::default()
    }

    /// Recorder pre-loaded with entries reconstructed from a run log; id
    /// assignment continues after them.
    pub fn seeded(entries: Vec<UsageEntry>) -> Self {
        LedgerRecorder {
            inner: Mutex::new(Inner {
                entries,
                transcripts: Vec::new(),
            }),
        }
    }

    /// Appends one entry, assigning its id, and returns it.
    pub fn append(
        &self,
        call_tag: CallTag,
        case_id: Option<String>,
        request_text: &str,
        response_text: &str,
        provider_name: &str,
    ) -> UsageEntry {
        let mut inner = self.inner.lock().unwrap();
        let entry = UsageEntry {
            id: format!("u{:06}", inner.entries.len()),
            call_tag,
            input_chars: char_len(request_text),
            output_chars: char_len(response_text),
            case_id,
            timestamp: Utc::now(),
            provider_name: provider_name.to_string(),
        };
        inner.entries.push(entry.clone());
        entry
    }

    /// Stores the full texts for the entry just appended.
    pub fn record_transcript(&self, transcript: CallTranscript) {
        self.inner.lock().unwrap().transcripts.push(transcript);
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Entries appended at or after index `from`.
    pub fn entries_since(&self, from: usize) -> Vec<UsageEntry> {
        self.inner.lock().unwrap().entries[from..].to_vec()
    }

    /// Snapshot of everything appended so far.
    pub fn snapshot(&self) -> UsageLedger {
        UsageLedger::new(self.inner.lock().unwrap().entries.clone())
    }

    pub fn transcripts(&self) -> Vec<CallTranscript> {
        self.inner.lock().unwrap().transcripts.clone()
    }
}
