//! Append-only run log with unit-of-work replay.
//!
//! Every run directory holds a `manifest.json` describing the invocation and
//! an `events.log` of one JSON event per line, numbered from zero. Work is
//! bracketed: a `begin` event opens a unit (one gate check, one evaluated
//! case, the meta-prompt initialization), a matching `commit` seals it.
//! Replay folds only sealed units into state, so a run killed mid-case
//! resumes from the last complete case instead of half-applied effects. Each
//! append is flushed before the engine proceeds, and the directory carries
//! an advisory lock so two writers cannot interleave.

use std::collections::BTreeSet;
use std::fs::{self, File, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::StoreError;
use crate::core::{
    FeedbackBatchEntry, JudgmentRecord, PreferredResponse, RunConfig, StrategyKind, Verdict,
};
use crate::metrics::MetricReport;
use crate::provider::ledger::UsageEntry;

pub const EVENTS_FILE: &str = "events.log";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
pub const FINAL_META_FILE: &str = "final_meta.txt";
const LOCK_FILE: &str = ".lock";

/// One case slot in the materialized evaluation order.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CaseOrderEntry {
    pub id: String,
    pub gold: Option<PreferredResponse>,
}

/// Everything needed to reproduce or score a run without its dataset file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub code_version: String,
    pub strategy: StrategyKind,
    pub seed: u64,
    pub permutation_run: u32,
    pub limit: Option<usize>,
    pub provider_name: String,
    pub dataset_checksum: String,
    pub config: RunConfig,
    /// Shuffled case order with materialized gold labels.
    pub case_order: Vec<CaseOrderEntry>,
    /// Recorded so consumers know the swapped judgment of a paired tailored
    /// run reused the canonical evaluation prompt rather than rebuilding it.
    pub swapped_judgment_reuses_eval_prompt: bool,
}

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MetaKind {
    Init,
    Refine,
    Summarize,
}

/// A single line of the run log.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    /// Opens a unit of work ("init", "gate:<id>", "case:<id>").
    Begin { unit: String },
    /// Seals the unit; replay folds its buffered events.
    Commit { unit: String },
    Usage { entry: UsageEntry },
    Judgment { record: JudgmentRecord },
    Feedback {
        case_id: String,
        entry: FeedbackBatchEntry,
    },
    /// Meta-prompt lifecycle: the full text after init/refine/summarize.
    Meta { kind: MetaKind, text: String },
    /// Order-swap gate outcome for one case.
    Gate {
        case_id: String,
        consistent: bool,
        canonical: Verdict,
        swapped: Verdict,
    },
    Phase { name: String },
    Warning { message: String },
    /// Terminal marker: the run finished and reports were written.
    Done,
}

#[derive(Serialize, Deserialize)]
struct EventLine {
    seq: u64,
    event: Event,
}

/// Destination for engine events. The engine only ever appends.
pub trait EventSink {
    fn append(&mut self, event: &Event) -> Result<u64, StoreError>;
}

/// Collects events in memory; used by tests and one-shot runs.
#[derive(Default)]
pub struct MemorySink {
    pub events: Vec<Event>,
}

impl EventSink for MemorySink {
    fn append(&mut self, event: &Event) -> Result<u64, StoreError> {
        self.events.push(event.clone());
        Ok(self.events.len() as u64 - 1)
    }
}

/// Discards events.
#[derive(Default)]
pub struct NullSink {
    count: u64,
}

impl EventSink for NullSink {
    fn append(&mut self, _event: &Event) -> Result<u64, StoreError> {
        let seq = self.count;
        self.count += 1;
        Ok(seq)
    }
}

/// Advisory exclusive lock on a run directory, held for the writer's life.
struct DirLock {
    _file: File,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self, StoreError> {
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(dir.join(LOCK_FILE))?;
        #[cfg(unix)]
        {
            use std::os::unix::io::AsRawFd;
            let rc = unsafe { libc::flock(file.as_raw_fd(), libc::LOCK_EX | libc::LOCK_NB) };
            if rc != 0 {
                return Err(StoreError::Locked(dir.display().to_string()));
            }
        }
        Ok(DirLock { _file: file })
    }
}

/// Appends numbered events to a run directory, flushing each line.
pub struct RunWriter {
    dir: PathBuf,
    file: File,
    next_seq: u64,
    _lock: DirLock,
}

impl RunWriter {
    /// Starts a fresh run: writes the manifest and an empty log. Fails if
    /// the directory already holds a log, or another writer has it locked.
    pub fn create(dir: impl AsRef<Path>, manifest: &Manifest) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let lock = DirLock::acquire(dir)?;
        let events_path = dir.join(EVENTS_FILE);
        if events_path.exists() {
            return Err(StoreError::RunExists(dir.display().to_string()));
        }
        let manifest_json =
            serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
        fs::write(dir.join(MANIFEST_FILE), manifest_json + "\n")?;
        let file = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(&events_path)?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            file,
            next_seq: 0,
            _lock: lock,
        })
    }

    /// Reopens an interrupted run: replays the log, drops any torn final
    /// line, and positions the writer after the last good event.
    pub fn open_resume(dir: impl AsRef<Path>) -> Result<(Self, ReplayedRun), StoreError> {
        let dir = dir.as_ref();
        let lock = DirLock::acquire(dir)?;
        let replayed = replay(dir)?;
        let mut file = OpenOptions::new().write(true).open(dir.join(EVENTS_FILE))?;
        file.set_len(replayed.good_bytes)?;
        file.seek(SeekFrom::End(0))?;
        Ok((
            RunWriter {
                dir: dir.to_path_buf(),
                file,
                next_seq: replayed.next_seq,
                _lock: lock,
            },
            replayed,
        ))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append(&mut self, event: &Event) -> Result<u64, StoreError> {
        let line = serde_json::to_string(&EventLine {
            seq: self.next_seq,
            event: event.clone(),
        })
        .map_err(std::io::Error::other)?;
        self.file.write_all(line.as_bytes())?;
        self.file.write_all(b"\n")?;
        self.file.flush()?;
        let seq = self.next_seq;
        self.next_seq += 1;
        Ok(seq)
    }

    /// Writes the run outputs, then seals the log with the terminal event.
    pub fn finalize(
        &mut self,
        report: Option<&MetricReport>,
        final_meta: Option<&str>,
    ) -> Result<(), StoreError> {
        if let Some(meta) = final_meta {
            fs::write(self.dir.join(FINAL_META_FILE), meta)?;
        }
        if let Some(report) = report {
            let json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
            fs::write(self.dir.join(REPORT_FILE), json + "\n")?;
        }
        self.append(&Event::Done)?;
        Ok(())
    }
}

impl EventSink for RunWriter {
    fn append(&mut self, event: &Event) -> Result<u64, StoreError> {
        RunWriter::append(self, event)
    }
}

/// State recovered from a run directory.
#[derive(Debug, Default)]
pub struct ReplayedRun {
    pub manifest: Option<Manifest>,
    pub records: Vec<JudgmentRecord>,
    pub ledger_entries: Vec<UsageEntry>,
    pub meta_text: Option<String>,
    pub refinement_count: u64,
    pub summarization_count: u64,
    pub feedback_buffer: Vec<FeedbackBatchEntry>,
    pub consistent_ids: Vec<String>,
    pub inconsistent_ids: Vec<String>,
    pub done_units: BTreeSet<String>,
    pub seen_phases: Vec<String>,
    pub warnings: Vec<String>,
    pub completed: bool,
    /// Sequence number the next append must carry.
    pub next_seq: u64,
    /// Byte length of the well-formed log prefix.
    pub good_bytes: u64,
    /// Unit left open by a crash, if any; its events were discarded.
    pub dropped_fragment: Option<String>,
}

impl ReplayedRun {
    pub fn manifest(&self) -> &Manifest {
        self.manifest.as_ref().expect("replay always sets the manifest")
    }
}

fn fold(state: &mut ReplayedRun, event: Event) {
    match event {
        Event::Usage { entry } => state.ledger_entries.push(entry),
        Event::Judgment { record } => state.records.push(record),
        Event::Feedback { entry, .. } => state.feedback_buffer.push(entry),
        Event::Meta { kind, text } => {
            match kind {
                MetaKind::Init => {}
                MetaKind::Refine => {
                    state.refinement_count += 1;
                    state.feedback_buffer.clear();
                }
                MetaKind::Summarize => state.summarization_count += 1,
            }
            state.meta_text = Some(text);
        }
        Event::Gate {
            case_id,
            consistent,
            ..
        } => {
            if consistent {
                state.consistent_ids.push(case_id);
            } else {
                state.inconsistent_ids.push(case_id);
            }
        }
        Event::Phase { name } => state.seen_phases.push(name),
        Event::Warning { message } => state.warnings.push(message),
        Event::Done => state.completed = true,
        Event::Begin { .. } | Event::Commit { .. } => unreachable!("handled structurally"),
    }
}

/// Rebuilds run state from disk.
///
/// Events between a `begin` and its `commit` are buffered and folded only
/// when the commit arrives; an unterminated fragment is discarded. A final
/// line that fails to parse, lost its newline, or skips the expected
/// sequence number is treated as a crash artifact and dropped; the same
/// defect anywhere else is corruption.
pub fn replay(dir: impl AsRef<Path>) -> Result<ReplayedRun, StoreError> {
    let dir = dir.as_ref();
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(StoreError::MissingRun(dir.display().to_string()));
    }
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path)?)
        .map_err(|e| StoreError::CorruptLog {
            seq: 0,
            message: format!("manifest unreadable: {e}"),
        })?;
    let events_path = dir.join(EVENTS_FILE);
    let raw = if events_path.exists() {
        fs::read_to_string(&events_path)?
    } else {
        String::new()
    };

    let mut state = ReplayedRun {
        manifest: Some(manifest),
        ..ReplayedRun::default()
    };
    let mut fragment: Option<(String, Vec<Event>)> = None;
    let mut offset = 0u64;
    let lines: Vec<&str> = raw.split_inclusive('\n').collect();
    for (i, line_raw) in lines.iter().enumerate() {
        let is_last = i + 1 == lines.len();
        let line = line_raw.strip_suffix('\n');
        let parsed = line
            .or(if is_last { Some(line_raw) } else { None })
            .map(serde_json::from_str::<EventLine>);
        match (parsed, line) {
            // torn final line: parse failure, missing newline, or seq gap
            (Some(Err(_)), _) | (_, None) if is_last => break,
            (Some(Ok(el)), _) if el.seq != state.next_seq && is_last => break,
            (Some(Err(e)), _) => {
                return Err(StoreError::CorruptLog {
                    seq: state.next_seq,
                    message: e.to_string(),
                })
            }
            (Some(Ok(el)), _) => {
                if el.seq != state.next_seq {
                    return Err(StoreError::CorruptLog {
                        seq: state.next_seq,
                        message: format!("found seq {}", el.seq),
                    });
                }
                match el.event {
                    Event::Begin { unit } => fragment = Some((unit, Vec::new())),
                    Event::Commit { unit } => match fragment.take() {
                        Some((open, events)) if open == unit => {
                            for event in events {
                                fold(&mut state, event);
                            }
                            state.done_units.insert(unit);
                        }
                        _ => {}
                    },
                    event => match fragment.as_mut() {
                        Some((_, buffer)) => buffer.push(event),
                        None => fold(&mut state, event),
                    },
                }
                state.next_seq += 1;
                state.good_bytes = offset + line_raw.len() as u64;
            }
            (None, _) => unreachable!("every line yields a parse attempt"),
        }
        offset += line_raw.len() as u64;
    }
    if let Some((unit, _)) = fragment {
        state.dropped_fragment = Some(unit);
    }
    Ok(state)
}
