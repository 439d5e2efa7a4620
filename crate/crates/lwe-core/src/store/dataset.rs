//! JSONL dataset loading with a deterministic order and presentation draw.
//!
//! A dataset file carries one case per line. Loading shuffles case order
//! from (seed, permutation run) and flips each case's response presentation
//! by an independent coin from the same stream, so repeated runs over the
//! same file are reproducible while different permutation runs probe
//! ordering sensitivity. The checksum covers file order and is independent
//! of both draws, which lets a resumed run verify it is looking at the same
//! data.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::StoreError;
use crate::core::{ImageRef, PreferredResponse, TestCase};

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    question: String,
    #[serde(default)]
    image: Option<ImageRef>,
    response_a: String,
    response_b: String,
    #[serde(default)]
    gold: Option<String>,
}

/// A loaded dataset with its materialized case order.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub cases: Vec<TestCase>,
    /// Content digest over the file-order records, presentation excluded.
    pub checksum: String,
    pub seed: u64,
    pub permutation_run: u32,
    pub source_path: String,
    pub total_records: usize,
}

fn parse_gold(raw: Option<String>, line: usize) -> Result<Option<PreferredResponse>, StoreError> {
    match raw.as_deref() {
        None => Ok(None),
        Some("first") => Ok(Some(PreferredResponse::First)),
        Some("second") => Ok(Some(PreferredResponse::Second)),
        Some(other) => Err(StoreError::BadGoldValue {
            line,
            value: other.to_string(),
        }),
    }
}

fn order_rng(seed: u64, permutation_run: u32) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(b"lwe-dataset-order");
    hasher.update(seed.to_le_bytes());
    hasher.update(permutation_run.to_le_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Loads, shuffles, and materializes a dataset.
///
/// The shuffle and per-case presentation coin come from one stream keyed by
/// (seed, permutation run). Presentation flips swap the stored responses and
/// the gold label together, so a flipped case is still scored correctly.
/// `limit` truncates after the shuffle; asking for more cases than exist is
/// an error rather than a silent short run.
pub fn load_dataset(
    path: impl AsRef<Path>,
    seed: u64,
    permutation_run: u32,
    limit: Option<usize>,
) -> Result<Dataset, StoreError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut cases = Vec::new();
    let mut seen = HashSet::new();
    let mut hasher = Sha256::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = index + 1;
        let raw: RawRecord =
            serde_json::from_str(line).map_err(|e| StoreError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        if !seen.insert(raw.id.clone()) {
            return Err(StoreError::DuplicateId(raw.id));
        }
        let gold = parse_gold(raw.gold, line_no)?;
        hasher.update(raw.id.as_bytes());
        hasher.update([0x1f]);
        hasher.update(raw.question.as_bytes());
        hasher.update([0x1f]);
        hasher.update(raw.response_a.as_bytes());
        hasher.update([0x1f]);
        hasher.update(raw.response_b.as_bytes());
        hasher.update([0x1f]);
        hasher.update(match gold {
            Some(PreferredResponse::First) => "first",
            Some(PreferredResponse::Second) => "second",
            None => "",
        });
        hasher.update([0x1e]);
        let case = TestCase {
            id: raw.id,
            question: raw.question,
            image: raw.image,
            response_a: raw.response_a,
            response_b: raw.response_b,
            gold,
        };
        case.validate().map_err(|e| StoreError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        cases.push(case);
    }
    let checksum = hex::encode(hasher.finalize());
    let total_records = cases.len();

    let mut rng = order_rng(seed, permutation_run);
    cases.shuffle(&mut rng);
    for case in cases.iter_mut() {
        if rng.random_bool(0.5) {
            std::mem::swap(&mut case.response_a, &mut case.response_b);
            case.gold = case.gold.map(|g| match g {
                PreferredResponse::First => PreferredResponse::Second,
                PreferredResponse::Second => PreferredResponse::First,
            });
        }
    }
    if let Some(limit) = limit {
        if limit > cases.len() {
            return Err(StoreError::LimitTooLarge {
                limit,
                available: cases.len(),
            });
        }
        cases.truncate(limit);
    }
    Ok(Dataset {
        cases,
        checksum,
        seed,
        permutation_run,
        source_path: path.display().to_string(),
        total_records,
    })
}
