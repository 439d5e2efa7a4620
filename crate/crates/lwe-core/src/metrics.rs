//! Scoring for finished runs: accuracy, order-consistency, pair accuracy,
//! relative character cost, and cumulative accuracy curves with confidence
//! bands.
//!
//! All metrics are computed from judgment records plus the dataset's gold
//! labels; nothing here calls a model. Canonical-order records carry the
//! headline numbers, swapped records only enter the paired metrics.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::core::{JudgmentRecord, PresentationOrder, PreferredResponse, TestCase};
use crate::provider::ledger::UsageLedger;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("case {0} has no gold label")]
    MissingGold(String),
    #[error("records are not paired: case {0} lacks a {1} judgment")]
    NotPaired(String, PresentationOrder),
    #[error("baseline ledger has zero characters")]
    EmptyBaseline,
    #[error("cannot average reports that disagree on pairing")]
    MixedPairing,
    #[error("no reports to aggregate")]
    NoReports,
}

/// Per-case outcome rows backing the aggregate numbers.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PerCaseOutcome {
    pub id: String,
    pub correct_canonical: bool,
    pub consistent: Option<bool>,
    pub pair_correct: Option<bool>,
}

/// Aggregate scores for one run.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MetricReport {
    pub accuracy: f64,
    pub consistency: Option<f64>,
    pub pair_accuracy: Option<f64>,
    pub invalid_count: u64,
    pub n: u64,
    pub per_case: Vec<PerCaseOutcome>,
}

/// Confidence-band construction for cumulative curves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Wald,
    Wilson,
}

/// One point of a cumulative accuracy curve after `t` cases.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CurvePoint {
    pub t: u64,
    pub accuracy: f64,
    pub lower: f64,
    pub upper: f64,
}

struct CasePair<'a> {
    canonical: &'a JudgmentRecord,
    swapped: Option<&'a JudgmentRecord>,
}

/// Canonical records in evaluation order, each with its swapped partner when
/// one was recorded.
fn collect_pairs(records: &[JudgmentRecord]) -> Vec<CasePair<'_>> {
    let mut swapped_by_case: HashMap<&str, &JudgmentRecord> = HashMap::new();
    for record in records {
        if record.order == PresentationOrder::Swapped {
            swapped_by_case.entry(&record.case_id).or_insert(record);
        }
    }
    let mut pairs: Vec<CasePair> = records
        .iter()
        .filter(|r| r.order == PresentationOrder::Canonical)
        .map(|canonical| CasePair {
            canonical,
            swapped: swapped_by_case.get(canonical.case_id.as_str()).copied(),
        })
        .collect();
    pairs.sort_by_key(|p| p.canonical.sequence_index);
    pairs
}

fn gold_index(cases: &[TestCase]) -> HashMap<&str, Option<PreferredResponse>> {
    cases.iter().map(|c| (c.id.as_str(), c.gold)).collect()
}

fn require_gold(
    gold: &HashMap<&str, Option<PreferredResponse>>,
    case_id: &str,
) -> Result<PreferredResponse, MetricsError> {
    gold.get(case_id)
        .copied()
        .flatten()
        .ok_or_else(|| MetricsError::MissingGold(case_id.to_string()))
}

fn ratio(hits: u64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        hits as f64 / n as f64
    }
}

/// Fraction of canonical judgments preferring the gold response. Invalid
/// verdicts count as incorrect.
pub fn accuracy(records: &[JudgmentRecord], cases: &[TestCase]) -> Result<f64, MetricsError> {
    let gold = gold_index(cases);
    let pairs = collect_pairs(records);
    let mut hits = 0;
    for pair in &pairs {
        let want = require_gold(&gold, &pair.canonical.case_id)?;
        if pair.canonical.preferred == Some(want) {
            hits += 1;
        }
    }
    Ok(ratio(hits, pairs.len() as u64))
}

fn pair_is_consistent(pair: &CasePair<'_>, literal: bool) -> Result<bool, MetricsError> {
    let swapped = pair.swapped.ok_or_else(|| {
        MetricsError::NotPaired(pair.canonical.case_id.clone(), PresentationOrder::Swapped)
    })?;
    Ok(if literal {
        match (
            pair.canonical.verdict.label(),
            swapped.verdict.label(),
        ) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    } else {
        match (pair.canonical.preferred, swapped.preferred) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    })
}

/// Fraction of cases whose two presentations agree. With `literal` set the
/// raw A/B labels are compared instead of the responses they point at, which
/// inverts the reading for valid swapped verdicts.
pub fn consistency(records: &[JudgmentRecord], literal: bool) -> Result<f64, MetricsError> {
    let pairs = collect_pairs(records);
    let mut hits = 0;
    for pair in &pairs {
        if pair_is_consistent(pair, literal)? {
            hits += 1;
        }
    }
    Ok(ratio(hits, pairs.len() as u64))
}

/// Fraction of cases judged correctly under both presentations.
pub fn pair_accuracy(
    records: &[JudgmentRecord],
    cases: &[TestCase],
) -> Result<f64, MetricsError> {
    let gold = gold_index(cases);
    let pairs = collect_pairs(records);
    let mut hits = 0;
    for pair in &pairs {
        let swapped = pair.swapped.ok_or_else(|| {
            MetricsError::NotPaired(pair.canonical.case_id.clone(), PresentationOrder::Swapped)
        })?;
        let want = require_gold(&gold, &pair.canonical.case_id)?;
        if pair.canonical.preferred == Some(want) && swapped.preferred == Some(want) {
            hits += 1;
        }
    }
    Ok(ratio(hits, pairs.len() as u64))
}

/// Invalid verdicts across every record, both presentations included.
pub fn invalid_count(records: &[JudgmentRecord]) -> u64 {
    records.iter().filter(|r| !r.verdict.is_valid()).count() as u64
}

/// Full report; paired metrics are included only when `paired` is set.
pub fn build_report(
    records: &[JudgmentRecord],
    cases: &[TestCase],
    paired: bool,
    literal: bool,
) -> Result<MetricReport, MetricsError> {
    let gold = gold_index(cases);
    let pairs = collect_pairs(records);
    let mut per_case = Vec::with_capacity(pairs.len());
    let mut correct = 0u64;
    let mut consistent = 0u64;
    let mut pair_correct = 0u64;
    for pair in &pairs {
        let want = require_gold(&gold, &pair.canonical.case_id)?;
        let row_correct = pair.canonical.preferred == Some(want);
        if row_correct {
            correct += 1;
        }
        let (row_consistent, row_pair) = if paired {
            let swapped = pair.swapped.ok_or_else(|| {
                MetricsError::NotPaired(
                    pair.canonical.case_id.clone(),
                    PresentationOrder::Swapped,
                )
            })?;
            let is_consistent = pair_is_consistent(pair, literal)?;
            let is_pair_correct = row_correct && swapped.preferred == Some(want);
            if is_consistent {
                consistent += 1;
            }
            if is_pair_correct {
                pair_correct += 1;
            }
            (Some(is_consistent), Some(is_pair_correct))
        } else {
            (None, None)
        };
        per_case.push(PerCaseOutcome {
            id: pair.canonical.case_id.clone(),
            correct_canonical: row_correct,
            consistent: row_consistent,
            pair_correct: row_pair,
        });
    }
    let n = pairs.len() as u64;
    Ok(MetricReport {
        accuracy: ratio(correct, n),
        consistency: paired.then(|| ratio(consistent, n)),
        pair_accuracy: paired.then(|| ratio(pair_correct, n)),
        invalid_count: invalid_count(records),
        n,
        per_case,
    })
}

/// Total character cost of a run relative to a baseline run.
pub fn relative_cost(run: &UsageLedger, baseline: &UsageLedger) -> Result<f64, MetricsError> {
    let base = baseline.total_chars();
    if base == 0 {
        return Err(MetricsError::EmptyBaseline);
    }
    Ok(run.total_chars() as f64 / base as f64)
}

fn z_for(alpha: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - alpha / 2.0)
}

/// Cumulative accuracy after each case, with a confidence band.
///
/// Canonical records are walked in their recorded evaluation order. A record
/// whose case lacks a gold label counts as incorrect rather than failing the
/// curve, so partially labeled datasets still plot.
pub fn cumulative_curve(
    records: &[JudgmentRecord],
    cases: &[TestCase],
    alpha: f64,
    method: CiMethod,
) -> Vec<CurvePoint> {
    let gold = gold_index(cases);
    let z = z_for(alpha);
    let mut correct = 0u64;
    let mut points = Vec::new();
    for (i, pair) in collect_pairs(records).iter().enumerate() {
        let want = gold.get(pair.canonical.case_id.as_str()).copied().flatten();
        if want.is_some() && pair.canonical.preferred == want {
            correct += 1;
        }
        let t = (i + 1) as u64;
        let p = correct as f64 / t as f64;
        let (lower, upper) = match method {
            CiMethod::Wald => {
                let half = z * (p * (1.0 - p) / t as f64).sqrt();
                ((p - half).max(0.0), (p + half).min(1.0))
            }
            CiMethod::Wilson => {
                let tf = t as f64;
                let denom = 1.0 + z * z / tf;
                let center = (p + z * z / (2.0 * tf)) / denom;
                let half =
                    z * (p * (1.0 - p) / tf + z * z / (4.0 * tf * tf)).sqrt() / denom;
                ((center - half).max(0.0), (center + half).min(1.0))
            }
        };
        points.push(CurvePoint {
            t,
            accuracy: p,
            lower,
            upper,
        });
    }
    points
}

/// Unweighted mean of several reports; counts are summed and per-case rows
/// concatenated. Reports must agree on whether paired metrics are present.
pub fn macro_average(reports: &[MetricReport]) -> Result<MetricReport, MetricsError> {
    if reports.is_empty() {
        return Err(MetricsError::NoReports);
    }
    let paired = reports[0].consistency.is_some();
    if reports.iter().any(|r| r.consistency.is_some() != paired) {
        return Err(MetricsError::MixedPairing);
    }
    let k = reports.len() as f64;
    let mean_of = |f: fn(&MetricReport) -> Option<f64>| -> Option<f64> {
        let values: Vec<f64> = reports.iter().filter_map(f).collect();
        (values.len() == reports.len())
            .then(|| values.iter().sum::<f64>() / k)
    };
    Ok(MetricReport {
        accuracy: reports.iter().map(|r| r.accuracy).sum::<f64>() / k,
        consistency: mean_of(|r| r.consistency),
        pair_accuracy: mean_of(|r| r.pair_accuracy),
        invalid_count: reports.iter().map(|r| r.invalid_count).sum(),
        n: reports.iter().map(|r| r.n).sum(),
        per_case: reports.iter().flat_map(|r| r.per_case.clone()).collect(),
    })
}

/// Mean and sample standard deviation (n-1 denominator) of repeated runs.
pub fn mean_and_sample_std(values: &[f64]) -> Result<(f64, f64), MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::NoReports);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Ok((mean, std))
}
