//! The release gate: eleven checks, each with an explicit runtime budget,
//! covering verdict extraction, template integrity, metric arithmetic,
//! the order-swap gate, refinement cadence, summarization, the one-sided
//! update rule, cost accounting, learning-curve ordering, crash-resume
//! determinism, and the permutation harness. Run with `--nocapture` to see
//! one PASS line per criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sha2::{Digest, Sha256};
use tempfile::TempDir;

use lwe_core::core::{
    char_len, PreferredResponse, PresentationOrder, RunConfig, StrategyKind, TestCase, Verdict,
};
use lwe_core::core::JudgmentRecord;
use lwe_core::engine::{
    self, run_lwe, run_sample_specific, run_selective_lwe, run_vanilla,
};
use lwe_core::extraction::{extract_verdict, REASON_BOTH_MARKERS, REASON_NO_MARKER};
use lwe_core::metrics::{self, relative_cost};
use lwe_core::provider::ledger::LedgerRecorder;
use lwe_core::provider::sim::{SimulatedProvider, SimulatorParams};
use lwe_core::provider::{CallOutput, CallTag, ModelRequest, Provider, ProviderError};
use lwe_core::store::runlog::{CaseOrderEntry, Manifest, RunWriter, SCHEMA_VERSION};
use lwe_core::store::{Event, MemorySink, MetaKind};
use lwe_core::templates::{TemplateId, TemplateStore};

fn finish(criterion: u32, name: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    assert!(
        elapsed < budget,
        "criterion {criterion} ({name}) took {elapsed:?}, budget {budget:?}"
    );
    println!("[acceptance] criterion {criterion:02} ({name}): PASS in {elapsed:?}");
}

fn make_cases(n: usize) -> Vec<TestCase> {
    (0..n)
        .map(|i| TestCase {
            id: format!("case-{i:04}"),
            question: format!("Which summary of document {i} is more faithful?"),
            image: None,
            response_a: format!("Summary A for document {i}: covers the key points."),
            response_b: format!("Summary B for document {i}: adds claims not in the text."),
            gold: Some(if i % 2 == 0 {
                PreferredResponse::First
            } else {
                PreferredResponse::Second
            }),
        })
        .collect()
}

fn sim_provider(seed: u64, flip: f64, cases: &[TestCase]) -> SimulatedProvider {
    let mut params = SimulatorParams::new(seed);
    params.flip_prob = flip;
    SimulatedProvider::new(params, cases).unwrap()
}

#[test]
fn c01_extraction_bit_exactness() {
    let started = Instant::now();
    let a = Verdict::A;
    let b = Verdict::B;
    let both = Verdict::Invalid(REASON_BOTH_MARKERS.to_string());
    let none = Verdict::Invalid(REASON_NO_MARKER.to_string());
    let table: &[(&str, &Verdict)] = &[
        ("The better response is [[A]].", &a),
        ("The better response is [[B]].", &b),
        ("[[A]]", &a),
        ("[[B]]", &b),
        ("My verdict is [[A]], though [[B]] has merits.", &both),
        ("[[B]] at first glance, but on reflection [[A]].", &both),
        ("I choose [A]", &a),
        ("I choose [B]", &b),
        ("both [A] and [B] have strengths", &a),
        ("[[A] has a mismatched bracket", &a),
        ("final verdict: [[B]] (the second response)", &b),
        ("no verdict markers anywhere", &none),
        ("", &none),
        ("[[a]] lowercase does not count", &none),
    ];
    assert!(table.len() >= 12);
    for (input, expected) in table {
        let got = extract_verdict(input);
        assert_eq!(&&got, expected, "input {input:?}");
    }
    // The two failure reasons must match the published strings byte for
    // byte, including the double space before the dual-marker suffix.
    assert_eq!(REASON_NO_MARKER, "Not judged in the proper format.");
    assert_eq!(REASON_BOTH_MARKERS, "Not judged in the proper format.  [[A,B]]");
    match extract_verdict("[[A]] and [[B]]") {
        Verdict::Invalid(reason) => {
            assert_eq!(reason, "Not judged in the proper format.  [[A,B]]")
        }
        other => panic!("expected invalid, got {other:?}"),
    }
    finish(1, "extraction bit-exactness", started, Duration::from_secs(1));
}

#[test]
fn c02_template_fidelity() {
    let started = Instant::now();
    let pinned: &[(TemplateId, &str, &str)] = &[
        (
            TemplateId::VanillaJudge,
            "vanilla_judge.txt",
            "647abec63f21f930bfb0c670d24cf962cf8c82e2a546fdf3801c9884251addad",
        ),
        (
            TemplateId::CoTJudge,
            "cot_judge.txt",
            "1aa76f0895a2e8fadb4b8da2bda027e9d9f3eee2ee08883c7a07e048d59e48a7",
        ),
        (
            TemplateId::InitialMetaPrompt,
            "initial_meta_prompt.txt",
            "04895d2b137e9657f87e5945438c1fa232f0257ea5f1c18bd9d496ece5568223",
        ),
        (
            TemplateId::ExamplePlaceholder,
            "example_placeholder.txt",
            "22f93e573bf9343e52c3dd0a36b1a033a47a6dc0045ab3d40357da8d3c613d57",
        ),
        (
            TemplateId::FeedbackRequest,
            "feedback_request.txt",
            "6bb862450752b94adcbd524c04d28c0a5b09a49cb60368ef97d8113726dd5300",
        ),
        (
            TemplateId::RefineRequest,
            "refine_request.txt",
            "d40c8c68d1c14472c16c19c57f6d82985e9c4e92b86ac795961d3ef491f5a222",
        ),
        (
            TemplateId::SummarizeRequest,
            "summarize_request.txt",
            "8c7393c4ce8f9dff2bbee18651c4abe877dfd1ee0e370705095b3b9731b2e7f3",
        ),
    ];
    assert_eq!(pinned.len(), 7);
    let store = TemplateStore::embedded();
    let asset_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/templates");
    for (id, file, want) in pinned {
        let bytes = fs::read(asset_dir.join(file)).unwrap();
        let digest = hex::encode(Sha256::digest(&bytes));
        assert_eq!(&digest, want, "checksum drift in {file}");
        assert_eq!(
            store.text(*id).as_bytes(),
            bytes.as_slice(),
            "embedded copy of {file} differs from the asset"
        );
    }
    finish(2, "template fidelity", started, Duration::from_secs(1));
}

#[test]
fn c03_metrics_match_a_brute_force_tally() {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(2024);
    for round in 0..1000 {
        let n = rng.random_range(1..=200usize);
        let mut cases = Vec::with_capacity(n);
        let mut records = Vec::with_capacity(2 * n);
        let mut correct = 0u64;
        let mut consistent = 0u64;
        let mut pair_correct = 0u64;
        for i in 0..n {
            let gold = if rng.random_bool(0.5) {
                PreferredResponse::First
            } else {
                PreferredResponse::Second
            };
            let mut case = make_cases(1).remove(0);
            case.id = format!("r{round}-c{i}");
            case.gold = Some(gold);

            let draw = |rng: &mut StdRng| -> Verdict {
                match rng.random_range(0..6u8) {
                    0 | 1 => Verdict::A,
                    2 | 3 => Verdict::B,
                    4 => Verdict::Invalid(REASON_NO_MARKER.to_string()),
                    _ => Verdict::Invalid(REASON_BOTH_MARKERS.to_string()),
                }
            };
            let canonical = draw(&mut rng);
            let swapped = draw(&mut rng);

            // Brute-force tally straight from the definitions: map each
            // label back to the response it points at, then count.
            let canon_pref = match canonical {
                Verdict::A => Some(PreferredResponse::First),
                Verdict::B => Some(PreferredResponse::Second),
                Verdict::Invalid(_) => None,
            };
            let swap_pref = match swapped {
                Verdict::A => Some(PreferredResponse::Second),
                Verdict::B => Some(PreferredResponse::First),
                Verdict::Invalid(_) => None,
            };
            let is_correct = canon_pref == Some(gold);
            let is_consistent =
                canon_pref.is_some() && swap_pref.is_some() && canon_pref == swap_pref;
            let is_pair_correct = is_consistent && is_correct && swap_pref == Some(gold);
            correct += u64::from(is_correct);
            consistent += u64::from(is_consistent);
            pair_correct += u64::from(is_pair_correct);

            records.push(JudgmentRecord::new(
                case.id.clone(),
                StrategyKind::Vanilla,
                PresentationOrder::Canonical,
                "",
                "raw",
                canonical,
                vec![],
                i as u64,
            ));
            records.push(JudgmentRecord::new(
                case.id.clone(),
                StrategyKind::Vanilla,
                PresentationOrder::Swapped,
                "",
                "raw",
                swapped,
                vec![],
                i as u64,
            ));
            cases.push(case);
        }
        let report = metrics::build_report(&records, &cases, true, false).unwrap();
        let nf = n as f64;
        assert_eq!(report.accuracy, correct as f64 / nf, "round {round}");
        assert_eq!(report.consistency, Some(consistent as f64 / nf), "round {round}");
        assert_eq!(
            report.pair_accuracy,
            Some(pair_correct as f64 / nf),
            "round {round}"
        );
        for outcome in &report.per_case {
            if outcome.pair_correct == Some(true) {
                assert_eq!(outcome.consistent, Some(true), "round {round}");
                assert!(outcome.correct_canonical, "round {round}");
            }
        }
    }
    finish(3, "metrics oracle equivalence", started, Duration::from_secs(10));
}

#[test]
fn c04_gate_matches_the_ground_truth_positional_set() {
    let started = Instant::now();
    let cases = make_cases(200);
    let provider = sim_provider(11, 0.3, &cases);
    let ground_truth: BTreeSet<String> = provider.positional_ids().iter().cloned().collect();
    assert!(
        !ground_truth.is_empty() && ground_truth.len() < cases.len(),
        "flip draw degenerated; pick another seed"
    );

    let templates = TemplateStore::embedded();
    let config = RunConfig::new(StrategyKind::SelectiveLwe);
    let mut sink = MemorySink::default();
    let result =
        run_selective_lwe(&provider, &templates, &cases, &config, None, &mut sink).unwrap();

    let flagged: BTreeSet<String> = result
        .inconsistent_ids
        .as_ref()
        .expect("selective runs report the gated set")
        .iter()
        .cloned()
        .collect();
    assert_eq!(flagged, ground_truth, "gate must flag exactly the biased cases");

    // Cases that passed the gate must never reach the learning loop.
    for entry in &result.ledger.entries {
        if matches!(entry.call_tag, CallTag::BuildEvalPrompt | CallTag::Feedback) {
            let id = entry.case_id.as_deref().expect("case-scoped call");
            assert!(
                ground_truth.contains(id),
                "consistent case {id} hit {:?}",
                entry.call_tag
            );
        }
    }
    let refines = result
        .ledger
        .entries
        .iter()
        .filter(|e| e.call_tag == CallTag::Refine)
        .count();
    let b = config.batch_size as usize;
    assert_eq!(refines, ground_truth.len().div_ceil(b));
    finish(4, "gate exactness", started, Duration::from_secs(30));
}

#[test]
fn c05_refine_count_is_ceil_of_flagged_over_batch() {
    let started = Instant::now();
    let templates = TemplateStore::embedded();
    for &u in &[0usize, 1, 3, 4, 5, 8, 10] {
        for &b in &[1u32, 2, 4, 8] {
            let cases = make_cases(u);
            let provider = sim_provider(17, 0.0, &cases);
            let mut config = RunConfig::new(StrategyKind::Lwe);
            config.batch_size = b;
            let mut sink = MemorySink::default();
            let result =
                run_lwe(&provider, &templates, &cases, &config, None, &mut sink).unwrap();

            let refines = result
                .ledger
                .entries
                .iter()
                .filter(|e| e.call_tag == CallTag::Refine)
                .count();
            assert_eq!(refines, u.div_ceil(b as usize), "U={u} b={b}");

            // Reconstruct each flush's batch size from the event stream:
            // all interior flushes carry exactly b items, and the final
            // flush is partial exactly when U mod b is nonzero.
            let mut batch_sizes = Vec::new();
            let mut pending = 0usize;
            for event in &sink.events {
                match event {
                    Event::Feedback { .. } => pending += 1,
                    Event::Meta { kind: MetaKind::Refine, .. } => {
                        batch_sizes.push(pending);
                        pending = 0;
                    }
                    _ => {}
                }
            }
            assert_eq!(pending, 0, "U={u} b={b}: feedback left unflushed");
            let mut expected = vec![b as usize; u / b as usize];
            if u % b as usize != 0 {
                expected.push(u % b as usize);
            }
            assert_eq!(batch_sizes, expected, "U={u} b={b}");
        }
    }
    finish(5, "refine cadence", started, Duration::from_secs(30));
}

#[test]
fn c06_each_threshold_crossing_summarizes_once_immediately() {
    let started = Instant::now();
    let cases = make_cases(8);
    let params = {
        let mut p = SimulatorParams::new(23);
        p.flip_prob = 0.0;
        p
    };
    let provider = SimulatedProvider::new(params, &cases)
        .unwrap()
        .with_meta_growth(3000);
    let templates = TemplateStore::embedded();
    let mut config = RunConfig::new(StrategyKind::Lwe);
    config.batch_size = 1;
    assert_eq!(config.summarize_threshold, 10_000);
    let mut sink = MemorySink::default();
    let result = run_lwe(&provider, &templates, &cases, &config, None, &mut sink).unwrap();

    // Ground truth from the event stream: a crossing is a refinement whose
    // resulting meta-prompt text exceeds the threshold.
    let metas: Vec<(&MetaKind, u64)> = sink
        .events
        .iter()
        .filter_map(|e| match e {
            Event::Meta { kind, text } => Some((kind, char_len(text))),
            _ => None,
        })
        .collect();
    let mut crossings = 0usize;
    for (i, (kind, len)) in metas.iter().enumerate() {
        if matches!(kind, MetaKind::Refine) && *len > 10_000 {
            crossings += 1;
            let next = metas.get(i + 1).map(|(k, _)| *k);
            assert!(
                matches!(next, Some(MetaKind::Summarize)),
                "crossing at meta event {i} not followed by a summarization"
            );
            assert!(
                metas[i + 1].1 <= 10_000,
                "summarization left the meta-prompt over the threshold"
            );
        }
    }
    assert!(crossings >= 2, "setup never crossed the threshold twice");

    // The ledger must agree: one Summarize entry per crossing, each placed
    // directly after its Refine entry.
    let tags: Vec<CallTag> = result.ledger.entries.iter().map(|e| e.call_tag).collect();
    let summarize_count = tags.iter().filter(|t| **t == CallTag::Summarize).count();
    assert_eq!(summarize_count, crossings);
    for (i, tag) in tags.iter().enumerate() {
        if *tag == CallTag::Summarize {
            assert_eq!(
                tags.get(i - 1),
                Some(&CallTag::Refine),
                "summarize entry {i} does not follow a refine entry"
            );
        }
    }
    finish(6, "summarization trigger", started, Duration::from_secs(5));
}

/// Passes every request through while keeping a copy of its text.
struct TapProvider<'a> {
    inner: &'a SimulatedProvider,
    log: Mutex<Vec<(CallTag, String)>>,
}

impl Provider for TapProvider<'_> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn complete(
        &self,
        request: &ModelRequest,
        ledger: &LedgerRecorder,
    ) -> Result<CallOutput, ProviderError> {
        self.log
            .lock()
            .unwrap()
            .push((request.call_tag, request.text.clone()));
        self.inner.complete(request, ledger)
    }
}

#[test]
fn c07_learning_never_sees_swapped_transcripts() {
    let started = Instant::now();
    let cases = make_cases(60);
    let inner = sim_provider(31, 0.3, &cases);
    let provider = TapProvider { inner: &inner, log: Mutex::new(Vec::new()) };
    let templates = TemplateStore::embedded();
    let mut config = RunConfig::new(StrategyKind::Lwe);
    config.paired_evaluation = true;
    config.batch_size = 4;
    let mut sink = MemorySink::default();
    run_lwe(&provider, &templates, &cases, &config, None, &mut sink).unwrap();

    let log = provider.log.lock().unwrap();
    let judged_both_orders = log
        .iter()
        .filter(|(tag, _)| *tag == CallTag::Judge)
        .count();
    assert_eq!(judged_both_orders, 2 * cases.len(), "paired run judges twice per case");

    let mut canonical_seen = false;
    for case in &cases {
        let swapped = templates
            .render_example(case, PresentationOrder::Swapped)
            .unwrap();
        let canonical = templates
            .render_example(case, PresentationOrder::Canonical)
            .unwrap();
        for (tag, text) in log.iter() {
            if matches!(tag, CallTag::Feedback | CallTag::Refine) {
                assert!(
                    !text.contains(&swapped),
                    "{:?} request leaked a swapped rendering of {}",
                    tag,
                    case.id
                );
                canonical_seen |= text.contains(&canonical);
            }
        }
    }
    assert!(canonical_seen, "scan is vacuous: no canonical rendering found at all");
    finish(7, "one-sided updates", started, Duration::from_secs(30));
}

#[test]
fn c08_cost_identities() {
    let started = Instant::now();
    let cases = make_cases(40);
    let templates = TemplateStore::embedded();

    // A run with every call tag in play, for the partition identity.
    let provider = sim_provider(41, 0.3, &cases);
    let mut config = RunConfig::new(StrategyKind::SelectiveLwe);
    config.paired_evaluation = true;
    let mut sink = MemorySink::default();
    let mixed = run_selective_lwe(&provider, &templates, &cases, &config, None, &mut sink)
        .unwrap();
    assert_eq!(relative_cost(&mixed.ledger, &mixed.ledger).unwrap(), 1.0);
    let tag_sum: u64 = mixed.ledger.tag_totals().values().sum();
    assert_eq!(tag_sum, mixed.ledger.total_chars(), "tags must partition the total");
    assert!(mixed.ledger.total_chars() > 0);

    // With no positional bias the gate passes everything, so a selective
    // run is exactly two vanilla passes.
    let selective_provider = sim_provider(43, 0.0, &cases);
    let mut selective_sink = MemorySink::default();
    let selective = run_selective_lwe(
        &selective_provider,
        &templates,
        &cases,
        &RunConfig::new(StrategyKind::SelectiveLwe),
        None,
        &mut selective_sink,
    )
    .unwrap();
    assert_eq!(selective.inconsistent_ids.as_deref(), Some(&[][..]));

    let vanilla_provider = sim_provider(43, 0.0, &cases);
    let mut vanilla_config = RunConfig::new(StrategyKind::Vanilla);
    vanilla_config.paired_evaluation = false;
    let mut vanilla_sink = MemorySink::default();
    let vanilla = run_vanilla(
        &vanilla_provider,
        &templates,
        &cases,
        &vanilla_config,
        &mut vanilla_sink,
    )
    .unwrap();
    assert_eq!(
        relative_cost(&selective.ledger, &vanilla.ledger).unwrap(),
        2.0,
        "an all-consistent selective run costs exactly two single passes"
    );
    finish(8, "cost identities", started, Duration::from_secs(10));
}

#[test]
fn c09_learning_orders_the_strategies_on_biased_cases() {
    let started = Instant::now();
    let cases = make_cases(500);
    let templates = TemplateStore::embedded();

    let run = |strategy: StrategyKind| -> (BTreeSet<String>, u64) {
        let provider = sim_provider(43, 0.3, &cases);
        let positional: BTreeSet<String> = provider.positional_ids().iter().cloned().collect();
        let mut config = RunConfig::new(strategy);
        config.paired_evaluation = false;
        config.batch_size = 4;
        let mut sink = MemorySink::default();
        let result = match strategy {
            StrategyKind::Vanilla => {
                run_vanilla(&provider, &templates, &cases, &config, &mut sink).unwrap()
            }
            StrategyKind::SampleSpecific => {
                run_sample_specific(&provider, &templates, &cases, &config, None, &mut sink)
                    .unwrap()
            }
            StrategyKind::Lwe => {
                run_lwe(&provider, &templates, &cases, &config, None, &mut sink).unwrap()
            }
            other => panic!("not under test: {other}"),
        };
        let gold: BTreeMap<&str, PreferredResponse> = cases
            .iter()
            .map(|c| (c.id.as_str(), c.gold.unwrap()))
            .collect();
        let correct = result
            .records
            .iter()
            .filter(|r| {
                r.order == PresentationOrder::Canonical
                    && positional.contains(&r.case_id)
                    && r.preferred == gold.get(r.case_id.as_str()).copied()
            })
            .count() as u64;
        (positional, correct)
    };

    let (set_v, vanilla_correct) = run(StrategyKind::Vanilla);
    let (set_s, sample_specific_correct) = run(StrategyKind::SampleSpecific);
    let (set_l, lwe_correct) = run(StrategyKind::Lwe);
    assert_eq!(set_v, set_s, "same seed, same biased set");
    assert_eq!(set_v, set_l, "same seed, same biased set");
    assert!(set_v.len() >= 100, "biased subset too small to order reliably");

    assert!(
        lwe_correct > sample_specific_correct && sample_specific_correct > vanilla_correct,
        "expected strict ordering, got lwe={lwe_correct} sample-specific={sample_specific_correct} vanilla={vanilla_correct}"
    );
    finish(9, "learning-curve ordering", started, Duration::from_secs(120));
}

#[test]
fn c10_resume_from_every_prefix_is_byte_identical() {
    let started = Instant::now();
    let cases = make_cases(50);
    let templates = TemplateStore::embedded();
    let mut config = RunConfig::new(StrategyKind::SelectiveLwe);
    config.paired_evaluation = true;
    config.batch_size = 4;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        code_version: "acceptance".to_string(),
        strategy: config.strategy,
        seed: 53,
        permutation_run: 0,
        limit: None,
        provider_name: "sim".to_string(),
        dataset_checksum: "synthetic".to_string(),
        config: config.clone(),
        case_order: cases
            .iter()
            .map(|c| CaseOrderEntry { id: c.id.clone(), gold: c.gold })
            .collect(),
        swapped_judgment_reuses_eval_prompt: true,
    };

    let complete = |writer: &mut RunWriter, result: &engine::RunResult| {
        let report =
            metrics::build_report(&result.records, &cases, true, false).unwrap();
        writer.finalize(Some(&report), result.final_meta.as_deref()).unwrap();
    };

    let tmp = TempDir::new().unwrap();
    let full_dir = tmp.path().join("full");
    let mut writer = RunWriter::create(&full_dir, &manifest).unwrap();
    let provider = sim_provider(53, 0.3, &cases);
    let result = engine::execute(
        &provider,
        &templates,
        &cases,
        &config,
        None,
        &mut writer,
        None,
        None,
    )
    .unwrap();
    complete(&mut writer, &result);
    drop(writer);

    let want_report = fs::read(full_dir.join("report.json")).unwrap();
    let want_meta = fs::read(full_dir.join("final_meta.txt")).unwrap();
    let manifest_bytes = fs::read(full_dir.join("manifest.json")).unwrap();
    let log = fs::read_to_string(full_dir.join("events.log")).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert!(lines.len() > 100, "log suspiciously short: {}", lines.len());

    for k in 0..lines.len() {
        let dir = tmp.path().join(format!("prefix-{k:04}"));
        fs::create_dir(&dir).unwrap();
        fs::write(dir.join("manifest.json"), &manifest_bytes).unwrap();
        let mut prefix = lines[..k].join("\n");
        if k > 0 {
            prefix.push('\n');
        }
        fs::write(dir.join("events.log"), prefix).unwrap();

        let (mut writer, replayed) = RunWriter::open_resume(&dir).unwrap();
        let provider = sim_provider(53, 0.3, &cases);
        let result = engine::execute(
            &provider,
            &templates,
            &cases,
            &config,
            None,
            &mut writer,
            Some(&replayed),
            None,
        )
        .unwrap();
        complete(&mut writer, &result);
        drop(writer);

        assert_eq!(
            fs::read(dir.join("report.json")).unwrap(),
            want_report,
            "report drifted after resuming from line {k}"
        );
        assert_eq!(
            fs::read(dir.join("final_meta.txt")).unwrap(),
            want_meta,
            "final meta drifted after resuming from line {k}"
        );
        fs::remove_dir_all(&dir).unwrap();
    }
    finish(10, "determinism & resume", started, Duration::from_secs(300));
}

#[test]
fn c11_permutation_harness_arithmetic() {
    let started = Instant::now();
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("cases.jsonl");
    let mut lines = Vec::new();
    for case in make_cases(30) {
        let gold = match case.gold.unwrap() {
            PreferredResponse::First => "first",
            PreferredResponse::Second => "second",
        };
        lines.push(format!(
            r#"{{"id":"{}","question":"{}","response_a":"{}","response_b":"{}","gold":"{}"}}"#,
            case.id, case.question, case.response_a, case.response_b, gold
        ));
    }
    fs::write(&path, lines.join("\n") + "\n").unwrap();

    let templates = TemplateStore::embedded();
    let mut accuracies = Vec::new();
    let mut orders = Vec::new();
    println!("permutation  accuracy  consistency  pair-accuracy");
    for permutation in 0..3u32 {
        let dataset = lwe_core::store::load_dataset(&path, 9, permutation, None).unwrap();
        orders.push(
            dataset
                .cases
                .iter()
                .map(|c| c.id.clone())
                .collect::<Vec<_>>(),
        );
        let provider = sim_provider(9, 0.3, &dataset.cases);
        let mut config = RunConfig::new(StrategyKind::Vanilla);
        config.paired_evaluation = true;
        let mut sink = MemorySink::default();
        let result =
            run_vanilla(&provider, &templates, &dataset.cases, &config, &mut sink).unwrap();
        let report = metrics::build_report(&result.records, &dataset.cases, true, false).unwrap();
        println!(
            "{permutation:>11}  {:>8.3}  {:>11.3}  {:>13.3}",
            report.accuracy,
            report.consistency.unwrap(),
            report.pair_accuracy.unwrap()
        );
        accuracies.push(report.accuracy);
    }
    assert_ne!(orders[0], orders[1]);
    assert_ne!(orders[0], orders[2]);
    assert_ne!(orders[1], orders[2]);

    let (mean, std) = metrics::mean_and_sample_std(&accuracies).unwrap();
    println!("mean accuracy {mean:.3} +/- {std:.3}");
    let hand_mean = (accuracies[0] + accuracies[1] + accuracies[2]) / 3.0;
    let hand_var = accuracies
        .iter()
        .map(|a| (a - hand_mean) * (a - hand_mean))
        .sum::<f64>()
        / 2.0;
    assert!((mean - hand_mean).abs() < 1e-12);
    assert!((std - hand_var.sqrt()).abs() < 1e-12);
    finish(11, "ordering robustness harness", started, Duration::from_secs(60));
}
