//! Acceptance gate: one test per numbered delivery criterion, each printing a
//! `[criterion N] PASS` line (visible with `--nocapture`). Oracles here are
//! written independently of the library code they check — counting-based
//! ranks, integer accumulators, bitmask enumeration — so agreement is
//! evidence, not tautology.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use congruence_core::admin::{
    run_sessions, synthetic_respondent, PromptTemplateId, RunItem, RunOptions, RunResponse,
    SessionPlan, SyntheticProfile,
};
use congruence_core::corpus::bundled;
use congruence_core::metrics::{
    congruence_row, cosine, group_stats, permutation_test, spearman, spearman_closed_form, vmd,
    MetricsError, MetricsRow, PermutationMode, Side,
};
use congruence_core::scoring::{adjust_direction, aggregate, align_scenario, paired_vectors};
use congruence_core::validation::{
    classify_run, filter_valid, InvalidReason, ParsedRun, RefusalPatterns,
};
use congruence_core::{AlignedAction, Corpus, Direction, PairedItem};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn fixture_corpus() -> Corpus {
    Corpus::load(&fixtures().join("corpus.jsonl"), Some(&fixtures().join("layouts.json")))
        .expect("fixture corpus loads")
}

#[test]
fn criterion_1_minimum_consistency_floor_is_exact() {
    let start = Instant::now();
    let layout = bundled::tda100_layout();

    // Independent recomputation from the per-dimension item counts.
    let mut ceil_halves = 0usize;
    let mut total = 0usize;
    for dim in &layout.dimensions {
        let n = dim.forward.len() + dim.reverse.len();
        ceil_halves += (n + 1) / 2;
        total += n;
    }
    assert_eq!(ceil_halves, 41);
    assert_eq!(total, 80);

    // Bit-exact: both sides are the correctly rounded value of 41/80.
    assert_eq!(layout.p_min(), 0.5125);
    assert_eq!(layout.p_min(), 41.0 / 80.0);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 1, "took {elapsed:?}, budget 1 s");
    println!("[criterion 1] PASS: bundled layout floor is 41/80 = 0.5125 exactly ({elapsed:?})");
}

#[test]
fn criterion_2_published_group_rows_recompute() {
    // Per-model values in a fixed model order; the AVG ± SD row underneath is
    // what group_stats must reproduce (population SD, 2-decimal rounding).
    let cosine_col = [0.24, 0.17, 0.52, 0.08, 0.18];
    let spearman_col = [0.23, 0.19, 0.56, 0.07, 0.06];
    let vmd_col = [1.58, 1.74, 1.02, 1.57, 1.68];
    let proportion_col = [47.22, 50.56, 78.89, 52.78, 52.22];

    let within = |got: f64, published: f64| (got - published).abs() < 0.005;

    for (name, col, mean, sd) in [
        ("cosine", &cosine_col, 0.24, 0.15),
        ("spearman", &spearman_col, 0.22, 0.18),
        ("vmd", &vmd_col, 1.52, 0.26),
    ] {
        let stats = group_stats(col).unwrap();
        assert!(
            within(stats.mean, mean),
            "{name} mean: recomputed {:.4}, published {mean}",
            stats.mean
        );
        assert!(within(stats.sd, sd), "{name} sd: recomputed {:.4}, published {sd}", stats.sd);
    }

    // The proportion column does not recompute to its published row; the
    // recomputed value is asserted and the published one shown to disagree.
    let stats = group_stats(&proportion_col).unwrap();
    assert!(within(stats.mean, 56.33), "proportion mean recomputed {:.4}", stats.mean);
    assert!(within(stats.sd, 11.44), "proportion sd recomputed {:.4}", stats.sd);
    assert!(!within(stats.mean, 56.78) && !within(stats.sd, 11.25));

    println!(
        "[criterion 2] PASS: cosine/spearman/vmd group rows recompute to within ±0.005; \
         proportion recomputes to 56.33 ± 11.44 (published row 56.78 ± 11.25 differs, documented)"
    );
}

#[test]
fn criterion_3_permutation_granularity_five_vs_sixteen() {
    let start = Instant::now();
    // Fully separated cohorts: every group-a value above every group-b value,
    // so exactly one of the C(21,5) assignments reaches the observed statistic.
    let a = [6.0, 6.0, 7.0, 7.0, 7.0];
    let b = [1.0, 2.0, 1.0, 3.0, 2.0, 1.0, 2.0, 3.0, 1.0, 2.0, 1.0, 3.0, 2.0, 1.0, 2.0, 1.0];
    let result =
        permutation_test(&a, &b, Side::OneSidedObservedDirection, PermutationMode::exact())
            .unwrap();

    assert_eq!(result.denominator, 20349);
    assert_eq!(result.numerator, 1);
    assert_eq!(result.p_value, 1.0 / 20349.0);
    assert!((result.p_value - 4.914e-5).abs() < 5e-8);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}, budget 10 s");
    println!("[criterion 3] PASS: 5-vs-16 exact test enumerates 20349 splits, p = 1/20349 ({elapsed:?})");
}

/// Average ranks by counting: rank of v = #{w < v} + (#{w = v} + 1) / 2.
fn oracle_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let less = values.iter().filter(|&&w| w < v).count() as f64;
            let equal = values.iter().filter(|&&w| w == v).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Pearson correlation from the textbook centered sums; `None` when either
/// vector has zero variance.
fn oracle_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Exact one-sided permutation count by bitmask enumeration, with the same
/// 1e-9 extremity margin the library documents. Returns (extreme, total).
fn oracle_permutation(a: &[i64], b: &[i64]) -> (u64, u64) {
    let (n, m) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).map(|&v| v as f64).collect();
    let total_sum: f64 = pooled.iter().sum();
    let observed =
        a.iter().sum::<i64>() as f64 / n as f64 - b.iter().sum::<i64>() as f64 / m as f64;
    let (mut extreme, mut total) = (0u64, 0u64);
    for mask in 0u32..1 << (n + m) {
        if mask.count_ones() as usize != n {
            continue;
        }
        total += 1;
        let sum_a: f64 = (0..n + m).filter(|i| mask >> i & 1 == 1).map(|i| pooled[i]).sum();
        let stat = sum_a / n as f64 - (total_sum - sum_a) / m as f64;
        let hit = if observed >= 0.0 { stat >= observed - 1e-9 } else { stat <= observed + 1e-9 };
        if hit {
            extreme += 1;
        }
    }
    (extreme, total)
}

#[test]
fn criterion_4_metric_formulas_match_independent_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    let mut spearman_checked = 0;

    for _ in 0..1200 {
        let len = rng.random_range(2..=10);
        let x: Vec<f64> = (0..len).map(|_| rng.random_range(1..=7) as f64).collect();
        let y: Vec<f64> = (0..len).map(|_| rng.random_range(1..=7) as f64).collect();

        // Cosine and VMD against integer-accumulator oracles. With scores in
        // 1..=7 and n ≤ 10 every sum is exact, so 1e-12 leaves room only for
        // the final float steps.
        let (mut xy, mut xx, mut yy, mut abs) = (0i64, 0i64, 0i64, 0i64);
        for (&a, &b) in x.iter().zip(&y) {
            let (a, b) = (a as i64, b as i64);
            xy += a * b;
            xx += a * a;
            yy += b * b;
            abs += (a - b).abs();
        }
        let oracle_cos = xy as f64 / ((xx * yy) as f64).sqrt();
        assert!((cosine(&x, &y).unwrap() - oracle_cos).abs() <= 1e-12);
        let oracle_vmd = abs as f64 / len as f64;
        assert!((vmd(&x, &y).unwrap() - oracle_vmd).abs() <= 1e-12);

        match oracle_pearson(&oracle_ranks(&x), &oracle_ranks(&y)) {
            Some(oracle) => {
                let got = spearman(&x, &y).unwrap();
                assert!(
                    (got - oracle).abs() <= 1e-12,
                    "spearman {got} vs oracle {oracle} on {x:?} / {y:?}"
                );
                spearman_checked += 1;
            }
            None => {
                assert!(matches!(spearman(&x, &y), Err(MetricsError::ConstantVector)));
            }
        }
    }
    assert!(spearman_checked >= 1000, "only {spearman_checked} non-degenerate draws");

    // Tie-free vectors: distinct values, so the rank-difference closed form
    // is exact and must agree with both spearman entry points.
    for _ in 0..1000 {
        let len = rng.random_range(2..=7);
        let mut pool: Vec<f64> = (1..=7).map(f64::from).collect();
        pool.shuffle(&mut rng);
        let x = pool[..len].to_vec();
        pool.shuffle(&mut rng);
        let y = pool[..len].to_vec();

        let rx = oracle_ranks(&x);
        let ry = oracle_ranks(&y);
        let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
        let n = len as f64;
        let oracle = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));

        assert!((spearman_closed_form(&x, &y).unwrap() - oracle).abs() <= 1e-12);
        assert!((spearman(&x, &y).unwrap() - oracle).abs() <= 1e-12);
    }

    // Exact permutation counts against full bitmask enumeration.
    for _ in 0..400 {
        let n = rng.random_range(1..=9);
        let m = rng.random_range(1..=10 - n);
        let a: Vec<i64> = (0..n).map(|_| rng.random_range(1..=7)).collect();
        let b: Vec<i64> = (0..m).map(|_| rng.random_range(1..=7)).collect();
        let af: Vec<f64> = a.iter().map(|&v| v as f64).collect();
        let bf: Vec<f64> = b.iter().map(|&v| v as f64).collect();

        let (extreme, total) = oracle_permutation(&a, &b);
        let result =
            permutation_test(&af, &bf, Side::OneSidedObservedDirection, PermutationMode::exact())
                .unwrap();
        assert_eq!(result.numerator, extreme, "numerator on {a:?} vs {b:?}");
        assert_eq!(result.denominator, total);
        assert_eq!(result.p_value, extreme as f64 / total as f64);
    }

    println!(
        "[criterion 4] PASS: spearman ({spearman_checked} tied + 1000 tie-free draws), \
         cosine, vmd, and 400 exact permutation counts all match independent oracles"
    );
}

#[test]
fn criterion_5_score_transforms_are_involutions_fixing_4() {
    let mut cases = 0;
    for score in 1..=7 {
        for direction in [Direction::Forward, Direction::Reverse] {
            let once = adjust_direction(score, direction).unwrap();
            assert_eq!(adjust_direction(once, direction).unwrap(), score);
            cases += 1;
        }
    }
    assert_eq!(cases, 14);
    assert_eq!(adjust_direction(4, Direction::Forward).unwrap(), 4);
    assert_eq!(adjust_direction(4, Direction::Reverse).unwrap(), 4);

    let mut cases = 0;
    for score in 1..=7 {
        for action in [AlignedAction::A, AlignedAction::B] {
            let once = align_scenario(score, action).unwrap();
            assert_eq!(align_scenario(once, action).unwrap(), score);
            cases += 1;
        }
    }
    assert_eq!(cases, 14);
    assert_eq!(align_scenario(4, AlignedAction::A).unwrap(), 4);
    assert_eq!(align_scenario(4, AlignedAction::B).unwrap(), 4);

    println!(
        "[criterion 5] PASS: adjust_direction and align_scenario are involutions \
         fixing 4 across all 14 cases each"
    );
}

#[test]
fn criterion_6_validation_fixture_suite_classifies_exactly() {
    let corpus = fixture_corpus();
    let items = corpus.items();
    assert_eq!(items.len(), 20);

    // One run per category, built over the full fixture item set. `texts` is
    // indexed in corpus order; entries default to a benign mixed pattern.
    let run = |texts: &dyn Fn(usize, &PairedItem) -> String| -> RunResponse {
        RunResponse {
            prompt_id: PromptTemplateId::BehaviorFc,
            run_index: 0,
            items: items
                .iter()
                .enumerate()
                .map(|(i, item)| RunItem {
                    item_id: item.item_id().clone(),
                    raw_text: texts(i, item),
                })
                .collect(),
        }
    };
    let mixed = |i: usize| if i % 2 == 0 { "2".to_owned() } else { "6".to_owned() };

    let refusal = "As an AI language model, I cannot pick a side here.";
    let suite: Vec<(&str, RunResponse, BTreeSet<InvalidReason>)> = vec![
        ("valid", run(&|i, _| mixed(i)), BTreeSet::new()),
        (
            // A constant run is necessarily one-sided as well; the exact
            // reason set records all three.
            "all-same",
            run(&|_, _| "4".to_owned()),
            BTreeSet::from([
                InvalidReason::AllSame,
                InvalidReason::OneSidedAtOrAbove4,
                InvalidReason::OneSidedAtOrBelow4,
            ]),
        ),
        (
            "all at or above 4",
            run(&|i, _| ((i % 4) + 4).to_string()),
            BTreeSet::from([InvalidReason::OneSidedAtOrAbove4]),
        ),
        (
            "all at or below 4",
            run(&|i, _| ((i % 4) + 1).to_string()),
            BTreeSet::from([InvalidReason::OneSidedAtOrBelow4]),
        ),
        (
            "out-of-range",
            run(&|i, _| if i == 3 { "9".to_owned() } else { mixed(i) }),
            BTreeSet::from([InvalidReason::OutOfRange]),
        ),
        (
            "refusal",
            run(&|i, _| if i == 0 { refusal.to_owned() } else { mixed(i) }),
            BTreeSet::from([InvalidReason::Refusal]),
        ),
        (
            // Echoing the statement back instead of scoring it: the echo
            // carries no integer token, so it lands as non-score content.
            "statement-echo",
            run(&|i, item| if i == 7 { item.statement.text_en.clone() } else { mixed(i) }),
            BTreeSet::from([InvalidReason::NonScoreContent]),
        ),
    ];

    let patterns = RefusalPatterns::default();
    for (name, response, expected) in &suite {
        let parsed = ParsedRun::from_response(response, &patterns);
        let verdict = classify_run(&parsed, items.len()).unwrap();
        assert_eq!(&verdict.reasons, expected, "category {name}");
        assert_eq!(verdict.is_valid(), expected.is_empty(), "category {name}");
    }

    println!(
        "[criterion 6] PASS: {} fixture runs classified with exactly the expected reason sets",
        suite.len()
    );
}

/// Administer both questionnaires synthetically and compute the congruence
/// row, or `None` when a questionnaire ends up with no valid runs.
fn synthetic_row(corpus: &Corpus, profile: SyntheticProfile, repetitions: u32) -> Option<MetricsRow> {
    let items: Vec<&PairedItem> = corpus.items().iter().collect();
    let backend = synthetic_respondent(profile, corpus);
    let patterns = RefusalPatterns::default();

    let mut profiles = Vec::new();
    for mut plan in [SessionPlan::knowledge(profile.seed), SessionPlan::behavior(profile.seed)] {
        plan.repetitions = repetitions;
        let transcript =
            run_sessions("synthetic", &plan, &items, &backend, &RunOptions::default()).unwrap();
        let (valid, _) = filter_valid(&transcript, &patterns).unwrap();
        if valid.is_empty() {
            return None;
        }
        profiles.push(aggregate("synthetic", plan.questionnaire, &valid).unwrap());
    }
    let (x, y) = paired_vectors(&profiles[0], &profiles[1], corpus).unwrap();
    Some(congruence_row("synthetic", &x, &y).unwrap())
}

#[test]
fn criterion_7_synthetic_congruence_limits() {
    let corpus = fixture_corpus();

    // Perfect congruence, no noise: behavior mirrors the knowledge latent
    // exactly, so the limit values are reached without tolerance.
    for seed in [11, 12, 13] {
        let row =
            synthetic_row(&corpus, SyntheticProfile { congruence: 1.0, noise_sd: 0.0, seed }, 2)
                .expect("noise-free synthetic respondent produces valid runs");
        assert_eq!(row.cosine, 1.0, "seed {seed}");
        assert_eq!(row.vmd, 0.0, "seed {seed}");
        assert_eq!(row.consistent_proportion, 1.0, "seed {seed}");
    }

    // Zero congruence: behavior is independent of knowledge, so Spearman
    // should average out near 0 across seeds. Seeds whose knowledge half
    // lands one-sided (and is screened out) are skipped.
    let mut correlations = Vec::new();
    for seed in 4000..4050 {
        let Some(row) =
            synthetic_row(&corpus, SyntheticProfile { congruence: 0.0, noise_sd: 0.0, seed }, 1)
        else {
            continue;
        };
        if let Some(r) = row.spearman {
            correlations.push(r);
        }
    }
    assert!(correlations.len() >= 40, "only {} usable seeds", correlations.len());
    let mean = correlations.iter().sum::<f64>() / correlations.len() as f64;
    assert!(mean.abs() <= 0.1, "mean spearman {mean:.4} not within ±0.1 of 0");

    println!(
        "[criterion 7] PASS: congruence 1.0 hits cosine 1 / vmd 0 / proportion 1 exactly; \
         congruence 0.0 mean spearman {mean:.4} over {} seeds",
        correlations.len()
    );
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn criterion_8_end_to_end_reports_are_byte_deterministic() {
    let evaluate_into = |out: &Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_congruence"))
            .args(["evaluate", "--seed", "7"])
            .arg("--corpus")
            .arg(fixtures().join("corpus.jsonl"))
            .arg("--layout")
            .arg(fixtures().join("layouts.json"))
            .arg("--roster")
            .arg(fixtures().join("roster.json"))
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    };

    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    evaluate_into(first.path());
    evaluate_into(second.path());

    let first = dir_contents(&first.path().join("reports"));
    let second = dir_contents(&second.path().join("reports"));
    assert_eq!(first, second, "two runs over the same fixtures diverged");

    let golden = dir_contents(&fixtures().join("golden"));
    assert_eq!(
        first.iter().map(|(name, _)| name.as_str()).collect::<Vec<_>>(),
        golden.iter().map(|(name, _)| name.as_str()).collect::<Vec<_>>(),
    );
    for ((name, bytes), (_, expected)) in first.iter().zip(&golden) {
        assert_eq!(bytes, expected, "{name} differs from the committed golden copy");
    }

    println!(
        "[criterion 8] PASS: two fixture evaluations byte-identical and matching {} golden files",
        golden.len()
    );
}

#[test]
fn criterion_9_readme_discloses_non_reproducibility() {
    let readme = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md");
    let raw = fs::read_to_string(&readme).expect("workspace README.md exists");
    // Collapse hard line wraps so the phrase checks survive reflowing.
    let text = raw.split_whitespace().collect::<Vec<_>>().join(" ");

    assert!(
        text.contains("cannot be reproduced"),
        "README must state that published per-model numbers cannot be reproduced here"
    );
    assert!(
        text.contains("snapshot"),
        "README must tie the per-model numbers to model snapshots"
    );

    println!("[criterion 9] PASS: README states the per-model non-reproducibility disclosure");
}
