//! Congruence metrics over paired knowledge/behavior score vectors, group
//! descriptive statistics, and two-sample permutation significance tests.
//!
//! The four per-respondent metrics are cosine similarity, Spearman rank
//! correlation, value mean difference (VMD, the mean absolute pairwise
//! difference) and the proportion of consistent pairs (absolute difference at
//! most 1). All functions are pure; every randomized path is seed-driven.

use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack for "as or more extreme" comparisons in permutation counting, so
/// float noise in tied statistics cannot drop the observed assignment itself.
const EXTREME_EPS: f64 = 1e-9;

/// Default cap on the number of assignments exact enumeration may visit.
pub const DEFAULT_EXACT_CAP: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("empty input")]
    Empty,

    #[error("need at least {need} values, got {got}")]
    TooShort { need: usize, got: usize },

    #[error("zero-norm vector has no direction")]
    ZeroNorm,

    #[error("constant vector: rank correlation undefined")]
    ConstantVector,

    #[error("exact enumeration would exceed the cap of {cap} assignments")]
    CapExceeded { cap: u64 },
}

fn check_paired(x: &[f64], y: &[f64]) -> Result<(), MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.is_empty() {
        return Err(MetricsError::Empty);
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Cosine of the angle between `x` and `y`: `Σxy / √(Σx² · Σy²)`.
///
/// The denominator is a single square root of the product so that
/// `cosine(x, x)` is exactly 1.0 rather than off by a rounding step.
pub fn cosine(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_paired(x, y)?;
    let mut xy = 0.0;
    let mut xx = 0.0;
    let mut yy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    if xx == 0.0 || yy == 0.0 {
        return Err(MetricsError::ZeroNorm);
    }
    Ok(xy / (xx * yy).sqrt())
}

/// Average ranks (1-based); tied values share the mean of their rank range.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) hold ties; their shared rank is the mean
        // of 1-based positions i+1..=j+1.
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    let mx = mean(x);
    let my = mean(y);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(MetricsError::ConstantVector);
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Spearman rank correlation: average ranks (ties share the mean rank), then
/// Pearson correlation of the rank vectors.
///
/// Agrees with the closed form `1 − 6Σd²/(n(n²−1))` exactly when no value is
/// tied; under ties the closed form is biased and this tie-corrected value is
/// the one reported (see [`spearman_closed_form`] for the diagnostic).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_paired(x, y)?;
    if x.len() < 2 {
        return Err(MetricsError::TooShort { need: 2, got: x.len() });
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// The rank-difference closed form `1 − 6Σd²/(n(n²−1))` over average ranks.
///
/// Kept as a diagnostic companion to [`spearman`]: the two agree for tie-free
/// data and diverge under ties, where this form is biased.
pub fn spearman_closed_form(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_paired(x, y)?;
    if x.len() < 2 {
        return Err(MetricsError::TooShort { need: 2, got: x.len() });
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
    let n = x.len() as f64;
    Ok(1.0 - 6.0 * d2 / (n * (n * n - 1.0)))
}

/// Value mean difference: `Σ|x_i − y_i| / n`.
pub fn vmd(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_paired(x, y)?;
    Ok(x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>() / x.len() as f64)
}

/// Proportion of pairs with `|x_i − y_i| ≤ 1`.
pub fn consistent_proportion(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    check_paired(x, y)?;
    let close = x.iter().zip(y).filter(|(a, b)| (*a - *b).abs() <= 1.0).count();
    Ok(close as f64 / x.len() as f64)
}

/// All four congruence metrics for one respondent's paired vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub respondent_id: String,
    pub cosine: f64,
    /// `None` when a vector is constant and rank correlation is undefined;
    /// reported as degenerate rather than silently dropped.
    pub spearman: Option<f64>,
    pub vmd: f64,
    pub consistent_proportion: f64,
    pub n_pairs: usize,
}

/// Compute a [`MetricsRow`] from one respondent's paired score vectors. A
/// constant vector degrades the Spearman entry to `None`; every other error
/// is propagated.
pub fn congruence_row(
    respondent_id: &str,
    x: &[f64],
    y: &[f64],
) -> Result<MetricsRow, MetricsError> {
    let spearman = match spearman(x, y) {
        Ok(r) => Some(r),
        Err(MetricsError::ConstantVector) | Err(MetricsError::TooShort { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsRow {
        respondent_id: respondent_id.to_owned(),
        cosine: cosine(x, y)?,
        spearman,
        vmd: vmd(x, y)?,
        consistent_proportion: consistent_proportion(x, y)?,
        n_pairs: x.len(),
    })
}

/// Mean, population standard deviation, min, max, n of a value list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

/// Group descriptive statistics; the standard deviation is the population
/// form (divide by n), which is the convention the published group rows
/// recompute under.
pub fn group_stats(values: &[f64]) -> Result<GroupStats, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(GroupStats { mean: m, sd: var.sqrt(), min, max, n: values.len() })
}

/// Tail convention for the permutation test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// Count assignments at least as extreme in the direction of the observed
    /// mean difference (upper tail when the observed difference is ≥ 0).
    OneSidedObservedDirection,
    TwoSided,
}

/// How the permutation distribution is explored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermutationMode {
    /// Enumerate every assignment; errors when more than `cap` exist.
    Exact { cap: u64 },
    /// Seeded resampling with the (k+1)/(R+1) correction.
    MonteCarlo { resamples: u64, seed: u64 },
}

impl PermutationMode {
    /// Exact enumeration with the default assignment cap.
    pub fn exact() -> Self {
        PermutationMode::Exact { cap: DEFAULT_EXACT_CAP }
    }
}

/// The mode actually used, as recorded in a [`PermutationResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum ModeRecord {
    Exact,
    MonteCarlo { resamples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult {
    pub statistic: String,
    pub observed: f64,
    /// Always `numerator / denominator`; in exact mode the denominator is the
    /// total assignment count and the numerator (≥ 1) includes the observed
    /// assignment, so p is never 0.
    pub p_value: f64,
    pub numerator: u64,
    pub denominator: u64,
    pub side: Side,
    pub mode: ModeRecord,
}

/// `C(n, k)` if it is ≤ `cap`, else `None`. Early exit keeps every
/// intermediate bounded, so no overflow for any input.
fn binomial_capped(n: u64, k: u64, cap: u64) -> Option<u64> {
    let k = k.min(n - k);
    let mut value: u128 = 1;
    for i in 1..=k {
        // Exact at every step: the prefix product is itself C(n-k+i, i).
        value = value * (n - k + i) as u128 / i as u128;
        if value > cap as u128 {
            return None;
        }
    }
    Some(value as u64)
}

fn is_extreme(stat: f64, observed: f64, side: Side) -> bool {
    match side {
        Side::OneSidedObservedDirection => {
            if observed >= 0.0 {
                stat >= observed - EXTREME_EPS
            } else {
                stat <= observed + EXTREME_EPS
            }
        }
        Side::TwoSided => stat.abs() >= observed.abs() - EXTREME_EPS,
    }
}

/// Two-sample permutation test on the difference of group means
/// (`mean(a) − mean(b)`).
///
/// Exact mode enumerates all `C(n+m, n)` assignments of the pooled values and
/// counts those with a statistic as or more extreme than the observed one;
/// the observed assignment is in the enumeration, so the p-value is at least
/// `1 / C(n+m, n)`. Monte-Carlo mode draws seeded resamples and applies the
/// (k+1)/(R+1) correction.
pub fn permutation_test(
    group_a: &[f64],
    group_b: &[f64],
    side: Side,
    mode: PermutationMode,
) -> Result<PermutationResult, MetricsError> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = group_a.len();
    let m = group_b.len();
    let observed = mean(group_a) - mean(group_b);

    let pooled: Vec<f64> = group_a.iter().chain(group_b).copied().collect();
    let total_sum: f64 = pooled.iter().sum();
    // mean(a) − mean(b) from the sum of the values assigned to group A.
    let stat_of = |sum_a: f64| sum_a / n as f64 - (total_sum - sum_a) / m as f64;

    match mode {
        PermutationMode::Exact { cap } => {
            let total = binomial_capped((n + m) as u64, n as u64, cap)
                .ok_or(MetricsError::CapExceeded { cap })?;
            let mut extreme = 0u64;
            for combo in (0..n + m).combinations(n) {
                let sum_a: f64 = combo.iter().map(|&i| pooled[i]).sum();
                if is_extreme(stat_of(sum_a), observed, side) {
                    extreme += 1;
                }
            }
            Ok(PermutationResult {
                statistic: "mean-difference".to_owned(),
                observed,
                p_value: extreme as f64 / total as f64,
                numerator: extreme,
                denominator: total,
                side,
                mode: ModeRecord::Exact,
            })
        }
        PermutationMode::MonteCarlo { resamples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut extreme = 0u64;
            for _ in 0..resamples {
                let chosen = rand::seq::index::sample(&mut rng, n + m, n);
                let sum_a: f64 = chosen.iter().map(|i| pooled[i]).sum();
                if is_extreme(stat_of(sum_a), observed, side) {
                    extreme += 1;
                }
            }
            Ok(PermutationResult {
                statistic: "mean-difference".to_owned(),
                observed,
                p_value: (extreme + 1) as f64 / (resamples + 1) as f64,
                numerator: extreme + 1,
                denominator: resamples + 1,
                side,
                mode: ModeRecord::MonteCarlo { resamples, seed },
            })
        }
    }
}
