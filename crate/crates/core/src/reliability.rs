//! Response-quality checks for a single respondent: logical consistency of
//! answer direction within each trait dimension, and split-half reliability
//! of the whole form via the Spearman-Brown step-up.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dimension, Direction, ItemId, ScaleLayout};
use crate::metrics::{self, MetricsError};
use crate::scoring::{adjust_direction, ScoreProfile, ScoringError};

/// Direction-adjusted answer counts for one dimension. A score of exactly 4
/// sits on the midpoint and is counted on both sides, so the two counts sum
/// to at least `n_items`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionTally {
    pub dimension: Dimension,
    pub n_items: usize,
    pub count_at_or_above_4: usize,
    pub count_at_or_below_4: usize,
}

impl DimensionTally {
    /// N_c,i: items answered in the dimension's majority direction.
    pub fn consistent_count(&self) -> usize {
        self.count_at_or_above_4.max(self.count_at_or_below_4)
    }
}

/// A deterministic assignment of a layout's items into two balanced halves,
/// with a positional within-dimension pairing for correlating them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub half_a: Vec<ItemId>,
    pub half_b: Vec<ItemId>,
    pub pairing: Vec<(ItemId, ItemId)>,
    // Captured from the layout at construction so scores can be
    // direction-adjusted without re-threading the layout.
    directions: BTreeMap<ItemId, Direction>,
}

impl SplitPlan {
    pub fn direction_of(&self, id: &ItemId) -> Option<Direction> {
        self.directions.get(id).copied()
    }
}

#[derive(Debug, Error)]
pub enum ReliabilityError {
    #[error("profile has no score for layout item {0}")]
    MissingItem(ItemId),

    #[error("layout admits no inconsistency (P_min = 1), consistency undefined")]
    DegenerateLayout,

    #[error("a split half is constant; its rank correlation is undefined")]
    DegenerateHalf,

    #[error(transparent)]
    Scoring(#[from] ScoringError),

    #[error("correlation failed: {0}")]
    Correlation(MetricsError),
}

fn adjusted_score(
    profile: &ScoreProfile,
    id: &ItemId,
    direction: Direction,
) -> Result<i64, ReliabilityError> {
    let raw = profile
        .score_of(id)
        .ok_or_else(|| ReliabilityError::MissingItem(id.clone()))?;
    Ok(adjust_direction(raw, direction)?)
}

/// Direction-adjusted per-dimension tallies for `profile` under `layout`.
pub fn dimension_tallies(
    profile: &ScoreProfile,
    layout: &ScaleLayout,
) -> Result<Vec<DimensionTally>, ReliabilityError> {
    layout
        .dimensions
        .iter()
        .map(|dim| {
            let mut at_or_above = 0;
            let mut at_or_below = 0;
            for id in dim.ordered_ids() {
                let direction = dim.direction_of(id).expect("id drawn from this dimension");
                let score = adjusted_score(profile, id, direction)?;
                if score >= 4 {
                    at_or_above += 1;
                }
                if score <= 4 {
                    at_or_below += 1;
                }
            }
            Ok(DimensionTally {
                dimension: dim.dimension,
                n_items: dim.item_count(),
                count_at_or_above_4: at_or_above,
                count_at_or_below_4: at_or_below,
            })
        })
        .collect()
}

/// Normalize a raw consistent proportion `N_c / N_t` onto [0, 1] between the
/// layout's floor `p_min` and the ceiling 1.
pub fn consistency_from_ratio(ratio: f64, p_min: f64) -> f64 {
    (ratio - p_min) / (1.0 - p_min)
}

/// Logical consistency of `profile` under `layout`: the proportion of items
/// answered in each dimension's majority direction, rescaled so the
/// theoretical floor maps to 0 and perfect one-sidedness to 1.
pub fn consistency(profile: &ScoreProfile, layout: &ScaleLayout) -> Result<f64, ReliabilityError> {
    let tallies = dimension_tallies(profile, layout)?;
    let n_t = layout.item_count();
    let n_c: usize = tallies.iter().map(DimensionTally::consistent_count).sum();
    let p_min = layout.p_min();
    if p_min >= 1.0 {
        return Err(ReliabilityError::DegenerateLayout);
    }
    Ok(consistency_from_ratio(n_c as f64 / n_t as f64, p_min))
}

/// Split a layout into two equal halves by alternating items within each
/// dimension in layout order. Dimensions with an odd item count leave one
/// surplus item; surpluses alternate between halves across dimensions so the
/// overall halves stay the same size, with the seed's parity choosing which
/// half receives the first surplus. The pairing matches the k-th half-A item
/// of each dimension with its k-th half-B item; surplus items go unpaired.
pub fn split_plan(layout: &ScaleLayout, seed: u64) -> SplitPlan {
    let mut half_a = Vec::new();
    let mut half_b = Vec::new();
    let mut pairing = Vec::new();
    let mut directions = BTreeMap::new();
    let mut surplus_to_a = seed % 2 == 0;

    for dim in &layout.dimensions {
        let ids: Vec<&ItemId> = dim.ordered_ids().collect();
        let start_with_a = if ids.len() % 2 == 1 {
            let phase = surplus_to_a;
            surplus_to_a = !surplus_to_a;
            phase
        } else {
            true
        };

        let mut dim_a = Vec::new();
        let mut dim_b = Vec::new();
        for (k, id) in ids.iter().enumerate() {
            directions.insert((*id).clone(), dim.direction_of(id).expect("own item"));
            if (k % 2 == 0) == start_with_a {
                dim_a.push((*id).clone());
            } else {
                dim_b.push((*id).clone());
            }
        }
        for (a, b) in dim_a.iter().zip(dim_b.iter()) {
            pairing.push((a.clone(), b.clone()));
        }
        half_a.extend(dim_a);
        half_b.extend(dim_b);
    }

    SplitPlan { half_a, half_b, pairing, directions }
}

/// Step a half-form correlation up to full-form reliability: `2r / (1 + r)`.
pub fn spearman_brown(corr: f64) -> f64 {
    2.0 * corr / (1.0 + corr)
}

/// Split-half reliability of `profile` under `plan`: the tie-corrected
/// Spearman rank correlation over the plan's direction-adjusted item pairs,
/// stepped up with the Spearman-Brown formula.
pub fn split_half_reliability(
    profile: &ScoreProfile,
    plan: &SplitPlan,
) -> Result<f64, ReliabilityError> {
    let mut xs = Vec::with_capacity(plan.pairing.len());
    let mut ys = Vec::with_capacity(plan.pairing.len());
    for (a, b) in &plan.pairing {
        let dir_a = plan.direction_of(a).expect("pairing drawn from plan items");
        let dir_b = plan.direction_of(b).expect("pairing drawn from plan items");
        xs.push(adjusted_score(profile, a, dir_a)? as f64);
        ys.push(adjusted_score(profile, b, dir_b)? as f64);
    }
    let corr = metrics::spearman(&xs, &ys).map_err(|e| match e {
        MetricsError::ConstantVector => ReliabilityError::DegenerateHalf,
        other => ReliabilityError::Correlation(other),
    })?;
    Ok(spearman_brown(corr))
}
