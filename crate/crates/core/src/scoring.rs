//! Aggregation of valid runs into per-respondent score profiles, and the
//! transforms that make knowledge and behavior answers comparable:
//! direction adjustment for reverse-keyed statements and scenario alignment
//! for action-B/action-A phrasing. Both transforms are reflections about the
//! scale midpoint (`8 − x`) and hence involutions fixing 4.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admin::{PromptTemplateId, Questionnaire};
use crate::corpus::{AlignedAction, Corpus, Direction, ItemId};
use crate::validation::ParsedRun;

/// One item's aggregated score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemScore {
    pub item_id: ItemId,
    pub score: i64,
}

/// A respondent's aggregated answers to one questionnaire, in administered
/// item order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreProfile {
    pub respondent_id: String,
    pub questionnaire: Questionnaire,
    pub items: Vec<ItemScore>,
    /// Runs that entered the aggregate, as `(prompt, run_index)` keys, sorted.
    pub runs_used: Vec<(PromptTemplateId, u32)>,
    /// Prompts that contributed at least one valid run.
    pub prompts_used: Vec<PromptTemplateId>,
}

impl ScoreProfile {
    pub fn score_of(&self, id: &ItemId) -> Option<i64> {
        self.items.iter().find(|i| &i.item_id == id).map(|i| i.score)
    }

    pub fn item_ids(&self) -> impl Iterator<Item = &ItemId> {
        self.items.iter().map(|i| &i.item_id)
    }

    /// Scores as a float vector in item order.
    pub fn score_vector(&self) -> Vec<f64> {
        self.items.iter().map(|i| i.score as f64).collect()
    }
}

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("no valid runs to aggregate")]
    NoValidRuns,

    #[error("run {0}-{1} covers a different item set than the first run")]
    RunItemSetMismatch(PromptTemplateId, u32),

    #[error("item {0} has no parsed score; only fully scored runs can be aggregated")]
    UnscoredItem(ItemId),

    #[error("score {0} outside the 1-7 scale")]
    ScoreOutOfRange(i64),

    #[error("profiles cover different items: missing from behavior {missing_from_behavior:?}, missing from knowledge {missing_from_knowledge:?}")]
    ItemSetMismatch {
        missing_from_behavior: Vec<ItemId>,
        missing_from_knowledge: Vec<ItemId>,
    },

    #[error("item {0} is not in the corpus")]
    UnknownItem(ItemId),

    #[error("score file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("score file {path} line {line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Pool all valid runs into one profile: per item, the mean response rounded
/// to the nearest whole number, halves away from zero. Run order does not
/// affect the result.
pub fn aggregate(
    respondent_id: &str,
    questionnaire: Questionnaire,
    valid_runs: &[ParsedRun],
) -> Result<ScoreProfile, ScoringError> {
    let first = valid_runs.first().ok_or(ScoringError::NoValidRuns)?;
    let reference: Vec<&ItemId> = first.items.iter().map(|i| &i.item_id).collect();

    let mut sums = vec![0.0f64; reference.len()];
    for run in valid_runs {
        let ids: Vec<&ItemId> = run.items.iter().map(|i| &i.item_id).collect();
        if ids != reference {
            return Err(ScoringError::RunItemSetMismatch(run.prompt_id, run.run_index));
        }
        for (sum, item) in sums.iter_mut().zip(&run.items) {
            let score = item
                .outcome
                .score()
                .ok_or_else(|| ScoringError::UnscoredItem(item.item_id.clone()))?;
            *sum += score as f64;
        }
    }

    let n = valid_runs.len() as f64;
    let items = reference
        .iter()
        .zip(&sums)
        .map(|(id, sum)| ItemScore {
            item_id: (*id).clone(),
            // f64::round is round-half-away-from-zero, the documented rule.
            score: (sum / n).round() as i64,
        })
        .collect();

    let mut runs_used: Vec<(PromptTemplateId, u32)> =
        valid_runs.iter().map(|r| (r.prompt_id, r.run_index)).collect();
    runs_used.sort();
    let prompts_used: Vec<PromptTemplateId> = runs_used
        .iter()
        .map(|(p, _)| *p)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    Ok(ScoreProfile {
        respondent_id: respondent_id.to_owned(),
        questionnaire,
        items,
        runs_used,
        prompts_used,
    })
}

/// Per-prompt aggregates for diagnostics: the same pooling, restricted to one
/// prompt's valid runs at a time.
pub fn aggregate_per_prompt(
    respondent_id: &str,
    questionnaire: Questionnaire,
    valid_runs: &[ParsedRun],
) -> Result<Vec<(PromptTemplateId, ScoreProfile)>, ScoringError> {
    let prompts: BTreeSet<PromptTemplateId> = valid_runs.iter().map(|r| r.prompt_id).collect();
    prompts
        .into_iter()
        .map(|prompt| {
            let subset: Vec<ParsedRun> =
                valid_runs.iter().filter(|r| r.prompt_id == prompt).cloned().collect();
            aggregate(respondent_id, questionnaire, &subset).map(|p| (prompt, p))
        })
        .collect()
}

fn check_range(score: i64) -> Result<(), ScoringError> {
    if (1..=7).contains(&score) {
        Ok(())
    } else {
        Err(ScoringError::ScoreOutOfRange(score))
    }
}

/// Map a statement answer onto its dimension's trait direction: forward
/// scores pass through, reverse scores reflect about the midpoint (`8 − x`).
pub fn adjust_direction(score: i64, direction: Direction) -> Result<i64, ScoringError> {
    check_range(score)?;
    Ok(match direction {
        Direction::Forward => score,
        Direction::Reverse => 8 - score,
    })
}

/// Map a scenario answer into statement-agreement space: when action B
/// embodies the statement the score passes through; when action A does, it
/// reflects (`8 − x`). A result of 7 always means "acts fully in line with
/// the statement".
pub fn align_scenario(score: i64, aligned_action: AlignedAction) -> Result<i64, ScoringError> {
    check_range(score)?;
    Ok(match aligned_action {
        AlignedAction::B => score,
        AlignedAction::A => 8 - score,
    })
}

/// Build the paired `(x, y)` vectors for congruence metrics: `x` is the
/// knowledge score per item, `y` the aligned behavior score, in the knowledge
/// profile's item order.
pub fn paired_vectors(
    knowledge: &ScoreProfile,
    behavior: &ScoreProfile,
    corpus: &Corpus,
) -> Result<(Vec<f64>, Vec<f64>), ScoringError> {
    let k_ids: BTreeSet<&ItemId> = knowledge.item_ids().collect();
    let b_ids: BTreeSet<&ItemId> = behavior.item_ids().collect();
    if k_ids != b_ids {
        return Err(ScoringError::ItemSetMismatch {
            missing_from_behavior: k_ids.difference(&b_ids).map(|id| (*id).clone()).collect(),
            missing_from_knowledge: b_ids.difference(&k_ids).map(|id| (*id).clone()).collect(),
        });
    }

    let mut x = Vec::with_capacity(knowledge.items.len());
    let mut y = Vec::with_capacity(knowledge.items.len());
    for item in &knowledge.items {
        let paired = corpus
            .item(&item.item_id)
            .ok_or_else(|| ScoringError::UnknownItem(item.item_id.clone()))?;
        let behavior_score = behavior
            .score_of(&item.item_id)
            .expect("item sets verified equal");
        check_range(item.score)?;
        x.push(item.score as f64);
        y.push(align_scenario(behavior_score, paired.scenario.aligned_action)? as f64);
    }
    Ok((x, y))
}

/// One line of a score file: a single item's score with profile-level
/// context repeated so the format stays flat and greppable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub respondent_id: String,
    pub questionnaire: Questionnaire,
    pub item_id: ItemId,
    pub score: i64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs_used: Vec<(PromptTemplateId, u32)>,
}

/// Write profiles as JSON Lines, one record per item.
pub fn save_score_records(path: &Path, profiles: &[ScoreProfile]) -> Result<(), ScoringError> {
    let io_err = |source| ScoringError::Io { path: path.to_owned(), source };
    let mut out = String::new();
    for profile in profiles {
        for item in &profile.items {
            let record = ScoreRecord {
                respondent_id: profile.respondent_id.clone(),
                questionnaire: profile.questionnaire,
                item_id: item.item_id.clone(),
                score: item.score,
                runs_used: profile.runs_used.clone(),
            };
            out.push_str(&serde_json::to_string(&record).expect("score record serializes"));
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(io_err)
}

/// Read a score file back into profiles, grouping records by
/// `(respondent_id, questionnaire)` in first-appearance order and keeping
/// each group's item order.
pub fn load_score_records(path: &Path) -> Result<Vec<ScoreProfile>, ScoringError> {
    let io_err = |source| ScoringError::Io { path: path.to_owned(), source };
    let file = fs::File::open(path).map_err(io_err)?;
    let mut profiles: Vec<ScoreProfile> = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| ScoringError::Io { path: path.to_owned(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ScoreRecord = serde_json::from_str(&line).map_err(|source| {
            ScoringError::Parse { path: path.to_owned(), line: index + 1, source }
        })?;
        check_range(record.score)?;
        let profile = match profiles
            .iter_mut()
            .find(|p| p.respondent_id == record.respondent_id && p.questionnaire == record.questionnaire)
        {
            Some(existing) => existing,
            None => {
                let prompts_used = record
                    .runs_used
                    .iter()
                    .map(|(p, _)| *p)
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                profiles.push(ScoreProfile {
                    respondent_id: record.respondent_id.clone(),
                    questionnaire: record.questionnaire,
                    items: Vec::new(),
                    runs_used: record.runs_used.clone(),
                    prompts_used,
                });
                profiles.last_mut().expect("just pushed")
            }
        };
        profile.items.push(ItemScore { item_id: record.item_id, score: record.score });
    }
    Ok(profiles)
}
