//! Screening of raw replies against the five unreasonable-response
//! categories: uniform answers, one-sided answers (all at-or-above or all
//! at-or-below the midpoint), out-of-range numbers, refusals, and non-score
//! content.
//!
//! Parsing and classification are separate: [`parse_item_score`] extracts an
//! integer (or a failure kind) from one item's reply text, and
//! [`classify_run`] judges the whole run's score pattern. Failures are
//! values, not errors — a rejected run is a normal outcome carried into the
//! rejection report.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admin::{PromptTemplateId, RunResponse, Transcript};
use crate::corpus::ItemId;

/// Substrings (matched case-insensitively) that mark a reply as a refusal.
/// The default list carries the canonical exemplar; model-specific phrasings
/// can be appended per run configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefusalPatterns(Vec<String>);

impl Default for RefusalPatterns {
    fn default() -> Self {
        Self(vec!["as an AI language model".to_owned()])
    }
}

impl RefusalPatterns {
    pub fn new(patterns: Vec<String>) -> Self {
        Self(patterns)
    }

    /// The defaults plus `extra`.
    pub fn extended(extra: &[String]) -> Self {
        let mut patterns = Self::default().0;
        patterns.extend_from_slice(extra);
        Self(patterns)
    }

    pub fn matches(&self, text: &str) -> bool {
        let lower = text.to_lowercase();
        self.0.iter().any(|p| lower.contains(&p.to_lowercase()))
    }
}

/// Outcome of parsing one item's reply text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum ParseOutcome {
    /// The reply's single integer. Range is judged later, by classification.
    Score(i64),
    Refusal,
    NonScoreContent,
}

impl ParseOutcome {
    pub fn score(&self) -> Option<i64> {
        match self {
            ParseOutcome::Score(s) => Some(*s),
            _ => None,
        }
    }
}

/// One item of a run after parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedItem {
    pub item_id: ItemId,
    pub outcome: ParseOutcome,
    pub raw_text: String,
}

/// One run after parsing: every item's outcome plus the run key.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedRun {
    pub prompt_id: PromptTemplateId,
    pub run_index: u32,
    pub items: Vec<ParsedItem>,
}

impl ParsedRun {
    /// Parse every item of a raw run.
    pub fn from_response(response: &RunResponse, patterns: &RefusalPatterns) -> Self {
        Self {
            prompt_id: response.prompt_id,
            run_index: response.run_index,
            items: response
                .items
                .iter()
                .map(|item| ParsedItem {
                    item_id: item.item_id.clone(),
                    outcome: parse_item_score(&item.raw_text, patterns),
                    raw_text: item.raw_text.clone(),
                })
                .collect(),
        }
    }

    /// All item scores, if and only if every item parsed to a score.
    pub fn scores(&self) -> Option<Vec<i64>> {
        self.items.iter().map(|i| i.outcome.score()).collect()
    }
}

/// Why a run was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvalidReason {
    AllSame,
    OneSidedAtOrAbove4,
    OneSidedAtOrBelow4,
    OutOfRange,
    Refusal,
    NonScoreContent,
}

impl InvalidReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            InvalidReason::AllSame => "all-same",
            InvalidReason::OneSidedAtOrAbove4 => "one-sided-at-or-above-4",
            InvalidReason::OneSidedAtOrBelow4 => "one-sided-at-or-below-4",
            InvalidReason::OutOfRange => "out-of-range",
            InvalidReason::Refusal => "refusal",
            InvalidReason::NonScoreContent => "non-score-content",
        }
    }
}

impl std::fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Validity status of one run. A run is valid exactly when `reasons` is
/// empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityVerdict {
    pub prompt_id: PromptTemplateId,
    pub run_index: u32,
    pub reasons: BTreeSet<InvalidReason>,
    /// Raw snippets of the items that triggered parse failures or range
    /// violations, for the rejection report.
    pub offending: Vec<OffendingItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OffendingItem {
    pub item_id: ItemId,
    pub reason: InvalidReason,
    pub snippet: String,
}

impl ValidityVerdict {
    pub fn is_valid(&self) -> bool {
        self.reasons.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("run covers {got} items but the questionnaire has {expected}")]
    ItemCountMismatch { expected: usize, got: usize },
}

/// Extract the score from one item's reply text.
///
/// Precedence: a reply whose standalone integer tokens all agree on one value
/// is that score, even if it also chatters around it; otherwise refusal
/// phrasing wins; otherwise the reply is non-score content (no integer at
/// all, or several conflicting ones).
pub fn parse_item_score(raw_text: &str, patterns: &RefusalPatterns) -> ParseOutcome {
    let tokens = integer_tokens(raw_text);
    let distinct: BTreeSet<i64> = tokens.iter().copied().collect();
    if distinct.len() == 1 {
        return ParseOutcome::Score(*distinct.iter().next().unwrap());
    }
    if patterns.matches(raw_text) {
        return ParseOutcome::Refusal;
    }
    ParseOutcome::NonScoreContent
}

/// Standalone integers in `text`: maximal digit runs, not glued to letters,
/// not part of a decimal number. A `-` directly before a run (itself not
/// preceded by an alphanumeric) is a sign.
fn integer_tokens(text: &str) -> Vec<i64> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }

        // Letter-adjacent runs ("item3", "7th") and decimals ("4.5") are not
        // standalone integers.
        let before = start.checked_sub(1).map(|k| chars[k]);
        let after = chars.get(i).copied();
        let glued_before = matches!(before, Some(c) if c.is_alphanumeric())
            || (before == Some('.')
                && start >= 2
                && chars[start - 2].is_ascii_digit());
        let glued_after =
            matches!(after, Some(c) if c.is_alphanumeric())
                || (after == Some('.') && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit()));
        if glued_before || glued_after {
            continue;
        }

        let negative = before == Some('-')
            && !(start >= 2 && (chars[start - 2].is_alphanumeric() || chars[start - 2] == '.'));
        let digits: String = chars[start..i].iter().collect();
        if let Ok(value) = digits.parse::<i64>() {
            tokens.push(if negative { -value } else { value });
        }
    }
    tokens
}

/// Judge one parsed run against all five categories. Every applicable reason
/// is recorded; the whole-run score patterns (uniformity, one-sidedness) are
/// judged only when every item parsed to a score, since they describe the
/// shape of a complete numeric response.
pub fn classify_run(
    parsed: &ParsedRun,
    item_count: usize,
) -> Result<ValidityVerdict, ValidationError> {
    if parsed.items.len() != item_count {
        return Err(ValidationError::ItemCountMismatch {
            expected: item_count,
            got: parsed.items.len(),
        });
    }

    let mut reasons = BTreeSet::new();
    let mut offending = Vec::new();
    for item in &parsed.items {
        let reason = match item.outcome {
            ParseOutcome::Refusal => Some(InvalidReason::Refusal),
            ParseOutcome::NonScoreContent => Some(InvalidReason::NonScoreContent),
            ParseOutcome::Score(s) if !(1..=7).contains(&s) => Some(InvalidReason::OutOfRange),
            ParseOutcome::Score(_) => None,
        };
        if let Some(reason) = reason {
            reasons.insert(reason);
            offending.push(OffendingItem {
                item_id: item.item_id.clone(),
                reason,
                snippet: item.raw_text.chars().take(120).collect(),
            });
        }
    }

    if let Some(scores) = parsed.scores() {
        if scores.iter().all(|&s| s == scores[0]) {
            reasons.insert(InvalidReason::AllSame);
        }
        if scores.iter().all(|&s| s >= 4) {
            reasons.insert(InvalidReason::OneSidedAtOrAbove4);
        }
        if scores.iter().all(|&s| s <= 4) {
            reasons.insert(InvalidReason::OneSidedAtOrBelow4);
        }
    }

    Ok(ValidityVerdict {
        prompt_id: parsed.prompt_id,
        run_index: parsed.run_index,
        reasons,
        offending,
    })
}

/// Partition a transcript's runs into valid parsed runs and rejection
/// verdicts. Exhaustive and disjoint: every run lands in exactly one list.
pub fn filter_valid(
    transcript: &Transcript,
    patterns: &RefusalPatterns,
) -> Result<(Vec<ParsedRun>, Vec<ValidityVerdict>), ValidationError> {
    let mut valid = Vec::new();
    let mut rejected = Vec::new();
    for response in &transcript.runs {
        let parsed = ParsedRun::from_response(response, patterns);
        let verdict = classify_run(&parsed, response.items.len())?;
        if verdict.is_valid() {
            valid.push(parsed);
        } else {
            rejected.push(verdict);
        }
    }
    Ok((valid, rejected))
}
