//! Evaluation orchestration: validate transcripts, aggregate valid runs,
//! screen respondents on consistency and split-half reliability, compute
//! congruence metrics for those who pass, and compare cohorts against a
//! reference cohort with permutation tests. The output is a fully
//! deterministic report structure; everything downstream is rendering.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admin::{Questionnaire, Transcript};
use crate::corpus::{Corpus, Scale, ScaleLayout};
use crate::metrics::{
    self, GroupStats, MetricsError, MetricsRow, PermutationMode, PermutationResult, Side,
};
use crate::reliability::{
    consistency, split_half_reliability, split_plan, ReliabilityError, SplitPlan,
};
use crate::scoring::{aggregate, paired_vectors, ScoreProfile, ScoringError};
use crate::validation::{filter_valid, RefusalPatterns, ValidationError, ValidityVerdict};

/// Minimum consistency and reliability a respondent must reach to enter the
/// congruence rows. The defaults are the lowest values observed in the human
/// reference cohort.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateThresholds {
    pub consistency: f64,
    pub reliability: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        Self { consistency: 0.49, reliability: 0.57 }
    }
}

/// Everything `evaluate` needs besides the corpus and the respondents.
#[derive(Debug, Clone)]
pub struct EvaluationOptions {
    /// Scale whose layout drives consistency and the split plan.
    pub scale: Scale,
    pub gate: GateThresholds,
    /// Seeds the split plan's surplus phase and any Monte-Carlo fallback.
    pub seed: u64,
    pub refusals: RefusalPatterns,
    /// Cohort treated as the human reference: it gets MIN/MAX rows and every
    /// other cohort is tested against it.
    pub reference_cohort: String,
    pub permutation: PermutationMode,
}

impl Default for EvaluationOptions {
    fn default() -> Self {
        Self {
            scale: Scale::Tda100,
            gate: GateThresholds::default(),
            seed: 0,
            refusals: RefusalPatterns::default(),
            reference_cohort: "human".to_owned(),
            permutation: PermutationMode::exact(),
        }
    }
}

/// One respondent's answers, either as raw transcripts to validate and
/// aggregate or as already-aggregated profiles (the human path).
#[derive(Debug, Clone)]
pub enum RespondentSource {
    Transcripts { knowledge: Transcript, behavior: Transcript },
    Profiles { knowledge: ScoreProfile, behavior: ScoreProfile },
}

#[derive(Debug, Clone)]
pub struct RespondentInput {
    pub respondent_id: String,
    pub cohort: String,
    pub source: RespondentSource,
}

/// Valid/invalid run counts for one questionnaire, with the verdicts for the
/// rejected runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTally {
    pub total: usize,
    pub valid: usize,
    pub rejected: Vec<ValidityVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationPair {
    pub knowledge: RunTally,
    pub behavior: RunTally,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum RespondentStatus {
    /// Passed the reliability gate; appears in congruence rows.
    Included,
    /// Consistency or reliability below threshold; flagged, excluded from
    /// congruence rows and cohort aggregates.
    GatedOut,
    /// Every run of the named questionnaire failed validation.
    NoValidResponses { questionnaire: Questionnaire },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RespondentReport {
    pub respondent_id: String,
    pub cohort: String,
    pub status: RespondentStatus,
    /// `None` for respondents entering as score files.
    pub validation: Option<ValidationPair>,
    pub consistency: Option<f64>,
    /// `None` when a split half was constant and the correlation undefined.
    pub reliability: Option<f64>,
    pub congruence: Option<MetricsRow>,
}

/// Per-cohort aggregates over included respondents. The consistent-pairs
/// column is a percentage; every other column is on its metric's own scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub cohort: String,
    pub members: usize,
    pub included: usize,
    pub cosine: Option<GroupStats>,
    pub spearman: Option<GroupStats>,
    pub vmd: Option<GroupStats>,
    pub consistent_percent: Option<GroupStats>,
    pub consistency: Option<GroupStats>,
    pub reliability: Option<GroupStats>,
}

/// Permutation-test p-values for one cohort against the reference, one per
/// congruence column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub cohort: String,
    pub reference: String,
    pub cosine: Option<PermutationResult>,
    pub spearman: Option<PermutationResult>,
    pub vmd: Option<PermutationResult>,
    pub consistent_percent: Option<PermutationResult>,
}

/// The complete evaluation output; serializing this is the machine-readable
/// report bundle. Contains no timestamps, so identical inputs and seeds give
/// identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub scale: Scale,
    pub seed: u64,
    pub gate: GateThresholds,
    pub reference_cohort: String,
    pub respondents: Vec<RespondentReport>,
    pub cohorts: Vec<CohortReport>,
    pub comparisons: Vec<ComparisonReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("corpus has no layout for scale {0}")]
    MissingLayout(Scale),

    #[error("respondent {id}: source {questionnaire} transcript mismatch")]
    WrongQuestionnaire { id: String, questionnaire: Questionnaire },

    #[error("respondent {id}: {source}")]
    Validation {
        id: String,
        #[source]
        source: ValidationError,
    },

    #[error("respondent {id}: {source}")]
    Scoring {
        id: String,
        #[source]
        source: ScoringError,
    },

    #[error("respondent {id}: {source}")]
    Reliability {
        id: String,
        #[source]
        source: ReliabilityError,
    },

    #[error("respondent {id}: {source}")]
    Metrics {
        id: String,
        #[source]
        source: MetricsError,
    },

    #[error("comparing {cohort} against {reference} on {column}: {source}")]
    Comparison {
        cohort: String,
        reference: String,
        column: &'static str,
        #[source]
        source: MetricsError,
    },
}

/// A respondent's profiles after validation and aggregation, or the reason
/// there are none.
enum Resolved {
    Profiles { knowledge: ScoreProfile, behavior: ScoreProfile, validation: Option<ValidationPair> },
    NoValidResponses { questionnaire: Questionnaire, validation: ValidationPair },
}

fn resolve_profiles(
    input: &RespondentInput,
    refusals: &RefusalPatterns,
) -> Result<Resolved, PipelineError> {
    let id = &input.respondent_id;
    match &input.source {
        RespondentSource::Profiles { knowledge, behavior } => Ok(Resolved::Profiles {
            knowledge: knowledge.clone(),
            behavior: behavior.clone(),
            validation: None,
        }),
        RespondentSource::Transcripts { knowledge, behavior } => {
            for (transcript, expected) in [
                (knowledge, Questionnaire::Knowledge),
                (behavior, Questionnaire::Behavior),
            ] {
                if transcript.plan.questionnaire != expected {
                    return Err(PipelineError::WrongQuestionnaire {
                        id: id.clone(),
                        questionnaire: expected,
                    });
                }
            }

            let (k_runs, k_rejected) = filter_valid(knowledge, refusals)
                .map_err(|source| PipelineError::Validation { id: id.clone(), source })?;
            let (b_runs, b_rejected) = filter_valid(behavior, refusals)
                .map_err(|source| PipelineError::Validation { id: id.clone(), source })?;
            let validation = ValidationPair {
                knowledge: RunTally {
                    total: knowledge.runs.len(),
                    valid: k_runs.len(),
                    rejected: k_rejected,
                },
                behavior: RunTally {
                    total: behavior.runs.len(),
                    valid: b_runs.len(),
                    rejected: b_rejected,
                },
            };

            for (runs, questionnaire) in
                [(&k_runs, Questionnaire::Knowledge), (&b_runs, Questionnaire::Behavior)]
            {
                if runs.is_empty() {
                    return Ok(Resolved::NoValidResponses { questionnaire, validation });
                }
            }

            let scoring_err =
                |source| PipelineError::Scoring { id: id.clone(), source };
            Ok(Resolved::Profiles {
                knowledge: aggregate(id, Questionnaire::Knowledge, &k_runs).map_err(scoring_err)?,
                behavior: aggregate(id, Questionnaire::Behavior, &b_runs).map_err(scoring_err)?,
                validation: Some(validation),
            })
        }
    }
}

/// Screen one respondent and, if the gate passes, compute the congruence row.
fn evaluate_respondent(
    input: &RespondentInput,
    corpus: &Corpus,
    layout: &ScaleLayout,
    plan: &SplitPlan,
    options: &EvaluationOptions,
    warnings: &mut Vec<String>,
) -> Result<RespondentReport, PipelineError> {
    let id = input.respondent_id.clone();
    let (knowledge, behavior, validation) = match resolve_profiles(input, &options.refusals)? {
        Resolved::NoValidResponses { questionnaire, validation } => {
            warnings.push(format!("{id}: no valid {questionnaire} responses"));
            return Ok(RespondentReport {
                respondent_id: id,
                cohort: input.cohort.clone(),
                status: RespondentStatus::NoValidResponses { questionnaire },
                validation: Some(validation),
                consistency: None,
                reliability: None,
                congruence: None,
            });
        }
        Resolved::Profiles { knowledge, behavior, validation } => (knowledge, behavior, validation),
    };

    let reliability_err = |source| PipelineError::Reliability { id: id.clone(), source };
    let consistency_value = consistency(&knowledge, layout).map_err(reliability_err)?;
    let reliability_value = match split_half_reliability(&knowledge, plan) {
        Ok(value) => Some(value),
        Err(ReliabilityError::DegenerateHalf) => {
            warnings.push(format!("{id}: constant split half, reliability undefined"));
            None
        }
        Err(source) => return Err(reliability_err(source)),
    };

    // An undefined reliability cannot clear the gate: the screening exists to
    // certify response quality, and this respondent's cannot be certified.
    let passes = consistency_value >= options.gate.consistency
        && reliability_value.is_some_and(|r| r >= options.gate.reliability);
    if !passes {
        return Ok(RespondentReport {
            respondent_id: id,
            cohort: input.cohort.clone(),
            status: RespondentStatus::GatedOut,
            validation,
            consistency: Some(consistency_value),
            reliability: reliability_value,
            congruence: None,
        });
    }

    let (x, y) = paired_vectors(&knowledge, &behavior, corpus)
        .map_err(|source| PipelineError::Scoring { id: id.clone(), source })?;
    let row = metrics::congruence_row(&id, &x, &y)
        .map_err(|source| PipelineError::Metrics { id: id.clone(), source })?;
    if row.spearman.is_none() {
        warnings.push(format!("{id}: constant paired vector, Spearman undefined"));
    }

    Ok(RespondentReport {
        respondent_id: id,
        cohort: input.cohort.clone(),
        status: RespondentStatus::Included,
        validation,
        consistency: Some(consistency_value),
        reliability: reliability_value,
        congruence: Some(row),
    })
}

fn stats_of(values: &[f64]) -> Option<GroupStats> {
    if values.is_empty() {
        None
    } else {
        Some(metrics::group_stats(values).expect("non-empty"))
    }
}

/// The four congruence columns of a set of included respondents, as parallel
/// value lists (the Spearman list skips degenerate rows).
struct Columns {
    cosine: Vec<f64>,
    spearman: Vec<f64>,
    vmd: Vec<f64>,
    consistent_percent: Vec<f64>,
}

fn columns_of(rows: &[&RespondentReport]) -> Columns {
    let metrics: Vec<&MetricsRow> = rows.iter().filter_map(|r| r.congruence.as_ref()).collect();
    Columns {
        cosine: metrics.iter().map(|m| m.cosine).collect(),
        spearman: metrics.iter().filter_map(|m| m.spearman).collect(),
        vmd: metrics.iter().map(|m| m.vmd).collect(),
        consistent_percent: metrics.iter().map(|m| m.consistent_proportion * 100.0).collect(),
    }
}

fn compare_column(
    cohort: &str,
    reference: &str,
    column: &'static str,
    a: &[f64],
    b: &[f64],
    options: &EvaluationOptions,
    warnings: &mut Vec<String>,
) -> Result<Option<PermutationResult>, PipelineError> {
    if a.is_empty() || b.is_empty() {
        warnings.push(format!(
            "{cohort} vs {reference}: no values for {column}, comparison skipped"
        ));
        return Ok(None);
    }
    let attempt = metrics::permutation_test(a, b, Side::OneSidedObservedDirection, options.permutation);
    let result = match attempt {
        Ok(result) => result,
        Err(MetricsError::CapExceeded { .. }) => {
            // Too many assignments to enumerate: fall back to seeded
            // resampling so the report stays deterministic.
            warnings.push(format!(
                "{cohort} vs {reference}: exact enumeration over cap for {column}, \
                 using Monte-Carlo resampling"
            ));
            let mode = PermutationMode::MonteCarlo { resamples: 100_000, seed: options.seed };
            metrics::permutation_test(a, b, Side::OneSidedObservedDirection, mode).map_err(
                |source| PipelineError::Comparison {
                    cohort: cohort.to_owned(),
                    reference: reference.to_owned(),
                    column,
                    source,
                },
            )?
        }
        Err(source) => {
            return Err(PipelineError::Comparison {
                cohort: cohort.to_owned(),
                reference: reference.to_owned(),
                column,
                source,
            })
        }
    };
    Ok(Some(result))
}

/// Run the whole evaluation: validation, aggregation, reliability screening,
/// congruence metrics, cohort aggregates, and cohort-vs-reference permutation
/// tests. Respondent order follows the input; cohort order is first
/// appearance.
pub fn evaluate(
    corpus: &Corpus,
    inputs: &[RespondentInput],
    options: &EvaluationOptions,
) -> Result<EvaluationReport, PipelineError> {
    let layout =
        corpus.layout(options.scale).ok_or(PipelineError::MissingLayout(options.scale))?;
    let plan = split_plan(layout, options.seed);
    let mut warnings = Vec::new();

    let mut respondents = Vec::with_capacity(inputs.len());
    for input in inputs {
        respondents.push(evaluate_respondent(
            input,
            corpus,
            layout,
            &plan,
            options,
            &mut warnings,
        )?);
    }

    let mut cohort_names: Vec<String> = Vec::new();
    for report in &respondents {
        if !cohort_names.contains(&report.cohort) {
            cohort_names.push(report.cohort.clone());
        }
    }

    let mut cohorts = Vec::with_capacity(cohort_names.len());
    for name in &cohort_names {
        let members: Vec<&RespondentReport> =
            respondents.iter().filter(|r| &r.cohort == name).collect();
        let included: Vec<&RespondentReport> = members
            .iter()
            .copied()
            .filter(|r| r.status == RespondentStatus::Included)
            .collect();
        let columns = columns_of(&included);
        let consistency_values: Vec<f64> =
            included.iter().filter_map(|r| r.consistency).collect();
        let reliability_values: Vec<f64> =
            included.iter().filter_map(|r| r.reliability).collect();
        cohorts.push(CohortReport {
            cohort: name.clone(),
            members: members.len(),
            included: included.len(),
            cosine: stats_of(&columns.cosine),
            spearman: stats_of(&columns.spearman),
            vmd: stats_of(&columns.vmd),
            consistent_percent: stats_of(&columns.consistent_percent),
            consistency: stats_of(&consistency_values),
            reliability: stats_of(&reliability_values),
        });
    }

    let reference = &options.reference_cohort;
    let mut comparisons = Vec::new();
    if cohort_names.iter().any(|c| c == reference) {
        let reference_rows: Vec<&RespondentReport> = respondents
            .iter()
            .filter(|r| &r.cohort == reference && r.status == RespondentStatus::Included)
            .collect();
        let reference_columns = columns_of(&reference_rows);
        for name in cohort_names.iter().filter(|c| *c != reference) {
            let rows: Vec<&RespondentReport> = respondents
                .iter()
                .filter(|r| &r.cohort == name && r.status == RespondentStatus::Included)
                .collect();
            let columns = columns_of(&rows);
            comparisons.push(ComparisonReport {
                cohort: name.clone(),
                reference: reference.clone(),
                cosine: compare_column(
                    name, reference, "cosine",
                    &columns.cosine, &reference_columns.cosine,
                    options, &mut warnings,
                )?,
                spearman: compare_column(
                    name, reference, "spearman",
                    &columns.spearman, &reference_columns.spearman,
                    options, &mut warnings,
                )?,
                vmd: compare_column(
                    name, reference, "vmd",
                    &columns.vmd, &reference_columns.vmd,
                    options, &mut warnings,
                )?,
                consistent_percent: compare_column(
                    name, reference, "consistent-percent",
                    &columns.consistent_percent, &reference_columns.consistent_percent,
                    options, &mut warnings,
                )?,
            });
        }
    }

    Ok(EvaluationReport {
        scale: options.scale,
        seed: options.seed,
        gate: options.gate,
        reference_cohort: options.reference_cohort.clone(),
        respondents,
        cohorts,
        comparisons,
        warnings,
    })
}
