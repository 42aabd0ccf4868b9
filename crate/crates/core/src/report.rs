//! Deterministic rendering of an [`EvaluationReport`] into tabular CSV,
//! Markdown, and a machine-readable JSON bundle. All numbers are formatted
//! with fixed rules so identical reports produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::admin::{PromptTemplateId, Questionnaire};
use crate::metrics::{GroupStats, PermutationResult};
use crate::pipeline::{EvaluationReport, RespondentReport, RespondentStatus};

/// Output formats for the tabular reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Csv,
    Json,
    Md,
}

impl ReportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Md => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "md" => Ok(ReportFormat::Md),
            other => Err(format!("unknown report format {other:?} (expected csv, json or md)")),
        }
    }
}

/// Two-decimal fixed formatting with `-0.00` normalized to `0.00`.
fn fmt2(value: f64) -> String {
    let s = format!("{value:.2}");
    if s == "-0.00" {
        "0.00".to_owned()
    } else {
        s
    }
}

/// Scientific notation with a two-decimal mantissa and a signed two-digit
/// exponent, e.g. `4.91e-05`.
fn fmt_sci(value: f64) -> String {
    let s = format!("{value:.2e}");
    let (mantissa, exponent) = s.split_once('e').expect("exponential format");
    let (sign, digits) = match exponent.strip_prefix('-') {
        Some(rest) => ('-', rest),
        None => ('+', exponent),
    };
    format!("{mantissa}e{sign}{digits:0>2}")
}

fn fmt_avg_sd(stats: &GroupStats, percent: bool) -> String {
    let suffix = if percent { "%" } else { "" };
    format!("{} ± {}{suffix}", fmt2(stats.mean), fmt2(stats.sd))
}

fn fmt_cell(value: Option<f64>) -> String {
    value.map(fmt2).unwrap_or_else(|| "n/a".to_owned())
}

fn fmt_percent_cell(value: Option<f64>) -> String {
    value.map(|v| format!("{}%", fmt2(v))).unwrap_or_else(|| "n/a".to_owned())
}

fn fmt_stats_cell(stats: Option<&GroupStats>, percent: bool) -> String {
    stats.map(|s| fmt_avg_sd(s, percent)).unwrap_or_else(|| "n/a".to_owned())
}

fn fmt_p_cell(result: Option<&PermutationResult>) -> String {
    result.map(|r| fmt_sci(r.p_value)).unwrap_or_else(|| "n/a".to_owned())
}

fn status_label(status: &RespondentStatus) -> String {
    match status {
        RespondentStatus::Included => "included".to_owned(),
        RespondentStatus::GatedOut => "gated-out".to_owned(),
        RespondentStatus::NoValidResponses { questionnaire } => {
            format!("no-valid-responses ({questionnaire})")
        }
    }
}

/// A rendered table: one header row plus body rows, emitted as CSV or
/// Markdown. Markdown can bold whole rows (used for group aggregates).
struct Table {
    header: Vec<String>,
    rows: Vec<(Vec<String>, bool)>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| (*h).to_owned()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, cells: Vec<String>) {
        self.rows.push((cells, false));
    }

    fn push_bold(&mut self, cells: Vec<String>) {
        self.rows.push((cells, true));
    }

    fn to_csv(&self) -> String {
        let mut out = String::new();
        let escape = |cell: &str| {
            if cell.contains([',', '"', '\n']) {
                format!("\"{}\"", cell.replace('"', "\"\""))
            } else {
                cell.to_owned()
            }
        };
        let write_row = |out: &mut String, cells: &[String]| {
            let line: Vec<String> = cells.iter().map(|c| escape(c)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        };
        write_row(&mut out, &self.header);
        for (cells, _) in &self.rows {
            write_row(&mut out, cells);
        }
        out
    }

    fn to_md(&self) -> String {
        let mut out = String::new();
        let write_row = |out: &mut String, cells: &[String]| {
            out.push_str("| ");
            out.push_str(&cells.join(" | "));
            out.push_str(" |\n");
        };
        write_row(&mut out, &self.header);
        let rule: Vec<String> = self.header.iter().map(|_| "---".to_owned()).collect();
        write_row(&mut out, &rule);
        for (cells, bold) in &self.rows {
            if *bold {
                let emphasized: Vec<String> = cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| if i == 0 || c == "n/a" {
                        c.clone()
                    } else {
                        format!("**{c}**")
                    })
                    .collect();
                write_row(&mut out, &emphasized);
            } else {
                write_row(&mut out, cells);
            }
        }
        out
    }
}

fn cohort_members<'a>(
    report: &'a EvaluationReport,
    cohort: &str,
) -> Vec<&'a RespondentReport> {
    report.respondents.iter().filter(|r| r.cohort == cohort).collect()
}

const CONGRUENCE_HEADER: [&str; 5] = [
    "Respondent",
    "Cosine Similarity",
    "Spearman Rank Correlation",
    "Value Mean Difference",
    "Proportion of Consistent Pairs",
];

/// The congruence table: per included respondent one row, per cohort an
/// AVG ± SD row, and MIN/MAX rows for the reference cohort.
fn congruence_table(report: &EvaluationReport) -> Table {
    let mut table = Table::new(&CONGRUENCE_HEADER);
    for cohort in &report.cohorts {
        for member in cohort_members(report, &cohort.cohort) {
            let Some(row) = member.congruence.as_ref() else { continue };
            table.push(vec![
                member.respondent_id.clone(),
                fmt2(row.cosine),
                fmt_cell(row.spearman),
                fmt2(row.vmd),
                fmt_percent_cell(Some(row.consistent_proportion * 100.0)),
            ]);
        }
        table.push_bold(vec![
            format!("{} (AVG ± SD)", cohort.cohort),
            fmt_stats_cell(cohort.cosine.as_ref(), false),
            fmt_stats_cell(cohort.spearman.as_ref(), false),
            fmt_stats_cell(cohort.vmd.as_ref(), false),
            fmt_stats_cell(cohort.consistent_percent.as_ref(), true),
        ]);
        if cohort.cohort == report.reference_cohort {
            table.push(vec![
                format!("{} (MIN)", cohort.cohort),
                fmt_cell(cohort.cosine.as_ref().map(|s| s.min)),
                fmt_cell(cohort.spearman.as_ref().map(|s| s.min)),
                // For difference-style columns the best value is the smallest,
                // but MIN/MAX report the numeric range, not a ranking.
                fmt_cell(cohort.vmd.as_ref().map(|s| s.min)),
                fmt_percent_cell(cohort.consistent_percent.as_ref().map(|s| s.min)),
            ]);
            table.push(vec![
                format!("{} (MAX)", cohort.cohort),
                fmt_cell(cohort.cosine.as_ref().map(|s| s.max)),
                fmt_cell(cohort.spearman.as_ref().map(|s| s.max)),
                fmt_cell(cohort.vmd.as_ref().map(|s| s.max)),
                fmt_percent_cell(cohort.consistent_percent.as_ref().map(|s| s.max)),
            ]);
        }
    }
    table
}

/// The screening table: every respondent's consistency, reliability, and
/// gate status, with per-cohort aggregates over the included ones.
fn reliability_table(report: &EvaluationReport) -> Table {
    let mut table = Table::new(&["Respondent", "Consistency", "Reliability", "Status"]);
    for cohort in &report.cohorts {
        for member in cohort_members(report, &cohort.cohort) {
            table.push(vec![
                member.respondent_id.clone(),
                fmt_cell(member.consistency),
                fmt_cell(member.reliability),
                status_label(&member.status),
            ]);
        }
        table.push_bold(vec![
            format!("{} (AVG ± SD)", cohort.cohort),
            fmt_stats_cell(cohort.consistency.as_ref(), false),
            fmt_stats_cell(cohort.reliability.as_ref(), false),
            format!("{}/{} included", cohort.included, cohort.members),
        ]);
        if cohort.cohort == report.reference_cohort {
            table.push(vec![
                format!("{} (MIN)", cohort.cohort),
                fmt_cell(cohort.consistency.as_ref().map(|s| s.min)),
                fmt_cell(cohort.reliability.as_ref().map(|s| s.min)),
                String::new(),
            ]);
            table.push(vec![
                format!("{} (MAX)", cohort.cohort),
                fmt_cell(cohort.consistency.as_ref().map(|s| s.max)),
                fmt_cell(cohort.reliability.as_ref().map(|s| s.max)),
                String::new(),
            ]);
        }
    }
    table
}

/// The significance table: one row per cohort-vs-reference comparison with a
/// permutation p-value per congruence column.
fn significance_table(report: &EvaluationReport) -> Table {
    let mut table = Table::new(&[
        "Comparison",
        "Cosine Similarity",
        "Spearman Rank Correlation",
        "Value Mean Difference",
        "Proportion of Consistent Pairs",
    ]);
    for comparison in &report.comparisons {
        table.push(vec![
            format!("{} vs {}", comparison.cohort, comparison.reference),
            fmt_p_cell(comparison.cosine.as_ref()),
            fmt_p_cell(comparison.spearman.as_ref()),
            fmt_p_cell(comparison.vmd.as_ref()),
            fmt_p_cell(comparison.consistent_percent.as_ref()),
        ]);
    }
    table
}

pub fn render_congruence(report: &EvaluationReport, format: ReportFormat) -> String {
    render_table(congruence_table(report), format)
}

pub fn render_reliability(report: &EvaluationReport, format: ReportFormat) -> String {
    render_table(reliability_table(report), format)
}

pub fn render_significance(report: &EvaluationReport, format: ReportFormat) -> String {
    render_table(significance_table(report), format)
}

fn render_table(table: Table, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => table.to_csv(),
        ReportFormat::Md => table.to_md(),
        ReportFormat::Json => panic!("tables render as csv or md; use render_json for the bundle"),
    }
}

/// The machine-readable bundle: the whole report as pretty-printed JSON.
pub fn render_json(report: &EvaluationReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// One run's validation outcome, for the run-level validation report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub respondent_id: String,
    pub questionnaire: Questionnaire,
    pub prompt_id: PromptTemplateId,
    pub run_index: u32,
    pub valid: bool,
    pub reasons: Vec<String>,
}

pub fn render_validation(rows: &[ValidationRow], format: ReportFormat) -> String {
    if format == ReportFormat::Json {
        let mut s = serde_json::to_string_pretty(rows).expect("rows serialize");
        s.push('\n');
        return s;
    }
    let mut table =
        Table::new(&["Respondent", "Questionnaire", "Prompt", "Run", "Valid", "Reasons"]);
    for row in rows {
        table.push(vec![
            row.respondent_id.clone(),
            row.questionnaire.to_string(),
            serde_plain_name(&row.prompt_id),
            row.run_index.to_string(),
            if row.valid { "yes".to_owned() } else { "no".to_owned() },
            row.reasons.join("; "),
        ]);
    }
    render_table(table, format)
}

/// Kebab-case name of a serde-serializable unit variant.
fn serde_plain_name<T: Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .expect("unit variant serializes to a string")
}

/// Write the three tables in the requested formats plus the JSON bundle when
/// asked. Returns the written paths in a fixed order.
pub fn write_reports(
    report: &EvaluationReport,
    dir: &Path,
    formats: &[ReportFormat],
) -> std::io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut write = |name: String, contents: String| -> std::io::Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
        Ok(())
    };
    for format in formats {
        match format {
            ReportFormat::Json => write("evaluation.json".to_owned(), render_json(report))?,
            ReportFormat::Csv | ReportFormat::Md => {
                let ext = format.extension();
                write(format!("congruence.{ext}"), render_congruence(report, *format))?;
                write(format!("reliability.{ext}"), render_reliability(report, *format))?;
                write(format!("significance.{ext}"), render_significance(report, *format))?;
            }
        }
    }
    Ok(written)
}

/// Human-oriented one-line summary of an evaluation, for CLI output.
pub fn summary_line(report: &EvaluationReport) -> String {
    let included: usize = report.cohorts.iter().map(|c| c.included).sum();
    let total: usize = report.cohorts.iter().map(|c| c.members).sum();
    let mut line = String::new();
    write!(
        line,
        "{included}/{total} respondents included across {} cohort(s), {} comparison(s), \
         {} warning(s)",
        report.cohorts.len(),
        report.comparisons.len(),
        report.warnings.len()
    )
    .expect("write to string");
    line
}
