//! `congruence` — administer paired personality questionnaires, screen the
//! responses, and report self-knowledge/behavior congruence.

mod commands;
mod roster;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use congruence_core::corpus::Language;
use congruence_core::report::ReportFormat;

use commands::{
    cmd_administer, cmd_evaluate, cmd_report, cmd_synth, cmd_validate, AdministerArgs, CommonArgs,
    EvaluateArgs, ReportArgs, SynthArgs, SynthKind, ValidateArgs,
};

fn parse_language(s: &str) -> Result<Language, String> {
    match s {
        "en" => Ok(Language::En),
        "zh" => Ok(Language::Zh),
        other => Err(format!("unknown language {other:?} (expected en or zh)")),
    }
}

fn parse_synth_kind(s: &str) -> Result<SynthKind, String> {
    match s {
        "transcripts" => Ok(SynthKind::Transcripts),
        "score-file" => Ok(SynthKind::ScoreFile),
        other => Err(format!("unknown kind {other:?} (expected transcripts or score-file)")),
    }
}

#[derive(Args)]
struct CommonFlags {
    /// Paired-item corpus (JSONL).
    #[arg(long)]
    corpus: PathBuf,
    /// Scale layout file; defaults to layouts bundled with the corpus.
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Respondent roster (JSON).
    #[arg(long)]
    roster: PathBuf,
    /// Workspace directory for transcripts and reports.
    #[arg(long)]
    out: PathBuf,
}

impl CommonFlags {
    fn into_common(self) -> CommonArgs {
        CommonArgs { corpus: self.corpus, layout: self.layout, roster: self.roster, out: self.out }
    }
}

#[derive(Args)]
struct FormatFlags {
    /// Report formats to write (repeatable or comma-separated).
    #[arg(long = "format", value_delimiter = ',', default_values = ["csv", "md", "json"])]
    formats: Vec<ReportFormat>,
}

#[derive(Parser)]
#[command(name = "congruence", version, about = "Self-knowledge/behavior congruence harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run both questionnaires for every roster respondent and store transcripts.
    Administer {
        #[command(flatten)]
        common: CommonFlags,
        /// Base seed for prompt ordering and synthetic backends.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Repeated runs per prompt template.
        #[arg(long, default_value_t = 10)]
        repetitions: u32,
        /// Questionnaire language.
        #[arg(long, value_parser = parse_language, default_value = "en")]
        language: Language,
        /// Skip runs already stored from a previous invocation.
        #[arg(long)]
        resume: bool,
    },
    /// Classify every stored run as valid or unreasonable and write the rows.
    Validate {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        format: FormatFlags,
    },
    /// Score, screen, and compare respondents; write the report tables.
    Evaluate {
        #[command(flatten)]
        common: CommonFlags,
        #[command(flatten)]
        format: FormatFlags,
        /// Seed for the evaluation (split-half assignment, resampling).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Minimum logical consistency to keep a respondent.
        #[arg(long, default_value_t = 0.49)]
        gate_consistency: f64,
        /// Minimum split-half reliability to keep a respondent.
        #[arg(long, default_value_t = 0.57)]
        gate_reliability: f64,
    },
    /// Re-render report tables from a saved evaluation bundle.
    Report {
        /// Workspace directory holding reports/evaluation.json.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        format: FormatFlags,
    },
    /// Generate synthetic respondents plus a roster that replays them.
    Synth {
        /// Paired-item corpus (JSONL).
        #[arg(long)]
        corpus: PathBuf,
        /// Scale layout file; defaults to layouts bundled with the corpus.
        #[arg(long)]
        layout: Option<PathBuf>,
        /// Directory receiving the generated store/score file and roster.
        #[arg(long)]
        out: PathBuf,
        /// Base seed; respondent k uses seed + k.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Repeated runs per prompt template.
        #[arg(long, default_value_t = 10)]
        repetitions: u32,
        /// Questionnaire language.
        #[arg(long, value_parser = parse_language, default_value = "en")]
        language: Language,
        /// How many respondents to generate.
        #[arg(long, default_value_t = 3)]
        count: u32,
        /// Probability a behavior answer mirrors the knowledge answer.
        #[arg(long, default_value_t = 1.0)]
        congruence: f64,
        /// Gaussian noise applied to every answer before clamping.
        #[arg(long, default_value_t = 0.0)]
        noise_sd: f64,
        /// What to emit: replayable transcripts or an aggregated score file.
        #[arg(long, value_parser = parse_synth_kind, default_value = "transcripts")]
        kind: SynthKind,
        /// Cohort label for the generated entries (default by kind).
        #[arg(long)]
        cohort: Option<String>,
        /// Respondent id / file-name prefix.
        #[arg(long, default_value = "synth-")]
        prefix: String,
    },
}

fn run(cli: Cli) -> anyhow::Result<commands::Outcome> {
    match cli.command {
        Command::Administer { common, seed, repetitions, language, resume } => {
            cmd_administer(&AdministerArgs {
                common: common.into_common(),
                seed,
                repetitions,
                language,
                resume,
            })
        }
        Command::Validate { common, format } => {
            cmd_validate(&ValidateArgs { common: common.into_common(), formats: format.formats })
        }
        Command::Evaluate { common, format, seed, gate_consistency, gate_reliability } => {
            cmd_evaluate(&EvaluateArgs {
                common: common.into_common(),
                seed,
                formats: format.formats,
                gate_consistency,
                gate_reliability,
            })
        }
        Command::Report { out, format } => cmd_report(&ReportArgs { out, formats: format.formats }),
        Command::Synth {
            corpus,
            layout,
            out,
            seed,
            repetitions,
            language,
            count,
            congruence,
            noise_sd,
            kind,
            cohort,
            prefix,
        } => cmd_synth(&SynthArgs {
            corpus,
            layout,
            out,
            seed,
            count,
            congruence,
            noise_sd,
            repetitions,
            language,
            kind,
            cohort,
            prefix,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(error) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}
