//! The five subcommand implementations. Each returns an [`Outcome`] mapped
//! to an exit code in `main`; configuration problems surface as `anyhow`
//! errors and exit with code 1.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use congruence_core::admin::{
    run_sessions, synthetic_respondent, Questionnaire, ReplayBackend, RespondentBackend,
    RunOptions, SessionPlan, SyntheticProfile, Transcript, TranscriptStore,
};
use congruence_core::admin::HttpBackend;
use congruence_core::corpus::{Corpus, Language, PairedItem, Scale};
use congruence_core::pipeline::{
    evaluate, EvaluationOptions, GateThresholds, RespondentInput, RespondentSource,
};
use congruence_core::report::{
    render_validation, write_reports, ReportFormat, ValidationRow,
};
use congruence_core::scoring::{aggregate, load_score_records, save_score_records, ScoreProfile};
use congruence_core::validation::{filter_valid, RefusalPatterns};

use crate::roster::{RespondentKind, Roster, RosterEntry};

/// What a successfully parsed and executed command reports back.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Some respondents ended up with incomplete transcripts.
    PartialAdministration,
    /// Evaluation ran but the reliability gate excluded every respondent.
    NothingPassedGate,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::PartialAdministration => 2,
            Outcome::NothingPassedGate => 3,
        }
    }
}

/// Shared inputs most subcommands start from.
pub struct CommonArgs {
    pub corpus: PathBuf,
    pub layout: Option<PathBuf>,
    pub roster: PathBuf,
    pub out: PathBuf,
}

impl CommonArgs {
    fn load_corpus(&self) -> Result<Corpus> {
        Corpus::load(&self.corpus, self.layout.as_deref())
            .with_context(|| format!("loading corpus {}", self.corpus.display()))
    }

    fn load_roster(&self) -> Result<Roster> {
        Roster::load(&self.roster)
    }

    fn transcripts_dir(&self) -> PathBuf {
        self.out.join("transcripts")
    }

    fn reports_dir(&self) -> PathBuf {
        self.out.join("reports")
    }
}

pub struct AdministerArgs {
    pub common: CommonArgs,
    pub seed: u64,
    pub repetitions: u32,
    pub language: Language,
    pub resume: bool,
}

fn session_plans(entry: &RosterEntry, seed: u64, repetitions: u32, language: Language) -> [SessionPlan; 2] {
    let mut knowledge = SessionPlan::knowledge(seed);
    let mut behavior = SessionPlan::behavior(seed);
    for plan in [&mut knowledge, &mut behavior] {
        plan.repetitions = repetitions;
        plan.language = language;
        plan.decoding = entry.decoding;
    }
    [knowledge, behavior]
}

fn build_backend(entry: &RosterEntry, corpus: &Corpus) -> Result<Box<dyn RespondentBackend>> {
    Ok(match &entry.kind {
        RespondentKind::Http { config } => Box::new(HttpBackend::new(config.clone())),
        RespondentKind::Synthetic { congruence, noise_sd, seed } => {
            Box::new(synthetic_respondent(
                SyntheticProfile { congruence: *congruence, noise_sd: *noise_sd, seed: *seed },
                corpus,
            ))
        }
        RespondentKind::Replay { store, source } => {
            let store = TranscriptStore::new(store.clone());
            Box::new(match source {
                Some(source) => ReplayBackend::for_respondent(store, source.clone()),
                None => ReplayBackend::new(store),
            })
        }
        RespondentKind::ScoreFile { .. } => {
            bail!("respondent {:?} is a score file; nothing to administer", entry.id)
        }
    })
}

/// Run both questionnaires for every administrable roster entry, persisting
/// transcripts under `<out>/transcripts`.
pub fn cmd_administer(args: &AdministerArgs) -> Result<Outcome> {
    let corpus = args.common.load_corpus()?;
    let roster = args.common.load_roster()?;
    let items: Vec<&PairedItem> = corpus.items().iter().collect();
    let store = TranscriptStore::new(args.common.transcripts_dir());

    let mut incomplete = Vec::new();
    for entry in roster.respondents.iter().filter(|e| e.kind.is_administrable()) {
        let backend = build_backend(entry, &corpus)?;
        let options = RunOptions {
            store: Some(&store),
            resume: args.resume,
            ..RunOptions::default()
        };
        for plan in session_plans(entry, args.seed, args.repetitions, args.language) {
            let transcript = run_sessions(&entry.id, &plan, &items, backend.as_ref(), &options)
                .with_context(|| format!("administering {} to {}", plan.questionnaire, entry.id))?;
            println!(
                "{}: {} {}/{} runs complete",
                entry.id,
                plan.questionnaire,
                transcript.runs.len(),
                plan.expected_runs(),
            );
            if !transcript.is_complete() {
                for failure in &transcript.failures {
                    eprintln!(
                        "{}: {} {}-{} failed after {} attempts: {}",
                        entry.id,
                        plan.questionnaire,
                        failure.prompt_id.as_str(),
                        failure.run_index,
                        failure.attempts,
                        failure.error,
                    );
                }
                incomplete.push(format!("{} ({})", entry.id, plan.questionnaire));
            }
        }
    }

    if incomplete.is_empty() {
        Ok(Outcome::Success)
    } else {
        eprintln!("incomplete sessions: {}", incomplete.join(", "));
        Ok(Outcome::PartialAdministration)
    }
}

/// Load both transcripts for an administrable entry, either from its replay
/// store or from the workspace store written by `administer`.
fn load_transcript_pair(
    entry: &RosterEntry,
    workspace_store: &TranscriptStore,
) -> Result<Option<(Transcript, Transcript)>> {
    let (store, source_id);
    match &entry.kind {
        RespondentKind::Replay { store: path, source } => {
            store = TranscriptStore::new(path.clone());
            source_id = source.clone().unwrap_or_else(|| entry.id.clone());
        }
        _ => {
            store = workspace_store.clone();
            source_id = entry.id.clone();
        }
    }
    let mut pair = Vec::new();
    for questionnaire in [Questionnaire::Knowledge, Questionnaire::Behavior] {
        match store.load_transcript(&source_id, questionnaire)? {
            Some(mut transcript) => {
                transcript.respondent_id = entry.id.clone();
                pair.push(transcript);
            }
            None => return Ok(None),
        }
    }
    let behavior = pair.pop().expect("two transcripts");
    let knowledge = pair.pop().expect("two transcripts");
    Ok(Some((knowledge, behavior)))
}

/// Build pipeline inputs for every roster entry, failing with a list of
/// respondents whose inputs are missing.
fn collect_inputs(roster: &Roster, args: &CommonArgs) -> Result<Vec<RespondentInput>> {
    let workspace_store = TranscriptStore::new(args.transcripts_dir());
    let mut inputs = Vec::new();
    let mut missing = Vec::new();
    // Score files are loaded once each even when several respondents share one.
    let mut score_cache: Vec<(PathBuf, Vec<ScoreProfile>)> = Vec::new();

    for entry in &roster.respondents {
        match &entry.kind {
            RespondentKind::ScoreFile { path } => {
                if !score_cache.iter().any(|(p, _)| p == path) {
                    let profiles = load_score_records(path)
                        .with_context(|| format!("loading score file {}", path.display()))?;
                    score_cache.push((path.clone(), profiles));
                }
                let profiles = &score_cache.iter().find(|(p, _)| p == path).expect("cached").1;
                let find = |questionnaire| {
                    profiles
                        .iter()
                        .find(|p| p.respondent_id == entry.id && p.questionnaire == questionnaire)
                        .cloned()
                };
                match (find(Questionnaire::Knowledge), find(Questionnaire::Behavior)) {
                    (Some(knowledge), Some(behavior)) => inputs.push(RespondentInput {
                        respondent_id: entry.id.clone(),
                        cohort: entry.cohort().to_owned(),
                        source: RespondentSource::Profiles { knowledge, behavior },
                    }),
                    _ => missing.push(format!("{} (score file {})", entry.id, path.display())),
                }
            }
            _ => match load_transcript_pair(entry, &workspace_store)? {
                Some((knowledge, behavior)) => inputs.push(RespondentInput {
                    respondent_id: entry.id.clone(),
                    cohort: entry.cohort().to_owned(),
                    source: RespondentSource::Transcripts { knowledge, behavior },
                }),
                None => missing.push(format!("{} (no stored transcripts)", entry.id)),
            },
        }
    }

    if !missing.is_empty() {
        bail!("missing inputs for: {}", missing.join(", "));
    }
    Ok(inputs)
}

pub struct EvaluateArgs {
    pub common: CommonArgs,
    pub seed: u64,
    pub formats: Vec<ReportFormat>,
    pub gate_consistency: f64,
    pub gate_reliability: f64,
}

/// Validate, aggregate, screen, and compare every roster entry, then write
/// the report files.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Outcome> {
    let corpus = args.common.load_corpus()?;
    let roster = args.common.load_roster()?;
    let inputs = collect_inputs(&roster, &args.common)?;
    if inputs.is_empty() {
        bail!("roster has no respondents to evaluate");
    }

    let options = EvaluationOptions {
        scale: Scale::Tda100,
        gate: GateThresholds {
            consistency: args.gate_consistency,
            reliability: args.gate_reliability,
        },
        seed: args.seed,
        refusals: RefusalPatterns::default(),
        ..EvaluationOptions::default()
    };
    let report = evaluate(&corpus, &inputs, &options)?;

    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    // The JSON bundle is always written so `report` can re-render later.
    let mut formats = args.formats.clone();
    if !formats.contains(&ReportFormat::Json) {
        formats.push(ReportFormat::Json);
    }
    let written =
        write_reports(&report, &args.common.reports_dir(), &formats).context("writing reports")?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    println!("{}", congruence_core::report::summary_line(&report));

    let included: usize = report.cohorts.iter().map(|c| c.included).sum();
    if included == 0 {
        eprintln!("reliability gate excluded every respondent");
        return Ok(Outcome::NothingPassedGate);
    }
    Ok(Outcome::Success)
}

pub struct ValidateArgs {
    pub common: CommonArgs,
    pub formats: Vec<ReportFormat>,
}

/// Classify every stored run of every administrable roster entry and write
/// the run-level validation report.
pub fn cmd_validate(args: &ValidateArgs) -> Result<Outcome> {
    // The corpus is loaded for early config-error reporting even though
    // validation itself only needs the transcripts.
    let _corpus = args.common.load_corpus()?;
    let roster = args.common.load_roster()?;
    let workspace_store = TranscriptStore::new(args.common.transcripts_dir());
    let refusals = RefusalPatterns::default();

    let mut rows: Vec<ValidationRow> = Vec::new();
    let mut missing = Vec::new();
    for entry in roster.respondents.iter().filter(|e| e.kind.is_administrable()) {
        let Some((knowledge, behavior)) = load_transcript_pair(entry, &workspace_store)? else {
            missing.push(entry.id.clone());
            continue;
        };
        for transcript in [knowledge, behavior] {
            let (_, rejected) = filter_valid(&transcript, &refusals)
                .with_context(|| format!("validating {}", entry.id))?;
            for run in &transcript.runs {
                let verdict = rejected
                    .iter()
                    .find(|v| v.prompt_id == run.prompt_id && v.run_index == run.run_index);
                rows.push(ValidationRow {
                    respondent_id: entry.id.clone(),
                    questionnaire: transcript.plan.questionnaire,
                    prompt_id: run.prompt_id,
                    run_index: run.run_index,
                    valid: verdict.is_none(),
                    reasons: verdict
                        .map(|v| v.reasons.iter().map(|r| r.as_str().to_owned()).collect())
                        .unwrap_or_default(),
                });
            }
        }
    }
    if !missing.is_empty() {
        bail!("missing transcripts for: {}", missing.join(", "));
    }

    let dir = args.common.reports_dir();
    std::fs::create_dir_all(&dir).context("creating report directory")?;
    for format in &args.formats {
        let path = dir.join(format!("validation.{}", format.extension()));
        std::fs::write(&path, render_validation(&rows, *format))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    let invalid = rows.iter().filter(|r| !r.valid).count();
    println!("{} runs checked, {} invalid", rows.len(), invalid);
    Ok(Outcome::Success)
}

pub struct ReportArgs {
    pub out: PathBuf,
    pub formats: Vec<ReportFormat>,
}

/// Re-render report tables from the JSON bundle written by `evaluate`,
/// without recomputing anything.
pub fn cmd_report(args: &ReportArgs) -> Result<Outcome> {
    let reports_dir = args.out.join("reports");
    let bundle_path = reports_dir.join("evaluation.json");
    let text = std::fs::read_to_string(&bundle_path)
        .with_context(|| format!("reading bundle {}", bundle_path.display()))?;
    let report = serde_json::from_str(&text)
        .with_context(|| format!("parsing bundle {}", bundle_path.display()))?;
    let written = write_reports(&report, &reports_dir, &args.formats).context("writing reports")?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(Outcome::Success)
}

/// What `synth` emits for its generated respondents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Transcripts in `<out>/store` plus replay roster entries.
    Transcripts,
    /// Aggregated profiles in `<out>/<prefix>scores.jsonl` plus score-file
    /// roster entries.
    ScoreFile,
}

pub struct SynthArgs {
    pub corpus: PathBuf,
    pub layout: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub count: u32,
    pub congruence: f64,
    pub noise_sd: f64,
    pub repetitions: u32,
    pub language: Language,
    pub kind: SynthKind,
    pub cohort: Option<String>,
    pub prefix: String,
}

/// Generate deterministic synthetic respondents and a roster that replays
/// them, appending to `<out>/roster.json` when it already exists.
pub fn cmd_synth(args: &SynthArgs) -> Result<Outcome> {
    let corpus = Corpus::load(&args.corpus, args.layout.as_deref())
        .with_context(|| format!("loading corpus {}", args.corpus.display()))?;
    let items: Vec<&PairedItem> = corpus.items().iter().collect();
    std::fs::create_dir_all(&args.out).context("creating output directory")?;

    let refusals = RefusalPatterns::default();
    let mut entries = Vec::new();
    let mut profiles = Vec::new();
    let scores_name = format!("{}scores.jsonl", args.prefix);

    for k in 0..args.count {
        let id = format!("{}{:02}", args.prefix, k);
        let respondent_seed = args.seed.wrapping_add(k as u64);
        let backend = synthetic_respondent(
            SyntheticProfile {
                congruence: args.congruence,
                noise_sd: args.noise_sd,
                seed: respondent_seed,
            },
            &corpus,
        );

        let mut knowledge = SessionPlan::knowledge(respondent_seed);
        let mut behavior = SessionPlan::behavior(respondent_seed);
        for plan in [&mut knowledge, &mut behavior] {
            plan.repetitions = args.repetitions;
            plan.language = args.language;
        }

        match args.kind {
            SynthKind::Transcripts => {
                let store = TranscriptStore::new(args.out.join("store"));
                let options = RunOptions { store: Some(&store), ..RunOptions::default() };
                for plan in [&knowledge, &behavior] {
                    let transcript = run_sessions(&id, plan, &items, &backend, &options)
                        .with_context(|| format!("generating {id}"))?;
                    anyhow::ensure!(
                        transcript.is_complete(),
                        "synthetic session for {id} incomplete"
                    );
                }
                entries.push(RosterEntry {
                    id: id.clone(),
                    cohort: args.cohort.clone(),
                    kind: RespondentKind::Replay { store: PathBuf::from("store"), source: None },
                    decoding: Default::default(),
                });
            }
            SynthKind::ScoreFile => {
                let options = RunOptions::default();
                for plan in [&knowledge, &behavior] {
                    let transcript = run_sessions(&id, plan, &items, &backend, &options)
                        .with_context(|| format!("generating {id}"))?;
                    let (valid, _) = filter_valid(&transcript, &refusals)?;
                    anyhow::ensure!(
                        !valid.is_empty(),
                        "synthetic respondent {id} produced no valid runs; pick another seed"
                    );
                    profiles.push(aggregate(&id, plan.questionnaire, &valid)?);
                }
                entries.push(RosterEntry {
                    id: id.clone(),
                    cohort: args.cohort.clone(),
                    kind: RespondentKind::ScoreFile { path: PathBuf::from(&scores_name) },
                    decoding: Default::default(),
                });
            }
        }
        println!("generated {id}");
    }

    if !profiles.is_empty() {
        let path = args.out.join(&scores_name);
        save_score_records(&path, &profiles)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }

    let roster_path = args.out.join("roster.json");
    let mut roster = if roster_path.is_file() {
        load_roster_raw(&roster_path)?
    } else {
        Roster::default()
    };
    let existing: BTreeSet<String> =
        roster.respondents.iter().map(|e| e.id.clone()).collect();
    for entry in entries {
        anyhow::ensure!(
            !existing.contains(&entry.id),
            "roster already has respondent {:?}; use a different --prefix",
            entry.id
        );
        roster.respondents.push(entry);
    }
    roster.save(&roster_path)?;
    println!("wrote {}", roster_path.display());
    Ok(Outcome::Success)
}

/// Parse a roster without resolving relative paths, so appending and saving
/// keeps entries relocatable.
fn load_roster_raw(path: &Path) -> Result<Roster> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading roster {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing roster {}", path.display()))
}
