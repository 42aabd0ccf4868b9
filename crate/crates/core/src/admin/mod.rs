//! Questionnaire administration: prompt rendering, repeated sessions against
//! pluggable respondent backends, and raw-transcript persistence.
//!
//! A session plan names a questionnaire, its prompt templates, a repetition
//! count and decoding settings. [`run_sessions`] executes every
//! (prompt, repetition) run — concurrently up to the backend's declared
//! parallelism — carves each raw reply into per-item texts, and assembles a
//! [`Transcript`]. Failed runs are retried and then recorded as failures,
//! never dropped. Raw reply bytes are preserved untouched; all normalization
//! is left to the validation stage.

mod backend;
mod prompt;
mod store;
mod synthetic;

pub use backend::{
    BackendConfig, BackendError, BackendRequest, HttpBackend, ReplayBackend, RespondentBackend,
};
pub use prompt::{render_prompt, template, PromptError, PromptTemplate, PromptTemplateId};
pub use store::{RunRecord, SessionManifest, StoreError, TranscriptStore};
pub use synthetic::{synthetic_respondent, SyntheticBackend, SyntheticProfile};

use std::collections::VecDeque;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ItemId, Language, PairedItem};

/// Which half of the paired corpus a session administers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Questionnaire {
    Knowledge,
    Behavior,
}

impl Questionnaire {
    pub fn as_str(&self) -> &'static str {
        match self {
            Questionnaire::Knowledge => "knowledge",
            Questionnaire::Behavior => "behavior",
        }
    }
}

impl std::fmt::Display for Questionnaire {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Decoding settings passed through to the backend and recorded in
/// transcripts. `None` means "backend default".
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Decoding {
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
}

/// How a run covers the questionnaire: one prompt carrying the whole form, or
/// one backend call per item for backends with short context windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdministrationMode {
    #[default]
    WholeForm,
    PerItem,
}

/// A full administration plan for one questionnaire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub questionnaire: Questionnaire,
    pub prompt_ids: Vec<PromptTemplateId>,
    pub repetitions: u32,
    pub language: Language,
    pub decoding: Decoding,
    pub seed: u64,
    #[serde(default)]
    pub mode: AdministrationMode,
}

impl SessionPlan {
    /// The standard knowledge plan: all five knowledge templates, ten
    /// repetitions each.
    pub fn knowledge(seed: u64) -> Self {
        Self {
            questionnaire: Questionnaire::Knowledge,
            prompt_ids: PromptTemplateId::KNOWLEDGE.to_vec(),
            repetitions: 10,
            language: Language::En,
            decoding: Decoding::default(),
            seed,
            mode: AdministrationMode::WholeForm,
        }
    }

    /// The standard behavior plan: the forced-choice template, ten
    /// repetitions.
    pub fn behavior(seed: u64) -> Self {
        Self {
            questionnaire: Questionnaire::Behavior,
            prompt_ids: vec![PromptTemplateId::BehaviorFc],
            repetitions: 10,
            language: Language::En,
            decoding: Decoding::default(),
            seed,
            mode: AdministrationMode::WholeForm,
        }
    }

    /// Total runs the plan prescribes: prompts × repetitions.
    pub fn expected_runs(&self) -> usize {
        self.prompt_ids.len() * self.repetitions as usize
    }

    pub fn validate(&self) -> Result<(), AdminError> {
        if self.repetitions == 0 {
            return Err(AdminError::InvalidPlan("repetitions must be at least 1".into()));
        }
        if self.prompt_ids.is_empty() {
            return Err(AdminError::InvalidPlan("plan lists no prompt templates".into()));
        }
        for id in &self.prompt_ids {
            if id.questionnaire() != self.questionnaire {
                return Err(AdminError::InvalidPlan(format!(
                    "template {id} cannot administer the {} questionnaire",
                    self.questionnaire
                )));
            }
        }
        Ok(())
    }
}

/// One item's share of a run: the raw reply text carved out for it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunItem {
    pub item_id: ItemId,
    pub raw_text: String,
}

/// One completed run: every administered item with its raw reply text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResponse {
    pub prompt_id: PromptTemplateId,
    pub run_index: u32,
    pub items: Vec<RunItem>,
}

/// A run that still had no reply after all retry attempts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFailure {
    pub prompt_id: PromptTemplateId,
    pub run_index: u32,
    pub attempts: u32,
    pub error: String,
}

/// Everything one respondent produced for one questionnaire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub respondent_id: String,
    pub plan: SessionPlan,
    pub runs: Vec<RunResponse>,
    pub failures: Vec<RunFailure>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

impl Transcript {
    /// True when every planned run completed.
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty() && self.runs.len() == self.plan.expected_runs()
    }
}

#[derive(Debug, Error)]
pub enum AdminError {
    #[error("invalid session plan: {0}")]
    InvalidPlan(String),

    #[error(transparent)]
    Prompt(#[from] PromptError),

    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Execution knobs for [`run_sessions`].
pub struct RunOptions<'a> {
    /// Attempts per run before it is recorded as failed.
    pub max_attempts: u32,
    /// Upper bound on in-flight runs; the backend's own declared parallelism
    /// is a second bound.
    pub parallelism: usize,
    /// When set, completed runs are persisted here as they arrive.
    pub store: Option<&'a TranscriptStore>,
    /// With a store: skip runs that are already persisted instead of
    /// re-asking the backend.
    pub resume: bool,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        Self { max_attempts: 3, parallelism: 4, store: None, resume: false }
    }
}

/// Carve a whole-form reply into per-item texts.
///
/// Three strategies, in order:
/// 1. Ordinal lines: lines opening with `<number>.`, `<number>)` or
///    `<number>:` start the text for that item; following lines up to the
///    next ordinal line are continuation. Items never mentioned get empty
///    text (and fail score parsing downstream).
/// 2. Positional: no ordinal lines, but exactly one non-empty line per item —
///    lines map to items in order.
/// 3. Fallback: every item receives the whole reply verbatim, leaving the
///    ambiguity to the validation stage instead of guessing here.
pub fn carve_reply(reply: &str, item_ids: &[ItemId]) -> Vec<RunItem> {
    let mut texts: Vec<Option<String>> = vec![None; item_ids.len()];

    let mut saw_ordinal = false;
    let mut current: Option<usize> = None;
    for line in reply.lines() {
        if let Some((ordinal, rest)) = split_ordinal(line) {
            saw_ordinal = true;
            current = (1..=item_ids.len()).contains(&ordinal).then(|| ordinal - 1);
            if let Some(slot) = current {
                push_line(&mut texts[slot], rest);
            }
            continue;
        }
        if let Some(slot) = current {
            if !line.trim().is_empty() {
                push_line(&mut texts[slot], line.trim());
            }
        }
    }

    if !saw_ordinal {
        let lines: Vec<&str> = reply.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if lines.len() == item_ids.len() {
            for (slot, line) in texts.iter_mut().zip(&lines) {
                *slot = Some((*line).to_owned());
            }
        } else {
            for slot in &mut texts {
                *slot = Some(reply.to_owned());
            }
        }
    }

    item_ids
        .iter()
        .zip(texts)
        .map(|(item_id, text)| RunItem {
            item_id: item_id.clone(),
            raw_text: text.unwrap_or_default(),
        })
        .collect()
}

/// `"12. rest"` → `(12, "rest")` for separators `.`, `)`, `:`. A bare number
/// line is not an ordinal — it is an answer.
fn split_ordinal(line: &str) -> Option<(usize, &str)> {
    let trimmed = line.trim_start();
    let digits: String = trimmed.chars().take_while(|c| c.is_ascii_digit()).collect();
    if digits.is_empty() {
        return None;
    }
    let rest = &trimmed[digits.len()..];
    let mut chars = rest.chars();
    match chars.next() {
        Some('.') | Some(')') | Some(':') => {
            Some((digits.parse().ok()?, chars.as_str().trim()))
        }
        _ => None,
    }
}

fn push_line(slot: &mut Option<String>, line: &str) {
    match slot {
        Some(text) => {
            if !line.is_empty() {
                text.push(' ');
                text.push_str(line);
            }
        }
        None => *slot = Some(line.to_owned()),
    }
}

struct Job {
    slot: usize,
    prompt_id: PromptTemplateId,
    run_index: u32,
}

/// Execute every run of `plan` for `respondent_id` against `backend`.
///
/// Runs execute concurrently up to `min(options.parallelism,
/// backend.max_parallelism())`; the transcript orders runs by (prompt
/// position, run index) no matter which finished first. Backend failures are
/// retried up to `options.max_attempts` and then recorded in
/// `Transcript::failures`.
pub fn run_sessions(
    respondent_id: &str,
    plan: &SessionPlan,
    items: &[&PairedItem],
    backend: &dyn RespondentBackend,
    options: &RunOptions,
) -> Result<Transcript, AdminError> {
    plan.validate()?;
    let started_at = Utc::now();

    let item_ids: Vec<ItemId> = items.iter().map(|i| i.statement.item_id.clone()).collect();

    // One rendered prompt per template (whole-form), or one per item
    // (per-item mode), shared across repetitions.
    let mut prompts: Vec<Vec<String>> = Vec::with_capacity(plan.prompt_ids.len());
    for id in &plan.prompt_ids {
        let tpl = template(*id);
        let rendered = match plan.mode {
            AdministrationMode::WholeForm => {
                vec![render_prompt(&tpl, items, plan.questionnaire, plan.language)?]
            }
            AdministrationMode::PerItem => items
                .iter()
                .map(|item| render_prompt(&tpl, &[*item], plan.questionnaire, plan.language))
                .collect::<Result<_, _>>()?,
        };
        prompts.push(rendered);
    }

    let total = plan.expected_runs();
    let slots: Vec<Mutex<Option<Result<RunResponse, RunFailure>>>> =
        (0..total).map(|_| Mutex::new(None)).collect();

    let mut queue = VecDeque::new();
    for (p, prompt_id) in plan.prompt_ids.iter().enumerate() {
        for run_index in 0..plan.repetitions {
            let slot = p * plan.repetitions as usize + run_index as usize;
            if options.resume {
                if let Some(store) = options.store {
                    if let Some(record) =
                        store.load_run(respondent_id, plan.questionnaire, *prompt_id, run_index)?
                    {
                        *slots[slot].lock().unwrap() = Some(Ok(RunResponse {
                            prompt_id: *prompt_id,
                            run_index,
                            items: record.items,
                        }));
                        continue;
                    }
                }
            }
            queue.push_back(Job { slot, prompt_id: *prompt_id, run_index });
        }
    }

    let queue = Mutex::new(queue);
    let workers = options.parallelism.min(backend.max_parallelism()).max(1);
    let store_failures: Mutex<Vec<StoreError>> = Mutex::new(Vec::new());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let job = match queue.lock().unwrap().pop_front() {
                    Some(job) => job,
                    None => break,
                };
                let outcome = execute_job(
                    respondent_id,
                    plan,
                    &job,
                    &prompts,
                    &item_ids,
                    backend,
                    options,
                );
                if let Ok((response, raw_reply)) = &outcome {
                    if let Some(store) = options.store {
                        let record = RunRecord {
                            prompt_id: response.prompt_id,
                            run_index: response.run_index,
                            raw_reply: raw_reply.clone(),
                            items: response.items.clone(),
                            decoding: plan.decoding,
                            recorded_at: Utc::now(),
                        };
                        if let Err(e) =
                            store.save_run(respondent_id, plan.questionnaire, &record)
                        {
                            store_failures.lock().unwrap().push(e);
                        }
                    }
                }
                *slots[job.slot].lock().unwrap() = Some(outcome.map(|(r, _)| r));
            });
        }
    });

    if let Some(e) = store_failures.into_inner().unwrap().into_iter().next() {
        return Err(e.into());
    }

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for slot in slots {
        match slot.into_inner().unwrap().expect("every slot filled") {
            Ok(response) => runs.push(response),
            Err(failure) => failures.push(failure),
        }
    }

    let transcript = Transcript {
        respondent_id: respondent_id.to_owned(),
        plan: plan.clone(),
        runs,
        failures,
        started_at,
        finished_at: Utc::now(),
    };
    if let Some(store) = options.store {
        store.save_manifest(&SessionManifest::from_transcript(&transcript))?;
    }
    Ok(transcript)
}

fn execute_job(
    respondent_id: &str,
    plan: &SessionPlan,
    job: &Job,
    prompts: &[Vec<String>],
    item_ids: &[ItemId],
    backend: &dyn RespondentBackend,
    options: &RunOptions,
) -> Result<(RunResponse, Option<String>), RunFailure> {
    let prompt_index = plan
        .prompt_ids
        .iter()
        .position(|id| *id == job.prompt_id)
        .expect("job prompt comes from the plan");
    let rendered = &prompts[prompt_index];

    let mut last_error = String::new();
    let mut attempts = 0;
    while attempts < options.max_attempts {
        attempts += 1;
        match run_once(respondent_id, plan, job, rendered, item_ids, backend) {
            Ok((items, raw_reply)) => {
                return Ok((
                    RunResponse { prompt_id: job.prompt_id, run_index: job.run_index, items },
                    raw_reply,
                ))
            }
            Err(e) => {
                let retriable = e.is_retriable();
                last_error = e.to_string();
                if !retriable {
                    break;
                }
                if attempts < options.max_attempts {
                    std::thread::sleep(std::time::Duration::from_millis(50));
                }
            }
        }
    }
    Err(RunFailure {
        prompt_id: job.prompt_id,
        run_index: job.run_index,
        attempts,
        error: last_error,
    })
}

/// One attempt at one run. Whole-form mode returns the verbatim backend reply
/// alongside the carved items so the store can keep it byte-exact.
fn run_once(
    respondent_id: &str,
    plan: &SessionPlan,
    job: &Job,
    rendered: &[String],
    item_ids: &[ItemId],
    backend: &dyn RespondentBackend,
) -> Result<(Vec<RunItem>, Option<String>), BackendError> {
    match plan.mode {
        AdministrationMode::WholeForm => {
            let request = BackendRequest {
                respondent_id,
                questionnaire: plan.questionnaire,
                prompt_id: job.prompt_id,
                run_index: job.run_index,
                language: plan.language,
                decoding: plan.decoding,
                prompt_text: &rendered[0],
                item_ids,
            };
            let reply = backend.answer(&request)?;
            let items = carve_reply(&reply, item_ids);
            Ok((items, Some(reply)))
        }
        AdministrationMode::PerItem => {
            let mut items = Vec::with_capacity(item_ids.len());
            for (k, item_id) in item_ids.iter().enumerate() {
                let request = BackendRequest {
                    respondent_id,
                    questionnaire: plan.questionnaire,
                    prompt_id: job.prompt_id,
                    run_index: job.run_index,
                    language: plan.language,
                    decoding: plan.decoding,
                    prompt_text: &rendered[k],
                    item_ids: std::slice::from_ref(item_id),
                };
                let reply = backend.answer(&request)?;
                items.push(RunItem { item_id: item_id.clone(), raw_text: reply });
            }
            Ok((items, None))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::bundled;
    use std::sync::atomic::{AtomicU32, Ordering};

    fn ids(n: usize) -> Vec<ItemId> {
        (1..=n).map(|i| ItemId::new(format!("i{i:02}"))).collect()
    }

    #[test]
    fn carve_numbered_reply_with_continuations() {
        let reply = "1. 5\n2. I would say 6\nbecause it fits me\n3) 2\n";
        let carved = carve_reply(reply, &ids(3));
        assert_eq!(carved[0].raw_text, "5");
        assert_eq!(carved[1].raw_text, "I would say 6 because it fits me");
        assert_eq!(carved[2].raw_text, "2");
    }

    #[test]
    fn carve_bare_number_lines_positionally() {
        let reply = "5\n3\n7\n";
        let carved = carve_reply(reply, &ids(3));
        let texts: Vec<&str> = carved.iter().map(|c| c.raw_text.as_str()).collect();
        assert_eq!(texts, vec!["5", "3", "7"]);
    }

    #[test]
    fn carve_unstructured_reply_duplicates_whole_text() {
        let reply = "I cannot map these to your numbering scheme, sorry.";
        let carved = carve_reply(reply, &ids(3));
        assert!(carved.iter().all(|c| c.raw_text == reply));
    }

    #[test]
    fn carve_leaves_missing_ordinals_empty() {
        let reply = "1. 5\n3. 4\n";
        let carved = carve_reply(reply, &ids(3));
        assert_eq!(carved[0].raw_text, "5");
        assert_eq!(carved[1].raw_text, "");
        assert_eq!(carved[2].raw_text, "4");
    }

    #[test]
    fn carve_ignores_out_of_range_ordinals() {
        let reply = "1. 5\n2. 6\n9. 7\n";
        let carved = carve_reply(reply, &ids(2));
        assert_eq!(carved[0].raw_text, "5");
        assert_eq!(carved[1].raw_text, "6");
    }

    #[test]
    fn plan_validation_catches_mismatched_templates() {
        let mut plan = SessionPlan::knowledge(1);
        plan.prompt_ids.push(PromptTemplateId::BehaviorFc);
        assert!(matches!(plan.validate(), Err(AdminError::InvalidPlan(_))));

        let mut plan = SessionPlan::behavior(1);
        plan.repetitions = 0;
        assert!(matches!(plan.validate(), Err(AdminError::InvalidPlan(_))));
    }

    /// Backend that answers every item "4" and counts invocations.
    struct CountingBackend {
        calls: AtomicU32,
    }

    impl RespondentBackend for CountingBackend {
        fn answer(&self, request: &BackendRequest) -> Result<String, BackendError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            let lines: Vec<String> =
                (1..=request.item_ids.len()).map(|k| format!("{k}. 4")).collect();
            Ok(lines.join("\n"))
        }

        fn max_parallelism(&self) -> usize {
            4
        }
    }

    #[test]
    fn run_count_law_prompts_times_repetitions() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().collect();
        let mut plan = SessionPlan::knowledge(7);
        plan.repetitions = 3;
        let backend = CountingBackend { calls: AtomicU32::new(0) };
        let transcript =
            run_sessions("resp", &plan, &items, &backend, &RunOptions::default()).unwrap();
        assert_eq!(transcript.runs.len(), 15);
        assert!(transcript.failures.is_empty());
        assert!(transcript.is_complete());
        assert_eq!(backend.calls.load(Ordering::SeqCst), 15);
        // Ordered by (prompt position, run index) regardless of completion order.
        let keys: Vec<(PromptTemplateId, u32)> =
            transcript.runs.iter().map(|r| (r.prompt_id, r.run_index)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by_key(|(p, r)| {
            (plan.prompt_ids.iter().position(|id| id == p).unwrap(), *r)
        });
        assert_eq!(keys, sorted);
    }

    #[test]
    fn every_run_covers_every_item_once() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().collect();
        let plan = SessionPlan::behavior(3);
        let backend = CountingBackend { calls: AtomicU32::new(0) };
        let transcript =
            run_sessions("resp", &plan, &items, &backend, &RunOptions::default()).unwrap();
        for run in &transcript.runs {
            let run_ids: Vec<&ItemId> = run.items.iter().map(|i| &i.item_id).collect();
            let expected: Vec<&ItemId> =
                items.iter().map(|i| &i.statement.item_id).collect();
            assert_eq!(run_ids, expected);
        }
    }

    /// Backend that fails a fixed number of times before succeeding.
    struct FlakyBackend {
        calls: AtomicU32,
        failures_before_success: u32,
    }

    impl RespondentBackend for FlakyBackend {
        fn answer(&self, request: &BackendRequest) -> Result<String, BackendError> {
            let call = self.calls.fetch_add(1, Ordering::SeqCst);
            if call < self.failures_before_success {
                return Err(BackendError::Network("connection reset".into()));
            }
            Ok((1..=request.item_ids.len())
                .map(|k| format!("{k}. 5"))
                .collect::<Vec<_>>()
                .join("\n"))
        }
    }

    #[test]
    fn retriable_failures_are_retried_to_success() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().collect();
        let mut plan = SessionPlan::behavior(5);
        plan.repetitions = 1;
        let backend = FlakyBackend { calls: AtomicU32::new(0), failures_before_success: 2 };
        let transcript =
            run_sessions("resp", &plan, &items, &backend, &RunOptions::default()).unwrap();
        assert!(transcript.is_complete());
        assert_eq!(backend.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn exhausted_retries_record_a_failure() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().collect();
        let mut plan = SessionPlan::behavior(5);
        plan.repetitions = 2;
        let backend = FlakyBackend { calls: AtomicU32::new(0), failures_before_success: 100 };
        let transcript =
            run_sessions("resp", &plan, &items, &backend, &RunOptions::default()).unwrap();
        assert!(!transcript.is_complete());
        assert_eq!(transcript.runs.len(), 0);
        assert_eq!(transcript.failures.len(), 2);
        assert_eq!(transcript.failures[0].attempts, 3);
        assert!(transcript.failures[0].error.contains("connection reset"));
    }

    #[test]
    fn resumed_rerun_makes_no_new_backend_calls() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().collect();
        let mut plan = SessionPlan::behavior(11);
        plan.repetitions = 4;
        let dir = tempfile::tempdir().unwrap();
        let store = TranscriptStore::new(dir.path());
        let options = RunOptions { store: Some(&store), resume: true, ..RunOptions::default() };

        let backend = CountingBackend { calls: AtomicU32::new(0) };
        let first = run_sessions("resp", &plan, &items, &backend, &options).unwrap();
        assert!(first.is_complete());
        assert_eq!(backend.calls.load(Ordering::SeqCst), 4);

        let rerun = run_sessions("resp", &plan, &items, &backend, &options).unwrap();
        assert!(rerun.is_complete());
        assert_eq!(backend.calls.load(Ordering::SeqCst), 4, "resume must skip stored runs");
        assert_eq!(rerun.runs.len(), first.runs.len());
    }

    #[test]
    fn per_item_mode_calls_backend_once_per_item() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().collect();
        let mut plan = SessionPlan::knowledge(9);
        plan.prompt_ids = vec![PromptTemplateId::Tda100];
        plan.repetitions = 2;
        plan.mode = AdministrationMode::PerItem;
        let backend = CountingBackend { calls: AtomicU32::new(0) };
        let transcript =
            run_sessions("resp", &plan, &items, &backend, &RunOptions::default()).unwrap();
        assert_eq!(transcript.runs.len(), 2);
        assert_eq!(backend.calls.load(Ordering::SeqCst), 2 * items.len() as u32);
        assert_eq!(transcript.runs[0].items.len(), items.len());
    }
}
