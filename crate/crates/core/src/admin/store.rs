//! On-disk transcript store.
//!
//! One JSON file per completed run at
//! `<root>/<respondent_id>/<questionnaire>/<prompt_id>-<run_index>`, plus a
//! `session.json` manifest per respondent/questionnaire. Run files hold the
//! verbatim raw reply (whole-form mode) and the carved per-item texts, so a
//! replayed session reproduces the original byte-for-byte.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admin::{
    Decoding, PromptTemplateId, Questionnaire, RunItem, SessionPlan, Transcript,
};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("transcript store I/O at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed transcript file {path}: {source}")]
    Malformed {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// Stored form of one completed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub prompt_id: PromptTemplateId,
    pub run_index: u32,
    /// Verbatim backend reply for whole-form runs; `None` in per-item mode,
    /// where each item's reply is its own `raw_text`.
    pub raw_reply: Option<String>,
    pub items: Vec<RunItem>,
    pub decoding: Decoding,
    pub recorded_at: DateTime<Utc>,
}

/// Session-level summary written next to the run files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionManifest {
    pub respondent_id: String,
    pub plan: SessionPlan,
    pub completed_runs: u32,
    pub failed_runs: u32,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

impl SessionManifest {
    pub fn from_transcript(transcript: &Transcript) -> Self {
        Self {
            respondent_id: transcript.respondent_id.clone(),
            plan: transcript.plan.clone(),
            completed_runs: transcript.runs.len() as u32,
            failed_runs: transcript.failures.len() as u32,
            started_at: transcript.started_at,
            finished_at: transcript.finished_at,
        }
    }
}

/// Root directory holding transcripts for any number of respondents.
#[derive(Debug, Clone)]
pub struct TranscriptStore {
    root: PathBuf,
}

impl TranscriptStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn session_dir(&self, respondent_id: &str, questionnaire: Questionnaire) -> PathBuf {
        self.root.join(respondent_id).join(questionnaire.as_str())
    }

    /// Path of one run file: `<respondent>/<questionnaire>/<prompt_id>-<run_index>`.
    pub fn run_path(
        &self,
        respondent_id: &str,
        questionnaire: Questionnaire,
        prompt_id: PromptTemplateId,
        run_index: u32,
    ) -> PathBuf {
        self.session_dir(respondent_id, questionnaire)
            .join(format!("{}-{}", prompt_id.as_str(), run_index))
    }

    pub fn manifest_path(&self, respondent_id: &str, questionnaire: Questionnaire) -> PathBuf {
        self.session_dir(respondent_id, questionnaire).join("session.json")
    }

    pub fn save_run(
        &self,
        respondent_id: &str,
        questionnaire: Questionnaire,
        record: &RunRecord,
    ) -> Result<(), StoreError> {
        let path = self.run_path(respondent_id, questionnaire, record.prompt_id, record.run_index);
        let json = serde_json::to_string_pretty(record).expect("run record serializes");
        write_atomic(&path, json.as_bytes())
    }

    /// Load one stored run, or `None` when it has not been recorded.
    pub fn load_run(
        &self,
        respondent_id: &str,
        questionnaire: Questionnaire,
        prompt_id: PromptTemplateId,
        run_index: u32,
    ) -> Result<Option<RunRecord>, StoreError> {
        let path = self.run_path(respondent_id, questionnaire, prompt_id, run_index);
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|source| StoreError::Malformed { path, source })
    }

    pub fn save_manifest(&self, manifest: &SessionManifest) -> Result<(), StoreError> {
        let path = self.manifest_path(&manifest.respondent_id, manifest.plan.questionnaire);
        let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
        write_atomic(&path, json.as_bytes())
    }

    pub fn load_manifest(
        &self,
        respondent_id: &str,
        questionnaire: Questionnaire,
    ) -> Result<Option<SessionManifest>, StoreError> {
        let path = self.manifest_path(respondent_id, questionnaire);
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(StoreError::Io { path, source }),
        };
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|source| StoreError::Malformed { path, source })
    }

    /// Rebuild a transcript from the stored manifest and run files. Failures
    /// are not persisted as runs, so the rebuilt transcript carries only the
    /// completed ones; `None` when no session was recorded.
    pub fn load_transcript(
        &self,
        respondent_id: &str,
        questionnaire: Questionnaire,
    ) -> Result<Option<Transcript>, StoreError> {
        let Some(manifest) = self.load_manifest(respondent_id, questionnaire)? else {
            return Ok(None);
        };
        let mut runs = Vec::new();
        for prompt_id in &manifest.plan.prompt_ids {
            for run_index in 0..manifest.plan.repetitions {
                if let Some(record) =
                    self.load_run(respondent_id, questionnaire, *prompt_id, run_index)?
                {
                    runs.push(crate::admin::RunResponse {
                        prompt_id: record.prompt_id,
                        run_index: record.run_index,
                        items: record.items,
                    });
                }
            }
        }
        Ok(Some(Transcript {
            respondent_id: manifest.respondent_id,
            plan: manifest.plan,
            runs,
            failures: Vec::new(),
            started_at: manifest.started_at,
            finished_at: manifest.finished_at,
        }))
    }

    /// Count of run files already stored for a planned session.
    pub fn completed_runs(
        &self,
        respondent_id: &str,
        plan: &SessionPlan,
    ) -> Result<usize, StoreError> {
        let mut completed = 0;
        for prompt_id in &plan.prompt_ids {
            for run_index in 0..plan.repetitions {
                if self
                    .load_run(respondent_id, plan.questionnaire, *prompt_id, run_index)?
                    .is_some()
                {
                    completed += 1;
                }
            }
        }
        Ok(completed)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let io_err = |source| StoreError::Io { path: path.to_owned(), source };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp).map_err(io_err)?;
        file.write_all(bytes).map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}
