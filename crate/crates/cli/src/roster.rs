//! The respondent roster: who is being evaluated, which cohort they belong
//! to, and where their answers come from.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use congruence_core::admin::{BackendConfig, Decoding};

/// Where a respondent's answers come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum RespondentKind {
    /// A live chat-completions endpoint. Credentials are referenced by
    /// environment variable name only.
    Http {
        #[serde(flatten)]
        config: BackendConfig,
    },
    /// A deterministic simulated respondent.
    Synthetic { congruence: f64, noise_sd: f64, seed: u64 },
    /// Replay previously stored transcripts instead of calling anything.
    Replay {
        store: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<String>,
    },
    /// Already-aggregated score profiles (the human cohort path).
    ScoreFile { path: PathBuf },
}

impl RespondentKind {
    /// Whether `administer` has anything to do for this kind.
    pub fn is_administrable(&self) -> bool {
        !matches!(self, RespondentKind::ScoreFile { .. })
    }

    fn default_cohort(&self) -> &'static str {
        match self {
            RespondentKind::ScoreFile { .. } => "human",
            _ => "llm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub id: String,
    /// Defaults to "human" for score files and "llm" otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cohort: Option<String>,
    pub kind: RespondentKind,
    /// Decoding overrides applied to this respondent's sessions.
    #[serde(default, skip_serializing_if = "is_default_decoding")]
    pub decoding: Decoding,
}

fn is_default_decoding(d: &Decoding) -> bool {
    *d == Decoding::default()
}

impl RosterEntry {
    pub fn cohort(&self) -> &str {
        self.cohort.as_deref().unwrap_or_else(|| self.kind.default_cohort())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Roster {
    pub respondents: Vec<RosterEntry>,
}

impl Roster {
    /// Load a roster, check id uniqueness, and resolve relative paths
    /// against the roster file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading roster {}", path.display()))?;
        let mut roster: Roster = serde_json::from_str(&text)
            .with_context(|| format!("parsing roster {}", path.display()))?;

        let mut seen = BTreeSet::new();
        for entry in &roster.respondents {
            if !seen.insert(entry.id.clone()) {
                bail!("roster {}: duplicate respondent id {:?}", path.display(), entry.id);
            }
        }

        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for entry in &mut roster.respondents {
            match &mut entry.kind {
                RespondentKind::Replay { store, .. } => rebase(store, base),
                RespondentKind::ScoreFile { path } => rebase(path, base),
                RespondentKind::Http { .. } | RespondentKind::Synthetic { .. } => {}
            }
        }
        Ok(roster)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self).context("serializing roster")?;
        json.push('\n');
        fs::write(path, json).with_context(|| format!("writing roster {}", path.display()))
    }
}

fn rebase(path: &mut PathBuf, base: &Path) {
    if path.is_relative() {
        *path = base.join(&*path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roster_round_trips_and_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roster.json");
        let roster = Roster {
            respondents: vec![
                RosterEntry {
                    id: "model-a".into(),
                    cohort: None,
                    kind: RespondentKind::Replay { store: "store".into(), source: None },
                    decoding: Decoding::default(),
                },
                RosterEntry {
                    id: "hum-1".into(),
                    cohort: None,
                    kind: RespondentKind::ScoreFile { path: "humans.jsonl".into() },
                    decoding: Decoding::default(),
                },
            ],
        };
        roster.save(&path).unwrap();
        let loaded = Roster::load(&path).unwrap();
        assert_eq!(loaded.respondents[0].cohort(), "llm");
        assert_eq!(loaded.respondents[1].cohort(), "human");
        match &loaded.respondents[0].kind {
            RespondentKind::Replay { store, .. } => {
                assert_eq!(store, &dir.path().join("store"));
            }
            other => panic!("unexpected kind {other:?}"),
        }
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roster.json");
        fs::write(
            &path,
            r#"{"respondents": [
                {"id": "a", "kind": {"type": "synthetic", "congruence": 1.0, "noise_sd": 0.0, "seed": 1}},
                {"id": "a", "kind": {"type": "synthetic", "congruence": 0.5, "noise_sd": 0.1, "seed": 2}}
            ]}"#,
        )
        .unwrap();
        let err = Roster::load(&path).unwrap_err();
        assert!(err.to_string().contains("duplicate respondent id"));
    }

    #[test]
    fn http_entries_parse_with_flattened_backend_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roster.json");
        fs::write(
            &path,
            r#"{"respondents": [{
                "id": "model-a",
                "cohort": "llm",
                "kind": {
                    "type": "http",
                    "endpoint": "https://api.example.com/v1/chat/completions",
                    "model": "example-model",
                    "auth_env": "EXAMPLE_API_KEY"
                },
                "decoding": {"temperature": 0.7}
            }]}"#,
        )
        .unwrap();
        let roster = Roster::load(&path).unwrap();
        match &roster.respondents[0].kind {
            RespondentKind::Http { config } => {
                assert_eq!(config.model, "example-model");
                assert_eq!(config.auth_env.as_deref(), Some("EXAMPLE_API_KEY"));
                assert_eq!(config.timeout_secs, 120, "defaults apply");
            }
            other => panic!("unexpected kind {other:?}"),
        }
        assert_eq!(roster.respondents[0].decoding.temperature, Some(0.7));
    }
}
