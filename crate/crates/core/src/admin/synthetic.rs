//! Deterministic synthetic respondents.
//!
//! A synthetic respondent carries a latent 1–7 agreement level per statement,
//! derived purely from its seed: each dimension gets a trait level drawn away
//! from the scale midpoint (so direction-coherent dimensions survive the
//! consistency screen), each item adds a small jitter, and reverse-keyed
//! statements see the reflected value. Knowledge runs answer with the rounded
//! latent plus optional noise; behavior runs answer with the aligned
//! transform of the same latent with probability `congruence`, else a uniform
//! score. Identical seeds yield identical transcripts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::admin::{BackendError, BackendRequest, Questionnaire, RespondentBackend};
use crate::corpus::{AlignedAction, Corpus, Direction, PairedItem};

/// Behavioral parameters of a synthetic respondent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticProfile {
    /// Probability that a behavior answer tracks the knowledge latent.
    pub congruence: f64,
    /// Standard deviation of per-run scoring noise; 0 disables it.
    pub noise_sd: f64,
    pub seed: u64,
}

/// A [`RespondentBackend`] producing numbered-line replies from a
/// [`SyntheticProfile`].
pub struct SyntheticBackend {
    profile: SyntheticProfile,
    corpus: Corpus,
}

/// Build a synthetic respondent over `corpus`.
pub fn synthetic_respondent(profile: SyntheticProfile, corpus: &Corpus) -> SyntheticBackend {
    SyntheticBackend { profile, corpus: corpus.clone() }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn keyed_rng(seed: u64, key: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E3779B97F4A7C15) ^ fnv1a(key.as_bytes()))
}

/// Round to the nearest whole score, halves away from zero, clamped to 1–7.
fn to_score(value: f64) -> i64 {
    value.round().clamp(1.0, 7.0) as i64
}

impl SyntheticBackend {
    pub fn profile(&self) -> SyntheticProfile {
        self.profile
    }

    /// Trait level of the item's dimension (items without a dimension get
    /// their own): uniform over [1.5, 3.4] ∪ [4.6, 6.5], keeping clear of the
    /// midpoint so dimensions stay direction-coherent.
    fn trait_level(&self, item: &PairedItem) -> f64 {
        let key = match item.statement.dimension {
            Some(d) => format!("trait/{d}"),
            None => format!("trait/item/{}", item.statement.item_id),
        };
        let mut rng = keyed_rng(self.profile.seed, &key);
        let side_high = rng.random::<bool>();
        let offset = rng.random::<f64>() * 1.9;
        if side_high {
            4.6 + offset
        } else {
            1.5 + offset
        }
    }

    /// Latent statement-space agreement for one item, before any run noise.
    /// Reverse-keyed statements reflect the trait level about the midpoint.
    pub fn latent_statement_score(&self, item: &PairedItem) -> f64 {
        let mut rng =
            keyed_rng(self.profile.seed, &format!("jitter/{}", item.statement.item_id));
        let jitter = Normal::new(0.0, 0.6).unwrap().sample(&mut rng);
        let level = (self.trait_level(item) + jitter).clamp(1.0, 7.0);
        match item.statement.direction.unwrap_or(Direction::Forward) {
            Direction::Forward => level,
            Direction::Reverse => 8.0 - level,
        }
    }

    fn noisy(&self, value: f64, rng: &mut ChaCha8Rng) -> i64 {
        let noise = if self.profile.noise_sd > 0.0 {
            Normal::new(0.0, self.profile.noise_sd).unwrap().sample(rng)
        } else {
            0.0
        };
        to_score(value + noise)
    }
}

impl RespondentBackend for SyntheticBackend {
    fn answer(&self, request: &BackendRequest) -> Result<String, BackendError> {
        let run_key = format!(
            "run/{}/{}/{}",
            request.questionnaire, request.prompt_id, request.run_index
        );
        let mut rng = keyed_rng(self.profile.seed, &run_key);

        let mut lines = Vec::with_capacity(request.item_ids.len());
        for (k, item_id) in request.item_ids.iter().enumerate() {
            let item = self.corpus.item(item_id).ok_or_else(|| {
                BackendError::Other(format!("synthetic corpus has no item {item_id}"))
            })?;
            let score = match request.questionnaire {
                Questionnaire::Knowledge => {
                    self.noisy(self.latent_statement_score(item), &mut rng)
                }
                Questionnaire::Behavior => {
                    let congruent = rng.random::<f64>() < self.profile.congruence;
                    let aligned_target = if congruent {
                        self.latent_statement_score(item)
                    } else {
                        rng.random_range(1..=7) as f64
                    };
                    let aligned_score = self.noisy(aligned_target, &mut rng);
                    // Stored in scenario space: a 7 must mean "wholly the
                    // aligned action's opposite end" when action A embodies
                    // the statement.
                    match item.scenario.aligned_action {
                        AlignedAction::B => aligned_score,
                        AlignedAction::A => 8 - aligned_score,
                    }
                }
            };
            lines.push(format!("{}. {}", k + 1, score));
        }
        Ok(lines.join("\n"))
    }

    fn max_parallelism(&self) -> usize {
        8
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admin::{run_sessions, RunOptions, SessionPlan};
    use crate::corpus::bundled;

    fn backend(congruence: f64, noise_sd: f64, seed: u64) -> SyntheticBackend {
        let corpus = bundled::example_corpus();
        synthetic_respondent(SyntheticProfile { congruence, noise_sd, seed }, &corpus)
    }

    #[test]
    fn same_seed_means_identical_transcripts() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().collect();
        let mut plan = SessionPlan::knowledge(0);
        plan.repetitions = 2;
        let options = RunOptions::default();
        let a = run_sessions("s", &plan, &items, &backend(0.8, 0.5, 42), &options).unwrap();
        let b = run_sessions("s", &plan, &items, &backend(0.8, 0.5, 42), &options).unwrap();
        assert_eq!(a.runs, b.runs);

        let c = run_sessions("s", &plan, &items, &backend(0.8, 0.5, 43), &options).unwrap();
        assert_ne!(a.runs, c.runs);
    }

    #[test]
    fn latents_stay_in_scale() {
        let corpus = bundled::example_corpus();
        for seed in 0..20 {
            let b = backend(1.0, 0.0, seed);
            for item in corpus.items() {
                let latent = b.latent_statement_score(item);
                assert!((1.0..=7.0).contains(&latent), "latent {latent} out of scale");
            }
        }
    }

    #[test]
    fn full_congruence_no_noise_aligns_behavior_with_knowledge() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().collect();
        let b = backend(1.0, 0.0, 7);

        let mut k_plan = SessionPlan::knowledge(0);
        k_plan.repetitions = 1;
        let knowledge =
            run_sessions("s", &k_plan, &items, &b, &RunOptions::default()).unwrap();
        let mut b_plan = SessionPlan::behavior(0);
        b_plan.repetitions = 1;
        let behavior = run_sessions("s", &b_plan, &items, &b, &RunOptions::default()).unwrap();

        for (item, (k_item, b_item)) in items
            .iter()
            .zip(knowledge.runs[0].items.iter().zip(&behavior.runs[0].items))
        {
            let k: i64 = k_item.raw_text.parse().unwrap();
            let raw: i64 = b_item.raw_text.parse().unwrap();
            let aligned = match item.scenario.aligned_action {
                AlignedAction::B => raw,
                AlignedAction::A => 8 - raw,
            };
            assert_eq!(k, aligned, "item {} diverged", item.statement.item_id);
        }
    }

    #[test]
    fn knowledge_answers_are_stable_across_prompts_when_noiseless() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().collect();
        let b = backend(1.0, 0.0, 99);
        let mut plan = SessionPlan::knowledge(0);
        plan.repetitions = 2;
        let transcript = run_sessions("s", &plan, &items, &b, &RunOptions::default()).unwrap();
        let first: Vec<&str> =
            transcript.runs[0].items.iter().map(|i| i.raw_text.as_str()).collect();
        for run in &transcript.runs[1..] {
            let texts: Vec<&str> = run.items.iter().map(|i| i.raw_text.as_str()).collect();
            assert_eq!(texts, first);
        }
    }

    #[test]
    fn noise_varies_runs_but_not_reruns() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().collect();
        let b = backend(1.0, 1.5, 4);
        let mut plan = SessionPlan::knowledge(0);
        plan.repetitions = 6;
        let transcript = run_sessions("s", &plan, &items, &b, &RunOptions::default()).unwrap();
        // With sd 1.5 over 8 items × 30 runs, at least one run must differ
        // from the first.
        let first = &transcript.runs[0].items;
        assert!(transcript.runs[1..].iter().any(|r| &r.items != first));
    }
}
