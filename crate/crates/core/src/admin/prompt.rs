//! Prompt templates and questionnaire rendering.
//!
//! The five knowledge templates and the behavior forced-choice template ship
//! with fixed English wording; the Chinese counterparts are this crate's
//! translations and follow the same structure.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admin::Questionnaire;
use crate::corpus::{Language, PairedItem};

/// Identifier of one of the six bundled prompt templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptTemplateId {
    P16,
    MbtiM,
    Tda100,
    Bfi44Child,
    Nardi,
    BehaviorFc,
}

impl PromptTemplateId {
    pub const KNOWLEDGE: [PromptTemplateId; 5] = [
        PromptTemplateId::P16,
        PromptTemplateId::MbtiM,
        PromptTemplateId::Tda100,
        PromptTemplateId::Bfi44Child,
        PromptTemplateId::Nardi,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PromptTemplateId::P16 => "p16",
            PromptTemplateId::MbtiM => "mbti-m",
            PromptTemplateId::Tda100 => "tda100",
            PromptTemplateId::Bfi44Child => "bfi44-child",
            PromptTemplateId::Nardi => "nardi",
            PromptTemplateId::BehaviorFc => "behavior-fc",
        }
    }

    pub fn is_knowledge(&self) -> bool {
        *self != PromptTemplateId::BehaviorFc
    }

    /// The questionnaire this template administers.
    pub fn questionnaire(&self) -> Questionnaire {
        if self.is_knowledge() {
            Questionnaire::Knowledge
        } else {
            Questionnaire::Behavior
        }
    }
}

impl std::fmt::Display for PromptTemplateId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Instruction text of one template in both languages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: PromptTemplateId,
    pub text_en: String,
    pub text_zh: String,
}

const P16_EN: &str = "You can only reply to me with numbers from 1 to 7. Score each statement on a scale of 1 to 7 with 1 being disagree, 4 being not sure and 7 being agree.";
const P16_ZH: &str = "你只能用1到7的数字回答我。请按1到7的等级为每条陈述打分，1表示不同意，4表示不确定，7表示同意。";

const MBTI_M_EN: &str = "Read the following statements carefully and rate each one from 1 to 7, with 7 meaning that it applies to you completely, 1 meaning that it doesn't apply to you at all, and 4 meaning that you are not sure whether it applies to you or not.";
const MBTI_M_ZH: &str = "请仔细阅读以下陈述，并为每条陈述打1到7分；7表示完全符合你，1表示完全不符合你，4表示你不确定是否符合你。";

const TDA100_EN: &str = "Below are several descriptions that may or may not fit you. Please indicate how much you agree or disagree with that statement by giving a specific number from 1 to 7. 1 means you totally disagree with the statement, 4 means you are not sure, and 7 means you totally agree with the statement.";
const TDA100_ZH: &str = "下面是一些可能符合也可能不符合你的描述。请给出一个1到7之间的具体数字，表示你对该陈述的同意或不同意程度。1表示你完全不同意该陈述，4表示你不确定，7表示你完全同意该陈述。";

const BFI44_CHILD_EN: &str = "Here are several statements that may or may not describe what you are like. Write the number between 1 and 7 that shows how much you agree or disagree that it describes you. 1 means you disagree strongly that the statement applies to you, 4 means you are not sure, and 7 means you agree strongly with the statement.";
const BFI44_CHILD_ZH: &str = "这里有一些可能描述也可能不描述你的陈述。请写下一个1到7之间的数字，表示你同意或不同意它描述你的程度。1表示你强烈不同意该陈述符合你，4表示你不确定，7表示你强烈同意该陈述。";

const NARDI_EN: &str = "Please read carefully each of the phrases below. For each phrase: Rate how often you do skillfully what the phrase describes between 1 and 7. 1 means the phrase is not me, 4 means that you are not sure, and 7 means that the phrase is exactly me.";
const NARDI_ZH: &str = "请仔细阅读下面的每个短语。对每个短语：请用1到7之间的数字评价你熟练做到该短语所述内容的频率。1表示这个短语完全不是我，4表示你不确定，7表示这个短语正是我。";

const BEHAVIOR_FC_EN: &str = "Read the following scenarios with actions A and B carefully and rate each scenario in the range from 1 to 7. 1 means that action A applies to you completely in this scenario, 4 means that action A and action B equally apply (or not) to you in this scenario, and 7 means that action B applies to you completely in this scenario. You only need to give the number.";
const BEHAVIOR_FC_ZH: &str = "请仔细阅读以下带有行动A和行动B的情景，并在1到7的范围内为每个情景打分。1表示在该情景中行动A完全适用于你，4表示在该情景中行动A和行动B同等适用（或同等不适用）于你，7表示在该情景中行动B完全适用于你。你只需要给出数字。";

/// The bundled template for `id`.
pub fn template(id: PromptTemplateId) -> PromptTemplate {
    let (text_en, text_zh) = match id {
        PromptTemplateId::P16 => (P16_EN, P16_ZH),
        PromptTemplateId::MbtiM => (MBTI_M_EN, MBTI_M_ZH),
        PromptTemplateId::Tda100 => (TDA100_EN, TDA100_ZH),
        PromptTemplateId::Bfi44Child => (BFI44_CHILD_EN, BFI44_CHILD_ZH),
        PromptTemplateId::Nardi => (NARDI_EN, NARDI_ZH),
        PromptTemplateId::BehaviorFc => (BEHAVIOR_FC_EN, BEHAVIOR_FC_ZH),
    };
    PromptTemplate { id, text_en: text_en.to_owned(), text_zh: text_zh.to_owned() }
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("cannot render a prompt over zero items")]
    NoItems,

    #[error("template {template} has no {language} text")]
    MissingLanguage { template: PromptTemplateId, language: Language },

    #[error("template {template} does not administer the {questionnaire} questionnaire")]
    TemplateMismatch { template: PromptTemplateId, questionnaire: Questionnaire },
}

/// Render one full-questionnaire prompt: instruction text, blank line, then
/// the numbered items. Knowledge renders statements only; behavior renders
/// each situation with its two actions.
pub fn render_prompt(
    template: &PromptTemplate,
    items: &[&PairedItem],
    questionnaire: Questionnaire,
    language: Language,
) -> Result<String, PromptError> {
    if items.is_empty() {
        return Err(PromptError::NoItems);
    }
    if template.id.questionnaire() != questionnaire {
        return Err(PromptError::TemplateMismatch { template: template.id, questionnaire });
    }
    let instructions = match language {
        Language::En => &template.text_en,
        Language::Zh => &template.text_zh,
    };
    if instructions.trim().is_empty() {
        return Err(PromptError::MissingLanguage { template: template.id, language });
    }

    let mut out = String::with_capacity(instructions.len() + items.len() * 64);
    out.push_str(instructions);
    out.push('\n');
    for (k, item) in items.iter().enumerate() {
        match questionnaire {
            Questionnaire::Knowledge => {
                out.push('\n');
                out.push_str(&format!("{}. {}", k + 1, item.statement.text(language)));
            }
            Questionnaire::Behavior => {
                out.push('\n');
                out.push_str(&format!(
                    "{}. {}\nA. {}\nB. {}",
                    k + 1,
                    item.scenario.situation(language),
                    item.scenario.action_a(language),
                    item.scenario.action_b(language),
                ));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::bundled;

    #[test]
    fn tda100_knowledge_prompt_opens_with_its_instructions() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().take(1).collect();
        let text = render_prompt(
            &template(PromptTemplateId::Tda100),
            &items,
            Questionnaire::Knowledge,
            Language::En,
        )
        .unwrap();
        assert!(text.starts_with("Below are several descriptions that may or may not fit you."));
        assert!(text.contains("1. You waste your time."));
    }

    #[test]
    fn behavior_prompt_lists_both_actions() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().take(1).collect();
        let text = render_prompt(
            &template(PromptTemplateId::BehaviorFc),
            &items,
            Questionnaire::Behavior,
            Language::En,
        )
        .unwrap();
        assert!(text.starts_with("Read the following scenarios with actions A and B carefully"));
        assert!(text.contains("1. In everyday life:"));
        assert!(text.contains("A. you always use your time productively."));
        assert!(text.contains("B. you always spend time on meaningless activities."));
    }

    #[test]
    fn zero_items_is_a_precondition_error() {
        let err = render_prompt(
            &template(PromptTemplateId::P16),
            &[],
            Questionnaire::Knowledge,
            Language::En,
        )
        .unwrap_err();
        assert!(matches!(err, PromptError::NoItems));
    }

    #[test]
    fn knowledge_template_rejects_behavior_rendering() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().collect();
        let err = render_prompt(
            &template(PromptTemplateId::Nardi),
            &items,
            Questionnaire::Behavior,
            Language::En,
        )
        .unwrap_err();
        assert!(matches!(err, PromptError::TemplateMismatch { .. }));
    }

    #[test]
    fn chinese_rendering_uses_chinese_texts() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().take(1).collect();
        let text = render_prompt(
            &template(PromptTemplateId::BehaviorFc),
            &items,
            Questionnaire::Behavior,
            Language::Zh,
        )
        .unwrap();
        assert!(text.contains("1. 在日常生活中："));
        assert!(text.contains("A. 你总是有效地利用时间。"));
    }

    #[test]
    fn numbering_is_sequential_over_all_items() {
        let corpus = bundled::example_corpus();
        let items: Vec<_> = corpus.items().iter().collect();
        let text = render_prompt(
            &template(PromptTemplateId::MbtiM),
            &items,
            Questionnaire::Knowledge,
            Language::En,
        )
        .unwrap();
        for k in 1..=items.len() {
            assert!(text.contains(&format!("\n{k}. ")), "missing item number {k}");
        }
    }
}
