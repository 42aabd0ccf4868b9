//! Bilingual paired questionnaire corpus: statement/scenario pairs plus
//! per-scale forward/reverse item layouts.
//!
//! The on-disk corpus format is UTF-8 JSON Lines, one paired item per record
//! with flat field names (`item_id`, `scale`, `statement_en`, ...,
//! `aligned_action`). Layouts live in a separate JSON file holding an array of
//! per-scale layouts, each listing ordered forward and reverse item ids per
//! dimension.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unique identifier of one statement/scenario pair.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(String);

impl ItemId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ItemId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// Source questionnaire a statement was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    Tda100,
    Bfi44,
    SixteenP,
}

impl Scale {
    pub const ALL: [Scale; 3] = [Scale::Tda100, Scale::Bfi44, Scale::SixteenP];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scale::Tda100 => "tda100",
            Scale::Bfi44 => "bfi44",
            Scale::SixteenP => "sixteen-p",
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Big Five assessment dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    Neuroticism,
    Extraversion,
    Openness,
    Agreeableness,
    Conscientiousness,
}

impl Dimension {
    pub const ALL: [Dimension; 5] = [
        Dimension::Neuroticism,
        Dimension::Extraversion,
        Dimension::Openness,
        Dimension::Agreeableness,
        Dimension::Conscientiousness,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Dimension::Neuroticism => "neuroticism",
            Dimension::Extraversion => "extraversion",
            Dimension::Openness => "openness",
            Dimension::Agreeableness => "agreeableness",
            Dimension::Conscientiousness => "conscientiousness",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scoring direction of a statement within its dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Forward,
    Reverse,
}

/// Which of the two contrasting actions embodies the statement.
///
/// This is carried per item and never assumed globally: corpus sources differ
/// on whether A or B is the aligned action, so the flag is explicit data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AlignedAction {
    A,
    B,
}

/// Corpus language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Language {
    En,
    Zh,
}

impl Language {
    pub fn as_str(&self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Zh => "zh",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One personality-knowledge statement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub item_id: ItemId,
    pub scale: Scale,
    pub dimension: Option<Dimension>,
    pub direction: Option<Direction>,
    pub text_en: String,
    pub text_zh: String,
}

impl Statement {
    pub fn text(&self, language: Language) -> &str {
        match language {
            Language::En => &self.text_en,
            Language::Zh => &self.text_zh,
        }
    }
}

/// The practical-scenario counterpart of a statement: a situation and two
/// contrasting actions A and B.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub item_id: ItemId,
    pub situation_en: String,
    pub situation_zh: String,
    pub action_a_en: String,
    pub action_a_zh: String,
    pub action_b_en: String,
    pub action_b_zh: String,
    pub aligned_action: AlignedAction,
}

impl Scenario {
    pub fn situation(&self, language: Language) -> &str {
        match language {
            Language::En => &self.situation_en,
            Language::Zh => &self.situation_zh,
        }
    }

    pub fn action_a(&self, language: Language) -> &str {
        match language {
            Language::En => &self.action_a_en,
            Language::Zh => &self.action_a_zh,
        }
    }

    pub fn action_b(&self, language: Language) -> &str {
        match language {
            Language::En => &self.action_b_en,
            Language::Zh => &self.action_b_zh,
        }
    }
}

/// The corpus atom: a statement plus its scenario counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedItem {
    pub statement: Statement,
    pub scenario: Scenario,
}

impl PairedItem {
    pub fn item_id(&self) -> &ItemId {
        &self.statement.item_id
    }
}

/// Ordered forward/reverse item ids of one dimension within a scale layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionLayout {
    pub dimension: Dimension,
    pub forward: Vec<ItemId>,
    pub reverse: Vec<ItemId>,
}

impl DimensionLayout {
    /// N_i: number of scored statements in this dimension.
    pub fn item_count(&self) -> usize {
        self.forward.len() + self.reverse.len()
    }

    /// Items in layout order: forward ids first, then reverse ids.
    pub fn ordered_ids(&self) -> impl Iterator<Item = &ItemId> {
        self.forward.iter().chain(self.reverse.iter())
    }

    pub fn direction_of(&self, id: &ItemId) -> Option<Direction> {
        if self.forward.contains(id) {
            Some(Direction::Forward)
        } else if self.reverse.contains(id) {
            Some(Direction::Reverse)
        } else {
            None
        }
    }
}

/// Per-dimension forward/reverse item assignment for one source scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleLayout {
    pub scale: Scale,
    pub dimensions: Vec<DimensionLayout>,
}

impl ScaleLayout {
    /// N_t: total number of scored statements across all dimensions.
    pub fn item_count(&self) -> usize {
        self.dimensions.iter().map(DimensionLayout::item_count).sum()
    }

    /// All item ids in layout order (dimension order, forward before reverse).
    pub fn ordered_ids(&self) -> impl Iterator<Item = &ItemId> {
        self.dimensions.iter().flat_map(DimensionLayout::ordered_ids)
    }

    /// Theoretical minimum proportion of direction-consistent items,
    /// `sum(ceil(N_i / 2)) / N_t`. Evaluates to 0.5125 for the bundled
    /// TDA-100 layout.
    pub fn p_min(&self) -> f64 {
        let total = self.item_count();
        assert!(total > 0, "p_min of an empty layout");
        let ceil_halves: usize = self.dimensions.iter().map(|d| d.item_count().div_ceil(2)).sum();
        ceil_halves as f64 / total as f64
    }

    /// Scoring direction of `id`, or `None` when the layout does not list it.
    pub fn direction_of(&self, id: &ItemId) -> Option<Direction> {
        self.dimensions.iter().find_map(|d| d.direction_of(id))
    }
}

/// Corpus-level metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusMetadata {
    pub version: String,
    pub languages: Vec<Language>,
}

impl Default for CorpusMetadata {
    fn default() -> Self {
        Self {
            version: "unversioned".to_owned(),
            languages: vec![Language::En, Language::Zh],
        }
    }
}

/// An immutable, invariant-checked collection of paired items and layouts.
///
/// Values are only constructed through [`Corpus::from_parts`] or
/// [`Corpus::load`], both of which reject any invariant violation, so holders
/// of a `Corpus` can rely on ids being unique and layouts resolving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    items: Vec<PairedItem>,
    layouts: Vec<ScaleLayout>,
    metadata: CorpusMetadata,
}

/// One invariant violation found in corpus data. Violations are data, not
/// errors: [`verify_corpus`] returns the full list and leaves the caller to
/// decide what to do with it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub item_id: Option<ItemId>,
    pub rule: ViolationRule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.item_id {
            Some(id) => write!(f, "{} [{}]: {}", self.rule, id, self.detail),
            None => write!(f, "{}: {}", self.rule, self.detail),
        }
    }
}

/// Named corpus invariant rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationRule {
    EmptyCorpus,
    DuplicateId,
    PairingBijection,
    MissingDimension,
    MissingDirection,
    EmptyText,
    IdenticalActions,
    LayoutUnresolvedItem,
    LayoutDuplicateItem,
    LayoutScaleMismatch,
}

impl ViolationRule {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationRule::EmptyCorpus => "empty-corpus",
            ViolationRule::DuplicateId => "duplicate-id",
            ViolationRule::PairingBijection => "pairing-bijection",
            ViolationRule::MissingDimension => "missing-dimension",
            ViolationRule::MissingDirection => "missing-direction",
            ViolationRule::EmptyText => "empty-text",
            ViolationRule::IdenticalActions => "identical-actions",
            ViolationRule::LayoutUnresolvedItem => "layout-unresolved-item",
            ViolationRule::LayoutDuplicateItem => "layout-duplicate-item",
            ViolationRule::LayoutScaleMismatch => "layout-scale-mismatch",
        }
    }
}

impl fmt::Display for ViolationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at {path}:{line}: {source}")]
    Parse {
        path: PathBuf,
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("corpus invariants violated: {}", format_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("no layout for scale {0} in corpus")]
    UnknownScale(Scale),
}

fn format_violations(violations: &[Violation]) -> String {
    let shown: Vec<String> = violations.iter().take(5).map(Violation::to_string).collect();
    if violations.len() > 5 {
        format!("{} (+{} more)", shown.join("; "), violations.len() - 5)
    } else {
        shown.join("; ")
    }
}

/// Flat on-disk record: one paired item per JSONL line.
///
/// Statement and scenario field groups are individually optional so that
/// half-complete records surface as pairing violations rather than opaque
/// parse errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct CorpusRecord {
    item_id: ItemId,
    scale: Scale,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dimension: Option<Dimension>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    direction: Option<Direction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    statement_en: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    statement_zh: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    situation_en: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    situation_zh: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_a_en: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_a_zh: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_b_en: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action_b_zh: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aligned_action: Option<AlignedAction>,
}

impl CorpusRecord {
    fn from_item(item: &PairedItem) -> Self {
        Self {
            item_id: item.statement.item_id.clone(),
            scale: item.statement.scale,
            dimension: item.statement.dimension,
            direction: item.statement.direction,
            statement_en: Some(item.statement.text_en.clone()),
            statement_zh: Some(item.statement.text_zh.clone()),
            situation_en: Some(item.scenario.situation_en.clone()),
            situation_zh: Some(item.scenario.situation_zh.clone()),
            action_a_en: Some(item.scenario.action_a_en.clone()),
            action_a_zh: Some(item.scenario.action_a_zh.clone()),
            action_b_en: Some(item.scenario.action_b_en.clone()),
            action_b_zh: Some(item.scenario.action_b_zh.clone()),
            aligned_action: Some(item.scenario.aligned_action),
        }
    }

    /// Split the record into its statement and scenario halves, reporting a
    /// pairing violation for whichever half is missing.
    fn into_item(self, violations: &mut Vec<Violation>) -> Option<PairedItem> {
        let id = self.item_id.clone();
        let has_statement = self.statement_en.is_some() || self.statement_zh.is_some();
        let has_scenario = self.situation_en.is_some()
            || self.situation_zh.is_some()
            || self.action_a_en.is_some()
            || self.action_b_en.is_some();

        if !has_statement || !has_scenario {
            let missing = if has_statement { "scenario" } else { "statement" };
            violations.push(Violation {
                item_id: Some(id),
                rule: ViolationRule::PairingBijection,
                detail: format!("record is missing its {missing} half"),
            });
            return None;
        }

        let aligned_action = match self.aligned_action {
            Some(a) => a,
            None => {
                violations.push(Violation {
                    item_id: Some(id),
                    rule: ViolationRule::PairingBijection,
                    detail: "scenario has no aligned_action flag".to_owned(),
                });
                return None;
            }
        };

        Some(PairedItem {
            statement: Statement {
                item_id: self.item_id.clone(),
                scale: self.scale,
                dimension: self.dimension,
                direction: self.direction,
                text_en: self.statement_en.unwrap_or_default(),
                text_zh: self.statement_zh.unwrap_or_default(),
            },
            scenario: Scenario {
                item_id: self.item_id,
                situation_en: self.situation_en.unwrap_or_default(),
                situation_zh: self.situation_zh.unwrap_or_default(),
                action_a_en: self.action_a_en.unwrap_or_default(),
                action_a_zh: self.action_a_zh.unwrap_or_default(),
                action_b_en: self.action_b_en.unwrap_or_default(),
                action_b_zh: self.action_b_zh.unwrap_or_default(),
                aligned_action,
            },
        })
    }
}

impl Corpus {
    /// Build a corpus from in-memory parts, rejecting any invariant violation.
    pub fn from_parts(
        items: Vec<PairedItem>,
        layouts: Vec<ScaleLayout>,
        metadata: CorpusMetadata,
    ) -> Result<Self, CorpusError> {
        let corpus = Self { items, layouts, metadata };
        let violations = corpus.verify();
        if violations.is_empty() {
            Ok(corpus)
        } else {
            Err(CorpusError::Invalid(violations))
        }
    }

    /// Load a corpus from a JSONL item file and an optional layout file.
    /// Items preserve file order.
    pub fn load(items_path: &Path, layouts_path: Option<&Path>) -> Result<Self, CorpusError> {
        let file = fs::File::open(items_path).map_err(|source| CorpusError::Io {
            path: items_path.to_owned(),
            source,
        })?;
        let reader = BufReader::new(file);

        let mut violations = Vec::new();
        let mut items = Vec::new();
        for (index, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| CorpusError::Io {
                path: items_path.to_owned(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record: CorpusRecord =
                serde_json::from_str(&line).map_err(|source| CorpusError::Parse {
                    path: items_path.to_owned(),
                    line: index + 1,
                    source,
                })?;
            if let Some(item) = record.into_item(&mut violations) {
                items.push(item);
            }
        }

        let layouts = match layouts_path {
            Some(path) => load_layouts(path)?,
            None => Vec::new(),
        };

        if !violations.is_empty() {
            return Err(CorpusError::Invalid(violations));
        }
        Self::from_parts(items, layouts, CorpusMetadata::default())
    }

    /// Write items as JSONL and, when a path is given, layouts as JSON.
    /// `load` of the written files reconstructs an equal corpus.
    pub fn save(&self, items_path: &Path, layouts_path: Option<&Path>) -> Result<(), CorpusError> {
        let mut out = Vec::new();
        for item in &self.items {
            let record = CorpusRecord::from_item(item);
            let line = serde_json::to_string(&record).expect("corpus record serializes");
            out.extend_from_slice(line.as_bytes());
            out.push(b'\n');
        }
        write_atomic(items_path, &out)?;

        if let Some(path) = layouts_path {
            let json =
                serde_json::to_string_pretty(&self.layouts).expect("layouts serialize");
            write_atomic(path, json.as_bytes())?;
        }
        Ok(())
    }

    /// Check every corpus invariant, returning all violations found.
    pub fn verify(&self) -> Vec<Violation> {
        let mut violations = Vec::new();

        if self.items.is_empty() {
            violations.push(Violation {
                item_id: None,
                rule: ViolationRule::EmptyCorpus,
                detail: "empty corpus".to_owned(),
            });
        }

        let mut seen: BTreeSet<&ItemId> = BTreeSet::new();
        for item in &self.items {
            let id = item.item_id();
            if !seen.insert(id) {
                violations.push(Violation {
                    item_id: Some(id.clone()),
                    rule: ViolationRule::DuplicateId,
                    detail: "item_id appears more than once".to_owned(),
                });
            }
            self.verify_item(item, &mut violations);
        }

        for layout in &self.layouts {
            self.verify_layout(layout, &mut violations);
        }

        violations
    }

    fn verify_item(&self, item: &PairedItem, violations: &mut Vec<Violation>) {
        let id = item.item_id().clone();
        let st = &item.statement;
        let sc = &item.scenario;

        if st.item_id != sc.item_id {
            violations.push(Violation {
                item_id: Some(id.clone()),
                rule: ViolationRule::PairingBijection,
                detail: format!("statement id differs from scenario id {}", sc.item_id),
            });
        }
        if st.scale == Scale::Tda100 {
            if st.dimension.is_none() {
                violations.push(Violation {
                    item_id: Some(id.clone()),
                    rule: ViolationRule::MissingDimension,
                    detail: "tda100 statement has no dimension".to_owned(),
                });
            }
            if st.direction.is_none() {
                violations.push(Violation {
                    item_id: Some(id.clone()),
                    rule: ViolationRule::MissingDirection,
                    detail: "tda100 statement has no direction".to_owned(),
                });
            }
        }
        let texts: [(&str, &str); 8] = [
            ("statement_en", &st.text_en),
            ("statement_zh", &st.text_zh),
            ("situation_en", &sc.situation_en),
            ("situation_zh", &sc.situation_zh),
            ("action_a_en", &sc.action_a_en),
            ("action_a_zh", &sc.action_a_zh),
            ("action_b_en", &sc.action_b_en),
            ("action_b_zh", &sc.action_b_zh),
        ];
        for (field, text) in texts {
            if text.trim().is_empty() {
                violations.push(Violation {
                    item_id: Some(id.clone()),
                    rule: ViolationRule::EmptyText,
                    detail: format!("{field} is empty"),
                });
            }
        }
        if sc.action_a_en == sc.action_b_en || sc.action_a_zh == sc.action_b_zh {
            violations.push(Violation {
                item_id: Some(id),
                rule: ViolationRule::IdenticalActions,
                detail: "action A and action B texts are identical".to_owned(),
            });
        }
    }

    fn verify_layout(&self, layout: &ScaleLayout, violations: &mut Vec<Violation>) {
        let mut listed: BTreeSet<&ItemId> = BTreeSet::new();
        for dim in &layout.dimensions {
            for id in dim.ordered_ids() {
                if !listed.insert(id) {
                    violations.push(Violation {
                        item_id: Some(id.clone()),
                        rule: ViolationRule::LayoutDuplicateItem,
                        detail: format!(
                            "item listed more than once in the {} layout",
                            layout.scale
                        ),
                    });
                }
                match self.item(id) {
                    None => violations.push(Violation {
                        item_id: Some(id.clone()),
                        rule: ViolationRule::LayoutUnresolvedItem,
                        detail: format!("{} layout lists an id not in the corpus", layout.scale),
                    }),
                    Some(item) if item.statement.scale != layout.scale => {
                        violations.push(Violation {
                            item_id: Some(id.clone()),
                            rule: ViolationRule::LayoutScaleMismatch,
                            detail: format!(
                                "item of scale {} listed in the {} layout",
                                item.statement.scale, layout.scale
                            ),
                        })
                    }
                    Some(_) => {}
                }
            }
        }
    }

    pub fn items(&self) -> &[PairedItem] {
        &self.items
    }

    pub fn layouts(&self) -> &[ScaleLayout] {
        &self.layouts
    }

    pub fn metadata(&self) -> &CorpusMetadata {
        &self.metadata
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item(&self, id: &ItemId) -> Option<&PairedItem> {
        // Corpora are at most a few hundred items; linear scan keeps the
        // struct free of redundant index state.
        self.items.iter().find(|item| item.item_id() == id)
    }

    pub fn layout(&self, scale: Scale) -> Option<&ScaleLayout> {
        self.layouts.iter().find(|l| l.scale == scale)
    }

    /// Items of `scale` in layout order (layout-listed items first, then any
    /// remaining matching items in file order). Errors when the corpus has no
    /// layout for the scale.
    pub fn items_for_scale(&self, scale: Scale) -> Result<Vec<&PairedItem>, CorpusError> {
        let layout = self.layout(scale).ok_or(CorpusError::UnknownScale(scale))?;

        let mut ordered: Vec<&PairedItem> = Vec::new();
        let mut taken: BTreeSet<&ItemId> = BTreeSet::new();
        for id in layout.ordered_ids() {
            if let Some(item) = self.item(id) {
                if taken.insert(item.item_id()) {
                    ordered.push(item);
                }
            }
        }
        for item in &self.items {
            if item.statement.scale == scale && !taken.contains(item.item_id()) {
                ordered.push(item);
            }
        }
        Ok(ordered)
    }
}

/// Standalone verification entry point; equivalent to [`Corpus::verify`].
pub fn verify_corpus(corpus: &Corpus) -> Vec<Violation> {
    corpus.verify()
}

/// Load a layout file: a JSON array of per-scale layouts.
pub fn load_layouts(path: &Path) -> Result<Vec<ScaleLayout>, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CorpusError::Parse {
        path: path.to_owned(),
        line: source.line(),
        source,
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.to_owned(), source };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut file = fs::File::create(&tmp).map_err(io_err)?;
        file.write_all(bytes).map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}

pub mod bundled {
    //! Corpus data compiled into the crate.

    use super::*;

    /// Example paired items (JSONL), all with action B aligned.
    pub const EXAMPLE_ITEMS_JSONL: &str = include_str!("../data/example_corpus.jsonl");

    /// Layouts for the example corpus (all three scales; the 16-personalities
    /// layout is present but empty).
    pub const EXAMPLE_LAYOUTS_JSON: &str = include_str!("../data/example_layouts.json");

    /// The TDA-100 forward/reverse layout: 44 forward and 36 reverse items
    /// across the five dimensions (14, 20, 14, 19, 13).
    pub const TDA100_LAYOUT_JSON: &str = include_str!("../data/tda100_layout.json");

    /// The bundled example corpus of eight paired items.
    pub fn example_corpus() -> Corpus {
        let mut violations = Vec::new();
        let items: Vec<PairedItem> = EXAMPLE_ITEMS_JSONL
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                let record: CorpusRecord =
                    serde_json::from_str(l).expect("bundled corpus record parses");
                record
                    .into_item(&mut violations)
                    .expect("bundled corpus record is a complete pair")
            })
            .collect();
        let layouts: Vec<ScaleLayout> =
            serde_json::from_str(EXAMPLE_LAYOUTS_JSON).expect("bundled layouts parse");
        Corpus::from_parts(
            items,
            layouts,
            CorpusMetadata { version: "examples-1".to_owned(), ..CorpusMetadata::default() },
        )
        .expect("bundled corpus is valid")
    }

    /// The bundled TDA-100 layout (80 items).
    pub fn tda100_layout() -> ScaleLayout {
        let layouts: Vec<ScaleLayout> =
            serde_json::from_str(TDA100_LAYOUT_JSON).expect("bundled tda100 layout parses");
        layouts.into_iter().next().expect("layout file holds one layout")
    }
}

/// Per-dimension (forward, reverse) counts of a layout, keyed by dimension.
pub fn layout_counts(layout: &ScaleLayout) -> BTreeMap<Dimension, (usize, usize)> {
    layout
        .dimensions
        .iter()
        .map(|d| (d.dimension, (d.forward.len(), d.reverse.len())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, scale: Scale, dim: Option<Dimension>, dir: Option<Direction>) -> PairedItem {
        PairedItem {
            statement: Statement {
                item_id: id.into(),
                scale,
                dimension: dim,
                direction: dir,
                text_en: format!("Statement {id} (en)."),
                text_zh: format!("陈述 {id}。"),
            },
            scenario: Scenario {
                item_id: id.into(),
                situation_en: format!("Situation {id} (en):"),
                situation_zh: format!("情境 {id}："),
                action_a_en: format!("you do the opposite of {id}."),
                action_a_zh: format!("你做与 {id} 相反的事。"),
                action_b_en: format!("you act in line with {id}."),
                action_b_zh: format!("你按照 {id} 行事。"),
                aligned_action: AlignedAction::B,
            },
        }
    }

    #[test]
    fn bundled_example_corpus_loads() {
        let corpus = bundled::example_corpus();
        assert_eq!(corpus.len(), 8);
        assert!(corpus
            .items()
            .iter()
            .all(|i| i.scenario.aligned_action == AlignedAction::B));
        assert!(corpus.verify().is_empty());
    }

    #[test]
    fn bundled_tda100_layout_matches_published_counts() {
        let layout = bundled::tda100_layout();
        let counts = layout_counts(&layout);
        assert_eq!(counts[&Dimension::Neuroticism], (9, 5));
        assert_eq!(counts[&Dimension::Extraversion], (10, 10));
        assert_eq!(counts[&Dimension::Openness], (9, 5));
        assert_eq!(counts[&Dimension::Agreeableness], (10, 9));
        assert_eq!(counts[&Dimension::Conscientiousness], (6, 7));
        assert_eq!(layout.item_count(), 80);
        let forward: usize = layout.dimensions.iter().map(|d| d.forward.len()).sum();
        let reverse: usize = layout.dimensions.iter().map(|d| d.reverse.len()).sum();
        assert_eq!((forward, reverse), (44, 36));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let err = Corpus::from_parts(vec![], vec![], CorpusMetadata::default()).unwrap_err();
        match err {
            CorpusError::Invalid(violations) => {
                assert_eq!(violations[0].rule, ViolationRule::EmptyCorpus);
            }
            other => panic!("expected invariant error, got {other}"),
        }
    }

    #[test]
    fn duplicate_id_is_reported() {
        let items = vec![item("dup", Scale::Bfi44, None, None), item("dup", Scale::Bfi44, None, None)];
        let corpus = Corpus { items, layouts: vec![], metadata: CorpusMetadata::default() };
        let violations = corpus.verify();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].rule, ViolationRule::DuplicateId);
        assert_eq!(violations[0].item_id, Some(ItemId::new("dup")));
    }

    #[test]
    fn tda100_item_without_direction_is_reported() {
        let items = vec![item("x1", Scale::Tda100, Some(Dimension::Openness), None)];
        let corpus = Corpus { items, layouts: vec![], metadata: CorpusMetadata::default() };
        let violations = corpus.verify();
        assert!(violations.iter().any(|v| v.rule == ViolationRule::MissingDirection));
        assert!(!violations.iter().any(|v| v.rule == ViolationRule::MissingDimension));
    }

    #[test]
    fn scenario_without_statement_is_a_pairing_error() {
        let line = r#"{"item_id":"lonely","scale":"bfi44","situation_en":"At work:","situation_zh":"工作中：","action_a_en":"a","action_a_zh":"甲","action_b_en":"b","action_b_zh":"乙","aligned_action":"B"}"#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("items.jsonl");
        fs::write(&path, format!("{line}\n")).unwrap();
        let err = Corpus::load(&path, None).unwrap_err();
        match err {
            CorpusError::Invalid(violations) => {
                assert_eq!(violations[0].rule, ViolationRule::PairingBijection);
                assert_eq!(violations[0].item_id, Some(ItemId::new("lonely")));
            }
            other => panic!("expected pairing violation, got {other}"),
        }
    }

    #[test]
    fn parse_error_carries_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("items.jsonl");
        let good = serde_json::to_string(&CorpusRecord::from_item(&item(
            "ok",
            Scale::Bfi44,
            None,
            None,
        )))
        .unwrap();
        fs::write(&path, format!("{good}\nnot-json\n")).unwrap();
        let err = Corpus::load(&path, None).unwrap_err();
        match err {
            CorpusError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn save_load_round_trip_preserves_corpus() {
        let corpus = bundled::example_corpus();
        let dir = tempfile::tempdir().unwrap();
        let items_path = dir.path().join("corpus.jsonl");
        let layouts_path = dir.path().join("layouts.json");
        corpus.save(&items_path, Some(&layouts_path)).unwrap();
        let reloaded = Corpus::load(&items_path, Some(&layouts_path)).unwrap();
        assert_eq!(reloaded.items(), corpus.items());
        assert_eq!(reloaded.layouts(), corpus.layouts());
    }

    #[test]
    fn items_for_scale_on_example_corpus() {
        let corpus = bundled::example_corpus();
        // The example set carries no 16-personalities items, but its layout
        // file still lists the scale, so the query answers empty not error.
        let sixteen = corpus.items_for_scale(Scale::SixteenP).unwrap();
        assert!(sixteen.is_empty());

        let tda = corpus.items_for_scale(Scale::Tda100).unwrap();
        let bfi = corpus.items_for_scale(Scale::Bfi44).unwrap();
        assert_eq!(tda.len() + bfi.len(), corpus.len());
    }

    #[test]
    fn items_for_scale_without_layout_is_unknown_scale() {
        let items = vec![item("solo", Scale::Bfi44, None, None)];
        let corpus = Corpus::from_parts(items, vec![], CorpusMetadata::default()).unwrap();
        match corpus.items_for_scale(Scale::Bfi44) {
            Err(CorpusError::UnknownScale(Scale::Bfi44)) => {}
            other => panic!("expected unknown-scale error, got {other:?}"),
        }
    }

    #[test]
    fn three_scale_corpus_partitions_by_scale() {
        let mut items = Vec::new();
        for i in 0..80 {
            items.push(item(
                &format!("t{i:02}"),
                Scale::Tda100,
                Some(Dimension::ALL[i % 5]),
                Some(if i % 2 == 0 { Direction::Forward } else { Direction::Reverse }),
            ));
        }
        for i in 0..40 {
            items.push(item(&format!("b{i:02}"), Scale::Bfi44, None, None));
        }
        for i in 0..60 {
            items.push(item(&format!("p{i:02}"), Scale::SixteenP, None, None));
        }
        let layouts = Scale::ALL
            .iter()
            .map(|&scale| ScaleLayout { scale, dimensions: vec![] })
            .collect();
        let corpus = Corpus::from_parts(items, layouts, CorpusMetadata::default()).unwrap();

        let sizes: Vec<usize> = Scale::ALL
            .iter()
            .map(|&s| corpus.items_for_scale(s).unwrap().len())
            .collect();
        assert_eq!(sizes, vec![80, 40, 60]);
        assert_eq!(sizes.iter().sum::<usize>(), corpus.len());
    }
}
