//! Relation labels, head rules and label inventories.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sentence::Sentence;

/// Label attaching a compound's head component to the Global node.
pub const COMPOUND_ROOT: &str = "CompoundRoot";

/// Label attaching a plain (non-compound) word to the Global node.
pub const GLOBAL_RELATION: &str = "GlobalRelation";

/// The four broad compound types of the coarse annotation level.
pub const COARSE_LABELS: [&str; 4] = ["Avyayībhāva", "Bahuvrīhi", "Tatpuruṣa", "Dvandva"];

#[derive(Clone, Copy, Debug, Eq, PartialEq, Hash)]
pub enum LabelKind {
    Coarse,
    Fine,
    Structural,
}

/// Annotation granularity of an inventory.
#[derive(Clone, Copy, Debug, Eq, PartialEq)]
pub enum LabelMode {
    Coarse,
    Fine,
}

impl LabelMode {
    fn kind(self) -> LabelKind {
        match self {
            LabelMode::Coarse => LabelKind::Coarse,
            LabelMode::Fine => LabelKind::Fine,
        }
    }
}

impl LabelMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelMode::Coarse => "coarse",
            LabelMode::Fine => "fine",
        }
    }
}

impl FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(LabelMode::Coarse),
            "fine" => Ok(LabelMode::Fine),
            other => Err(Error::Config(format!(
                "label mode must be `coarse` or `fine`, got `{}`",
                other
            ))),
        }
    }
}

/// Which child of an internal nesting node contributes the headword.
#[derive(Clone, Copy, Debug, Eq, PartialEq, Hash)]
pub enum HeadSide {
    Left,
    Right,
}

impl HeadSide {
    pub fn as_str(self) -> &'static str {
        match self {
            HeadSide::Left => "left",
            HeadSide::Right => "right",
        }
    }
}

impl FromStr for HeadSide {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(HeadSide::Left),
            "right" => Ok(HeadSide::Right),
            other => Err(Error::Label(format!(
                "malformed head rule `{}` (expected `left` or `right`)",
                other
            ))),
        }
    }
}

/// Head side used for labels without an explicit rule.
pub const DEFAULT_HEAD_SIDE: HeadSide = HeadSide::Right;

#[derive(Clone, Debug, Eq, PartialEq, Hash)]
pub struct Label {
    name: String,
    kind: LabelKind,
}

impl Label {
    pub fn new(name: impl Into<String>, kind: LabelKind) -> Result<Self> {
        let name = name.into();
        check_label_name(&name)?;
        Ok(Label { name, kind })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn is_structural(&self) -> bool {
        self.kind == LabelKind::Structural
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Returns `true` for the two reserved structural label names.
pub fn is_structural_name(name: &str) -> bool {
    name == COMPOUND_ROOT || name == GLOBAL_RELATION
}

pub(crate) fn check_label_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::Label("empty label name".to_owned()));
    }
    if name
        .chars()
        .any(|c| c.is_whitespace() || c == '<' || c == '>' || c == '-')
    {
        return Err(Error::Label(format!(
            "label `{}` contains whitespace or one of `< > -`",
            name
        )));
    }
    Ok(())
}

/// Per-label head sides.
#[derive(Clone, Debug, Default, Eq, PartialEq)]
pub struct HeadRules {
    sides: HashMap<String, HeadSide>,
}

impl HeadRules {
    pub fn new() -> Self {
        HeadRules::default()
    }

    pub fn insert(&mut self, label: impl Into<String>, side: HeadSide) {
        self.sides.insert(label.into(), side);
    }

    pub fn get(&self, label: &str) -> Option<HeadSide> {
        self.sides.get(label).copied()
    }

    /// Rules assigning the same side to every listed label.
    pub fn uniform<I, S>(labels: I, side: HeadSide) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        HeadRules {
            sides: labels.into_iter().map(|l| (l.into(), side)).collect(),
        }
    }
}

/// Ordered label set; a label's index is its position.
///
/// Span labels come first in file order, followed by `CompoundRoot` and
/// `GlobalRelation`.
#[derive(Clone, Debug, Eq, PartialEq)]
pub struct LabelInventory {
    labels: Vec<Label>,
    index: HashMap<String, usize>,
    rules: HeadRules,
}

impl LabelInventory {
    /// Builds an inventory from span labels and optional head sides.
    /// Labels without a side get [`DEFAULT_HEAD_SIDE`].
    pub fn new<I>(entries: I, kind: LabelKind) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Option<HeadSide>)>,
    {
        if kind == LabelKind::Structural {
            return Err(Error::Label(
                "span labels cannot be structural".to_owned(),
            ));
        }
        let mut labels = Vec::new();
        let mut index = HashMap::new();
        let mut rules = HeadRules::new();
        for (name, side) in entries {
            if is_structural_name(&name) {
                return Err(Error::Label(format!(
                    "`{}` is a reserved structural label",
                    name
                )));
            }
            let label = Label::new(name, kind)?;
            if index.contains_key(label.name()) {
                return Err(Error::Label(format!("duplicate label `{}`", label.name())));
            }
            rules.insert(label.name(), side.unwrap_or(DEFAULT_HEAD_SIDE));
            index.insert(label.name().to_owned(), labels.len());
            labels.push(label);
        }
        for name in [COMPOUND_ROOT, GLOBAL_RELATION] {
            index.insert(name.to_owned(), labels.len());
            labels.push(Label {
                name: name.to_owned(),
                kind: LabelKind::Structural,
            });
        }
        Ok(LabelInventory {
            labels,
            index,
            rules,
        })
    }

    /// Parses the inventory file format: one `label[<TAB>left|right]` per
    /// line, `#` comments and blank lines ignored.
    pub fn parse(text: &str, mode: LabelMode) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let name = fields.next().expect("non-empty line");
            let side = match fields.next() {
                Some(side) => Some(
                    side.parse::<HeadSide>()
                        .map_err(|e| Error::parse(lineno + 1, e.to_string()))?,
                ),
                None => None,
            };
            if fields.next().is_some() {
                return Err(Error::parse(
                    lineno + 1,
                    "malformed head rule column (too many fields)",
                ));
            }
            entries.push((name.to_owned(), side));
        }
        if entries.is_empty() {
            return Err(Error::Label("empty inventory".to_owned()));
        }
        if mode == LabelMode::Coarse {
            let names: BTreeSet<&str> = entries.iter().map(|(n, _)| n.as_str()).collect();
            let expected: BTreeSet<&str> = COARSE_LABELS.iter().copied().collect();
            if names != expected || entries.len() != COARSE_LABELS.len() {
                return Err(Error::Label(format!(
                    "a coarse inventory must contain exactly {}",
                    COARSE_LABELS.join(", ")
                )));
            }
        }
        LabelInventory::new(entries, mode.kind())
    }

    pub fn load(path: impl AsRef<Path>, mode: LabelMode) -> Result<Self> {
        LabelInventory::parse(&fs::read_to_string(path)?, mode)
    }

    /// Renders the span labels in file order, each with an explicit rule.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for label in self.span_labels() {
            let side = self.rules.get(label.name()).unwrap_or(DEFAULT_HEAD_SIDE);
            out.push_str(label.name());
            out.push('\t');
            out.push_str(side.as_str());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_file_string())?;
        Ok(())
    }

    /// Granularity of the span labels.
    pub fn mode(&self) -> LabelMode {
        match self.labels[0].kind {
            LabelKind::Coarse => LabelMode::Coarse,
            _ => LabelMode::Fine,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    /// Non-structural labels, in index order.
    pub fn span_labels(&self) -> &[Label] {
        &self.labels[..self.labels.len() - 2]
    }

    pub fn n_span_labels(&self) -> usize {
        self.labels.len() - 2
    }

    pub fn get(&self, idx: usize) -> Option<&Label> {
        self.labels.get(idx)
    }

    pub fn name(&self, idx: usize) -> &str {
        self.labels[idx].name()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn compound_root(&self) -> usize {
        self.labels.len() - 2
    }

    pub fn global_relation(&self) -> usize {
        self.labels.len() - 1
    }

    pub fn head_rules(&self) -> &HeadRules {
        &self.rules
    }

    pub fn head_side(&self, name: &str) -> Option<HeadSide> {
        self.rules.get(name)
    }

    /// Inventory of the distinct labels found in gold trees, sorted by name,
    /// with default head rules.
    pub fn collect_from_data(sentences: &[Sentence], mode: LabelMode) -> Result<Self> {
        let mut names = BTreeSet::new();
        for sentence in sentences {
            for compound in sentence.compounds() {
                if let Some(tree) = compound.gold_tree() {
                    for label in tree.labels() {
                        names.insert(label.to_owned());
                    }
                }
            }
        }
        LabelInventory::new(names.into_iter().map(|n| (n, None)), mode.kind())
    }
}
