//! Annotated corpus records.
//!
//! A record is a token line, with compounds written `<comp1-comp2-…>`,
//! followed by one bracketed nesting per compound in order; a blank line
//! ends the record. Records without annotation lines are unannotated
//! input.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sentence::{Item, Sentence};
use crate::tree::{parse_nesting, render_nesting};

#[derive(Clone, Copy, Debug, Eq, PartialEq)]
pub enum ContextMode {
    WithContext,
    /// Every compound becomes its own sentence.
    WithoutContext,
}

impl FromStr for ContextMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "with_context" => Ok(ContextMode::WithContext),
            "without_context" => Ok(ContextMode::WithoutContext),
            other => Err(Error::Config(format!("unknown context mode `{}`", other))),
        }
    }
}

fn parse_token_line(line: &str, lineno: usize) -> Result<Vec<Item>> {
    let mut items = Vec::new();
    for word in line.split_whitespace() {
        if let Some(inner) = word.strip_prefix('<') {
            let inner = inner
                .strip_suffix('>')
                .ok_or_else(|| Error::parse(lineno, format!("unbalanced brackets in `{}`", word)))?;
            let components: Vec<String> = inner.split('-').map(str::to_owned).collect();
            if components.len() < 2 {
                return Err(Error::parse(lineno, format!("compound `{}` has fewer than 2 components", word)));
            }
            for c in &components {
                if c.is_empty() || c.contains(['<', '>']) {
                    return Err(Error::parse(lineno, format!("malformed compound `{}`", word)));
                }
            }
            items.push(Item::Compound { components, tree: None });
        } else if word.contains(['<', '>']) {
            return Err(Error::parse(lineno, format!("unbalanced brackets in `{}`", word)));
        } else {
            items.push(Item::Word(word.to_owned()));
        }
    }
    Ok(items)
}

fn parse_record(lines: &[(usize, &str)], ordinal: usize) -> Result<Sentence> {
    let (first, text) = lines[0];
    let mut items = parse_token_line(text, first)?;
    let n_compounds = items.iter().filter(|i| matches!(i, Item::Compound { .. })).count();
    let annotations = &lines[1..];
    if !annotations.is_empty() && annotations.len() != n_compounds {
        return Err(Error::parse(
            first,
            format!(
                "{} annotation lines for {} marked compounds",
                annotations.len(),
                n_compounds
            ),
        ));
    }
    let compounds = items.iter_mut().filter_map(|i| match i {
        Item::Compound { components, tree } => Some((components, tree)),
        Item::Word(_) => None,
    });
    for ((lineno, text), (components, tree)) in annotations.iter().zip(compounds) {
        let parsed = parse_nesting(text).map_err(|e| Error::parse(*lineno, e.to_string()))?;
        if parsed.components.len() != components.len() {
            return Err(Error::parse(
                *lineno,
                format!(
                    "annotation has {} components, compound has {}",
                    parsed.components.len(),
                    components.len()
                ),
            ));
        }
        if parsed.components != *components {
            return Err(Error::parse(
                *lineno,
                format!(
                    "annotation components `{}` differ from compound `{}`",
                    parsed.components.join("-"),
                    components.join("-")
                ),
            ));
        }
        *tree = Some(parsed.tree);
    }
    Sentence::from_items(ordinal.to_string(), items).map_err(|e| Error::parse(first, e.to_string()))
}

/// Parses corpus text. Sentence ids are record ordinals starting at 1.
pub fn parse_corpus(text: &str, mode: ContextMode) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut record: Vec<(usize, &str)> = Vec::new();
    let lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    for (lineno, line) in lines.chain(std::iter::once((0, ""))) {
        if line.is_empty() {
            if !record.is_empty() {
                sentences.push(parse_record(&record, sentences.len() + 1)?);
                record.clear();
            }
        } else {
            record.push((lineno, line));
        }
    }
    Ok(match mode {
        ContextMode::WithContext => sentences,
        ContextMode::WithoutContext => sentences.iter().flat_map(Sentence::without_context).collect(),
    })
}

pub fn load_corpus(path: impl AsRef<Path>, mode: ContextMode) -> Result<Vec<Sentence>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_corpus(&text, mode).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {}", path.display(), message),
        },
        other => other,
    })
}

/// Renders sentences as corpus records. Annotation lines are written when
/// every compound of a sentence has a tree.
pub fn render_corpus(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for s in sentences {
        let mut words = Vec::with_capacity(s.len());
        let mut i = 0;
        while i < s.len() {
            match s.compound_of(i) {
                Some(c) => {
                    let c = &s.compounds()[c];
                    words.push(format!("<{}>", s.surfaces(c).join("-")));
                    i = c.token_end + 1;
                }
                None => {
                    words.push(s.tokens()[i].surface.clone());
                    i += 1;
                }
            }
        }
        out.push_str(&words.join(" "));
        out.push('\n');
        if s.compounds().iter().all(|c| c.gold_tree().is_some()) {
            for c in s.compounds() {
                out.push_str(&render_nesting(c.gold_tree().expect("checked"), &s.surfaces(c)));
                out.push('\n');
            }
        }
        out.push('\n');
    }
    out
}
