//! Bracketed nesting notation: `<left-right>LABEL`, e.g. `<<a-b>T1-c>T2`.

use super::NestingTree;
use crate::error::{Error, Result};
use crate::label::check_label_name;

/// A parsed annotation: the tree over component indices plus the leaf
/// surfaces in order.
#[derive(Clone, Debug, Eq, PartialEq)]
pub struct ParsedNesting {
    pub tree: NestingTree,
    pub components: Vec<String>,
}

fn is_delim(c: char) -> bool {
    c == '<' || c == '>' || c == '-' || c.is_whitespace()
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    components: Vec<String>,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl AsRef<str>) -> Error {
        Error::Structure(format!(
            "invalid nesting `{}` at offset {}: {}",
            self.text,
            self.pos,
            msg.as_ref()
        ))
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn expect(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(c) => Err(self.err(format!("expected `{}`, found `{}`", want, c))),
            None => Err(self.err(format!("expected `{}`, found end of input", want))),
        }
    }

    fn word(&mut self) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if is_delim(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.text[start..self.pos]
    }

    fn tree(&mut self) -> Result<NestingTree> {
        self.skip_ws();
        match self.peek() {
            Some('<') => {
                self.pos += 1;
                let left = self.tree()?;
                self.expect('-')?;
                let right = self.tree()?;
                self.skip_ws();
                match self.peek() {
                    Some('-') => return Err(self.err("more than two children in one bracket")),
                    _ => self.expect('>')?,
                }
                let label = self.word();
                if label.is_empty() {
                    return Err(self.err("missing label after `>`"));
                }
                check_label_name(label)?;
                Ok(NestingTree::node(left, right, label))
            }
            Some(_) => {
                let leaf = self.word();
                if leaf.is_empty() {
                    return Err(self.err("expected a component"));
                }
                self.components.push(leaf.to_owned());
                Ok(NestingTree::Leaf(self.components.len()))
            }
            None => Err(self.err("unexpected end of input")),
        }
    }
}

/// Parses a bracketed nesting (whitespace-insensitive). Leaves are numbered
/// by position.
pub fn parse_nesting(text: &str) -> Result<ParsedNesting> {
    let mut parser = Parser {
        text,
        pos: 0,
        components: Vec::new(),
    };
    let tree = parser.tree()?;
    parser.skip_ws();
    if parser.pos != text.len() {
        return Err(parser.err("trailing input"));
    }
    if tree.is_leaf() {
        return Err(parser.err("a nesting needs at least two components"));
    }
    Ok(ParsedNesting {
        tree,
        components: parser.components,
    })
}

/// Canonical rendering (no spaces) with `components[i - 1]` as the name of
/// leaf `i`.
pub fn render_nesting<S: AsRef<str>>(tree: &NestingTree, components: &[S]) -> String {
    let mut out = String::new();
    render_into(tree, components, true, &mut out);
    out
}

/// Rendering without relation labels, e.g. `<<a-b>-c>`.
pub fn render_unlabeled<S: AsRef<str>>(tree: &NestingTree, components: &[S]) -> String {
    let mut out = String::new();
    render_into(tree, components, false, &mut out);
    out
}

fn render_into<S: AsRef<str>>(tree: &NestingTree, components: &[S], labels: bool, out: &mut String) {
    match tree {
        NestingTree::Leaf(i) => out.push_str(components[i - 1].as_ref()),
        NestingTree::Node { left, right, label } => {
            out.push('<');
            render_into(left, components, labels, out);
            out.push('-');
            render_into(right, components, labels, out);
            out.push('>');
            if labels {
                out.push_str(label);
            }
        }
    }
}
