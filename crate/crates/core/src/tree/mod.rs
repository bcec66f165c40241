//! Nesting trees, span tuples, dependency graphs and the conversions
//! between them.

mod bracket;
mod convert;
mod enumerate;
mod graph;

pub use bracket::{parse_nesting, render_nesting, render_unlabeled, ParsedNesting};
pub use convert::{dependency_to_tree, spans_to_tree, tree_to_dependency, tree_to_spans, DepArc};
pub use enumerate::{catalan, enumerate_parses, Bracketings};
pub use graph::{gold_graph, validate_graph, DependencyGraph};

use std::fmt;

use crate::error::{Error, Result};

/// Full binary parenthesization of a compound's components. Leaves hold
/// 1-based component indices; internal nodes hold the relation label of
/// the combination.
#[derive(Clone, Debug, Eq, PartialEq, Hash)]
pub enum NestingTree {
    Leaf(usize),
    Node {
        left: Box<NestingTree>,
        right: Box<NestingTree>,
        label: String,
    },
}

impl NestingTree {
    pub fn leaf(index: usize) -> Self {
        NestingTree::Leaf(index)
    }

    pub fn node(left: NestingTree, right: NestingTree, label: impl Into<String>) -> Self {
        NestingTree::Node {
            left: Box::new(left),
            right: Box::new(right),
            label: label.into(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, NestingTree::Leaf(_))
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            NestingTree::Leaf(_) => None,
            NestingTree::Node { label, .. } => Some(label),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            NestingTree::Leaf(_) => 1,
            NestingTree::Node { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    pub fn n_internal(&self) -> usize {
        match self {
            NestingTree::Leaf(_) => 0,
            NestingTree::Node { left, right, .. } => 1 + left.n_internal() + right.n_internal(),
        }
    }

    pub fn first_leaf(&self) -> usize {
        match self {
            NestingTree::Leaf(i) => *i,
            NestingTree::Node { left, .. } => left.first_leaf(),
        }
    }

    pub fn last_leaf(&self) -> usize {
        match self {
            NestingTree::Leaf(i) => *i,
            NestingTree::Node { right, .. } => right.last_leaf(),
        }
    }

    /// Leaf indices in order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            NestingTree::Leaf(i) => out.push(*i),
            NestingTree::Node { left, right, .. } => {
                left.collect_leaves(out);
                right.collect_leaves(out);
            }
        }
    }

    /// Labels of the internal nodes in pre-order.
    pub fn labels(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels<'a>(&'a self, out: &mut Vec<&'a str>) {
        if let NestingTree::Node { left, right, label } = self {
            out.push(label);
            left.collect_labels(out);
            right.collect_labels(out);
        }
    }

    /// Copy of the tree with every internal label passed through `f`.
    pub fn map_labels<F: FnMut(&str) -> String>(&self, f: &mut F) -> NestingTree {
        match self {
            NestingTree::Leaf(i) => NestingTree::Leaf(*i),
            NestingTree::Node { left, right, label } => {
                let label = f(label);
                NestingTree::node(left.map_labels(f), right.map_labels(f), label)
            }
        }
    }

    /// Checks that the in-order leaves are exactly `1..=n`.
    pub fn validate(&self) -> Result<()> {
        let leaves = self.leaves();
        if leaves.iter().enumerate().any(|(i, &l)| l != i + 1) {
            return Err(Error::Structure(format!(
                "leaves {:?} are not the sequence 1..={}",
                leaves,
                leaves.len()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for NestingTree {
    /// Bracketed form with component indices as leaf names.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NestingTree::Leaf(i) => write!(f, "{}", i),
            NestingTree::Node { left, right, label } => write!(f, "<{}-{}>{}", left, right, label),
        }
    }
}

/// One nested span `[start, end]` (1-based, inclusive) with its relation.
#[derive(Clone, Debug, Eq, PartialEq, Hash, PartialOrd, Ord)]
pub struct SpanTuple {
    pub start: usize,
    pub end: usize,
    pub label: String,
}

impl SpanTuple {
    pub fn new(start: usize, end: usize, label: impl Into<String>) -> Self {
        SpanTuple {
            start,
            end,
            label: label.into(),
        }
    }
}

impl fmt::Display for SpanTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.start, self.end, self.label)
    }
}
