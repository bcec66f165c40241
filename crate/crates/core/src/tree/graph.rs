use super::convert::{tree_to_dependency, DepArc};
use crate::error::{Error, Result};
use crate::label::{is_structural_name, HeadRules, COMPOUND_ROOT, GLOBAL_RELATION};
use crate::sentence::{Compound, Sentence};

/// Labeled head assignment over `{Global} ∪ tokens`. Node 0 is Global and
/// token `i` (0-based) is node `i + 1`.
#[derive(Clone, Debug, Eq, PartialEq)]
pub struct DependencyGraph {
    arcs: Vec<Option<(usize, String)>>,
}

impl DependencyGraph {
    /// Graph over `n_tokens` tokens with no arcs yet.
    pub fn new(n_tokens: usize) -> Self {
        DependencyGraph {
            arcs: vec![None; n_tokens + 1],
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.arcs.len()
    }

    pub fn set_arc(&mut self, dependent: usize, head: usize, label: impl Into<String>) {
        assert!(dependent != 0, "the Global node has no head");
        self.arcs[dependent] = Some((head, label.into()));
    }

    pub fn head(&self, node: usize) -> Option<usize> {
        self.arcs.get(node)?.as_ref().map(|(h, _)| *h)
    }

    pub fn label(&self, node: usize) -> Option<&str> {
        self.arcs.get(node)?.as_ref().map(|(_, l)| l.as_str())
    }

    /// All arcs ordered by dependent.
    pub fn arcs(&self) -> Vec<DepArc> {
        self.arcs
            .iter()
            .enumerate()
            .filter_map(|(d, a)| a.as_ref().map(|(h, l)| DepArc::new(d, *h, l.clone())))
            .collect()
    }

    /// Arcs whose dependents are the components of `compound`.
    pub fn compound_arcs(&self, compound: &Compound) -> Vec<DepArc> {
        (compound.token_start + 1..=compound.token_end + 1)
            .filter_map(|d| {
                self.arcs
                    .get(d)?
                    .as_ref()
                    .map(|(h, l)| DepArc::new(d, *h, l.clone()))
            })
            .collect()
    }
}

/// Gold graph of a sentence: plain words attach to Global, compounds are
/// converted from their gold trees.
pub fn gold_graph(sentence: &Sentence, rules: &HeadRules) -> Result<DependencyGraph> {
    let mut graph = DependencyGraph::new(sentence.len());
    for (i, token) in sentence.tokens().iter().enumerate() {
        if !token.is_component() {
            graph.set_arc(i + 1, 0, GLOBAL_RELATION);
        }
    }
    for compound in sentence.compounds() {
        let tree = compound.gold_tree().ok_or_else(|| {
            Error::Data(format!("compound {} has no gold tree", compound.id))
        })?;
        for arc in tree_to_dependency(tree, rules, compound.token_start)? {
            graph.set_arc(arc.dependent, arc.head, arc.label);
        }
    }
    Ok(graph)
}

/// Lists every violated graph invariant; empty when the graph is a valid
/// analysis of `sentence`.
pub fn validate_graph(graph: &DependencyGraph, sentence: &Sentence) -> Vec<String> {
    let mut violations = Vec::new();
    if graph.n_nodes() != sentence.len() + 1 {
        violations.push(format!(
            "graph has {} nodes, sentence needs {}",
            graph.n_nodes(),
            sentence.len() + 1
        ));
        return violations;
    }

    for (i, token) in sentence.tokens().iter().enumerate() {
        let node = i + 1;
        let Some(head) = graph.head(node) else {
            violations.push(format!("token {} has no head", node));
            continue;
        };
        if head >= graph.n_nodes() {
            violations.push(format!("token {} head {} out of range", node, head));
            continue;
        }
        if !token.is_component() {
            if head != 0 {
                violations.push(format!("plain token {} head must be Global", node));
            } else if graph.label(node) != Some(GLOBAL_RELATION) {
                violations.push(format!("plain token {} label must be {}", node, GLOBAL_RELATION));
            }
        }
    }

    for compound in sentence.compounds() {
        let range = compound.token_start + 1..=compound.token_end + 1;
        let mut roots = 0;
        let mut well_formed = true;
        for node in range.clone() {
            let (Some(head), Some(label)) = (graph.head(node), graph.label(node)) else {
                well_formed = false;
                continue;
            };
            if head == 0 {
                roots += 1;
                if label != COMPOUND_ROOT {
                    violations.push(format!(
                        "component {} attached to Global must use {}",
                        node, COMPOUND_ROOT
                    ));
                }
            } else if !range.contains(&head) || head == node {
                violations.push(format!(
                    "component {} head {} lies outside compound {}",
                    node, head, compound.id
                ));
                well_formed = false;
            } else if is_structural_name(label) {
                violations.push(format!(
                    "component {} uses structural label {} inside compound {}",
                    node, label, compound.id
                ));
            }
        }
        if roots != 1 {
            violations.push(format!(
                "compound {} has {} {} arcs, expected 1",
                compound.id, roots, COMPOUND_ROOT
            ));
            continue;
        }
        if !well_formed {
            continue;
        }

        let ancestor_chain_reaches_global = |mut x: usize| {
            for _ in 0..=range.clone().count() {
                if x == 0 {
                    return true;
                }
                x = graph.head(x).unwrap_or(0);
            }
            false
        };
        if !range.clone().all(ancestor_chain_reaches_global) {
            violations.push(format!("compound {} contains a cycle", compound.id));
            continue;
        }
        let dominates = |h: usize, mut x: usize| {
            while x != 0 {
                if x == h {
                    return true;
                }
                x = graph.head(x).unwrap_or(0);
            }
            false
        };
        let projective = range.clone().all(|d| {
            let h = graph.head(d).unwrap_or(0);
            if h == 0 {
                return true;
            }
            let (lo, hi) = (d.min(h), d.max(h));
            ((lo + 1)..hi).all(|x| dominates(h, x))
        });
        if !projective {
            violations.push(format!("compound {} is not projective", compound.id));
        }
    }
    violations
}
