use std::collections::HashMap;

use super::{NestingTree, SpanTuple};
use crate::error::{Error, Result};
use crate::label::{is_structural_name, HeadRules, HeadSide, COMPOUND_ROOT};

/// Labeled arc `dependent -> head` between dependency nodes; head 0 is the
/// Global node.
#[derive(Clone, Debug, Eq, PartialEq, Hash, PartialOrd, Ord)]
pub struct DepArc {
    pub dependent: usize,
    pub head: usize,
    pub label: String,
}

impl DepArc {
    pub fn new(dependent: usize, head: usize, label: impl Into<String>) -> Self {
        DepArc {
            dependent,
            head,
            label: label.into(),
        }
    }
}

/// One tuple per internal node, ordered by span width then start.
pub fn tree_to_spans(tree: &NestingTree) -> Vec<SpanTuple> {
    fn walk(t: &NestingTree, out: &mut Vec<SpanTuple>) {
        if let NestingTree::Node { left, right, label } = t {
            out.push(SpanTuple::new(t.first_leaf(), t.last_leaf(), label.clone()));
            walk(left, out);
            walk(right, out);
        }
    }
    let mut spans = Vec::new();
    walk(tree, &mut spans);
    spans.sort_by_key(|s| (s.end - s.start, s.start));
    spans
}

fn not_parenthesization(detail: impl AsRef<str>) -> Error {
    Error::Structure(format!("not a full parenthesization: {}", detail.as_ref()))
}

/// Rebuilds the unique tree whose spans are `spans`.
pub fn spans_to_tree(spans: &[SpanTuple], n: usize) -> Result<NestingTree> {
    if n < 2 {
        return Err(not_parenthesization(format!("{} components", n)));
    }
    if spans.len() != n - 1 {
        return Err(not_parenthesization(format!(
            "{} spans for {} components",
            spans.len(),
            n
        )));
    }
    let mut by_range = HashMap::new();
    for s in spans {
        if s.start < 1 || s.end > n || s.start >= s.end {
            return Err(not_parenthesization(format!("span {} out of range", s)));
        }
        if by_range.insert((s.start, s.end), s.label.as_str()).is_some() {
            return Err(not_parenthesization(format!("duplicate span ({},{})", s.start, s.end)));
        }
    }

    fn build(start: usize, end: usize, spans: &HashMap<(usize, usize), &str>) -> Result<NestingTree> {
        if start == end {
            return Ok(NestingTree::Leaf(start));
        }
        let label = spans
            .get(&(start, end))
            .ok_or_else(|| not_parenthesization(format!("missing span ({},{})", start, end)))?;
        let split = (start..end)
            .find(|&k| {
                (k == start || spans.contains_key(&(start, k)))
                    && (k + 1 == end || spans.contains_key(&(k + 1, end)))
            })
            .ok_or_else(|| {
                not_parenthesization(format!("span ({},{}) has no binary split", start, end))
            })?;
        Ok(NestingTree::node(
            build(start, split, spans)?,
            build(split + 1, end, spans)?,
            *label,
        ))
    }

    let tree = build(1, n, &by_range)?;
    // n - 1 distinct spans all reachable from the root means every span was used.
    if tree.n_internal() != spans.len() {
        return Err(not_parenthesization("crossing spans"));
    }
    Ok(tree)
}

fn side_of(rules: &HeadRules, label: &str) -> Result<HeadSide> {
    if is_structural_name(label) {
        return Err(Error::Structure(format!(
            "structural label `{}` inside a compound",
            label
        )));
    }
    rules
        .get(label)
        .ok_or_else(|| Error::UnknownLabel(label.to_owned()))
}

/// Arcs of one compound whose first component is sentence token
/// `offset + 1`. The head of every internal node comes from the child named
/// by its label's head rule; the other child's head attaches to it with the
/// node's label, and the root's head attaches to Global as `CompoundRoot`.
pub fn tree_to_dependency(tree: &NestingTree, rules: &HeadRules, offset: usize) -> Result<Vec<DepArc>> {
    fn head_of(t: &NestingTree, rules: &HeadRules, offset: usize, arcs: &mut Vec<DepArc>) -> Result<usize> {
        match t {
            NestingTree::Leaf(i) => Ok(*i),
            NestingTree::Node { left, right, label } => {
                let side = side_of(rules, label)?;
                let lh = head_of(left, rules, offset, arcs)?;
                let rh = head_of(right, rules, offset, arcs)?;
                let (head, dep) = match side {
                    HeadSide::Left => (lh, rh),
                    HeadSide::Right => (rh, lh),
                };
                arcs.push(DepArc::new(offset + dep, offset + head, label.clone()));
                Ok(head)
            }
        }
    }
    let mut arcs = Vec::with_capacity(tree.n_leaves());
    let root = head_of(tree, rules, offset, &mut arcs)?;
    arcs.push(DepArc::new(offset + root, 0, COMPOUND_ROOT));
    arcs.sort();
    Ok(arcs)
}

/// Canonical binarization of a compound's projective arcs: each head takes
/// its dependents nearest first, and on equal distance the left dependent
/// attaches first (lower in the tree).
pub fn dependency_to_tree(arcs: &[DepArc], offset: usize, rules: &HeadRules) -> Result<NestingTree> {
    let n = arcs.len();
    if n < 2 {
        return Err(Error::Structure(format!("a compound needs at least 2 components, got {}", n)));
    }
    // Local 1-based heads; 0 is the Global node.
    let mut heads = vec![usize::MAX; n + 1];
    let mut labels = vec![""; n + 1];
    for arc in arcs {
        let d = arc
            .dependent
            .checked_sub(offset)
            .filter(|d| (1..=n).contains(d))
            .ok_or_else(|| Error::Structure(format!("dependent {} outside the compound", arc.dependent)))?;
        if heads[d] != usize::MAX {
            return Err(Error::Structure(format!("node {} has two heads", arc.dependent)));
        }
        let h = if arc.head == 0 {
            0
        } else {
            arc.head
                .checked_sub(offset)
                .filter(|h| (1..=n).contains(h))
                .ok_or_else(|| Error::Structure(format!("head {} outside the compound", arc.head)))?
        };
        if h == d {
            return Err(Error::Structure(format!("node {} heads itself", arc.dependent)));
        }
        heads[d] = h;
        labels[d] = &arc.label;
    }

    let roots: Vec<usize> = (1..=n).filter(|&d| heads[d] == 0).collect();
    if roots.len() != 1 {
        return Err(Error::Structure(format!("{} roots in compound, expected 1", roots.len())));
    }
    let root = roots[0];
    if labels[root] != COMPOUND_ROOT {
        return Err(Error::Structure(format!(
            "root arc labeled `{}` instead of {}",
            labels[root], COMPOUND_ROOT
        )));
    }

    for d in 1..=n {
        let mut cur = d;
        for _ in 0..=n {
            if cur == 0 {
                break;
            }
            cur = heads[cur];
        }
        if cur != 0 {
            return Err(Error::Structure("cycle in compound arcs".to_owned()));
        }
    }

    let dominates = |h: usize, mut x: usize| {
        while x != 0 {
            if x == h {
                return true;
            }
            x = heads[x];
        }
        false
    };
    for (d, &h) in heads.iter().enumerate().skip(1) {
        if h == 0 {
            continue;
        }
        let (lo, hi) = if d < h { (d, h) } else { (h, d) };
        if ((lo + 1)..hi).any(|x| !dominates(h, x)) {
            return Err(Error::Structure("non-projective compound arcs".to_owned()));
        }
    }

    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for d in 1..=n {
        if heads[d] != 0 {
            dependents[heads[d]].push(d);
        }
    }

    fn build(
        h: usize,
        dependents: &[Vec<usize>],
        labels: &[&str],
        rules: &HeadRules,
    ) -> Result<NestingTree> {
        let mut order = dependents[h].clone();
        // Nearest first; the left dependent wins a distance tie.
        order.sort_by_key(|&d| (d.abs_diff(h), d > h));
        let mut tree = NestingTree::Leaf(h);
        for d in order {
            let label = labels[d];
            let side = side_of(rules, label)?;
            let sub = build(d, dependents, labels, rules)?;
            tree = if d < h {
                if side != HeadSide::Right {
                    return Err(Error::Structure(format!(
                        "label `{}` is left-headed but attaches a left dependent",
                        label
                    )));
                }
                NestingTree::node(sub, tree, label)
            } else {
                if side != HeadSide::Left {
                    return Err(Error::Structure(format!(
                        "label `{}` is right-headed but attaches a right dependent",
                        label
                    )));
                }
                NestingTree::node(tree, sub, label)
            };
        }
        Ok(tree)
    }

    build(root, &dependents, &labels, rules)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::enumerate_parses;

    fn leaf(i: usize) -> NestingTree {
        NestingTree::leaf(i)
    }

    fn node(l: NestingTree, r: NestingTree, label: &str) -> NestingTree {
        NestingTree::node(l, r, label)
    }

    fn rules(pairs: &[(&str, HeadSide)]) -> HeadRules {
        let mut r = HeadRules::new();
        for (l, s) in pairs {
            r.insert(*l, *s);
        }
        r
    }

    #[test]
    fn school_bell_spans() {
        // <<vidyā-ālaya>T6-ghaṇṭā>T6
        let t = node(node(leaf(1), leaf(2), "T6"), leaf(3), "T6");
        assert_eq!(
            tree_to_spans(&t),
            vec![SpanTuple::new(1, 2, "T6"), SpanTuple::new(1, 3, "T6")]
        );
        assert_eq!(spans_to_tree(&tree_to_spans(&t), 3).unwrap(), t);
    }

    #[test]
    fn single_combination_spans() {
        let t = node(leaf(1), leaf(2), "L");
        assert_eq!(tree_to_spans(&t), vec![SpanTuple::new(1, 2, "L")]);
    }

    #[test]
    fn right_nested_spans() {
        // (1·((2·3)·4)) with a at the root, b at (2,4), c at (2,3)
        let t = node(leaf(1), node(node(leaf(2), leaf(3), "c"), leaf(4), "b"), "a");
        let spans = tree_to_spans(&t);
        assert_eq!(
            spans,
            vec![SpanTuple::new(2, 3, "c"), SpanTuple::new(2, 4, "b"), SpanTuple::new(1, 4, "a")]
        );
        assert_eq!(spans_to_tree(&spans, 4).unwrap(), t);
    }

    #[test]
    fn underdetermined_spans_rejected() {
        let spans = vec![SpanTuple::new(1, 2, "A"), SpanTuple::new(3, 4, "B")];
        let err = spans_to_tree(&spans, 4).unwrap_err();
        assert!(err.to_string().starts_with("not a full parenthesization"));
    }

    #[test]
    fn crossing_and_duplicate_spans_rejected() {
        let crossing4 = vec![SpanTuple::new(1, 3, "A"), SpanTuple::new(2, 4, "B"), SpanTuple::new(1, 4, "C")];
        assert!(spans_to_tree(&crossing4, 4).is_err());
        let dup = vec![SpanTuple::new(1, 2, "A"), SpanTuple::new(1, 2, "B")];
        assert!(spans_to_tree(&dup, 3).is_err());
        let no_root = vec![SpanTuple::new(1, 2, "A"), SpanTuple::new(2, 3, "B")];
        assert!(spans_to_tree(&no_root, 3).is_err());
    }

    #[test]
    fn six_component_round_trip() {
        let mut count = 0;
        for t in enumerate_parses(6, "X").unwrap() {
            assert_eq!(spans_to_tree(&tree_to_spans(&t), 6).unwrap(), t);
            count += 1;
        }
        assert_eq!(count, 42);
    }

    #[test]
    fn school_bell_dependencies() {
        let t = node(node(leaf(1), leaf(2), "T6"), leaf(3), "T6");
        let r = rules(&[("T6", HeadSide::Right)]);
        let arcs = tree_to_dependency(&t, &r, 0).unwrap();
        assert_eq!(
            arcs,
            vec![DepArc::new(1, 2, "T6"), DepArc::new(2, 3, "T6"), DepArc::new(3, 0, COMPOUND_ROOT)]
        );
        assert_eq!(dependency_to_tree(&arcs, 0, &r).unwrap(), t);
    }

    #[test]
    fn offset_shifts_nodes() {
        let t = node(leaf(1), leaf(2), "L");
        let r = rules(&[("L", HeadSide::Left)]);
        let arcs = tree_to_dependency(&t, &r, 4).unwrap();
        assert_eq!(arcs, vec![DepArc::new(5, 0, COMPOUND_ROOT), DepArc::new(6, 5, "L")]);
        assert_eq!(dependency_to_tree(&arcs, 4, &r).unwrap(), t);
    }

    #[test]
    fn left_headed_pair() {
        let t = node(leaf(1), leaf(2), "L");
        let r = rules(&[("L", HeadSide::Left)]);
        let arcs = tree_to_dependency(&t, &r, 0).unwrap();
        assert_eq!(arcs, vec![DepArc::new(1, 0, COMPOUND_ROOT), DepArc::new(2, 1, "L")]);
        assert_eq!(dependency_to_tree(&arcs, 0, &r).unwrap(), t);
    }

    #[test]
    fn bracketings_give_distinct_arcs() {
        let r = rules(&[("X", HeadSide::Right)]);
        let left_branching = node(node(leaf(1), leaf(2), "X"), leaf(3), "X");
        let right_branching = node(leaf(1), node(leaf(2), leaf(3), "X"), "X");
        let a = tree_to_dependency(&left_branching, &r, 0).unwrap();
        let b = tree_to_dependency(&right_branching, &r, 0).unwrap();
        assert_eq!(a, vec![DepArc::new(1, 2, "X"), DepArc::new(2, 3, "X"), DepArc::new(3, 0, COMPOUND_ROOT)]);
        assert_eq!(b, vec![DepArc::new(1, 3, "X"), DepArc::new(2, 3, "X"), DepArc::new(3, 0, COMPOUND_ROOT)]);
        assert_ne!(a, b);
    }

    #[test]
    fn nearest_dependent_attaches_first() {
        let r = rules(&[("X", HeadSide::Right)]);
        let arcs = vec![DepArc::new(1, 3, "X"), DepArc::new(2, 3, "X"), DepArc::new(3, 0, COMPOUND_ROOT)];
        assert_eq!(
            dependency_to_tree(&arcs, 0, &r).unwrap(),
            node(leaf(1), node(leaf(2), leaf(3), "X"), "X")
        );
    }

    #[test]
    fn tie_attaches_left_dependent_first() {
        let r = rules(&[("R", HeadSide::Right), ("L", HeadSide::Left)]);
        let arcs = vec![DepArc::new(1, 2, "R"), DepArc::new(2, 0, COMPOUND_ROOT), DepArc::new(3, 2, "L")];
        assert_eq!(
            dependency_to_tree(&arcs, 0, &r).unwrap(),
            node(node(leaf(1), leaf(2), "R"), leaf(3), "L")
        );
        // The other bracketing maps onto the same arcs.
        let other = node(leaf(1), node(leaf(2), leaf(3), "L"), "R");
        assert_eq!(tree_to_dependency(&other, &r, 0).unwrap(), arcs);
    }

    #[test]
    fn unknown_label_rejected() {
        let t = node(leaf(1), leaf(2), "Q");
        let err = tree_to_dependency(&t, &HeadRules::new(), 0).unwrap_err();
        assert!(matches!(err, Error::UnknownLabel(ref l) if l == "Q"));
    }

    #[test]
    fn invalid_arc_sets_rejected() {
        let r = rules(&[("X", HeadSide::Right), ("L", HeadSide::Left)]);
        let two_roots = vec![DepArc::new(1, 0, COMPOUND_ROOT), DepArc::new(2, 0, COMPOUND_ROOT)];
        assert!(dependency_to_tree(&two_roots, 0, &r).is_err());
        let cycle = vec![
            DepArc::new(1, 2, "X"),
            DepArc::new(2, 1, "L"),
            DepArc::new(3, 0, COMPOUND_ROOT),
        ];
        assert!(dependency_to_tree(&cycle, 0, &r).is_err());
        // 1 -> 3 crosses 2 -> 4.
        let crossing = vec![
            DepArc::new(1, 3, "X"),
            DepArc::new(2, 4, "X"),
            DepArc::new(3, 4, "X"),
            DepArc::new(4, 0, COMPOUND_ROOT),
        ];
        assert!(dependency_to_tree(&crossing, 0, &r).is_err());
        let wrong_side = vec![DepArc::new(1, 2, "L"), DepArc::new(2, 0, COMPOUND_ROOT)];
        assert!(dependency_to_tree(&wrong_side, 0, &r).is_err());
    }
}
