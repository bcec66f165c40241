//! Constrained decoding: plain tokens attach to Global, every compound
//! gets the best-scoring projective single-root tree over its components.

use crate::label::{HeadSide, LabelInventory, COMPOUND_ROOT, GLOBAL_RELATION};
use crate::sentence::{Compound, Sentence};
use crate::tree::DependencyGraph;

use super::ScoreMatrices;

/// Best span label for the arc `dependent → head`, restricted to labels
/// whose head rule matches the arc direction. Ties go to the lower label
/// index. `None` when no label fits.
pub fn best_label(
    scores: &ScoreMatrices,
    inventory: &LabelInventory,
    dependent: usize,
    head: usize,
) -> Option<(usize, f64)> {
    // A dependent left of its head needs a right-headed relation.
    let side = if dependent < head { HeadSide::Right } else { HeadSide::Left };
    let mut best: Option<(usize, f64)> = None;
    for (l, label) in inventory.span_labels().iter().enumerate() {
        if inventory.head_side(label.name()) != Some(side) {
            continue;
        }
        let s = scores.label(dependent, head, l);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((l, s));
        }
    }
    best
}

/// Score of attaching `dependent` to `head` under the factorized
/// objective: arc score plus best admissible label score.
pub fn arc_weight(scores: &ScoreMatrices, inventory: &LabelInventory, dependent: usize, head: usize) -> f64 {
    if head == 0 {
        return scores.arc(dependent, 0) + scores.label(dependent, 0, inventory.compound_root());
    }
    match best_label(scores, inventory, dependent, head) {
        Some((_, s)) => scores.arc(dependent, head) + s,
        None => f64::NEG_INFINITY,
    }
}

/// Decodes a full sentence. The result always passes `validate_graph`.
pub fn decode(scores: &ScoreMatrices, sentence: &Sentence, inventory: &LabelInventory) -> DependencyGraph {
    assert_eq!(scores.n_nodes(), sentence.len() + 1, "scores do not cover the sentence");
    let mut graph = DependencyGraph::new(sentence.len());
    for (i, token) in sentence.tokens().iter().enumerate() {
        if !token.is_component() {
            graph.set_arc(i + 1, 0, GLOBAL_RELATION);
        }
    }
    for compound in sentence.compounds() {
        let heads = decode_compound(scores, inventory, compound);
        for (k, &h) in heads.iter().enumerate().skip(1) {
            let d = compound.node(k);
            if h == 0 {
                graph.set_arc(d, 0, COMPOUND_ROOT);
            } else {
                let head = compound.node(h);
                let (l, _) = best_label(scores, inventory, d, head).expect("decoded arcs have a label");
                graph.set_arc(d, head, inventory.name(l));
            }
        }
    }
    graph
}

#[derive(Clone, Copy)]
enum Dir {
    /// Head on the right end.
    Left = 0,
    /// Head on the left end.
    Right = 1,
}

struct Chart {
    n: usize,
    score: Vec<f64>,
    split: Vec<usize>,
}

impl Chart {
    fn new(n: usize) -> Self {
        Chart {
            n,
            score: vec![f64::NEG_INFINITY; (n + 1) * (n + 1) * 2],
            split: vec![0; (n + 1) * (n + 1) * 2],
        }
    }

    fn at(&self, s: usize, t: usize, d: Dir) -> usize {
        (s * (self.n + 1) + t) * 2 + d as usize
    }

    fn get(&self, s: usize, t: usize, d: Dir) -> f64 {
        self.score[self.at(s, t, d)]
    }

    fn set(&mut self, s: usize, t: usize, d: Dir, v: f64, r: usize) {
        let i = self.at(s, t, d);
        self.score[i] = v;
        self.split[i] = r;
    }

    fn split(&self, s: usize, t: usize, d: Dir) -> usize {
        self.split[self.at(s, t, d)]
    }
}

/// First-order Eisner chart over components `1..=n` plus a single root
/// choice. Returns local heads indexed by component (entry 0 unused,
/// head 0 = Global). Ties go to the first candidate in ascending order of
/// root, then split point.
fn decode_compound(scores: &ScoreMatrices, inventory: &LabelInventory, compound: &Compound) -> Vec<usize> {
    let n = compound.n_components();
    let w = |dep: usize, head: usize| -> f64 {
        let head = if head == 0 { 0 } else { compound.node(head) };
        arc_weight(scores, inventory, compound.node(dep), head)
    };
    let mut incomplete = Chart::new(n);
    let mut complete = Chart::new(n);
    for s in 1..=n {
        complete.set(s, s, Dir::Left, 0.0, s);
        complete.set(s, s, Dir::Right, 0.0, s);
    }
    let better = |v: f64, best: Option<f64>| best.is_none_or(|b| v > b);
    for width in 1..n {
        for s in 1..=n - width {
            let t = s + width;
            let mut best: Option<f64> = None;
            let mut arg = s;
            for r in s..t {
                let v = complete.get(s, r, Dir::Right) + complete.get(r + 1, t, Dir::Left);
                if better(v, best) {
                    best = Some(v);
                    arg = r;
                }
            }
            let base = best.expect("non-empty range");
            incomplete.set(s, t, Dir::Left, base + w(s, t), arg);
            incomplete.set(s, t, Dir::Right, base + w(t, s), arg);

            let mut best: Option<f64> = None;
            let mut arg = s;
            for r in s..t {
                let v = complete.get(s, r, Dir::Left) + incomplete.get(r, t, Dir::Left);
                if better(v, best) {
                    best = Some(v);
                    arg = r;
                }
            }
            complete.set(s, t, Dir::Left, best.expect("non-empty range"), arg);

            let mut best: Option<f64> = None;
            let mut arg = s + 1;
            for r in s + 1..=t {
                let v = incomplete.get(s, r, Dir::Right) + complete.get(r, t, Dir::Right);
                if better(v, best) {
                    best = Some(v);
                    arg = r;
                }
            }
            complete.set(s, t, Dir::Right, best.expect("non-empty range"), arg);
        }
    }

    let mut best: Option<f64> = None;
    let mut root = 1;
    for r in 1..=n {
        let v = complete.get(1, r, Dir::Left) + complete.get(r, n, Dir::Right) + w(r, 0);
        if better(v, best) {
            best = Some(v);
            root = r;
        }
    }

    let mut heads = vec![usize::MAX; n + 1];
    heads[root] = 0;
    let mut stack = vec![(1, root, Dir::Left, false), (root, n, Dir::Right, false)];
    while let Some((s, t, dir, is_incomplete)) = stack.pop() {
        if s == t {
            continue;
        }
        if is_incomplete {
            match dir {
                Dir::Left => heads[s] = t,
                Dir::Right => heads[t] = s,
            }
            let r = incomplete.split(s, t, dir);
            stack.push((s, r, Dir::Right, false));
            stack.push((r + 1, t, Dir::Left, false));
        } else {
            let r = complete.split(s, t, dir);
            match dir {
                Dir::Left => {
                    stack.push((s, r, Dir::Left, false));
                    stack.push((r, t, Dir::Left, true));
                }
                Dir::Right => {
                    stack.push((s, r, Dir::Right, true));
                    stack.push((r, t, Dir::Right, false));
                }
            }
        }
    }
    heads
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::label::{HeadSide, LabelKind};
    use crate::sentence::Item;
    use crate::tree::{enumerate_parses, validate_graph, NestingTree};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn inventory() -> LabelInventory {
        LabelInventory::new(
            [
                ("R1".to_owned(), Some(HeadSide::Right)),
                ("L1".to_owned(), Some(HeadSide::Left)),
                ("R2".to_owned(), Some(HeadSide::Right)),
            ],
            LabelKind::Fine,
        )
        .unwrap()
    }

    fn sentence(n: usize, before: usize, after: usize) -> Sentence {
        let mut items: Vec<Item> = (0..before).map(|i| Item::Word(format!("w{}", i))).collect();
        items.push(Item::Compound {
            components: (0..n).map(|i| format!("c{}", i)).collect(),
            tree: None,
        });
        items.extend((0..after).map(|i| Item::Word(format!("x{}", i))));
        Sentence::from_items("1", items).unwrap()
    }

    fn random_scores(n_nodes: usize, n_labels: usize, rng: &mut impl Rng) -> ScoreMatrices {
        let mut s = ScoreMatrices::zeros(n_nodes, n_labels);
        for d in 0..n_nodes {
            for h in 0..n_nodes {
                s.set_arc(d, h, rng.gen_range(-3.0..3.0));
                for l in 0..n_labels {
                    s.set_label(d, h, l, rng.gen_range(-3.0..3.0));
                }
            }
        }
        s
    }

    /// Heads of every projective single-root analysis, obtained from all
    /// bracketings and all choices of head child at each internal node.
    fn all_analyses(n: usize) -> Vec<Vec<usize>> {
        fn heads_of(t: &NestingTree, choice: &mut impl Iterator<Item = bool>, heads: &mut [usize]) -> usize {
            match t {
                NestingTree::Leaf(i) => *i,
                NestingTree::Node { left, right, .. } => {
                    let l = heads_of(left, choice, heads);
                    let r = heads_of(right, choice, heads);
                    if choice.next().unwrap() {
                        heads[r] = l;
                        l
                    } else {
                        heads[l] = r;
                        r
                    }
                }
            }
        }
        let mut out = Vec::new();
        for tree in enumerate_parses(n, "X").unwrap() {
            for mask in 0u32..1 << (n - 1) {
                let mut heads = vec![usize::MAX; n + 1];
                let mut bits = (0..n - 1).map(|b| mask >> b & 1 == 1);
                let root = heads_of(&tree, &mut bits, &mut heads);
                heads[root] = 0;
                out.push(heads);
            }
        }
        out
    }

    fn total(scores: &ScoreMatrices, inv: &LabelInventory, c: &Compound, heads: &[usize]) -> f64 {
        (1..heads.len())
            .map(|k| {
                let h = if heads[k] == 0 { 0 } else { c.node(heads[k]) };
                arc_weight(scores, inv, c.node(k), h)
            })
            .sum()
    }

    #[test]
    fn matches_exhaustive_search() {
        let inv = inventory();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..60 {
            let n = 2 + trial % 6;
            let s = sentence(n, trial % 3, trial % 2);
            let c = &s.compounds()[0];
            let scores = random_scores(s.len() + 1, inv.len(), &mut rng);
            let heads = decode_compound(&scores, &inv, c);
            let got = total(&scores, &inv, c, &heads);
            let best = all_analyses(n)
                .iter()
                .map(|h| total(&scores, &inv, c, h))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((got - best).abs() < 1e-9, "n={} got {} best {}", n, got, best);
        }
    }

    #[test]
    fn output_is_always_valid() {
        let inv = inventory();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for trial in 0..40 {
            let s = sentence(2 + trial % 7, trial % 2, 1);
            let scores = random_scores(s.len() + 1, inv.len(), &mut rng);
            let g = decode(&scores, &s, &inv);
            assert!(validate_graph(&g, &s).is_empty());
        }
    }

    #[test]
    fn rigged_scores_are_recovered() {
        // Components 1, 2, 3 at nodes 1..=3; arcs 1→2, 2→3, 3→Global.
        let inv = inventory();
        let s = sentence(3, 0, 0);
        let mut scores = ScoreMatrices::zeros(4, inv.len());
        scores.set_arc(1, 2, 10.0);
        scores.set_arc(2, 3, 10.0);
        scores.set_arc(3, 0, 10.0);
        scores.set_label(1, 2, 2, 1.0);
        let g = decode(&scores, &s, &inv);
        assert_eq!(g.head(1), Some(2));
        assert_eq!(g.label(1), Some("R2"));
        assert_eq!(g.head(2), Some(3));
        assert_eq!(g.label(2), Some("R1"));
        assert_eq!(g.head(3), Some(0));
        assert_eq!(g.label(3), Some(COMPOUND_ROOT));
    }

    #[test]
    fn ties_prefer_lower_indices() {
        let inv = inventory();
        let s = sentence(3, 0, 0);
        let scores = ScoreMatrices::zeros(4, inv.len());
        let g = decode(&scores, &s, &inv);
        assert!(validate_graph(&g, &s).is_empty());
        // Root 1 and the earliest split win: a left-headed chain.
        assert_eq!(g.head(1), Some(0));
        assert_eq!(g.head(2), Some(1));
        assert_eq!(g.head(3), Some(2));
        assert_eq!(g.label(2), Some("L1"));
        assert_eq!(decode(&scores, &s, &inv), g);
    }

    #[test]
    fn label_order_does_not_change_arcs() {
        let inv = inventory();
        let permuted = LabelInventory::new(
            [
                ("R2".to_owned(), Some(HeadSide::Right)),
                ("R1".to_owned(), Some(HeadSide::Right)),
                ("L1".to_owned(), Some(HeadSide::Left)),
            ],
            LabelKind::Fine,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for trial in 0..30 {
            let s = sentence(2 + trial % 6, trial % 2, 1);
            let n_nodes = s.len() + 1;
            let scores = random_scores(n_nodes, inv.len(), &mut rng);
            let mut moved = ScoreMatrices::zeros(n_nodes, permuted.len());
            for d in 0..n_nodes {
                for h in 0..n_nodes {
                    moved.set_arc(d, h, scores.arc(d, h));
                    for (l, label) in inv.labels().iter().enumerate() {
                        let to = permuted.index_of(label.name()).unwrap();
                        moved.set_label(d, h, to, scores.label(d, h, l));
                    }
                }
            }
            assert_eq!(decode(&scores, &s, &inv), decode(&moved, &s, &permuted));
        }
    }

    #[test]
    fn one_sided_inventory_still_decodes() {
        let inv = LabelInventory::new([("T".to_owned(), Some(HeadSide::Right))], LabelKind::Fine).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..7 {
            let s = sentence(n, 1, 0);
            let scores = random_scores(s.len() + 1, inv.len(), &mut rng);
            let g = decode(&scores, &s, &inv);
            assert!(validate_graph(&g, &s).is_empty());
            // Only right-headed relations: every component points rightwards.
            for k in 1..n {
                assert!(g.head(1 + k).unwrap() > 1 + k);
            }
        }
    }

    #[test]
    fn plain_tokens_ignore_scores() {
        let inv = inventory();
        let s = sentence(2, 2, 1);
        let mut scores = ScoreMatrices::zeros(s.len() + 1, inv.len());
        scores.set_arc(1, 2, 100.0);
        let g = decode(&scores, &s, &inv);
        assert_eq!(g.head(1), Some(0));
        assert_eq!(g.label(1), Some(GLOBAL_RELATION));
    }
}
