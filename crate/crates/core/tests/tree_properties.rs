use compound_nesting::tree::{
    catalan, dependency_to_tree, enumerate_parses, spans_to_tree, tree_to_dependency, tree_to_spans, DepArc,
};
use compound_nesting::{HeadRules, HeadSide, NestingTree};
use proptest::prelude::*;

fn rules() -> HeadRules {
    let mut r = HeadRules::new();
    r.insert("R1", HeadSide::Right);
    r.insert("R2", HeadSide::Right);
    r.insert("L1", HeadSide::Left);
    r
}

const LABELS: [&str; 3] = ["R1", "R2", "L1"];

/// Random full bracketing of `lo..=hi` with labels drawn from `picks`.
fn build(lo: usize, hi: usize, picks: &mut impl Iterator<Item = u32>) -> NestingTree {
    if lo == hi {
        return NestingTree::leaf(lo);
    }
    let split = lo + (picks.next().unwrap() as usize) % (hi - lo);
    let label = LABELS[picks.next().unwrap() as usize % LABELS.len()];
    let left = build(lo, split, picks);
    let right = build(split + 1, hi, picks);
    NestingTree::node(left, right, label)
}

fn arb_tree() -> impl Strategy<Value = NestingTree> {
    (2usize..=9, prop::collection::vec(any::<u32>(), 32)).prop_map(|(n, picks)| {
        let mut it = picks.into_iter().cycle();
        build(1, n, &mut it)
    })
}

/// Dependents of every head in attachment order, bottom-up along the
/// head's spine.
fn spines(t: &NestingTree, rules: &HeadRules, out: &mut Vec<(usize, Vec<usize>)>) -> usize {
    match t {
        NestingTree::Leaf(i) => *i,
        NestingTree::Node { left, right, label } => {
            let l = spines(left, rules, out);
            let r = spines(right, rules, out);
            let (h, d) = match rules.get(label).unwrap() {
                HeadSide::Left => (l, r),
                HeadSide::Right => (r, l),
            };
            match out.iter_mut().find(|(head, _)| *head == h) {
                Some((_, deps)) => deps.push(d),
                None => out.push((h, vec![d])),
            }
            h
        }
    }
}

/// Nearest dependents attach first; on equal distance the left one.
fn is_canonical(t: &NestingTree, rules: &HeadRules) -> bool {
    let mut out = Vec::new();
    spines(t, rules, &mut out);
    out.iter().all(|(h, deps)| {
        let key = |d: usize| (d.abs_diff(*h), d > *h);
        deps.windows(2).all(|w| key(w[0]) < key(w[1]))
    })
}

proptest! {
    #[test]
    fn spans_round_trip(t in arb_tree()) {
        let n = t.n_leaves();
        let spans = tree_to_spans(&t);
        prop_assert_eq!(spans.len(), n - 1);
        prop_assert_eq!(spans_to_tree(&spans, n).unwrap(), t);
    }

    #[test]
    fn spans_are_laminar(t in arb_tree()) {
        let spans = tree_to_spans(&t);
        for a in &spans {
            for b in &spans {
                let nested = (a.start <= b.start && b.end <= a.end) || (b.start <= a.start && a.end <= b.end);
                let disjoint = a.end < b.start || b.end < a.start;
                prop_assert!(nested || disjoint, "{} vs {}", a, b);
            }
        }
        prop_assert!(spans.iter().any(|s| s.start == 1 && s.end == t.n_leaves()));
    }

    #[test]
    fn dependency_round_trip_keeps_arcs(t in arb_tree(), offset in 0usize..4) {
        let r = rules();
        let arcs = tree_to_dependency(&t, &r, offset).unwrap();
        prop_assert_eq!(arcs.len(), t.n_leaves());
        let back = dependency_to_tree(&arcs, offset, &r).unwrap();
        prop_assert_eq!(tree_to_dependency(&back, &r, offset).unwrap(), arcs);
        prop_assert_eq!(back == t, is_canonical(&t, &r));
    }
}

#[test]
fn enumeration_counts_match_catalan() {
    for n in 2..=10usize {
        let count = enumerate_parses(n, "X").unwrap().count();
        assert_eq!(catalan(n as u64 - 1), count.into(), "n = {}", n);
    }
}

fn projective_single_root(heads: &[usize]) -> bool {
    let n = heads.len() - 1;
    if (1..=n).filter(|&d| heads[d] == 0).count() != 1 {
        return false;
    }
    for d in 1..=n {
        let mut x = d;
        for _ in 0..=n {
            if x == 0 {
                break;
            }
            x = heads[x];
        }
        if x != 0 {
            return false;
        }
    }
    // Every word strictly between a dependent and its head is dominated
    // by that head.
    let dominated = |h: usize, mut x: usize| {
        while x != 0 {
            if x == h {
                return true;
            }
            x = heads[x];
        }
        false
    };
    (1..=n).filter(|&d| heads[d] != 0).all(|d| {
        let h = heads[d];
        (d.min(h) + 1..d.max(h)).all(|k| dominated(h, k))
    })
}

#[test]
fn dependency_fixpoint_on_small_arc_sets() {
    let r = rules();
    for n in 2..=5usize {
        let mut heads = vec![0usize; n + 1];
        let total = (n + 1).pow(n as u32);
        let mut checked = 0;
        for code in 0..total {
            let mut c = code;
            for h in heads.iter_mut().skip(1) {
                *h = c % (n + 1);
                c /= n + 1;
            }
            if (1..=n).any(|d| heads[d] == d) || !projective_single_root(&heads) {
                continue;
            }
            let arcs: Vec<DepArc> = (1..=n)
                .map(|d| {
                    let label = match heads[d] {
                        0 => "CompoundRoot",
                        h if d < h => LABELS[(d + h) % 2],
                        _ => "L1",
                    };
                    DepArc::new(d + 2, if heads[d] == 0 { 0 } else { heads[d] + 2 }, label)
                })
                .collect();
            let tree = dependency_to_tree(&arcs, 2, &r).unwrap();
            assert_eq!(tree_to_dependency(&tree, &r, 2).unwrap(), arcs);
            checked += 1;
        }
        assert!(checked > 0);
    }
}
