//! Deterministic toy corpus with a learnable structure and label pattern.
//!
//! Compounds have 3 to 5 components drawn from three stem classes. The
//! bracketing depends only on the component count:
//!
//! * 3: `<<1-2>-3>`
//! * 4: `<<1-2>-<3-4>>`
//! * 5: `<<<1-2>-3>-<4-5>>`
//!
//! Every relation is right-headed and is named after the class of the
//! dependent's head component, so labels are recoverable from the words.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;
use crate::label::{HeadSide, LabelInventory, LabelKind};
use crate::sentence::{Item, Sentence};
use crate::tree::NestingTree;

pub const LABELS: [&str; 3] = ["A", "B", "C"];

const STEMS: [[&str; 4]; 3] = [
    ["aja", "agni", "arka", "aśva"],
    ["bala", "bhuja", "bindu", "bodha"],
    ["candra", "cakra", "citra", "cūḍa"],
];

const CONTEXT: [&str; 6] = ["iti", "eva", "tatra", "punar", "sadā", "yathā"];

pub fn inventory() -> LabelInventory {
    LabelInventory::new(LABELS.map(|l| (l.to_owned(), Some(HeadSide::Right))), LabelKind::Fine)
        .expect("fixed labels are valid")
}

fn leaf(i: usize) -> NestingTree {
    NestingTree::leaf(i)
}

/// Gold tree for components of the given stem classes. The label of each
/// node is the class of its left child's head, which with right-headed
/// relations is the head of that child's last component.
fn tree_for(classes: &[usize]) -> NestingTree {
    let lab = |i: usize| LABELS[classes[i - 1]];
    let pair = |a: usize, b: usize| NestingTree::node(leaf(a), leaf(b), lab(a));
    match classes.len() {
        3 => NestingTree::node(pair(1, 2), leaf(3), lab(2)),
        4 => NestingTree::node(pair(1, 2), pair(3, 4), lab(2)),
        5 => NestingTree::node(NestingTree::node(pair(1, 2), leaf(3), lab(2)), pair(4, 5), lab(3)),
        n => panic!("no pattern for {} components", n),
    }
}

/// `n` sentences, each with one compound of 3 to 5 components between
/// up to two context words on each side.
pub fn corpus(n: usize, seed: u64) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let n_components = rng.gen_range(3..=5);
            let classes: Vec<usize> = (0..n_components).map(|_| rng.gen_range(0..3)).collect();
            let components = classes
                .iter()
                .map(|&c| STEMS[c].choose(&mut rng).expect("non-empty").to_string())
                .collect();
            let mut items = Vec::new();
            for _ in 0..rng.gen_range(0..=2) {
                items.push(Item::Word(CONTEXT.choose(&mut rng).expect("non-empty").to_string()));
            }
            items.push(Item::Compound {
                components,
                tree: Some(tree_for(&classes)),
            });
            for _ in 0..rng.gen_range(0..=2) {
                items.push(Item::Word(CONTEXT.choose(&mut rng).expect("non-empty").to_string()));
            }
            Sentence::from_items((i + 1).to_string(), items).expect("generated sentences are valid")
        })
        .collect()
}

/// Small model dimensions with the usual optimisation settings (batch
/// 16, learning rate 0.002, dropout 0.33, 100 epochs).
pub fn config() -> ModelConfig {
    ModelConfig {
        word_dim: 64,
        char_dim: 32,
        char_feature_dim: 64,
        span_dim: 16,
        lstm_hidden: 128,
        lstm_layers: 2,
        arc_mlp_dim: 256,
        label_mlp_dim: 128,
        ..ModelConfig::default()
    }
}
