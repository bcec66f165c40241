use num_bigint::BigUint;

use super::NestingTree;
use crate::error::{Error, Result};

/// The `n`-th Catalan number, the count of full binary bracketings of
/// `n + 1` components.
pub fn catalan(n: u64) -> BigUint {
    // C_{i+1} = C_i * 2(2i + 1) / (i + 2); each intermediate is exact.
    let mut c = BigUint::from(1u32);
    for i in 0..n {
        c = c * (2 * (2 * i + 1)) / (i + 2);
    }
    c
}

/// Streams every full binary bracketing of `n_components` components
/// exactly once, labelling each internal node with `label`.
pub fn enumerate_parses(n_components: usize, label: &str) -> Result<Bracketings> {
    if n_components < 2 {
        return Err(Error::Structure(format!(
            "a compound needs at least 2 components, got {}",
            n_components
        )));
    }
    Ok(Bracketings::new(1, n_components, label.to_owned()))
}

/// Lazy enumeration of the bracketings of the component range `start..=end`.
pub struct Bracketings {
    start: usize,
    end: usize,
    label: String,
    state: State,
}

enum State {
    Fresh,
    Split {
        split: usize,
        left: Box<Bracketings>,
        right: Box<Bracketings>,
        current_left: NestingTree,
    },
    Done,
}

impl Bracketings {
    fn new(start: usize, end: usize, label: String) -> Self {
        Bracketings {
            start,
            end,
            label,
            state: State::Fresh,
        }
    }

    /// Starts the sub-enumerations for a given split point, where the left
    /// part is `start..=split`.
    fn enter_split(&mut self, split: usize) {
        let mut left = Box::new(Bracketings::new(self.start, split, self.label.clone()));
        let right = Box::new(Bracketings::new(split + 1, self.end, self.label.clone()));
        let current_left = left.next().expect("non-empty range has a bracketing");
        self.state = State::Split {
            split,
            left,
            right,
            current_left,
        };
    }
}

impl Iterator for Bracketings {
    type Item = NestingTree;

    fn next(&mut self) -> Option<NestingTree> {
        if self.start == self.end {
            return match self.state {
                State::Fresh => {
                    self.state = State::Done;
                    Some(NestingTree::Leaf(self.start))
                }
                _ => None,
            };
        }

        if let State::Fresh = self.state {
            // Largest left part first, so left-branching trees come first.
            self.enter_split(self.end - 1);
        }

        loop {
            let next_split = match &mut self.state {
                State::Done | State::Fresh => return None,
                State::Split {
                    split,
                    left,
                    right,
                    current_left,
                } => {
                    if let Some(r) = right.next() {
                        return Some(NestingTree::node(current_left.clone(), r, self.label.clone()));
                    }
                    if let Some(l) = left.next() {
                        *current_left = l;
                        **right = Bracketings::new(*split + 1, self.end, self.label.clone());
                        continue;
                    }
                    if *split == self.start {
                        None
                    } else {
                        Some(*split - 1)
                    }
                }
            };
            match next_split {
                Some(split) => self.enter_split(split),
                None => {
                    self.state = State::Done;
                    return None;
                }
            }
        }
    }
}
