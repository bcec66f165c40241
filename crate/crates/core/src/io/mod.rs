//! Corpus files, CoNLL-style dependency export and dataset statistics.

mod conll;
mod corpus;
mod stats;

pub use conll::{parse_conll, write_conll};
pub use corpus::{load_corpus, parse_corpus, render_corpus, ContextMode};
pub use stats::{corpus_stats, DatasetStats};
