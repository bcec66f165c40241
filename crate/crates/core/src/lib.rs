//! Nested compound analysis as labeled dependency parsing.
//!
//! A multi-component compound is analysed as a full binary
//! parenthesization of its components with a semantic relation at every
//! internal node. The toolkit converts these nestings into dependency
//! trees hanging from an artificial Global node, scores arcs and labels
//! with a biaffine model over a recurrent encoder, and decodes the best
//! projective tree per compound.

pub mod config;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod io;
pub mod label;
pub mod num;
pub mod parser;
pub mod sentence;
pub mod synthetic;
pub mod tree;

pub use config::ModelConfig;
pub use error::{Error, Result};
pub use label::{HeadRules, HeadSide, Label, LabelInventory, LabelKind, LabelMode};
pub use sentence::{Compound, Item, Sentence, Token};
pub use tree::{DepArc, DependencyGraph, NestingTree, SpanTuple};
