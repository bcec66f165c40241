//! Biaffine arc and label scoring, constrained decoding, training and the
//! model file.

mod decode;
mod model_file;
mod score;
mod train;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::ModelConfig;
use crate::encoder::{ContextualVectors, Encoder, PretrainedVectors, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::CompoundSpans;
use crate::label::LabelInventory;
use crate::num::{Graph, ParamStore, Scalar, Var};
use crate::sentence::Sentence;
use crate::tree::{dependency_to_tree, gold_graph, tree_to_spans, DependencyGraph, NestingTree, SpanTuple};

pub use decode::{arc_weight, best_label, decode};
pub use score::{loss, ScoreMatrices, ScoreVars, Scorer};
pub use train::{dev_scores, train, Dataset, DevScores, EpochStats, TrainStats};

/// A parser: configuration, label inventory, vocabulary and parameters.
#[derive(Clone, Debug)]
pub struct Model {
    config: ModelConfig,
    inventory: LabelInventory,
    vocab: Vocabulary,
    store: ParamStore<f32>,
    encoder: Encoder,
    scorer: Scorer,
}

/// Analysis of one compound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompoundParse {
    pub id: String,
    pub tree: NestingTree,
    pub spans: Vec<SpanTuple>,
}

/// Output for one sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Parse {
    pub graph: DependencyGraph,
    pub compounds: Vec<CompoundParse>,
}

impl Parse {
    pub fn compound_spans(&self) -> impl Iterator<Item = CompoundSpans> + '_ {
        self.compounds.iter().map(|c| CompoundSpans {
            id: c.id.clone(),
            n_components: c.tree.n_leaves(),
            spans: c.spans.clone(),
        })
    }
}

/// Span sets of all compounds in `parses`, in order.
pub fn predicted_spans(parses: &[Parse]) -> Vec<CompoundSpans> {
    parses.iter().flat_map(Parse::compound_spans).collect()
}

impl Model {
    /// Freshly initialized model; the generator is seeded from the config.
    pub fn new(
        config: ModelConfig,
        inventory: LabelInventory,
        vocab: Vocabulary,
        pretrained: Option<&PretrainedVectors>,
    ) -> Result<Model> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let pretrained = if config.use_pretrained_vectors { pretrained } else { None };
        let encoder = Encoder::init(&mut store, &config, &vocab, pretrained, &mut rng)?;
        let scorer = Scorer::init(&mut store, &config, encoder.output_dim(), inventory.len(), &mut rng)?;
        Ok(Model {
            config,
            inventory,
            vocab,
            store,
            encoder,
            scorer,
        })
    }

    /// Model around existing parameters.
    pub fn from_parts(
        config: ModelConfig,
        inventory: LabelInventory,
        vocab: Vocabulary,
        store: ParamStore<f32>,
    ) -> Result<Model> {
        config.validate()?;
        let encoder = Encoder::bind(&store, &config)?;
        let scorer = Scorer::bind(&store, &config)?;
        Ok(Model {
            config,
            inventory,
            vocab,
            store,
            encoder,
            scorer,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn inventory(&self) -> &LabelInventory {
        &self.inventory
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn store(&self) -> &ParamStore<f32> {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore<f32> {
        &mut self.store
    }

    fn contextual_for<'c>(&self, contextual: Option<&'c ContextualVectors>) -> Result<Option<&'c ContextualVectors>> {
        if self.config.use_contextual_vectors && contextual.is_none() {
            return Err(Error::Data("this model needs contextual vectors".to_owned()));
        }
        Ok(contextual)
    }

    /// Records encoder and scorer on `g`. The graph may run over a cast
    /// copy of the parameters (same names and order).
    pub fn forward<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        sentence: &Sentence,
        contextual: Option<&ContextualVectors>,
    ) -> Result<ScoreVars> {
        let contextual = self.contextual_for(contextual)?;
        let h = self.encoder.forward(g, sentence, &self.vocab, contextual)?;
        Ok(self.scorer.forward(g, h))
    }

    /// Training loss of one sentence against its gold graph.
    pub fn loss<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        sentence: &Sentence,
        gold: &DependencyGraph,
        contextual: Option<&ContextualVectors>,
    ) -> Result<Var> {
        let vars = self.forward(g, sentence, contextual)?;
        let l = loss(g, &vars, gold, &self.inventory)?;
        g.ensure_finite()?;
        Ok(l)
    }

    /// Gold dependency graph under this model's head rules.
    pub fn gold_graph(&self, sentence: &Sentence) -> Result<DependencyGraph> {
        gold_graph(sentence, self.inventory.head_rules())
    }

    pub fn scores(&self, sentence: &Sentence, contextual: Option<&ContextualVectors>) -> Result<ScoreMatrices> {
        let mut g = Graph::new(&self.store);
        let vars = self.forward(&mut g, sentence, contextual)?;
        g.ensure_finite()?;
        Ok(vars.matrices(&g))
    }

    pub fn parse_sentence(&self, sentence: &Sentence, contextual: Option<&ContextualVectors>) -> Result<Parse> {
        let scores = self.scores(sentence, contextual)?;
        analyse(&scores, sentence, &self.inventory)
    }

    /// Parses `sentences`, spreading the work over available cores. Output
    /// order follows input order.
    pub fn parse(&self, sentences: &[Sentence], contextual: Option<&ContextualVectors>) -> Result<Vec<Parse>> {
        let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(sentences.len().max(1));
        if workers <= 1 {
            return sentences.iter().map(|s| self.parse_sentence(s, contextual)).collect();
        }
        let chunk = sentences.len().div_ceil(workers);
        let results: Vec<Result<Vec<Parse>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = sentences
                .chunks(chunk)
                .map(|part| scope.spawn(move || part.iter().map(|s| self.parse_sentence(s, contextual)).collect()))
                .collect();
            handles.into_iter().map(|h| h.join().expect("parser thread panicked")).collect()
        });
        let mut out = Vec::with_capacity(sentences.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }
}

/// Decodes `scores` and converts every compound back to a nesting.
pub fn analyse(scores: &ScoreMatrices, sentence: &Sentence, inventory: &LabelInventory) -> Result<Parse> {
    let graph = decode(scores, sentence, inventory);
    let mut compounds = Vec::with_capacity(sentence.compounds().len());
    for c in sentence.compounds() {
        let tree = dependency_to_tree(&graph.compound_arcs(c), c.token_start, inventory.head_rules())?;
        compounds.push(CompoundParse {
            id: c.id.clone(),
            spans: tree_to_spans(&tree),
            tree,
        });
    }
    Ok(Parse { graph, compounds })
}
