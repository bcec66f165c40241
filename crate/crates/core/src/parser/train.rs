use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{predicted_spans, Model};
use crate::encoder::ContextualVectors;
use crate::error::{Error, Result};
use crate::eval::{exact_match, gold_spans, span_scores, Average};
use crate::num::{Gradients, Graph};
use crate::sentence::Sentence;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Sentences with their optional contextual vectors.
#[derive(Clone, Copy, Debug)]
pub struct Dataset<'a> {
    pub sentences: &'a [Sentence],
    pub contextual: Option<&'a ContextualVectors>,
}

impl<'a> Dataset<'a> {
    pub fn new(sentences: &'a [Sentence]) -> Self {
        Dataset {
            sentences,
            contextual: None,
        }
    }

    pub fn with_contextual(sentences: &'a [Sentence], contextual: Option<&'a ContextualVectors>) -> Self {
        Dataset {
            sentences,
            contextual,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DevScores {
    pub uss_f1: f64,
    pub lss_f1: f64,
    pub em: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-sentence loss over the epoch.
    pub loss: f64,
    pub dev: Option<DevScores>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainStats {
    pub epochs: Vec<EpochStats>,
    /// Index into `epochs` of the kept parameters: best dev LSS, or the
    /// last epoch without a dev set.
    pub best_epoch: usize,
}

impl TrainStats {
    pub fn best(&self) -> &EpochStats {
        &self.epochs[self.best_epoch]
    }
}

/// Scores `model` on `data` against its gold analyses.
pub fn dev_scores(model: &Model, data: Dataset) -> Result<DevScores> {
    let gold = gold_spans(data.sentences)?;
    let parses = model.parse(data.sentences, data.contextual)?;
    let pred = predicted_spans(&parses);
    let (uss, lss) = span_scores(&pred, &gold, Average::Micro)?;
    Ok(DevScores {
        uss_f1: uss.f1,
        lss_f1: lss.f1,
        em: exact_match(&pred, &gold)?,
    })
}

/// Mini-batch Adam training with seeded shuffling. With a non-empty dev set
/// the parameters of the best dev LSS epoch are kept. `on_epoch` sees
/// every finished epoch.
pub fn train(
    model: &mut Model,
    train: Dataset,
    dev: Option<Dataset>,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainStats> {
    if train.sentences.is_empty() {
        return Err(Error::Data("empty training set".to_owned()));
    }
    let golds = train
        .sentences
        .iter()
        .map(|s| model.gold_graph(s))
        .collect::<Result<Vec<_>>>()?;
    let dev = dev.filter(|d| !d.sentences.is_empty());
    if let Some(d) = dev {
        gold_spans(d.sentences)?;
    }
    let config = model.config().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    let mut order: Vec<usize> = (0..train.sentences.len()).collect();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut epochs = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, crate::num::ParamStore<f32>)> = None;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            let seeds: Vec<u64> = batch.iter().map(|_| rng.gen()).collect();
            let jobs: Vec<(usize, u64)> = batch.iter().copied().zip(seeds).collect();
            let per_sentence = {
                let model = &*model;
                let golds = &golds;
                let run = move |&(i, seed): &(usize, u64)| -> Result<(f64, Gradients<f32>)> {
                    let mut g = Graph::training(model.store(), seed);
                    let loss = model.loss(&mut g, &train.sentences[i], &golds[i], train.contextual)?;
                    let mut grads = model.store().gradients();
                    g.backward(loss, &mut grads);
                    Ok((g.value(loss).item() as f64, grads))
                };
                if workers <= 1 || jobs.len() == 1 {
                    jobs.iter().map(run).collect::<Vec<_>>()
                } else {
                    let chunk = jobs.len().div_ceil(workers);
                    std::thread::scope(|scope| {
                        let handles: Vec<_> = jobs
                            .chunks(chunk)
                            .map(|part| scope.spawn(move || part.iter().map(run).collect::<Vec<_>>()))
                            .collect();
                        handles
                            .into_iter()
                            .flat_map(|h| h.join().expect("training thread panicked"))
                            .collect()
                    })
                }
            };
            // Merged in batch order so results do not depend on threading.
            let mut grads = model.store().gradients();
            for r in per_sentence {
                let (loss, g) = r?;
                total += loss;
                grads.merge(&g);
            }
            grads.scale(1.0 / batch.len() as f32);
            let store = model.store_mut();
            store.accumulate(&grads);
            store.clip_grad_norm(config.grad_clip);
            store.adam_step(config.learning_rate, BETA1, BETA2, EPS);
        }
        let dev_result = dev.map(|d| dev_scores(model, d)).transpose()?;
        let stats = EpochStats {
            epoch: epoch + 1,
            loss: total / train.sentences.len() as f64,
            dev: dev_result,
        };
        if let Some(d) = dev_result {
            if best.as_ref().is_none_or(|(b, _, _)| d.lss_f1 > *b) {
                best = Some((d.lss_f1, epochs.len(), model.store().clone()));
            }
        }
        on_epoch(&stats);
        epochs.push(stats);
    }
    if epochs.is_empty() {
        return Err(Error::Config("`epochs` must be positive to train".to_owned()));
    }
    let best_epoch = match best {
        Some((_, idx, store)) => {
            *model.store_mut() = store;
            idx
        }
        None => epochs.len() - 1,
    };
    Ok(TrainStats { epochs, best_epoch })
}
