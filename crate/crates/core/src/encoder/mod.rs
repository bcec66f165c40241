//! Token representations and the recurrent encoder.
//!
//! Each token is represented by `[word ; char_feature ; span]` where the
//! character feature comes from a width-3 convolution with max-pooling
//! over the surface form and the span vector marks compound membership.
//! With contextual vectors the word embedding is replaced by the
//! precomputed vector. A stacked bidirectional LSTM then produces one
//! state per token; the Global node gets its own learned state as row 0.

mod vectors;
mod vocab;

use rand::Rng;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::num::{Graph, ParamId, ParamStore, Scalar, Tensor, Var};
use crate::sentence::Sentence;

pub use vectors::{ContextualVectors, PretrainedVectors};
pub(crate) use vectors::{put_string, put_u32};
pub use vocab::{Vocabulary, PAD, UNK};

const EMBED_INIT: f64 = 0.1;
const CHAR_WINDOW: usize = 3;

pub(crate) fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut impl Rng) -> Tensor<f32> {
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound) as f32).collect();
    Tensor::matrix(rows, cols, data)
}

/// Glorot uniform initialization for a `fan_in × fan_out` matrix.
pub(crate) fn glorot(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Tensor<f32> {
    uniform(fan_in, fan_out, (6.0 / (fan_in + fan_out) as f64).sqrt(), rng)
}

#[derive(Clone, Copy, Debug)]
struct LstmParams {
    w_ih: ParamId,
    w_hh: ParamId,
    b: ParamId,
}

/// Parameter handles and dimensions of the token encoder.
#[derive(Clone, Debug)]
pub struct Encoder {
    word_emb: Option<ParamId>,
    char_emb: ParamId,
    char_conv_w: ParamId,
    char_conv_b: ParamId,
    span_emb: Option<ParamId>,
    lstm: Vec<[LstmParams; 2]>,
    global: ParamId,
    hidden: usize,
    contextual_dim: Option<usize>,
    dropout: f64,
    use_context: bool,
}

fn lstm_name(layer: usize, dir: usize, part: &str) -> String {
    format!("lstm.{}.{}.{}", layer, if dir == 0 { "fwd" } else { "bwd" }, part)
}

fn lookup<T: Scalar>(store: &ParamStore<T>, name: &str) -> Result<ParamId> {
    store
        .id(name)
        .ok_or_else(|| Error::Format(format!("missing parameter `{}`", name)))
}

impl Encoder {
    /// Registers freshly initialized encoder parameters in `store`.
    ///
    /// Words found in `pretrained` start from their file vectors.
    pub fn init(
        store: &mut ParamStore<f32>,
        config: &ModelConfig,
        vocab: &Vocabulary,
        pretrained: Option<&PretrainedVectors>,
        rng: &mut impl Rng,
    ) -> Result<Encoder> {
        if !config.use_contextual_vectors {
            let mut table = uniform(vocab.n_words(), config.word_dim, EMBED_INIT, rng);
            if let Some(pv) = pretrained {
                if pv.dim() != config.word_dim {
                    return Err(Error::Config(format!(
                        "pretrained vectors have dimension {}, word_dim is {}",
                        pv.dim(),
                        config.word_dim
                    )));
                }
                let d = config.word_dim;
                for (i, w) in vocab.word_entries().iter().enumerate() {
                    if let Some(v) = pv.get(w) {
                        let row = i + 2;
                        table.data_mut()[row * d..(row + 1) * d].copy_from_slice(v);
                    }
                }
            }
            table.data_mut()[..config.word_dim].fill(0.0);
            store.add("word_emb", table)?;
        }
        let mut chars = uniform(vocab.n_chars(), config.char_dim, EMBED_INIT, rng);
        chars.data_mut()[..config.char_dim].fill(0.0);
        store.add("char_emb", chars)?;
        store.add(
            "char_conv.w",
            glorot(CHAR_WINDOW * config.char_dim, config.char_feature_dim, rng),
        )?;
        store.add("char_conv.b", Tensor::zeros(&[1, config.char_feature_dim]))?;
        if config.use_span_encoding {
            store.add("span_emb", uniform(2, config.span_dim, EMBED_INIT, rng))?;
        }
        let h = config.lstm_hidden;
        let mut input = config.input_dim();
        for layer in 0..config.lstm_layers {
            for dir in 0..2 {
                store.add(lstm_name(layer, dir, "w_ih"), glorot(input, 4 * h, rng))?;
                store.add(lstm_name(layer, dir, "w_hh"), glorot(h, 4 * h, rng))?;
                // Gate layout is [input, forget, output, candidate].
                let mut b = Tensor::zeros(&[1, 4 * h]);
                b.data_mut()[h..2 * h].fill(1.0);
                store.add(lstm_name(layer, dir, "b"), b)?;
            }
            input = 2 * h;
        }
        store.add("global", uniform(1, 2 * h, EMBED_INIT, rng))?;
        Encoder::bind(store, config)
    }

    /// Looks up the encoder parameters of an existing store by name.
    pub fn bind<T: Scalar>(store: &ParamStore<T>, config: &ModelConfig) -> Result<Encoder> {
        let mut lstm = Vec::with_capacity(config.lstm_layers);
        for layer in 0..config.lstm_layers {
            let mut dirs = [None, None];
            for (dir, slot) in dirs.iter_mut().enumerate() {
                *slot = Some(LstmParams {
                    w_ih: lookup(store, &lstm_name(layer, dir, "w_ih"))?,
                    w_hh: lookup(store, &lstm_name(layer, dir, "w_hh"))?,
                    b: lookup(store, &lstm_name(layer, dir, "b"))?,
                });
            }
            lstm.push(dirs.map(|p| p.expect("filled")));
        }
        let enc = Encoder {
            word_emb: if config.use_contextual_vectors {
                None
            } else {
                Some(lookup(store, "word_emb")?)
            },
            char_emb: lookup(store, "char_emb")?,
            char_conv_w: lookup(store, "char_conv.w")?,
            char_conv_b: lookup(store, "char_conv.b")?,
            span_emb: if config.use_span_encoding {
                Some(lookup(store, "span_emb")?)
            } else {
                None
            },
            lstm,
            global: lookup(store, "global")?,
            hidden: config.lstm_hidden,
            contextual_dim: config.use_contextual_vectors.then_some(config.contextual_dim),
            dropout: config.dropout,
            use_context: config.use_context,
        };
        let expected = config.input_dim();
        let w_ih = store.value(enc.lstm[0][0].w_ih);
        if w_ih.shape() != [expected, 4 * config.lstm_hidden] {
            return Err(Error::Shape(format!(
                "encoder input weight has shape {:?}, config implies [{}, {}]",
                w_ih.shape(),
                expected,
                4 * config.lstm_hidden
            )));
        }
        Ok(enc)
    }

    /// Width of each row of [`Encoder::encode`].
    pub fn output_dim(&self) -> usize {
        2 * self.hidden
    }

    /// Token representations, one row per token.
    pub fn embed_tokens<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        sentence: &Sentence,
        vocab: &Vocabulary,
        contextual: Option<&ContextualVectors>,
    ) -> Result<Var> {
        let tokens = sentence.tokens();
        if tokens.is_empty() {
            return Err(Error::Data(format!("sentence {} is empty", sentence.id())));
        }
        let mut parts = Vec::with_capacity(3);
        match (self.word_emb, self.contextual_dim) {
            (Some(table), _) => {
                let ids: Vec<usize> = tokens.iter().map(|t| vocab.word_id(&t.surface)).collect();
                let table = g.param(table);
                parts.push(g.gather_rows(table, &ids));
            }
            (None, Some(dim)) => {
                let cv = contextual.ok_or_else(|| {
                    Error::Data("contextual vectors required but not supplied".to_owned())
                })?;
                if cv.dim() != dim {
                    return Err(Error::Shape(format!(
                        "contextual vectors have dimension {}, model expects {}",
                        cv.dim(),
                        dim
                    )));
                }
                let t = cv.for_sentence(sentence)?;
                parts.push(g.input(t.cast()));
            }
            (None, None) => unreachable!("encoder without word input"),
        }
        parts.push(self.char_features(g, sentence, vocab));
        if let Some(span) = self.span_emb {
            let ids: Vec<usize> = tokens.iter().map(|t| usize::from(t.is_component())).collect();
            let table = g.param(span);
            parts.push(g.gather_rows(table, &ids));
        }
        Ok(g.concat_cols(&parts))
    }

    fn char_features<T: Scalar>(&self, g: &mut Graph<T>, sentence: &Sentence, vocab: &Vocabulary) -> Var {
        // All windows of all tokens are convolved in one product; pooling
        // then runs over each token's block of rows.
        let mut left = Vec::new();
        let mut mid = Vec::new();
        let mut right = Vec::new();
        let mut blocks = Vec::with_capacity(sentence.len());
        for t in sentence.tokens() {
            let ids: Vec<usize> = t.surface.chars().map(|c| vocab.char_id(c)).collect();
            let start = mid.len();
            for j in 0..ids.len() {
                left.push(if j == 0 { PAD } else { ids[j - 1] });
                mid.push(ids[j]);
                right.push(ids.get(j + 1).copied().unwrap_or(PAD));
            }
            blocks.push((start, mid.len()));
        }
        let table = g.param(self.char_emb);
        let l = g.gather_rows(table, &left);
        let m = g.gather_rows(table, &mid);
        let r = g.gather_rows(table, &right);
        let windows = g.concat_cols(&[l, m, r]);
        let w = g.param(self.char_conv_w);
        let b = g.param(self.char_conv_b);
        let conv = g.affine(windows, w, b);
        let pooled: Vec<Var> = blocks
            .iter()
            .map(|&(s, e)| {
                let block = g.slice_rows(conv, s, e);
                g.max_rows(block)
            })
            .collect();
        let pooled = g.concat_rows(&pooled);
        g.tanh(pooled)
    }

    /// Runs the recurrent encoder over `x` (one row per token) and prepends
    /// the Global state: the result has `tokens + 1` rows.
    ///
    /// Without sentence context every compound and every maximal run of
    /// plain words is encoded as its own sequence.
    pub fn encode<T: Scalar>(&self, g: &mut Graph<T>, x: Var, sentence: &Sentence) -> Result<Var> {
        let n = g.value(x).rows();
        if n == 0 {
            return Err(Error::Data("cannot encode an empty sequence".to_owned()));
        }
        let segments = if self.use_context {
            vec![(0, n)]
        } else {
            segments(sentence)
        };
        let x = g.dropout(x, self.dropout);
        let mut outputs = Vec::with_capacity(segments.len() + 1);
        outputs.push(g.param(self.global));
        for (s, e) in segments {
            let mut h = g.slice_rows(x, s, e);
            for layer in &self.lstm {
                let fwd = self.lstm_pass(g, h, &layer[0], false);
                let bwd = self.lstm_pass(g, h, &layer[1], true);
                let both = g.concat_cols(&[fwd, bwd]);
                h = g.dropout(both, self.dropout);
            }
            outputs.push(h);
        }
        let out = g.concat_rows(&outputs);
        g.ensure_finite()?;
        Ok(out)
    }

    /// Embeds and encodes a sentence.
    pub fn forward<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        sentence: &Sentence,
        vocab: &Vocabulary,
        contextual: Option<&ContextualVectors>,
    ) -> Result<Var> {
        let x = self.embed_tokens(g, sentence, vocab, contextual)?;
        self.encode(g, x, sentence)
    }

    fn lstm_pass<T: Scalar>(&self, g: &mut Graph<T>, x: Var, p: &LstmParams, reverse: bool) -> Var {
        let h = self.hidden;
        let steps = g.value(x).rows();
        let w_ih = g.param(p.w_ih);
        let w_hh = g.param(p.w_hh);
        let b = g.param(p.b);
        let projected = g.affine(x, w_ih, b);
        let mut states = vec![None; steps];
        let mut prev: Option<(Var, Var)> = None;
        let order: Vec<usize> = if reverse {
            (0..steps).rev().collect()
        } else {
            (0..steps).collect()
        };
        for t in order {
            let mut gates = g.slice_rows(projected, t, t + 1);
            if let Some((h_prev, _)) = prev {
                let rec = g.matmul(h_prev, w_hh);
                gates = g.add(gates, rec);
            }
            let sig = g.slice_cols(gates, 0, 3 * h);
            let sig = g.sigmoid(sig);
            let cand = g.slice_cols(gates, 3 * h, 4 * h);
            let cand = g.tanh(cand);
            let i = g.slice_cols(sig, 0, h);
            let o = g.slice_cols(sig, 2 * h, 3 * h);
            let mut c = g.mul(i, cand);
            if let Some((_, c_prev)) = prev {
                let f = g.slice_cols(sig, h, 2 * h);
                let kept = g.mul(f, c_prev);
                c = g.add(c, kept);
            }
            let tc = g.tanh(c);
            let h_t = g.mul(o, tc);
            states[t] = Some(h_t);
            prev = Some((h_t, c));
        }
        let states: Vec<Var> = states.into_iter().map(|s| s.expect("every step visited")).collect();
        g.concat_rows(&states)
    }
}

/// Token ranges encoded separately when sentence context is disabled.
fn segments(sentence: &Sentence) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sentence.len() {
        match sentence.compound_of(i) {
            Some(c) => {
                let c = &sentence.compounds()[c];
                out.push((c.token_start, c.token_end + 1));
                i = c.token_end + 1;
            }
            None => {
                let start = i;
                while i < sentence.len() && sentence.compound_of(i).is_none() {
                    i += 1;
                }
                out.push((start, i));
            }
        }
    }
    out
}
