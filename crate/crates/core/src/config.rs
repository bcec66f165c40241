//! Model and training configuration.
//!
//! Configuration files are line oriented `key=value` pairs with `#`
//! comments.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub word_dim: usize,
    pub char_dim: usize,
    pub char_feature_dim: usize,
    pub span_dim: usize,
    pub lstm_hidden: usize,
    pub lstm_layers: usize,
    pub arc_mlp_dim: usize,
    pub label_mlp_dim: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub grad_clip: f64,
    pub min_count: usize,
    pub use_span_encoding: bool,
    pub use_pretrained_vectors: bool,
    pub use_contextual_vectors: bool,
    /// Dimension of ingested contextual vectors; only read when
    /// `use_contextual_vectors` is set.
    pub contextual_dim: usize,
    pub use_context: bool,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            word_dim: 300,
            char_dim: 50,
            char_feature_dim: 100,
            span_dim: 50,
            lstm_hidden: 256,
            lstm_layers: 2,
            arc_mlp_dim: 512,
            label_mlp_dim: 128,
            dropout: 0.33,
            learning_rate: 0.002,
            batch_size: 16,
            epochs: 100,
            grad_clip: 5.0,
            min_count: 1,
            use_span_encoding: true,
            use_pretrained_vectors: true,
            use_contextual_vectors: false,
            contextual_dim: 0,
            use_context: true,
            seed: 1,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{}` for `{}`", value, key)))
}

impl ModelConfig {
    /// Sets a single option by key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "word_dim" => self.word_dim = parse_value(key, value)?,
            "char_dim" => self.char_dim = parse_value(key, value)?,
            "char_feature_dim" => self.char_feature_dim = parse_value(key, value)?,
            "span_dim" => self.span_dim = parse_value(key, value)?,
            "lstm_hidden" => self.lstm_hidden = parse_value(key, value)?,
            "lstm_layers" => self.lstm_layers = parse_value(key, value)?,
            "arc_mlp_dim" => self.arc_mlp_dim = parse_value(key, value)?,
            "label_mlp_dim" => self.label_mlp_dim = parse_value(key, value)?,
            "dropout" => self.dropout = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "grad_clip" => self.grad_clip = parse_value(key, value)?,
            "min_count" => self.min_count = parse_value(key, value)?,
            "use_span_encoding" => self.use_span_encoding = parse_value(key, value)?,
            "use_pretrained_vectors" => self.use_pretrained_vectors = parse_value(key, value)?,
            "use_contextual_vectors" => self.use_contextual_vectors = parse_value(key, value)?,
            "contextual_dim" => self.contextual_dim = parse_value(key, value)?,
            "use_context" => self.use_context = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            other => return Err(Error::Config(format!("unknown key `{}`", other))),
        }
        Ok(())
    }

    /// Applies `key=value` lines on top of `self`.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut config = ModelConfig::default();
        config.apply_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ModelConfig::from_kv_str(&fs::read_to_string(path)?)
    }

    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            writeln!(s, "{}={}", k, v).unwrap();
        };
        kv("word_dim", &self.word_dim);
        kv("char_dim", &self.char_dim);
        kv("char_feature_dim", &self.char_feature_dim);
        kv("span_dim", &self.span_dim);
        kv("lstm_hidden", &self.lstm_hidden);
        kv("lstm_layers", &self.lstm_layers);
        kv("arc_mlp_dim", &self.arc_mlp_dim);
        kv("label_mlp_dim", &self.label_mlp_dim);
        kv("dropout", &self.dropout);
        kv("learning_rate", &self.learning_rate);
        kv("batch_size", &self.batch_size);
        kv("epochs", &self.epochs);
        kv("grad_clip", &self.grad_clip);
        kv("min_count", &self.min_count);
        kv("use_span_encoding", &self.use_span_encoding);
        kv("use_pretrained_vectors", &self.use_pretrained_vectors);
        kv("use_contextual_vectors", &self.use_contextual_vectors);
        kv("contextual_dim", &self.contextual_dim);
        kv("use_context", &self.use_context);
        kv("seed", &self.seed);
        s
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("char_dim", self.char_dim),
            ("char_feature_dim", self.char_feature_dim),
            ("lstm_hidden", self.lstm_hidden),
            ("lstm_layers", self.lstm_layers),
            ("arc_mlp_dim", self.arc_mlp_dim),
            ("label_mlp_dim", self.label_mlp_dim),
            ("batch_size", self.batch_size),
            ("min_count", self.min_count),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("`{}` must be positive", key)));
            }
        }
        if self.use_contextual_vectors {
            if self.contextual_dim == 0 {
                return Err(Error::Config(
                    "`contextual_dim` must be positive with contextual vectors".to_owned(),
                ));
            }
        } else if self.word_dim == 0 {
            return Err(Error::Config("`word_dim` must be positive".to_owned()));
        }
        if self.use_span_encoding && self.span_dim == 0 {
            return Err(Error::Config("`span_dim` must be positive".to_owned()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("`dropout` must lie in [0, 1)".to_owned()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("`learning_rate` must be positive".to_owned()));
        }
        Ok(())
    }

    /// Width of the token representation fed to the recurrent encoder.
    pub fn input_dim(&self) -> usize {
        let word = if self.use_contextual_vectors {
            self.contextual_dim
        } else {
            self.word_dim
        };
        let span = if self.use_span_encoding { self.span_dim } else { 0 };
        word + self.char_feature_dim + span
    }
}
