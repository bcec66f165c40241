//! Pretrained word vectors (`.vec` text) and contextual vector files.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::num::Tensor;
use crate::sentence::Sentence;

/// Word vectors in the common `.vec` layout: an optional `count dim`
/// header line, then `token v1 … vd` per line.
#[derive(Clone, Debug)]
pub struct PretrainedVectors {
    dim: usize,
    vectors: HashMap<String, Vec<f32>>,
}

impl PretrainedVectors {
    pub fn parse(text: &str) -> Result<Self> {
        let mut dim = None;
        let mut vectors = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if lineno == 0 && fields.len() == 2 && fields.iter().all(|f| f.parse::<usize>().is_ok()) {
                dim = Some(fields[1].parse().expect("checked"));
                continue;
            }
            let values = fields[1..]
                .iter()
                .map(|f| f.parse::<f32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse(lineno + 1, "non-numeric vector component"))?;
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(Error::parse(
                        lineno + 1,
                        format!("vector of dimension {}, expected {}", values.len(), d),
                    ))
                }
                _ => {}
            }
            vectors.insert(fields[0].to_owned(), values);
        }
        let dim = dim.ok_or_else(|| Error::Data("empty vector file".to_owned()))?;
        if dim == 0 {
            return Err(Error::Data("vector file with zero dimension".to_owned()));
        }
        Ok(PretrainedVectors { dim, vectors })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        PretrainedVectors::parse(&fs::read_to_string(path)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.vectors.get(word).map(Vec::as_slice)
    }
}

const CONTEXTUAL_MAGIC: &[u8; 4] = b"NCTV";
const CONTEXTUAL_VERSION: u32 = 1;

/// Per-token vectors keyed by sentence id.
///
/// Binary layout: magic `NCTV`, version u32, dim u32, then records of
/// (u32 length + UTF-8 sentence id, u32 token count, count × dim f32),
/// all little-endian.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContextualVectors {
    dim: usize,
    order: Vec<String>,
    sentences: HashMap<String, Tensor<f32>>,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("unexpected end of file".to_owned()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("invalid UTF-8 string".to_owned()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        Ok(self
            .take(n * 4)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }

    fn at_end(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

pub(crate) fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

pub(crate) fn put_string(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

impl ContextualVectors {
    pub fn new(dim: usize) -> Self {
        ContextualVectors {
            dim,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn insert(&mut self, sentence_id: impl Into<String>, vectors: Tensor<f32>) -> Result<()> {
        let id = sentence_id.into();
        if vectors.cols() != self.dim {
            return Err(Error::Shape(format!(
                "vectors of width {} for a file of dimension {}",
                vectors.cols(),
                self.dim
            )));
        }
        if self.sentences.insert(id.clone(), vectors).is_some() {
            return Err(Error::Data(format!("duplicate sentence id `{}`", id)));
        }
        self.order.push(id);
        Ok(())
    }

    pub fn get(&self, sentence_id: &str) -> Option<&Tensor<f32>> {
        self.sentences.get(sentence_id)
    }

    /// Vectors for `sentence`, which must match its token count.
    pub fn for_sentence(&self, sentence: &Sentence) -> Result<&Tensor<f32>> {
        let t = self.get(sentence.id()).ok_or_else(|| {
            Error::Data(format!("missing contextual vectors for sentence {}", sentence.id()))
        })?;
        if t.rows() != sentence.len() {
            return Err(Error::Data(format!(
                "missing contextual vector: sentence {} has {} tokens but {} vectors",
                sentence.id(),
                sentence.len(),
                t.rows()
            )));
        }
        Ok(t)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CONTEXTUAL_MAGIC);
        put_u32(&mut out, CONTEXTUAL_VERSION);
        put_u32(&mut out, self.dim as u32);
        for id in &self.order {
            let t = &self.sentences[id];
            put_string(&mut out, id);
            put_u32(&mut out, t.rows() as u32);
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CONTEXTUAL_MAGIC {
            return Err(Error::Format("not a contextual vector file (bad magic)".to_owned()));
        }
        let version = r.u32()?;
        if version != CONTEXTUAL_VERSION {
            return Err(Error::Format(format!("unsupported contextual vector version {}", version)));
        }
        let dim = r.u32()? as usize;
        let mut out = ContextualVectors::new(dim);
        while !r.at_end() {
            let id = r.string()?;
            let n = r.u32()? as usize;
            let data = r.f32s(n * dim)?;
            if n == 0 {
                return Err(Error::Format(format!("sentence `{}` has no tokens", id)));
            }
            out.insert(id, Tensor::matrix(n, dim, data))?;
        }
        Ok(out)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ContextualVectors::from_bytes(&fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}
