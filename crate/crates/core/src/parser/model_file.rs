//! Binary model file: magic `DNCT`, version, config block, label
//! inventory block, vocabulary block and named f32 tensors.

use std::fs;
use std::path::Path;

use super::Model;
use crate::config::ModelConfig;
use crate::encoder::{put_string, put_u32, Vocabulary};
use crate::error::{Error, Result};
use crate::label::{LabelInventory, LabelMode};
use crate::num::{ParamStore, Tensor};

const MAGIC: &[u8; 4] = b"DNCT";
const VERSION: u32 = 1;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("model file is truncated".to_owned()));
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
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("invalid UTF-8 in model file".to_owned()))
    }
}

impl Model {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        put_string(&mut out, &self.config.to_kv_string());
        put_string(&mut out, self.inventory.mode().as_str());
        put_string(&mut out, &self.inventory.to_file_string());
        let words = self.vocab.word_entries();
        put_u32(&mut out, words.len() as u32);
        for w in words {
            put_string(&mut out, w);
        }
        let chars = self.vocab.char_entries();
        put_u32(&mut out, chars.len() as u32);
        for c in chars {
            put_string(&mut out, c.encode_utf8(&mut [0; 4]));
        }
        put_u32(&mut out, self.store.len() as u32);
        for id in self.store.ids() {
            let t = self.store.value(id);
            put_string(&mut out, self.store.name(id));
            put_u32(&mut out, t.shape().len() as u32);
            for &d in t.shape() {
                put_u32(&mut out, d as u32);
            }
            for x in t.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not a model file (bad magic)".to_owned()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported model file version {}", version)));
        }
        let config = ModelConfig::from_kv_str(&r.string()?)?;
        let mode: LabelMode = r.string()?.parse()?;
        let inventory = LabelInventory::parse(&r.string()?, mode)?;
        let n_words = r.u32()? as usize;
        let words = (0..n_words).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
        let n_chars = r.u32()? as usize;
        let mut chars = Vec::with_capacity(n_chars);
        for _ in 0..n_chars {
            let s = r.string()?;
            let mut it = s.chars();
            match (it.next(), it.next()) {
                (Some(c), None) => chars.push(c),
                _ => return Err(Error::Format(format!("bad character entry `{}`", s))),
            }
        }
        let vocab = Vocabulary::from_lists(words, chars);
        let n_tensors = r.u32()? as usize;
        let mut store = ParamStore::new();
        for _ in 0..n_tensors {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let len: usize = shape.iter().product();
            let data = r
                .take(len * 4)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            store.add(name, Tensor::new(shape, data)?)?;
        }
        if r.pos != bytes.len() {
            return Err(Error::Format("trailing bytes after model tensors".to_owned()));
        }
        Model::from_parts(config, inventory, vocab, store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model> {
        Model::from_bytes(&fs::read(path)?)
    }
}
