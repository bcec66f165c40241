use std::collections::{BTreeMap, HashMap};

use crate::sentence::Sentence;

pub const PAD: usize = 0;
pub const UNK: usize = 1;

const PAD_WORD: &str = "<pad>";
const UNK_WORD: &str = "<unk>";

/// Word and character indices; 0 and 1 are reserved for padding and
/// unknown entries in both maps.
#[derive(Clone, Debug, Eq, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    word_index: HashMap<String, usize>,
    chars: Vec<char>,
    char_index: HashMap<char, usize>,
}

impl Vocabulary {
    /// Builds indices from training sentences. Words seen fewer than
    /// `min_count` times map to UNK; indices follow sorted order.
    pub fn build(sentences: &[Sentence], min_count: usize) -> Self {
        let mut word_counts: BTreeMap<&str, usize> = BTreeMap::new();
        let mut chars = std::collections::BTreeSet::new();
        for s in sentences {
            for t in s.tokens() {
                *word_counts.entry(t.surface.as_str()).or_default() += 1;
                chars.extend(t.surface.chars());
            }
        }
        let words = word_counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .map(|(w, _)| w.to_owned())
            .collect();
        Vocabulary::from_lists(words, chars.into_iter().collect())
    }

    /// Vocabulary from explicit entry lists (reserved entries excluded).
    pub fn from_lists(words: Vec<String>, chars: Vec<char>) -> Self {
        let mut all_words = vec![PAD_WORD.to_owned(), UNK_WORD.to_owned()];
        all_words.extend(words);
        let word_index = all_words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let mut all_chars = vec!['\u{0}', '\u{1}'];
        all_chars.extend(chars);
        let char_index = all_chars.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Vocabulary {
            words: all_words,
            word_index,
            chars: all_chars,
            char_index,
        }
    }

    pub fn n_words(&self) -> usize {
        self.words.len()
    }

    pub fn n_chars(&self) -> usize {
        self.chars.len()
    }

    pub fn word_id(&self, word: &str) -> usize {
        // The reserved names are not reachable from real tokens.
        match self.word_index.get(word) {
            Some(&i) if i > UNK => i,
            _ => UNK,
        }
    }

    pub fn char_id(&self, c: char) -> usize {
        match self.char_index.get(&c) {
            Some(&i) if i > UNK => i,
            _ => UNK,
        }
    }

    /// Non-reserved words in index order.
    pub fn word_entries(&self) -> &[String] {
        &self.words[2..]
    }

    pub fn char_entries(&self) -> &[char] {
        &self.chars[2..]
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id]
    }
}
