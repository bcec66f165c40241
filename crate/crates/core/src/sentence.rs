//! Sentences with compounds expanded into their component tokens.

use crate::error::{Error, Result};
use crate::tree::NestingTree;

/// A word or compound component after segmentation.
#[derive(Clone, Debug, Eq, PartialEq)]
pub struct Token {
    pub surface: String,
    /// `(compound id, 1-based component index)` for compound components.
    pub component: Option<(String, usize)>,
}

impl Token {
    pub fn word(surface: impl Into<String>) -> Self {
        Token {
            surface: surface.into(),
            component: None,
        }
    }

    pub fn component(surface: impl Into<String>, compound_id: impl Into<String>, index: usize) -> Self {
        Token {
            surface: surface.into(),
            component: Some((compound_id.into(), index)),
        }
    }

    pub fn is_component(&self) -> bool {
        self.component.is_some()
    }

    pub fn compound_id(&self) -> Option<&str> {
        self.component.as_ref().map(|(id, _)| id.as_str())
    }

    pub fn component_index(&self) -> Option<usize> {
        self.component.as_ref().map(|&(_, idx)| idx)
    }
}

/// A multi-component compound occupying `token_start..=token_end`.
#[derive(Clone, Debug, Eq, PartialEq)]
pub struct Compound {
    pub id: String,
    pub token_start: usize,
    pub token_end: usize,
    pub gold_tree: Option<NestingTree>,
}

impl Compound {
    pub fn n_components(&self) -> usize {
        self.token_end - self.token_start + 1
    }

    pub fn gold_tree(&self) -> Option<&NestingTree> {
        self.gold_tree.as_ref()
    }

    /// 1-based dependency node of component `k` (1-based).
    pub fn node(&self, k: usize) -> usize {
        self.token_start + k
    }

    pub fn contains_token(&self, token: usize) -> bool {
        (self.token_start..=self.token_end).contains(&token)
    }
}

/// Input item used to assemble a sentence.
#[derive(Clone, Debug)]
pub enum Item {
    Word(String),
    Compound {
        components: Vec<String>,
        tree: Option<NestingTree>,
    },
}

#[derive(Clone, Debug, Eq, PartialEq)]
pub struct Sentence {
    id: String,
    tokens: Vec<Token>,
    compounds: Vec<Compound>,
}

impl Sentence {
    /// Validates and builds a sentence. Compounds must cover contiguous,
    /// disjoint token ranges whose tokens carry matching component markers.
    pub fn new(id: impl Into<String>, tokens: Vec<Token>, compounds: Vec<Compound>) -> Result<Self> {
        let id = id.into();
        let mut owner = vec![None; tokens.len()];
        for (ci, compound) in compounds.iter().enumerate() {
            if compound.token_start > compound.token_end || compound.token_end >= tokens.len() {
                return Err(Error::Data(format!(
                    "compound {} has an invalid token range {}..={}",
                    compound.id, compound.token_start, compound.token_end
                )));
            }
            if compound.n_components() < 2 {
                return Err(Error::Data(format!(
                    "compound {} has fewer than two components",
                    compound.id
                )));
            }
            for slot in &mut owner[compound.token_start..=compound.token_end] {
                if slot.is_some() {
                    return Err(Error::Data(format!(
                        "compound {} overlaps another compound",
                        compound.id
                    )));
                }
                *slot = Some(ci);
            }
            if let Some(tree) = &compound.gold_tree {
                if tree.n_leaves() != compound.n_components() {
                    return Err(Error::Data(format!(
                        "gold tree of compound {} covers {} components, expected {}",
                        compound.id,
                        tree.n_leaves(),
                        compound.n_components()
                    )));
                }
            }
        }
        for (ti, token) in tokens.iter().enumerate() {
            match (owner[ti], &token.component) {
                (None, None) => {}
                (Some(ci), Some((cid, k))) => {
                    let compound = &compounds[ci];
                    if *cid != compound.id || *k != ti - compound.token_start + 1 {
                        return Err(Error::Data(format!(
                            "token {} carries a component marker inconsistent with compound {}",
                            ti + 1,
                            compound.id
                        )));
                    }
                }
                _ => {
                    return Err(Error::Data(format!(
                        "token {} component marker does not match the compound ranges",
                        ti + 1
                    )))
                }
            }
        }
        let mut compounds = compounds;
        compounds.sort_by_key(|c| c.token_start);
        Ok(Sentence {
            id,
            tokens,
            compounds,
        })
    }

    /// Assembles a sentence from words and compounds; compound ids are
    /// `<sentence id>.<k>` for the k-th compound.
    pub fn from_items(id: impl Into<String>, items: Vec<Item>) -> Result<Self> {
        let id = id.into();
        let mut tokens = Vec::new();
        let mut compounds = Vec::new();
        for item in items {
            match item {
                Item::Word(w) => tokens.push(Token::word(w)),
                Item::Compound { components, tree } => {
                    let cid = format!("{}.{}", id, compounds.len() + 1);
                    let start = tokens.len();
                    for (k, c) in components.into_iter().enumerate() {
                        tokens.push(Token::component(c, cid.clone(), k + 1));
                    }
                    compounds.push(Compound {
                        id: cid,
                        token_start: start,
                        token_end: tokens.len().saturating_sub(1).max(start),
                        gold_tree: tree,
                    });
                }
            }
        }
        Sentence::new(id, tokens, compounds)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn compounds(&self) -> &[Compound] {
        &self.compounds
    }

    /// Index of the compound containing `token` (0-based), if any.
    pub fn compound_of(&self, token: usize) -> Option<usize> {
        self.compounds.iter().position(|c| c.contains_token(token))
    }

    pub fn surfaces(&self, compound: &Compound) -> Vec<&str> {
        self.tokens[compound.token_start..=compound.token_end]
            .iter()
            .map(|t| t.surface.as_str())
            .collect()
    }

    /// Same sentence with gold trees replaced.
    pub fn with_trees(&self, trees: Vec<Option<NestingTree>>) -> Result<Sentence> {
        if trees.len() != self.compounds.len() {
            return Err(Error::Data(format!(
                "sentence {}: {} trees for {} compounds",
                self.id,
                trees.len(),
                self.compounds.len()
            )));
        }
        let compounds = self
            .compounds
            .iter()
            .cloned()
            .zip(trees)
            .map(|(mut c, t)| {
                c.gold_tree = t;
                c
            })
            .collect();
        Sentence::new(self.id.clone(), self.tokens.clone(), compounds)
    }

    /// Each compound as a standalone sentence (context words dropped). The
    /// new sentence takes the compound's id and keeps that id for its
    /// compound.
    pub fn without_context(&self) -> Vec<Sentence> {
        self.compounds
            .iter()
            .map(|c| {
                let tokens = self.tokens[c.token_start..=c.token_end].to_vec();
                let compound = Compound {
                    id: c.id.clone(),
                    token_start: 0,
                    token_end: c.n_components() - 1,
                    gold_tree: c.gold_tree.clone(),
                };
                Sentence::new(c.id.clone(), tokens, vec![compound])
                    .expect("a compound is a valid sentence")
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn comp(id: &str, start: usize, end: usize) -> Compound {
        Compound {
            id: id.to_owned(),
            token_start: start,
            token_end: end,
            gold_tree: None,
        }
    }

    #[test]
    fn items_expand_compounds() {
        let s = Sentence::from_items(
            "1",
            vec![
                Item::Compound {
                    components: vec!["a".into(), "b".into(), "c".into()],
                    tree: None,
                },
                Item::Word("x".into()),
            ],
        )
        .unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s.compounds()[0].id, "1.1");
        assert_eq!(s.compounds()[0].n_components(), 3);
        assert_eq!(s.tokens()[2].component_index(), Some(3));
        assert!(!s.tokens()[3].is_component());
        assert_eq!(s.compound_of(1), Some(0));
        assert_eq!(s.compound_of(3), None);
        let alone = s.without_context();
        assert_eq!(alone.len(), 1);
        assert_eq!(alone[0].len(), 3);
        assert_eq!(alone[0].id(), "1.1");
    }

    #[test]
    fn single_component_compound_rejected() {
        let r = Sentence::from_items(
            "1",
            vec![Item::Compound {
                components: vec!["a".into()],
                tree: None,
            }],
        );
        assert!(r.is_err());
    }

    fn tokens_for(n: usize, ranges: &[(usize, usize)]) -> Vec<Token> {
        (0..n)
            .map(|i| {
                ranges
                    .iter()
                    .enumerate()
                    .find(|(_, &(s, e))| (s..=e).contains(&i))
                    .map(|(ci, &(s, _))| Token::component("c", format!("c{}", ci), i - s + 1))
                    .unwrap_or_else(|| Token::word("w"))
            })
            .collect()
    }

    proptest! {
        #[test]
        fn overlapping_ranges_rejected(a in 0usize..10, la in 1usize..5, b in 0usize..10, lb in 1usize..5) {
            let ra = (a, a + la);
            let rb = (b, b + lb);
            let n = 16;
            let overlap = ra.0 <= rb.1 && rb.0 <= ra.1;
            let compounds = vec![comp("c0", ra.0, ra.1), comp("c1", rb.0, rb.1)];
            // Token markers follow the first range that claims each position.
            let tokens = tokens_for(n, &[ra, rb]);
            let result = Sentence::new("s", tokens, compounds);
            if overlap {
                prop_assert!(result.is_err());
            } else {
                prop_assert!(result.is_ok());
            }
        }
    }
}
