use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::tokenize::{tokenize_with, TokenizerOptions, STOP_WORDS_VERSION};
use super::{Document, SparseVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermEntry {
    pub term: String,
    pub doc_freq: usize,
}

/// Feature index: term `i` of `terms` is feature `i`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    pub corpus_size: usize,
    pub min_df: usize,
    pub terms: Vec<TermEntry>,
    #[serde(default)]
    pub tokenizer: TokenizerOptions,
    #[serde(skip)]
    index: OnceLock<HashMap<String, usize>>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.corpus_size == other.corpus_size
            && self.min_df == other.min_df
            && self.terms == other.terms
            && self.tokenizer == other.tokenizer
    }
}

impl Vocabulary {
    pub fn new(
        corpus_size: usize,
        min_df: usize,
        terms: Vec<TermEntry>,
        tokenizer: TokenizerOptions,
    ) -> Self {
        Vocabulary {
            corpus_size,
            min_df,
            terms,
            tokenizer,
            index: OnceLock::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, index: usize) -> Option<&str> {
        self.terms.get(index).map(|t| t.term.as_str())
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index
            .get_or_init(|| {
                self.terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (t.term.clone(), i))
                    .collect()
            })
            .get(term)
            .copied()
    }

    /// `ln(N / df)` for feature `index`.
    pub fn idf(&self, index: usize) -> f64 {
        (self.corpus_size as f64 / self.terms[index].doc_freq as f64).ln()
    }

    /// Stable hash of everything that determines feature indices and weights.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(b"dfpm-vocab-v1\n");
        h.update(
            format!(
                "stop_words={} remove={} stem={} corpus_size={}\n",
                STOP_WORDS_VERSION,
                self.tokenizer.remove_stop_words,
                self.tokenizer.stem,
                self.corpus_size
            )
            .as_bytes(),
        );
        for t in &self.terms {
            h.update(t.term.as_bytes());
            h.update(format!("\t{}\n", t.doc_freq).as_bytes());
        }
        hex::encode(&h.finalize()[..16])
    }
}

/// Keeps every token with document frequency `>= min_df`, sorted
/// lexicographically.
pub fn build_vocabulary(
    docs: &[Document],
    min_df: usize,
    tokenizer: TokenizerOptions,
) -> Result<Vocabulary> {
    if min_df == 0 {
        return Err(Error::InvalidArgument("min_df must be at least 1".into()));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for doc in docs {
        let unique: BTreeSet<String> = tokenize_with(&doc.text, tokenizer).into_iter().collect();
        for t in unique {
            *df.entry(t).or_default() += 1;
        }
    }
    let terms = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df)
        .map(|(term, doc_freq)| TermEntry { term, doc_freq })
        .collect();
    Ok(Vocabulary::new(docs.len(), min_df, terms, tokenizer))
}

/// TF-IDF vector: `tf · ln(N / df)` per in-vocabulary term, then L2-normalized.
/// Terms present in every document get weight zero and are not stored.
pub fn vectorize(doc: &Document, vocab: &Vocabulary) -> SparseVector {
    let mut tf: BTreeMap<usize, usize> = BTreeMap::new();
    for tok in tokenize_with(&doc.text, vocab.tokenizer) {
        if let Some(i) = vocab.index_of(&tok) {
            *tf.entry(i).or_default() += 1;
        }
    }
    let entries: Vec<(usize, f64)> = tf
        .into_iter()
        .map(|(i, n)| (i, n as f64 * vocab.idf(i)))
        .filter(|&(_, w)| w != 0.0)
        .collect();
    SparseVector::from_sorted(entries)
        .expect("BTreeMap keys are sorted")
        .normalized()
}
