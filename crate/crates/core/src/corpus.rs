//! Raw corpus and lemma list ingestion.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Word frequencies of a raw monolingual corpus.
///
/// Immutable once built. Words below the `min_count` threshold given at load
/// time are absent from the vocabulary but still counted in `total_tokens`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    vocab: BTreeMap<String, u64>,
    total_tokens: u64,
    words_by_length: BTreeMap<usize, BTreeSet<String>>,
}

impl Corpus {
    /// Tokenize `text` and count words.
    pub fn from_text(text: &str, lowercase: bool, min_count: u64) -> Self {
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let mut total_tokens = 0;
        for raw in text.split_whitespace() {
            let token = raw.trim_matches(|c: char| !c.is_alphanumeric());
            if token.is_empty() {
                continue;
            }
            total_tokens += 1;
            let token = if lowercase {
                token.to_lowercase()
            } else {
                token.to_owned()
            };
            *counts.entry(token).or_insert(0) += 1;
        }
        counts.retain(|_, count| *count >= min_count.max(1));
        Self::from_counts_with_total(counts, total_tokens)
    }

    /// Build a corpus directly from word counts; `total_tokens` is their sum.
    pub fn from_counts<I, S>(counts: I) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut vocab = BTreeMap::new();
        for (word, count) in counts {
            let word = word.into();
            if word.is_empty() || word.chars().any(char::is_whitespace) || count == 0 {
                continue;
            }
            *vocab.entry(word).or_insert(0) += count;
        }
        let total = vocab.values().sum();
        Self::from_counts_with_total(vocab, total)
    }

    fn from_counts_with_total(vocab: BTreeMap<String, u64>, total_tokens: u64) -> Self {
        let mut words_by_length: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
        for word in vocab.keys() {
            words_by_length
                .entry(word.chars().count())
                .or_default()
                .insert(word.clone());
        }
        Corpus {
            vocab,
            total_tokens,
            words_by_length,
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocab.contains_key(word)
    }

    /// Frequency of `word`, zero when absent.
    pub fn count(&self, word: &str) -> u64 {
        self.vocab.get(word).copied().unwrap_or(0)
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn vocab(&self) -> &BTreeMap<String, u64> {
        &self.vocab
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    /// Words in lexicographic order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.vocab.keys().map(String::as_str)
    }

    /// Words whose length in characters lies in `lo..=hi`.
    pub fn words_with_length(&self, lo: usize, hi: usize) -> impl Iterator<Item = &str> {
        self.words_by_length
            .range(lo..=hi)
            .flat_map(|(_, words)| words.iter().map(String::as_str))
    }

    pub fn words_by_length(&self) -> &BTreeMap<usize, BTreeSet<String>> {
        &self.words_by_length
    }
}

/// Read and tokenize a corpus file.
pub fn load_corpus(path: impl AsRef<Path>, lowercase: bool, min_count: u64) -> Result<Corpus> {
    let text = read_utf8(path.as_ref())?;
    Ok(Corpus::from_text(&text, lowercase, min_count))
}

/// Input lemmas in file order, without duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LemmaList {
    lemmas: Vec<String>,
}

impl LemmaList {
    pub fn new<I, S>(lemmas: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for lemma in lemmas {
            let lemma = lemma.into();
            let lemma = lemma.trim();
            if lemma.is_empty() || !seen.insert(lemma.to_owned()) {
                continue;
            }
            out.push(lemma.to_owned());
        }
        LemmaList { lemmas: out }
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.lemmas.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.lemmas
    }

    pub fn len(&self) -> usize {
        self.lemmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lemmas.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lemmas.iter().any(|l| l == word)
    }
}

pub fn load_lemmas(path: impl AsRef<Path>) -> Result<LemmaList> {
    let text = read_utf8(path.as_ref())?;
    Ok(LemmaList::new(text.lines()))
}

pub(crate) fn read_utf8(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
        path: path.to_owned(),
        offset: e.utf8_error().valid_up_to(),
    })
}
