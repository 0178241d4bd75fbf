//! Candidate harvesting (lemma, form, edit tree) from the corpus and
//! validation of edit trees through additional pseudo-lemmas.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::corpus::{Corpus, LemmaList};
use crate::edittree::{lcs_chars, EditTree};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Candidate {
    pub lemma: String,
    pub form: String,
    pub tree: EditTree,
}

/// Retrieved triples plus, per tree, the number of distinct lemmas using it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CandidateTable {
    triples: BTreeSet<Candidate>,
    tree_counts: BTreeMap<EditTree, usize>,
}

impl CandidateTable {
    pub fn from_triples(triples: impl IntoIterator<Item = Candidate>) -> Self {
        let mut table = CandidateTable {
            triples: triples.into_iter().collect(),
            tree_counts: BTreeMap::new(),
        };
        table.recount();
        table
    }

    fn recount(&mut self) {
        let mut lemmas: BTreeMap<&EditTree, BTreeSet<&str>> = BTreeMap::new();
        for c in &self.triples {
            lemmas.entry(&c.tree).or_default().insert(&c.lemma);
        }
        self.tree_counts = lemmas
            .into_iter()
            .map(|(t, ls)| (t.clone(), ls.len()))
            .collect();
    }

    pub fn triples(&self) -> &BTreeSet<Candidate> {
        &self.triples
    }

    pub fn tree_counts(&self) -> &BTreeMap<EditTree, usize> {
        &self.tree_counts
    }

    pub fn tree_count(&self, tree: &EditTree) -> usize {
        self.tree_counts.get(tree).copied().unwrap_or(0)
    }

    pub fn trees(&self) -> impl Iterator<Item = &EditTree> {
        self.tree_counts.keys()
    }

    /// Distinct lemmas appearing in any triple.
    pub fn lemmas(&self) -> BTreeSet<&str> {
        self.triples.iter().map(|c| c.lemma.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Diagnostic dump: `lemma \t form \t tree_key \t count` per line.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for c in &self.triples {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                c.lemma,
                c.form,
                c.tree.key(),
                self.tree_count(&c.tree)
            ));
        }
        out
    }

    /// Parse a dump written by [`CandidateTable::to_tsv`]. Counts are
    /// recomputed from the triples.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut triples = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(
                    "candidate table",
                    format!("line {}: expected 4 fields", n + 1),
                ));
            }
            triples.push(Candidate {
                lemma: fields[0].to_owned(),
                form: fields[1].to_owned(),
                tree: EditTree::parse_key(fields[2])?,
            });
        }
        Ok(Self::from_triples(triples))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RetrievalConfig {
    pub min_lcs_abs: usize,
    pub min_lcs_ratio: f64,
    pub tree_min_lemmas: usize,
    pub pseudo_lemma_min_hits: usize,
    /// `None` disables the length-difference prefilter.
    pub max_form_len_delta: Option<usize>,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            min_lcs_abs: 3,
            min_lcs_ratio: 0.5,
            tree_min_lemmas: 2,
            pseudo_lemma_min_hits: 2,
            max_form_len_delta: Some(6),
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_lcs_abs < 1 {
            return Err(Error::Config("min_lcs_abs must be >= 1".into()));
        }
        if !(self.min_lcs_ratio > 0.0 && self.min_lcs_ratio <= 1.0) {
            return Err(Error::Config("min_lcs_ratio must be in (0, 1]".into()));
        }
        if self.tree_min_lemmas < 1 {
            return Err(Error::Config("tree_min_lemmas must be >= 1".into()));
        }
        if self.pseudo_lemma_min_hits < 1 {
            return Err(Error::Config("pseudo_lemma_min_hits must be >= 1".into()));
        }
        if self.max_form_len_delta == Some(0) {
            return Err(Error::Config("max_form_len_delta must be >= 1".into()));
        }
        Ok(())
    }

    /// Minimum common-substring length for a lemma of `lemma_len` characters.
    pub fn min_lcs_len(&self, lemma_len: usize) -> usize {
        let relative = (self.min_lcs_ratio * lemma_len as f64 - 1e-9).ceil().max(0.0) as usize;
        self.min_lcs_abs.max(relative)
    }
}

/// Step 1: pair every lemma with corpus words sharing a long enough
/// substring, then drop trees supported by too few lemmas.
pub fn retrieve_candidates(corpus: &Corpus, lemmas: &LemmaList, cfg: &RetrievalConfig) -> CandidateTable {
    let mut triples = Vec::new();
    for lemma in lemmas.iter() {
        let lemma_chars: Vec<char> = lemma.chars().collect();
        let threshold = cfg.min_lcs_len(lemma_chars.len());
        let (lo, hi) = match cfg.max_form_len_delta {
            Some(d) => (lemma_chars.len().saturating_sub(d), lemma_chars.len() + d),
            None => (0, usize::MAX),
        };
        let mut word_chars = Vec::new();
        for word in corpus.words_with_length(lo.max(threshold), hi) {
            word_chars.clear();
            word_chars.extend(word.chars());
            if lcs_chars(&lemma_chars, &word_chars).len < threshold {
                continue;
            }
            triples.push(Candidate {
                lemma: lemma.to_owned(),
                form: word.to_owned(),
                tree: EditTree::build(lemma, word),
            });
        }
    }
    let mut table = CandidateTable::from_triples(triples);
    prune_rare_trees(&mut table, cfg.tree_min_lemmas);
    table
}

fn prune_rare_trees(table: &mut CandidateTable, min_lemmas: usize) {
    let counts = &table.tree_counts;
    table
        .triples
        .retain(|c| counts.get(&c.tree).copied().unwrap_or(0) >= min_lemmas);
    table.recount();
}

/// Step 2: accept corpus words (other than input lemmas) as pseudo-lemmas
/// when enough retained trees map them to attested words, and add their
/// triples.
pub fn retrieve_additional_lemmas(
    corpus: &Corpus,
    table: &CandidateTable,
    lemmas: &LemmaList,
    cfg: &RetrievalConfig,
) -> (Vec<String>, CandidateTable) {
    let inputs: HashSet<&str> = lemmas.iter().collect();
    let trees: Vec<&EditTree> = table.trees().collect();
    let mut pseudo = Vec::new();
    let mut triples = table.triples.clone();
    if trees.len() >= cfg.pseudo_lemma_min_hits {
        for word in corpus.words() {
            if inputs.contains(word) {
                continue;
            }
            let hits: Vec<(String, &EditTree)> = trees
                .iter()
                .filter_map(|t| t.apply(word).filter(|f| corpus.contains(f)).map(|f| (f, *t)))
                .collect();
            if hits.len() < cfg.pseudo_lemma_min_hits {
                continue;
            }
            pseudo.push(word.to_owned());
            for (form, tree) in hits {
                triples.insert(Candidate {
                    lemma: word.to_owned(),
                    form,
                    tree: tree.clone(),
                });
            }
        }
    }
    (pseudo, CandidateTable::from_triples(triples))
}
