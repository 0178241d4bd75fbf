//! Deterministic toy languages for tests, benches and the bundled fixture.
//!
//! Stems are sequences of consonant-vowel syllables, so a stem plus one of
//! the default suffixes never equals another stem or another stem's form.

use std::collections::BTreeSet;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::LemmaList;
use crate::dataset::{DataSplit, InflectionExample};
use crate::evaluation::ParadigmTable;

const CONSONANTS: &[char] = &['b', 'd', 'g', 'k', 'l', 'm', 'n', 'p', 'r', 's', 't', 'v'];
const VOWELS: &[char] = &['a', 'e', 'i', 'o', 'u'];
/// Characters never produced by [`random_stem`].
pub const RARE_CHARS: &[char] = &['þ', 'ð', 'ŋ', 'ħ', 'ç', 'ø', 'ʒ', 'ɣ', 'ʃ', 'χ', 'ɬ', 'ʕ'];

pub const DEFAULT_SUFFIXES: [&str; 3] = ["a", "it", "on"];
pub const DEFAULT_FEATURES: [&str; 3] = ["V;SG", "V;PL", "V;PST"];

/// A stem of 2 or 3 CV syllables.
pub fn random_stem<R: Rng + ?Sized>(rng: &mut R) -> String {
    let syllables = rng.gen_range(2..=3);
    let mut s = String::new();
    for _ in 0..syllables {
        s.push(*CONSONANTS.choose(rng).expect("non-empty"));
        s.push(*VOWELS.choose(rng).expect("non-empty"));
    }
    s
}

fn distinct_stems(n: usize, rng: &mut ChaCha8Rng, mut make: impl FnMut(&mut ChaCha8Rng) -> String) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = make(rng);
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

/// A purely suffixing language: slot `k` appends `suffixes[k]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuffixLanguage {
    pub stems: Vec<String>,
    pub suffixes: Vec<String>,
    pub features: Vec<String>,
}

impl SuffixLanguage {
    pub fn new(n_stems: usize, suffixes: &[&str], features: &[&str], seed: u64) -> Self {
        assert_eq!(suffixes.len(), features.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SuffixLanguage {
            stems: distinct_stems(n_stems, &mut rng, random_stem),
            suffixes: suffixes.iter().map(|s| s.to_string()).collect(),
            features: features.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Three slots: +a, +it, +on.
    pub fn standard(n_stems: usize, seed: u64) -> Self {
        Self::new(n_stems, &DEFAULT_SUFFIXES, &DEFAULT_FEATURES, seed)
    }

    pub fn form(&self, stem: &str, slot: usize) -> String {
        format!("{stem}{}", self.suffixes[slot])
    }

    pub fn all_forms(&self) -> Vec<String> {
        self.stems
            .iter()
            .flat_map(|s| (0..self.suffixes.len()).map(move |k| self.form(s, k)))
            .collect()
    }

    /// The first `n` stems.
    pub fn input_lemmas(&self, n: usize) -> LemmaList {
        LemmaList::new(self.stems.iter().take(n))
    }

    /// Gold paradigms of `lemmas`, slots named by feature bundle.
    pub fn gold(&self, lemmas: &LemmaList) -> ParadigmTable<String> {
        let mut table = ParadigmTable::new();
        for lemma in lemmas.iter() {
            for (k, feat) in self.features.iter().enumerate() {
                table.insert(lemma, feat.clone(), self.form(lemma, k));
            }
        }
        table
    }

    /// Running text containing `round(fraction * |forms|)` distinct
    /// inflected forms, each one to three times, in shuffled order. Bare
    /// stems do not occur.
    pub fn corpus_text(&self, fraction: f64, seed: u64) -> String {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut forms = self.all_forms();
        forms.shuffle(&mut rng);
        forms.truncate((fraction * forms.len() as f64).round() as usize);
        let mut tokens = Vec::new();
        for f in &forms {
            for _ in 0..rng.gen_range(1..=3) {
                tokens.push(f.as_str());
            }
        }
        tokens.shuffle(&mut rng);
        let mut text = String::new();
        for line in tokens.chunks(12) {
            let _ = writeln!(text, "{}.", line.join(" "));
        }
        text
    }

    /// Labelled examples for every (stem, slot), slots numbered from 1.
    pub fn examples(&self) -> Vec<InflectionExample> {
        self.stems
            .iter()
            .flat_map(|s| (0..self.suffixes.len()).map(move |k| InflectionExample::new(s, k + 1, self.form(s, k))))
            .collect()
    }
}

/// `n_train` shuffled suffixation examples from the standard language;
/// dev is empty.
pub fn toy_suffix_split(n_train: usize, seed: u64) -> DataSplit {
    let stems = n_train.div_ceil(DEFAULT_SUFFIXES.len());
    let lang = SuffixLanguage::standard(stems, seed);
    let mut train = lang.examples();
    train.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
    train.truncate(n_train);
    DataSplit {
        train,
        dev: Vec::new(),
        test: Vec::new(),
        paradigm_size: DEFAULT_SUFFIXES.len(),
    }
}

/// A small training set and a dev set whose stems each contain a character
/// that never occurs in training, so generating it correctly requires
/// copying.
pub fn rare_character_split(n_train: usize, n_dev: usize, seed: u64) -> DataSplit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = DEFAULT_SUFFIXES.len();
    let train_stems = distinct_stems(n_train, &mut rng, random_stem);
    let dev_stems = distinct_stems(n_dev, &mut rng, |r| {
        let mut chars: Vec<char> = random_stem(r).chars().collect();
        let pos = r.gen_range(0..chars.len());
        chars[pos] = *RARE_CHARS.choose(r).expect("non-empty");
        chars.into_iter().collect()
    });
    let example = |stem: &String, r: &mut ChaCha8Rng| {
        let k = r.gen_range(0..slots);
        InflectionExample::new(stem, k + 1, format!("{stem}{}", DEFAULT_SUFFIXES[k]))
    };
    let train = train_stems.iter().map(|s| example(s, &mut rng)).collect();
    let dev = dev_stems.iter().map(|s| example(s, &mut rng)).collect();
    DataSplit {
        train,
        dev,
        test: Vec::new(),
        paradigm_size: slots,
    }
}
