//! Silver inflection datasets built from discovered slots.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::LemmaList;
use crate::error::{Error, Result};
use crate::slots::SlotSystem;

/// A (lemma, slot, form) triple. The form is empty for test queries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InflectionExample {
    pub lemma: String,
    pub slot: usize,
    pub form: String,
}

impl InflectionExample {
    pub fn new(lemma: impl Into<String>, slot: usize, form: impl Into<String>) -> Self {
        InflectionExample {
            lemma: lemma.into(),
            slot,
            form: form.into(),
        }
    }

    pub fn query(lemma: impl Into<String>, slot: usize) -> Self {
        Self::new(lemma, slot, "")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DataSplit {
    pub train: Vec<InflectionExample>,
    pub dev: Vec<InflectionExample>,
    pub test: Vec<InflectionExample>,
    pub paradigm_size: usize,
}

impl DataSplit {
    /// Train and dev together: every attested cell.
    pub fn attested(&self) -> impl Iterator<Item = &InflectionExample> {
        self.train.iter().chain(&self.dev)
    }
}

/// Result of [`build_splits`]; `warning` is set when the split is degenerate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitOutcome {
    pub split: DataSplit,
    pub warning: Option<String>,
}

/// Shuffle all attested cells with a seeded generator and hold out the last
/// `floor(dev_fraction * n)` as dev. Test queries are the input-lemma cells
/// with no attested form; pseudo-lemmas get none.
pub fn build_splits(sys: &SlotSystem, lemmas: &LemmaList, dev_fraction: f64, seed: u64) -> Result<SplitOutcome> {
    if !(0.0..1.0).contains(&dev_fraction) {
        return Err(Error::Config(format!("dev_fraction {dev_fraction} outside [0, 1)")));
    }
    let mut attested: Vec<InflectionExample> = sys
        .attested()
        .map(|(l, s, f)| InflectionExample::new(l, s, f))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let cells: BTreeSet<(&str, usize)> = sys.attested().map(|(l, s, _)| (l, s)).collect();
    let mut test = Vec::new();
    for lemma in lemmas.iter() {
        for slot in 1..=sys.paradigm_size() {
            if !cells.contains(&(lemma, slot)) {
                test.push(InflectionExample::query(lemma, slot));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    attested.shuffle(&mut rng);
    let n_dev = (dev_fraction * attested.len() as f64).floor() as usize;
    let dev = attested.split_off(attested.len() - n_dev);

    let warning = if sys.paradigm_size() == 0 {
        Some("paradigm size is 0: no slots discovered, test set is empty".to_owned())
    } else if attested.is_empty() {
        Some("no attested training cells".to_owned())
    } else {
        None
    };
    Ok(SplitOutcome {
        split: DataSplit {
            train: attested,
            dev,
            test,
            paradigm_size: sys.paradigm_size(),
        },
        warning,
    })
}

/// `lemma \t form \t slot_id` lines.
pub fn examples_to_tsv(examples: &[InflectionExample]) -> String {
    examples
        .iter()
        .map(|e| format!("{}\t{}\t{}\n", e.lemma, e.form, e.slot))
        .collect()
}

/// `lemma \t slot_id` lines.
pub fn queries_to_tsv(examples: &[InflectionExample]) -> String {
    examples
        .iter()
        .map(|e| format!("{}\t{}\n", e.lemma, e.slot))
        .collect()
}

pub fn examples_from_tsv(text: &str) -> Result<Vec<InflectionExample>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        let ex = match f.as_slice() {
            [lemma, form, slot] => InflectionExample::new(*lemma, parse_slot(slot, n)?, *form),
            [lemma, slot] => InflectionExample::query(*lemma, parse_slot(slot, n)?),
            _ => {
                return Err(Error::parse(
                    "inflection examples",
                    format!("line {}: expected 2 or 3 fields", n + 1),
                ))
            }
        };
        out.push(ex);
    }
    Ok(out)
}

fn parse_slot(field: &str, line: usize) -> Result<usize> {
    match field.parse::<usize>() {
        Ok(s) if s >= 1 => Ok(s),
        _ => Err(Error::parse(
            "inflection examples",
            format!("line {}: bad slot id {field:?}", line + 1),
        )),
    }
}
