//! Filling every cell of every input lemma's paradigm.

use std::collections::HashMap;

use crate::corpus::LemmaList;
use crate::dataset::DataSplit;
use crate::error::Result;
use crate::evaluation::ParadigmTable;

use super::model::InflectionModel;

/// Anything that can produce a form for (lemma, slot).
pub trait FormGenerator {
    fn generate_form(&self, lemma: &str, slot: usize) -> Result<String>;
}

/// A trained model decoding with a fixed beam width.
#[derive(Clone, Copy, Debug)]
pub struct ModelGenerator<'a> {
    pub model: &'a InflectionModel,
    pub beam: usize,
}

impl FormGenerator for ModelGenerator<'_> {
    fn generate_form(&self, lemma: &str, slot: usize) -> Result<String> {
        self.model.generate(lemma, slot, self.beam)
    }
}

impl FormGenerator for InflectionModel {
    fn generate_form(&self, lemma: &str, slot: usize) -> Result<String> {
        self.generate(lemma, slot, 1)
    }
}

/// One form for every (lemma, slot) with slots `1..=paradigm_size`.
/// Attested train/dev forms are copied verbatim; the rest are generated.
pub fn complete_paradigms(
    split: &DataSplit,
    lemmas: &LemmaList,
    generator: &dyn FormGenerator,
) -> Result<ParadigmTable<usize>> {
    let attested: HashMap<(&str, usize), &str> = split
        .attested()
        .map(|e| ((e.lemma.as_str(), e.slot), e.form.as_str()))
        .collect();
    let mut table = ParadigmTable::new();
    for lemma in lemmas.iter() {
        for slot in 1..=split.paradigm_size {
            let form = match attested.get(&(lemma, slot)) {
                Some(f) => (*f).to_owned(),
                None => generator.generate_form(lemma, slot)?,
            };
            table.insert(lemma, slot, form);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::InflectionExample;

    struct Marker;

    impl FormGenerator for Marker {
        fn generate_form(&self, lemma: &str, slot: usize) -> Result<String> {
            Ok(format!("{lemma}#{slot}"))
        }
    }

    fn split() -> DataSplit {
        DataSplit {
            train: vec![InflectionExample::new("walk", 1, "walked"), InflectionExample::new("walk", 2, "walks")],
            dev: vec![InflectionExample::new("walk", 3, "walking")],
            test: vec![],
            paradigm_size: 3,
        }
    }

    #[test]
    fn attested_forms_pass_through() {
        let lemmas = LemmaList::new(["walk"]);
        let t = complete_paradigms(&split(), &lemmas, &Marker).unwrap();
        assert_eq!(t.get("walk", &1).unwrap(), ["walked"]);
        assert_eq!(t.get("walk", &2).unwrap(), ["walks"]);
        assert_eq!(t.get("walk", &3).unwrap(), ["walking"]);
    }

    #[test]
    fn unattested_lemmas_fully_generated() {
        let lemmas = LemmaList::new(["walk", "sing", "run"]);
        let t = complete_paradigms(&split(), &lemmas, &Marker).unwrap();
        assert_eq!(t.cell_count(), 9);
        assert_eq!(t.get("sing", &2).unwrap(), ["sing#2"]);
        assert_eq!(t.to_tsv().lines().count(), 9);
    }
}
