use std::collections::{BTreeSet, HashMap};

use crate::dataset::InflectionExample;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Pad,
    Bos,
    Eos,
    Unk,
    Char(char),
    Slot(usize),
}

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;

/// Character vocabulary: specials, training characters in sorted order,
/// then one token per paradigm slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharVocab {
    symbols: Vec<Symbol>,
    chars: HashMap<char, usize>,
    first_slot: usize,
    slots: usize,
}

impl CharVocab {
    pub fn new(chars: impl IntoIterator<Item = char>, slots: usize) -> Self {
        let chars: BTreeSet<char> = chars.into_iter().collect();
        let mut symbols = vec![Symbol::Pad, Symbol::Bos, Symbol::Eos, Symbol::Unk];
        symbols.extend(chars.iter().map(|&c| Symbol::Char(c)));
        symbols.extend((1..=slots).map(Symbol::Slot));
        Self::from_symbols(symbols).expect("constructed in canonical order")
    }

    /// Vocabulary covering every character of the examples' lemmas and forms.
    pub fn from_examples<'a>(examples: impl IntoIterator<Item = &'a InflectionExample>, slots: usize) -> Self {
        let mut chars = BTreeSet::new();
        for e in examples {
            chars.extend(e.lemma.chars());
            chars.extend(e.form.chars());
        }
        Self::new(chars, slots)
    }

    pub fn from_symbols(symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.get(..4) != Some(&[Symbol::Pad, Symbol::Bos, Symbol::Eos, Symbol::Unk]) {
            return Err(Error::parse("vocabulary", "special symbols must come first"));
        }
        let mut chars = HashMap::new();
        let mut first_slot = symbols.len();
        let mut slots = 0;
        for (i, s) in symbols.iter().enumerate().skip(4) {
            match *s {
                Symbol::Char(c) if slots == 0 => {
                    if chars.insert(c, i).is_some() {
                        return Err(Error::parse("vocabulary", format!("duplicate character {c:?}")));
                    }
                }
                Symbol::Slot(k) if k == slots + 1 => {
                    if slots == 0 {
                        first_slot = i;
                    }
                    slots += 1;
                }
                other => return Err(Error::parse("vocabulary", format!("unexpected symbol {other:?} at {i}"))),
            }
        }
        Ok(CharVocab {
            symbols,
            chars,
            first_slot,
            slots,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn symbol(&self, id: usize) -> Option<Symbol> {
        self.symbols.get(id).copied()
    }

    /// Index of `c`, or the unknown symbol.
    pub fn char_id(&self, c: char) -> usize {
        self.chars.get(&c).copied().unwrap_or(UNK)
    }

    pub fn knows(&self, c: char) -> bool {
        self.chars.contains_key(&c)
    }

    pub fn slot_id(&self, slot: usize) -> Result<usize> {
        if slot == 0 || slot > self.slots {
            return Err(Error::UnknownSlot(slot));
        }
        Ok(self.first_slot + slot - 1)
    }

    /// Seq2seq input: `[bos, SLOT_k, chars.., eos]`.
    pub fn encode_seq2seq(&self, lemma: &str, slot: usize) -> Result<Vec<usize>> {
        let mut seq = vec![BOS, self.slot_id(slot)?];
        seq.extend(lemma.chars().map(|c| self.char_id(c)));
        seq.push(EOS);
        Ok(seq)
    }

    /// Pointer-generator inputs: `([bos, chars.., eos], [SLOT_k])`.
    pub fn encode_pgen(&self, lemma: &str, slot: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        let tag = self.slot_id(slot)?;
        let mut seq = vec![BOS];
        seq.extend(lemma.chars().map(|c| self.char_id(c)));
        seq.push(EOS);
        Ok((seq, vec![tag]))
    }

    /// Space-separated symbol codes: specials as `<pad> <s> </s> <unk>`,
    /// characters as `U+XXXX`, slots as `SLOT_k`.
    pub fn to_line(&self) -> String {
        self.symbols
            .iter()
            .map(|s| match s {
                Symbol::Pad => "<pad>".to_owned(),
                Symbol::Bos => "<s>".to_owned(),
                Symbol::Eos => "</s>".to_owned(),
                Symbol::Unk => "<unk>".to_owned(),
                Symbol::Char(c) => format!("U+{:04X}", *c as u32),
                Symbol::Slot(k) => format!("SLOT_{k}"),
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn from_line(line: &str) -> Result<Self> {
        let mut symbols = Vec::new();
        for tok in line.split_ascii_whitespace() {
            let s = match tok {
                "<pad>" => Symbol::Pad,
                "<s>" => Symbol::Bos,
                "</s>" => Symbol::Eos,
                "<unk>" => Symbol::Unk,
                _ => {
                    if let Some(hex) = tok.strip_prefix("U+") {
                        let c = u32::from_str_radix(hex, 16)
                            .ok()
                            .and_then(char::from_u32)
                            .ok_or_else(|| Error::parse("vocabulary", format!("bad character code {tok:?}")))?;
                        Symbol::Char(c)
                    } else if let Some(k) = tok.strip_prefix("SLOT_") {
                        Symbol::Slot(
                            k.parse()
                                .map_err(|_| Error::parse("vocabulary", format!("bad slot token {tok:?}")))?,
                        )
                    } else {
                        return Err(Error::parse("vocabulary", format!("unknown symbol {tok:?}")));
                    }
                }
            };
            symbols.push(s);
        }
        Self::from_symbols(symbols)
    }
}

/// Model input for one (lemma, slot) query, with the bookkeeping the copy
/// mechanism needs: each source position's id in the extended vocabulary,
/// where lemma characters missing from the vocabulary get ids past its end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Source {
    pub input: Vec<usize>,
    pub tags: Vec<usize>,
    pub copy_ids: Vec<usize>,
    pub oov: Vec<char>,
}

impl Source {
    pub fn extended_size(&self, vocab: &CharVocab) -> usize {
        vocab.len() + self.oov.len()
    }

    /// Target ids for `form` followed by eos. Characters outside the
    /// vocabulary use their extended id when present in the source.
    pub fn target(&self, vocab: &CharVocab, form: &str) -> Vec<usize> {
        let mut out: Vec<usize> = form
            .chars()
            .map(|c| {
                if vocab.knows(c) {
                    vocab.char_id(c)
                } else {
                    self.oov
                        .iter()
                        .position(|&o| o == c)
                        .map_or(UNK, |k| vocab.len() + k)
                }
            })
            .collect();
        out.push(EOS);
        out
    }

    /// Render an output id sequence; special and slot symbols are skipped.
    pub fn render(&self, vocab: &CharVocab, ids: &[usize]) -> String {
        ids.iter()
            .filter_map(|&id| {
                if id >= vocab.len() {
                    self.oov.get(id - vocab.len()).copied()
                } else if let Some(Symbol::Char(c)) = vocab.symbol(id) {
                    Some(c)
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Encoded network input, per model family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EncodedInput {
    Seq2Seq(Vec<usize>),
    PointerGenerator { lemma: Vec<usize>, tags: Vec<usize> },
}

pub(crate) fn build_source(vocab: &CharVocab, lemma: &str, input: Vec<usize>, tags: Vec<usize>, offset: usize) -> Source {
    let mut oov: Vec<char> = Vec::new();
    let mut copy_ids = vec![0; input.len()];
    for (pos, id) in input.iter().enumerate() {
        copy_ids[pos] = *id;
    }
    for (k, c) in lemma.chars().enumerate() {
        if !vocab.knows(c) {
            let idx = match oov.iter().position(|&o| o == c) {
                Some(i) => i,
                None => {
                    oov.push(c);
                    oov.len() - 1
                }
            };
            copy_ids[offset + k] = vocab.len() + idx;
        }
    }
    Source {
        input,
        tags,
        copy_ids,
        oov,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> CharVocab {
        CharVocab::new("walkde".chars(), 3)
    }

    #[test]
    fn layout_is_canonical() {
        let v = vocab();
        assert_eq!(v.len(), 4 + 6 + 3);
        assert_eq!(v.symbol(4), Some(Symbol::Char('a')));
        assert_eq!(v.slot_id(1).unwrap(), 10);
        assert!(matches!(v.slot_id(4), Err(Error::UnknownSlot(4))));
        assert!(matches!(v.slot_id(0), Err(Error::UnknownSlot(0))));
    }

    #[test]
    fn seq2seq_input_format() {
        let v = vocab();
        let ids = v.encode_seq2seq("walk", 2).unwrap();
        let expected = vec![
            BOS,
            v.slot_id(2).unwrap(),
            v.char_id('w'),
            v.char_id('a'),
            v.char_id('l'),
            v.char_id('k'),
            EOS,
        ];
        assert_eq!(ids, expected);
    }

    #[test]
    fn pgen_input_format() {
        let v = vocab();
        let (lemma, tags) = v.encode_pgen("walk", 2).unwrap();
        assert_eq!(lemma, vec![BOS, v.char_id('w'), v.char_id('a'), v.char_id('l'), v.char_id('k'), EOS]);
        assert_eq!(tags, vec![v.slot_id(2).unwrap()]);
    }

    #[test]
    fn unseen_characters_are_unknown() {
        let v = vocab();
        assert_eq!(v.encode_seq2seq("ø", 1).unwrap()[2], UNK);
    }

    #[test]
    fn extended_ids_for_copying() {
        let v = vocab();
        let (input, tags) = v.encode_pgen("øwø", 1).unwrap();
        let src = build_source(&v, "øwø", input, tags, 1);
        assert_eq!(src.oov, vec!['ø']);
        assert_eq!(src.copy_ids, vec![BOS, v.len(), v.char_id('w'), v.len(), EOS]);
        assert_eq!(src.target(&v, "øq"), vec![v.len(), UNK, EOS]);
        assert_eq!(src.render(&v, &[v.len(), v.char_id('a'), UNK]), "øa");
    }

    #[test]
    fn line_round_trip() {
        let v = CharVocab::new("aä ಕ".chars().filter(|c| !c.is_whitespace()), 2);
        assert_eq!(CharVocab::from_line(&v.to_line()).unwrap(), v);
        assert!(CharVocab::from_line("<s> <pad>").is_err());
        assert!(CharVocab::from_line("<pad> <s> </s> <unk> SLOT_2").is_err());
    }
}
