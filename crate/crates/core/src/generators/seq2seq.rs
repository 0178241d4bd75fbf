//! Attention encoder-decoder over `[bos, SLOT_k, chars.., eos]`.

use rand::Rng;

use super::transducer::{ModelDims, Noise, Transducer};
use super::vocab::{CharVocab, Source, UNK};
use crate::error::Result;
use crate::neural::{Attention, BiLstm, Dense, Embedding, Graph, LstmCell, LstmState, ParamStore, Var};

#[derive(Clone, Debug)]
pub struct Seq2SeqModel {
    pub vocab: CharVocab,
    pub dims: ModelDims,
    pub store: ParamStore,
    embedding: Embedding,
    encoder: BiLstm,
    bridge_h: Dense,
    bridge_c: Dense,
    attention: Attention,
    decoder: LstmCell,
    output: Dense,
}

pub struct Seq2SeqEncoded {
    keys: Vec<Var>,
    projected: Vec<Var>,
}

impl Seq2SeqModel {
    pub fn new(vocab: CharVocab, dims: ModelDims, rng: &mut impl Rng) -> Self {
        let (e, h, v) = (dims.embed, dims.hidden, vocab.len());
        let mut store = ParamStore::new();
        let embedding = Embedding::new(&mut store, "embed", v, e, rng);
        let encoder = BiLstm::new(&mut store, "encoder", e, h, rng);
        let bridge_h = Dense::new(&mut store, "bridge_h", 2 * h, h, rng);
        let bridge_c = Dense::new(&mut store, "bridge_c", 2 * h, h, rng);
        let attention = Attention::new(&mut store, "attention", h, 2 * h, h, rng);
        let decoder = LstmCell::new(&mut store, "decoder", e + 2 * h, h, rng);
        let output = Dense::new(&mut store, "output", 3 * h, v, rng);
        Seq2SeqModel {
            vocab,
            dims,
            store,
            embedding,
            encoder,
            bridge_h,
            bridge_c,
            attention,
            decoder,
            output,
        }
    }
}

impl Transducer for Seq2SeqModel {
    type Encoded = Seq2SeqEncoded;
    type State = LstmState;

    fn vocab(&self) -> &CharVocab {
        &self.vocab
    }

    fn store(&self) -> &ParamStore {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    fn dims(&self) -> ModelDims {
        self.dims
    }

    fn source(&self, lemma: &str, slot: usize) -> Result<Source> {
        // no copying: unknown characters stay unknown
        Ok(Source {
            input: self.vocab.encode_seq2seq(lemma, slot)?,
            tags: Vec::new(),
            copy_ids: Vec::new(),
            oov: Vec::new(),
        })
    }

    fn encode(&self, g: &mut Graph, src: &Source, noise: &mut Noise) -> Result<(Seq2SeqEncoded, LstmState)> {
        let embedded: Vec<Var> = src
            .input
            .iter()
            .map(|&id| {
                let e = self.embedding.lookup(g, id);
                noise.apply(g, e)
            })
            .collect();
        let enc = self.encoder.run(g, &embedded)?;
        let keys: Vec<Var> = enc.outputs.iter().map(|&k| noise.apply(g, k)).collect();
        let projected = self.attention.project_keys(g, &keys);
        let hcat = g.concat(&[enc.forward_final.h, enc.backward_final.h]);
        let ccat = g.concat(&[enc.forward_final.c, enc.backward_final.c]);
        let h0 = self.bridge_h.forward(g, hcat);
        let h0 = g.tanh(h0);
        let c0 = self.bridge_c.forward(g, ccat);
        Ok((Seq2SeqEncoded { keys, projected }, LstmState { h: h0, c: c0 }))
    }

    fn step(
        &self,
        g: &mut Graph,
        enc: &Seq2SeqEncoded,
        state: &LstmState,
        prev: usize,
        noise: &mut Noise,
    ) -> Result<(Var, LstmState)> {
        let prev = if prev < self.vocab.len() { prev } else { UNK };
        let e = self.embedding.lookup(g, prev);
        let e = noise.apply(g, e);
        let att = self.attention.attend(g, state.h, &enc.keys, &enc.projected)?;
        let x = g.concat(&[e, att.context]);
        let next = self.decoder.step(g, x, *state)?;
        let feat = g.concat(&[next.h, att.context]);
        let logits = self.output.forward(g, feat);
        Ok((g.softmax(logits), next))
    }
}
