//! Pointer-generator with separate lemma and tag encoders.
//!
//! At each step the decoder mixes a softmax over the vocabulary with the
//! attention distribution over lemma positions, scattered onto the
//! characters at those positions:
//!
//! `P(c) = p_gen * P_vocab(c) + (1 - p_gen) * sum_{t: src[t] = c} a_t`
//!
//! where `p_gen = sigmoid(w . s + b)` is computed from the decoder state.
//! Lemma characters outside the vocabulary get temporary ids past its end,
//! so they can still be copied.

use rand::Rng;

use super::transducer::{ModelDims, Noise, Transducer};
use super::vocab::{build_source, CharVocab, Source, UNK};
use crate::error::Result;
use crate::neural::{Attention, BiLstm, Dense, Embedding, Graph, LstmCell, LstmState, ParamStore, Var};

#[derive(Clone, Debug)]
pub struct PointerGeneratorModel {
    pub vocab: CharVocab,
    pub dims: ModelDims,
    pub store: ParamStore,
    embedding: Embedding,
    lemma_encoder: BiLstm,
    tag_encoder: BiLstm,
    bridge_h: Dense,
    bridge_c: Dense,
    attention: Attention,
    decoder: LstmCell,
    output: Dense,
    gate: Dense,
}

pub struct PgenEncoded {
    pub keys: Vec<Var>,
    pub projected: Vec<Var>,
    /// Final states of the tag encoder, both directions.
    pub tags: Var,
    pub copy_ids: Vec<usize>,
    pub extended_size: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct PgenState {
    pub lstm: LstmState,
    /// Lemma attention context from the previous step.
    pub context: Var,
}

/// Everything one decoder step produces.
pub struct PgenStep {
    pub distribution: Var,
    pub p_gen: Var,
    pub attention: Var,
    pub vocab_distribution: Var,
    pub state: PgenState,
}

/// `p_gen * pad(p_vocab) + (1 - p_gen) * scatter(attention -> copy_ids)`.
pub fn copy_mixture(
    g: &mut Graph,
    p_gen: Var,
    p_vocab: Var,
    attention: Var,
    copy_ids: &[usize],
    extended_size: usize,
) -> Var {
    let generated = g.pad(p_vocab, extended_size);
    let generated = g.scale_by(p_gen, generated);
    let copied = g.scatter_add(attention, copy_ids, extended_size);
    let p_copy = g.one_minus(p_gen);
    let copied = g.scale_by(p_copy, copied);
    g.add(generated, copied)
}

impl PointerGeneratorModel {
    pub fn new(vocab: CharVocab, dims: ModelDims, rng: &mut impl Rng) -> Self {
        let (e, h, v) = (dims.embed, dims.hidden, vocab.len());
        let mut store = ParamStore::new();
        let embedding = Embedding::new(&mut store, "embed", v, e, rng);
        let lemma_encoder = BiLstm::new(&mut store, "lemma_encoder", e, h, rng);
        let tag_encoder = BiLstm::new(&mut store, "tag_encoder", e, h, rng);
        let bridge_h = Dense::new(&mut store, "bridge_h", 2 * h, h, rng);
        let bridge_c = Dense::new(&mut store, "bridge_c", 2 * h, h, rng);
        let attention = Attention::new(&mut store, "attention", h, 2 * h, h, rng);
        let decoder = LstmCell::new(&mut store, "decoder", e + 4 * h, h, rng);
        let output = Dense::new(&mut store, "output", 5 * h, v, rng);
        let gate = Dense::new(&mut store, "gate", h, 1, rng);
        PointerGeneratorModel {
            vocab,
            dims,
            store,
            embedding,
            lemma_encoder,
            tag_encoder,
            bridge_h,
            bridge_c,
            attention,
            decoder,
            output,
            gate,
        }
    }

    /// One decoder step with all intermediate quantities exposed.
    pub fn decode_step(
        &self,
        g: &mut Graph,
        enc: &PgenEncoded,
        state: &PgenState,
        prev: usize,
        noise: &mut Noise,
    ) -> Result<PgenStep> {
        let prev = if prev < self.vocab.len() { prev } else { UNK };
        let e = self.embedding.lookup(g, prev);
        let e = noise.apply(g, e);
        let x = g.concat(&[e, state.context, enc.tags]);
        let lstm = self.decoder.step(g, x, state.lstm)?;
        let att = self.attention.attend(g, lstm.h, &enc.keys, &enc.projected)?;
        let feat = g.concat(&[lstm.h, att.context, enc.tags]);
        let logits = self.output.forward(g, feat);
        let p_vocab = g.softmax(logits);
        let gate = self.gate.forward(g, lstm.h);
        let p_gen = g.sigmoid(gate);
        let distribution = copy_mixture(g, p_gen, p_vocab, att.weights, &enc.copy_ids, enc.extended_size);
        Ok(PgenStep {
            distribution,
            p_gen,
            attention: att.weights,
            vocab_distribution: p_vocab,
            state: PgenState {
                lstm,
                context: att.context,
            },
        })
    }

    pub fn parts(&self) -> PgenParts<'_> {
        PgenParts {
            embedding: &self.embedding,
            decoder: &self.decoder,
            attention: &self.attention,
            output: &self.output,
            gate: &self.gate,
        }
    }
}

/// Borrowed view of the decoder-side layers, for inspection.
pub struct PgenParts<'a> {
    pub embedding: &'a Embedding,
    pub decoder: &'a LstmCell,
    pub attention: &'a Attention,
    pub output: &'a Dense,
    pub gate: &'a Dense,
}

impl Transducer for PointerGeneratorModel {
    type Encoded = PgenEncoded;
    type State = PgenState;

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
        let (input, tags) = self.vocab.encode_pgen(lemma, slot)?;
        Ok(build_source(&self.vocab, lemma, input, tags, 1))
    }

    fn encode(&self, g: &mut Graph, src: &Source, noise: &mut Noise) -> Result<(PgenEncoded, PgenState)> {
        let embedded: Vec<Var> = src
            .input
            .iter()
            .map(|&id| {
                let e = self.embedding.lookup(g, id);
                noise.apply(g, e)
            })
            .collect();
        let enc = self.lemma_encoder.run(g, &embedded)?;
        let keys: Vec<Var> = enc.outputs.iter().map(|&k| noise.apply(g, k)).collect();
        let projected = self.attention.project_keys(g, &keys);

        let tag_inputs: Vec<Var> = src.tags.iter().map(|&id| self.embedding.lookup(g, id)).collect();
        let tag_enc = self.tag_encoder.run(g, &tag_inputs)?;
        let tags = g.concat(&[tag_enc.forward_final.h, tag_enc.backward_final.h]);

        let hcat = g.concat(&[enc.forward_final.h, enc.backward_final.h]);
        let ccat = g.concat(&[enc.forward_final.c, enc.backward_final.c]);
        let h0 = self.bridge_h.forward(g, hcat);
        let h0 = g.tanh(h0);
        let c0 = self.bridge_c.forward(g, ccat);
        let context = g.zeros(2 * self.dims.hidden);
        Ok((
            PgenEncoded {
                keys,
                projected,
                tags,
                copy_ids: src.copy_ids.clone(),
                extended_size: src.extended_size(&self.vocab),
            },
            PgenState {
                lstm: LstmState { h: h0, c: c0 },
                context,
            },
        ))
    }

    fn step(
        &self,
        g: &mut Graph,
        enc: &PgenEncoded,
        state: &PgenState,
        prev: usize,
        noise: &mut Noise,
    ) -> Result<(Var, PgenState)> {
        let s = self.decode_step(g, enc, state, prev, noise)?;
        Ok((s.distribution, s.state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::testutil::{randomize, tiny_pgen};
    use crate::generators::vocab::{BOS, EOS};
    use crate::neural::{grad_check, sigmoid, softmax};

    fn first_step(m: &PointerGeneratorModel, lemma: &str, slot: usize) -> (Vec<f64>, Vec<f64>, f64, Vec<f64>) {
        let src = m.source(lemma, slot).unwrap();
        let mut g = Graph::new(&m.store);
        let (enc, state) = m.encode(&mut g, &src, &mut Noise::off()).unwrap();
        let s = m.decode_step(&mut g, &enc, &state, BOS, &mut Noise::off()).unwrap();
        (
            g.value(s.distribution).to_vec(),
            g.value(s.vocab_distribution).to_vec(),
            g.scalar(s.p_gen),
            g.value(s.attention).to_vec(),
        )
    }

    #[test]
    fn distribution_is_normalized() {
        let m = tiny_pgen(1);
        for (lemma, slot) in [("walk", 1), ("abc", 2), ("øx", 3), ("", 1)] {
            let (dist, ..) = first_step(&m, lemma, slot);
            assert!(dist.iter().all(|&p| p >= 0.0));
            assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn oov_characters_get_extended_ids() {
        let m = tiny_pgen(2);
        let src = m.source("aøb", 1).unwrap();
        let v = m.vocab.len();
        assert_eq!(src.oov, vec!['ø']);
        assert_eq!(src.copy_ids[2], v);
        let (dist, ..) = first_step(&m, "aøb", 1);
        assert_eq!(dist.len(), v + 1);
        assert!(dist[v] > 0.0);
        let target = src.target(&m.vocab, "aøbit");
        assert_eq!(target[1], v);
        assert_eq!(src.render(&m.vocab, &target), "aøb");
    }

    #[test]
    fn gate_at_one_is_generation_softmax() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let p_vocab = g.input(vec![0.1, 0.2, 0.3, 0.4]);
        let att = g.input(vec![0.5, 0.5]);
        let one = g.input(vec![1.0]);
        let d = copy_mixture(&mut g, one, p_vocab, att, &[1, 2], 4);
        assert_eq!(g.value(d), &[0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn gate_at_zero_copies_attention() {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let p_vocab = g.input(vec![0.25; 4]);
        // source "aa" with 'a' at id 3
        let att = g.input(vec![0.5, 0.5]);
        let zero = g.input(vec![0.0]);
        let d = copy_mixture(&mut g, zero, p_vocab, att, &[3, 3], 4);
        assert_eq!(g.value(d), &[0.0, 0.0, 0.0, 1.0]);
    }

    fn dense(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
        let cols = x.len();
        b.iter()
            .enumerate()
            .map(|(r, &bias)| bias + (0..cols).map(|c| w[r * cols + c] * x[c]).sum::<f64>())
            .collect()
    }

    #[test]
    fn step_matches_scalar_reference() {
        let m = tiny_pgen(3);
        let src = m.source("kebab", 2).unwrap();
        let mut g = Graph::new(&m.store);
        let (enc, state) = m.encode(&mut g, &src, &mut Noise::off()).unwrap();
        let first = m.decode_step(&mut g, &enc, &state, BOS, &mut Noise::off()).unwrap();
        let prev = m.vocab.char_id('k');
        let s = m.decode_step(&mut g, &enc, &first.state, prev, &mut Noise::off()).unwrap();

        let p = m.parts();
        let val = |id| m.store.get(id).data.clone();
        let e_dim = m.dims.embed;
        let h_dim = m.dims.hidden;
        let emb = val(p.embedding.table)[prev * e_dim..(prev + 1) * e_dim].to_vec();
        let ctx = g.value(first.state.context).to_vec();
        let tags = g.value(enc.tags).to_vec();
        let h_prev = g.value(first.state.lstm.h).to_vec();
        let c_prev = g.value(first.state.lstm.c).to_vec();

        let x: Vec<f64> = [emb, ctx, tags.clone(), h_prev].concat();
        let z = dense(&val(p.decoder.weight), &val(p.decoder.bias), &x);
        let mut h = vec![0.0; h_dim];
        for j in 0..h_dim {
            let i = sigmoid(z[j]);
            let f = sigmoid(z[h_dim + j]);
            let o = sigmoid(z[2 * h_dim + j]);
            let cand = z[3 * h_dim + j].tanh();
            let c = f * c_prev[j] + i * cand;
            h[j] = o * c.tanh();
        }

        let keys: Vec<Vec<f64>> = enc.keys.iter().map(|&k| g.value(k).to_vec()).collect();
        let q = dense(&val(p.attention.query_proj), &val(p.attention.bias), &h);
        let scores: Vec<f64> = keys
            .iter()
            .map(|k| {
                let pk = dense(&val(p.attention.key_proj), &vec![0.0; h_dim], k);
                let t: Vec<f64> = q.iter().zip(&pk).map(|(a, b)| (a + b).tanh()).collect();
                dense(&val(p.attention.score), &[0.0], &t)[0]
            })
            .collect();
        let a = softmax(&scores);
        let mut context = vec![0.0; keys[0].len()];
        for (w, k) in a.iter().zip(&keys) {
            for (c, kv) in context.iter_mut().zip(k) {
                *c += w * kv;
            }
        }
        let feat: Vec<f64> = [h.clone(), context, tags].concat();
        let p_vocab = softmax(&dense(&val(p.output.weight), &val(p.output.bias), &feat));
        let p_gen = sigmoid(dense(&val(p.gate.weight), &val(p.gate.bias), &h)[0]);
        let mut expected: Vec<f64> = p_vocab.iter().map(|v| p_gen * v).collect();
        expected.resize(enc.extended_size, 0.0);
        for (t, &id) in enc.copy_ids.iter().enumerate() {
            expected[id] += (1.0 - p_gen) * a[t];
        }

        assert!((g.scalar(s.p_gen) - p_gen).abs() < 1e-12);
        for (x, y) in g.value(s.attention).iter().zip(&a) {
            assert!((x - y).abs() < 1e-12);
        }
        let got = g.value(s.distribution);
        assert_eq!(got.len(), expected.len());
        for (x, y) in got.iter().zip(&expected) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    #[test]
    fn full_step_gradient_check() {
        let m = tiny_pgen(4);
        let src = m.source("bad", 1).unwrap();
        let target = src.target(&m.vocab, "bada");
        let mut store = m.store.clone();
        randomize(&mut store, 0.5, 44);
        let report = grad_check(
            &mut store,
            |s| {
                let mut g = Graph::new(s);
                let loss = m.loss(&mut g, &src, &target, &mut Noise::off()).unwrap();
                let mut grads = s.zero_grads();
                g.backward(loss, &mut grads);
                (g.scalar(loss), grads)
            },
            1e-5,
            1e-4,
        )
        .unwrap();
        assert!(report.passed, "{report:?}");
        assert!(target.ends_with(&[EOS]));
    }
}
