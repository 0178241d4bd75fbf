//! Layers built on the tape: embeddings, dense maps, LSTM cells and
//! additive attention.

use rand::Rng;

use super::graph::{Graph, Var};
use super::tensor::{ParamId, ParamStore, Tensor};
use crate::error::{Error, Result};

/// Weight initialization range: uniform(-INIT_SCALE, INIT_SCALE).
pub const INIT_SCALE: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct Embedding {
    pub table: ParamId,
    pub dim: usize,
}

impl Embedding {
    pub fn new(store: &mut ParamStore, name: &str, vocab: usize, dim: usize, rng: &mut impl Rng) -> Self {
        Embedding {
            table: store.add_uniform(format!("{name}.table"), &[vocab, dim], INIT_SCALE, rng),
            dim,
        }
    }

    pub fn lookup(&self, g: &mut Graph, index: usize) -> Var {
        g.row(self.table, index)
    }
}

#[derive(Clone, Debug)]
pub struct Dense {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input: usize,
    pub output: usize,
}

impl Dense {
    pub fn new(store: &mut ParamStore, name: &str, input: usize, output: usize, rng: &mut impl Rng) -> Self {
        Dense {
            weight: store.add_uniform(format!("{name}.w"), &[output, input], INIT_SCALE, rng),
            bias: store.add_zeros(format!("{name}.b"), &[output]),
            input,
            output,
        }
    }

    pub fn forward(&self, g: &mut Graph, x: Var) -> Var {
        let wx = g.matvec(self.weight, x);
        let b = g.param(self.bias);
        g.add(wx, b)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LstmState {
    pub h: Var,
    pub c: Var,
}

/// One LSTM cell. Gate pre-activations are `W [x; h] + b`, laid out as
/// input, forget, output, candidate blocks of `hidden` rows each.
#[derive(Clone, Debug)]
pub struct LstmCell {
    pub weight: ParamId,
    pub bias: ParamId,
    pub input_dim: usize,
    pub hidden_dim: usize,
}

impl LstmCell {
    pub fn new(store: &mut ParamStore, name: &str, input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        let weight = store.add_uniform(format!("{name}.w"), &[4 * hidden_dim, input_dim + hidden_dim], INIT_SCALE, rng);
        let mut b = Tensor::zeros(&[4 * hidden_dim]);
        for v in &mut b.data[hidden_dim..2 * hidden_dim] {
            *v = 1.0;
        }
        let bias = store.add(format!("{name}.b"), b);
        LstmCell {
            weight,
            bias,
            input_dim,
            hidden_dim,
        }
    }

    pub fn zero_state(&self, g: &mut Graph) -> LstmState {
        LstmState {
            h: g.zeros(self.hidden_dim),
            c: g.zeros(self.hidden_dim),
        }
    }

    pub fn step(&self, g: &mut Graph, x: Var, state: LstmState) -> Result<LstmState> {
        let got = g.value(x).len();
        if got != self.input_dim {
            return Err(Error::Dimension {
                context: "lstm input",
                expected: self.input_dim,
                actual: got,
            });
        }
        let h = self.hidden_dim;
        let xh = g.concat(&[x, state.h]);
        let z = g.matvec(self.weight, xh);
        let b = g.param(self.bias);
        let z = g.add(z, b);
        let i = g.slice(z, 0, h);
        let i = g.sigmoid(i);
        let f = g.slice(z, h, h);
        let f = g.sigmoid(f);
        let o = g.slice(z, 2 * h, h);
        let o = g.sigmoid(o);
        let cand = g.slice(z, 3 * h, h);
        let cand = g.tanh(cand);
        let keep = g.mul(f, state.c);
        let write = g.mul(i, cand);
        let c = g.add(keep, write);
        let tc = g.tanh(c);
        let h = g.mul(o, tc);
        Ok(LstmState { h, c })
    }

    /// Run over a sequence; returns per-step hidden states and the final
    /// state.
    pub fn forward(&self, g: &mut Graph, inputs: &[Var], init: LstmState) -> Result<(Vec<Var>, LstmState)> {
        let mut state = init;
        let mut outputs = Vec::with_capacity(inputs.len());
        for &x in inputs {
            state = self.step(g, x, state)?;
            outputs.push(state.h);
        }
        Ok((outputs, state))
    }
}

/// Free-function form of [`LstmCell::forward`].
pub fn lstm_forward(
    g: &mut Graph,
    cell: &LstmCell,
    inputs: &[Var],
    init: LstmState,
) -> Result<(Vec<Var>, LstmState)> {
    cell.forward(g, inputs, init)
}

pub struct BiLstmOutput {
    /// `[forward_t; backward_t]` per position.
    pub outputs: Vec<Var>,
    /// Final forward state (after the last position).
    pub forward_final: LstmState,
    /// Final backward state (after the first position).
    pub backward_final: LstmState,
}

#[derive(Clone, Debug)]
pub struct BiLstm {
    pub forward: LstmCell,
    pub backward: LstmCell,
}

impl BiLstm {
    pub fn new(store: &mut ParamStore, name: &str, input_dim: usize, hidden_dim: usize, rng: &mut impl Rng) -> Self {
        BiLstm {
            forward: LstmCell::new(store, &format!("{name}.fwd"), input_dim, hidden_dim, rng),
            backward: LstmCell::new(store, &format!("{name}.bwd"), input_dim, hidden_dim, rng),
        }
    }

    pub fn output_dim(&self) -> usize {
        2 * self.forward.hidden_dim
    }

    pub fn run(&self, g: &mut Graph, inputs: &[Var]) -> Result<BiLstmOutput> {
        let init = self.forward.zero_state(g);
        let (fwd, forward_final) = self.forward.forward(g, inputs, init)?;
        let reversed: Vec<Var> = inputs.iter().rev().copied().collect();
        let init = self.backward.zero_state(g);
        let (mut bwd, backward_final) = self.backward.forward(g, &reversed, init)?;
        bwd.reverse();
        let outputs = fwd.iter().zip(&bwd).map(|(f, b)| g.concat(&[*f, *b])).collect();
        Ok(BiLstmOutput {
            outputs,
            forward_final,
            backward_final,
        })
    }
}

/// Additive attention: `score_t = v . tanh(Wq q + Wk k_t + b)`,
/// weights = softmax(scores), context = sum of weighted keys.
#[derive(Clone, Debug)]
pub struct Attention {
    pub query_proj: ParamId,
    pub key_proj: ParamId,
    pub bias: ParamId,
    pub score: ParamId,
    pub query_dim: usize,
    pub key_dim: usize,
    pub hidden: usize,
}

pub struct AttentionOutput {
    pub context: Var,
    pub weights: Var,
}

impl Attention {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        query_dim: usize,
        key_dim: usize,
        hidden: usize,
        rng: &mut impl Rng,
    ) -> Self {
        Attention {
            query_proj: store.add_uniform(format!("{name}.wq"), &[hidden, query_dim], INIT_SCALE, rng),
            key_proj: store.add_uniform(format!("{name}.wk"), &[hidden, key_dim], INIT_SCALE, rng),
            bias: store.add_zeros(format!("{name}.b"), &[hidden]),
            score: store.add_uniform(format!("{name}.v"), &[1, hidden], INIT_SCALE, rng),
            query_dim,
            key_dim,
            hidden,
        }
    }

    /// Project the keys once; reused across decoder steps.
    pub fn project_keys(&self, g: &mut Graph, keys: &[Var]) -> Vec<Var> {
        keys.iter().map(|&k| g.matvec(self.key_proj, k)).collect()
    }

    pub fn attend(&self, g: &mut Graph, query: Var, keys: &[Var], projected: &[Var]) -> Result<AttentionOutput> {
        if keys.is_empty() {
            return Err(Error::EmptyKeys);
        }
        let q = g.matvec(self.query_proj, query);
        let b = g.param(self.bias);
        let qb = g.add(q, b);
        let scores: Vec<Var> = projected
            .iter()
            .map(|&pk| {
                let s = g.add(qb, pk);
                let s = g.tanh(s);
                g.matvec(self.score, s)
            })
            .collect();
        let scores = g.concat(&scores);
        let weights = g.softmax(scores);
        let context = g.weighted_sum(weights, keys);
        Ok(AttentionOutput { context, weights })
    }
}

pub fn additive_attention(g: &mut Graph, attn: &Attention, query: Var, keys: &[Var]) -> Result<AttentionOutput> {
    let projected = attn.project_keys(g, keys);
    attn.attend(g, query, keys, &projected)
}

/// Inverted dropout: multiply by a 0/(1/(1-rate)) mask from `rng`.
/// Identity when `rng` is `None` or the rate is zero.
pub fn dropout(g: &mut Graph, x: Var, rate: f64, rng: Option<&mut dyn rand::RngCore>) -> Var {
    let Some(rng) = rng else { return x };
    if rate <= 0.0 {
        return x;
    }
    let keep = 1.0 - rate;
    let n = g.value(x).len();
    let mask: Vec<f64> = (0..n)
        .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect();
    let m = g.input(mask);
    g.mul(x, m)
}
