use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::vocab::{CharVocab, Source};
use crate::error::Result;
use crate::neural::{dropout, Graph, ParamStore, Var};

/// Dropout source for one forward pass; `off()` at inference.
pub struct Noise {
    rate: f64,
    rng: Option<ChaCha8Rng>,
}

impl Noise {
    pub fn off() -> Self {
        Noise { rate: 0.0, rng: None }
    }

    pub fn new(rate: f64, seed: u64) -> Self {
        Noise {
            rate,
            rng: Some(ChaCha8Rng::seed_from_u64(seed)),
        }
    }

    pub fn apply(&mut self, g: &mut Graph, x: Var) -> Var {
        match self.rng.as_mut() {
            Some(rng) => dropout(g, x, self.rate, Some(rng)),
            None => x,
        }
    }
}

/// Embedding, hidden and dropout sizes of a model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelDims {
    pub embed: usize,
    pub hidden: usize,
    pub dropout: f64,
}

/// Step-wise character transducer shared by both generator families.
pub trait Transducer {
    type Encoded;
    type State: Clone;

    fn vocab(&self) -> &CharVocab;
    fn store(&self) -> &ParamStore;
    fn store_mut(&mut self) -> &mut ParamStore;
    fn dims(&self) -> ModelDims;

    /// Network input for a query.
    fn source(&self, lemma: &str, slot: usize) -> Result<Source>;

    fn encode(&self, g: &mut Graph, src: &Source, noise: &mut Noise) -> Result<(Self::Encoded, Self::State)>;

    /// One decoder step fed with `prev`; returns the output distribution
    /// over the (extended) vocabulary and the next state.
    fn step(
        &self,
        g: &mut Graph,
        enc: &Self::Encoded,
        state: &Self::State,
        prev: usize,
        noise: &mut Noise,
    ) -> Result<(Var, Self::State)>;

    /// Teacher-forced summed negative log-likelihood of `target`.
    fn loss(&self, g: &mut Graph, src: &Source, target: &[usize], noise: &mut Noise) -> Result<Var> {
        let (enc, mut state) = self.encode(g, src, noise)?;
        let mut prev = super::vocab::BOS;
        let mut terms = Vec::with_capacity(target.len());
        for &t in target {
            let (dist, next) = self.step(g, &enc, &state, prev, noise)?;
            terms.push(g.nll(dist, t));
            state = next;
            prev = t;
        }
        Ok(g.sum(&terms))
    }
}
