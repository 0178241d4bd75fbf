use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::pgen::PointerGeneratorModel;
use super::seq2seq::Seq2SeqModel;
use super::transducer::ModelDims;
use super::vocab::CharVocab;
use crate::neural::ParamStore;

pub fn tiny_vocab() -> CharVocab {
    CharVocab::new("abcdekw".chars(), 3)
}

pub fn tiny_dims() -> ModelDims {
    ModelDims {
        embed: 5,
        hidden: 4,
        dropout: 0.0,
    }
}

/// Overwrite every parameter with uniform(-scale, scale) so gradients and
/// attention are far from their near-uniform initial regime.
pub fn randomize(store: &mut ParamStore, scale: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for v in store.get_mut(id).data.iter_mut() {
            *v = rng.gen_range(-scale..scale);
        }
    }
}

pub fn tiny_pgen(seed: u64) -> PointerGeneratorModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = PointerGeneratorModel::new(tiny_vocab(), tiny_dims(), &mut rng);
    randomize(&mut m.store, 0.8, seed);
    m
}

pub fn tiny_seq2seq(seed: u64) -> Seq2SeqModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Seq2SeqModel::new(tiny_vocab(), tiny_dims(), &mut rng);
    randomize(&mut m.store, 0.8, seed);
    m
}
