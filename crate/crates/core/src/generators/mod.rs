//! Inflection generators: tree fallback, attention seq2seq and the
//! pointer-generator, plus training and paradigm completion.

mod complete;
mod fallback;
mod hyper;
mod model;
mod pgen;
mod seq2seq;
mod train;
mod transducer;
mod vocab;

#[cfg(test)]
mod testutil;

pub use complete::{complete_paradigms, FormGenerator, ModelGenerator};
pub use fallback::{fallback_generate, TreeGenerator};
pub use hyper::{resolve_hyperparams, ModelKind, PolicyMode, ResolvedConfig, PGEN_BATCH_SIZE};
pub use model::{length_cap, Decoded, InflectionModel};
pub use pgen::{copy_mixture, PgenEncoded, PgenParts, PgenState, PgenStep, PointerGeneratorModel};
pub use seq2seq::{Seq2SeqEncoded, Seq2SeqModel};
pub use train::{decode_accuracy, train, train_with_policy, EpochRecord, PolicyChoice, TrainOutcome, TrainingLog};
pub use transducer::{ModelDims, Noise, Transducer};
pub use vocab::{CharVocab, EncodedInput, Source, Symbol, BOS, EOS, PAD, UNK};
