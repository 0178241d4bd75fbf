use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::neural::OptimizerKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// LSTM encoder-decoder with additive attention; slot token prepended
    /// to the character sequence.
    Seq2Seq,
    /// Pointer-generator with separate lemma and tag encoders.
    PointerGenerator,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Seq2Seq => "seq2seq",
            ModelKind::PointerGenerator => "pgen",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "seq2seq" => Ok(ModelKind::Seq2Seq),
            "pgen" => Ok(ModelKind::PointerGenerator),
            _ => Err(Error::Config(format!("unknown model kind {s:?} (expected seq2seq or pgen)"))),
        }
    }
}

/// Fixed configuration for all training-set sizes (S) or one chosen by
/// training-set size (V).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyMode {
    S,
    V,
}

impl fmt::Display for PolicyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyMode::S => "S",
            PolicyMode::V => "V",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub kind: ModelKind,
    pub mode: PolicyMode,
    pub embed: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub patience: usize,
    pub optimizer: OptimizerKind,
    pub batch_size: usize,
    /// Global gradient-norm clip; off unless set.
    pub max_grad_norm: Option<f64>,
}

/// Pointer-generator minibatch size. With 20, Adam at lr 0.001 makes too
/// few updates per epoch on small training sets for accuracy to leave zero
/// before the 10-epoch patience runs out.
pub const PGEN_BATCH_SIZE: usize = 5;

/// Hyperparameters for a model family, policy mode and training-set size.
///
/// The seq2seq model has a single configuration. The pointer-generator's
/// V mode uses the small-data settings up to 100 training examples, the
/// mid-size settings from 101 to 500, and the S settings above.
pub fn resolve_hyperparams(mode: PolicyMode, kind: ModelKind, train_size: usize) -> ResolvedConfig {
    match kind {
        ModelKind::Seq2Seq => ResolvedConfig {
            kind,
            mode,
            embed: 300,
            hidden: 100,
            dropout: 0.0,
            epochs: 100,
            patience: 10,
            optimizer: OptimizerKind::adadelta(1.0),
            batch_size: 20,
            max_grad_norm: None,
        },
        ModelKind::PointerGenerator => {
            let s_config = ResolvedConfig {
                kind,
                mode,
                embed: 300,
                hidden: 100,
                dropout: 0.3,
                epochs: 60,
                patience: 10,
                optimizer: OptimizerKind::adam(0.001),
                batch_size: PGEN_BATCH_SIZE,
                max_grad_norm: None,
            };
            match (mode, train_size) {
                (PolicyMode::S, _) | (PolicyMode::V, 501..) => s_config,
                (PolicyMode::V, 0..=100) => ResolvedConfig {
                    embed: 100,
                    dropout: 0.5,
                    epochs: 300,
                    patience: 100,
                    ..s_config
                },
                (PolicyMode::V, 101..=500) => ResolvedConfig {
                    embed: 100,
                    dropout: 0.5,
                    epochs: 80,
                    patience: 20,
                    ..s_config
                },
            }
        }
    }
}
