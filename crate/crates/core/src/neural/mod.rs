//! Differentiable building blocks for the inflection generators.

mod gradcheck;
mod graph;
mod layers;
mod optim;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport, RELATIVE_FLOOR};
pub use graph::{sigmoid, softmax, Graph, Var};
pub use layers::{
    additive_attention, dropout, lstm_forward, Attention, AttentionOutput, BiLstm, BiLstmOutput, Dense, Embedding,
    LstmCell, LstmState, INIT_SCALE,
};
pub use optim::{optimizer_step, OptimizerKind, OptimizerState};
pub use tensor::{Grads, Param, ParamId, ParamStore, Tensor};
