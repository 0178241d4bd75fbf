use super::tensor::{Grads, ParamStore};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OptimizerKind {
    Adadelta { lr: f64, rho: f64, eps: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn adadelta(lr: f64) -> Self {
        OptimizerKind::Adadelta { lr, rho: 0.95, eps: 1e-6 }
    }

    pub fn adam(lr: f64) -> Self {
        OptimizerKind::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn learning_rate(&self) -> f64 {
        match *self {
            OptimizerKind::Adadelta { lr, .. } | OptimizerKind::Adam { lr, .. } => lr,
        }
    }
}

/// Per-parameter accumulators. For Adadelta `first` holds the running
/// squared gradient and `second` the running squared update; for Adam they
/// are the first and second moment estimates.
#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub kind: OptimizerKind,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, store: &ParamStore) -> Self {
        let zeros: Vec<Vec<f64>> = store.params().iter().map(|p| vec![0.0; p.value.len()]).collect();
        OptimizerState {
            kind,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step(&mut self, store: &mut ParamStore, grads: &Grads) -> Result<()> {
        if grads.data.len() != self.first.len() {
            return Err(Error::Dimension {
                context: "optimizer step",
                expected: self.first.len(),
                actual: grads.data.len(),
            });
        }
        self.step += 1;
        let t = self.step as f64;
        for (n, id) in store.ids().collect::<Vec<_>>().into_iter().enumerate() {
            let values = &mut store.get_mut(id).data;
            let g = &grads.data[n];
            if g.len() != values.len() {
                return Err(Error::Dimension {
                    context: "optimizer step",
                    expected: values.len(),
                    actual: g.len(),
                });
            }
            let (m1, m2) = (&mut self.first[n], &mut self.second[n]);
            match self.kind {
                OptimizerKind::Adadelta { lr, rho, eps } => {
                    for k in 0..values.len() {
                        m1[k] = rho * m1[k] + (1.0 - rho) * g[k] * g[k];
                        let delta = (m2[k] + eps).sqrt() / (m1[k] + eps).sqrt() * g[k];
                        m2[k] = rho * m2[k] + (1.0 - rho) * delta * delta;
                        values[k] -= lr * delta;
                    }
                }
                OptimizerKind::Adam { lr, beta1, beta2, eps } => {
                    let c1 = 1.0 - beta1.powf(t);
                    let c2 = 1.0 - beta2.powf(t);
                    for k in 0..values.len() {
                        m1[k] = beta1 * m1[k] + (1.0 - beta1) * g[k];
                        m2[k] = beta2 * m2[k] + (1.0 - beta2) * g[k] * g[k];
                        values[k] -= lr * (m1[k] / c1) / ((m2[k] / c2).sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn optimizer_step(state: &mut OptimizerState, store: &mut ParamStore, grads: &Grads) -> Result<()> {
    state.step(store, grads)
}
