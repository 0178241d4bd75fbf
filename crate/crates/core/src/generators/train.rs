//! Teacher-forced training with early stopping and model selection.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::hyper::{resolve_hyperparams, ModelKind, PolicyMode, ResolvedConfig};
use super::model::{greedy, InflectionModel};
use super::pgen::PointerGeneratorModel;
use super::seq2seq::Seq2SeqModel;
use super::transducer::{ModelDims, Noise, Transducer};
use super::vocab::{CharVocab, Source};
use crate::dataset::{DataSplit, InflectionExample};
use crate::error::{Error, Result};
use crate::neural::{Graph, OptimizerState};

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean negative log-likelihood per target symbol.
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_accuracy: f64,
    /// True when accuracy was measured on the dev set, false for train.
    pub on_dev: bool,
}

impl TrainingLog {
    /// `epoch \t loss \t dev_accuracy` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(out, "{}\t{:.6}\t{:.4}", r.epoch, r.loss, r.accuracy);
        }
        out
    }
}

/// Exact-match accuracy of greedy decoding.
pub fn decode_accuracy(model: &InflectionModel, examples: &[InflectionExample]) -> Result<f64> {
    match model {
        InflectionModel::Seq2Seq(m) => accuracy_of(m.as_ref(), examples),
        InflectionModel::PointerGenerator(m) => accuracy_of(m.as_ref(), examples),
    }
}

fn accuracy_of<T: Transducer>(model: &T, examples: &[InflectionExample]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for e in examples {
        if greedy(model, &e.lemma, e.slot)?.form == e.form {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Train a fresh model of `kind` on `split.train`.
///
/// After every epoch the model is scored on the dev set (or on the training
/// set when dev is empty); training stops once the best score has not
/// improved for `patience` epochs and the best checkpoint is returned.
pub fn train(kind: ModelKind, split: &DataSplit, cfg: &ResolvedConfig, seed: u64) -> Result<(InflectionModel, TrainingLog)> {
    if split.train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let slots = split
        .train
        .iter()
        .chain(&split.dev)
        .chain(&split.test)
        .map(|e| e.slot)
        .max()
        .unwrap_or(0)
        .max(split.paradigm_size);
    let vocab = CharVocab::from_examples(&split.train, slots);
    let dims = ModelDims {
        embed: cfg.embed,
        hidden: cfg.hidden,
        dropout: cfg.dropout,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        ModelKind::Seq2Seq => {
            let mut m = Seq2SeqModel::new(vocab, dims, &mut rng);
            let log = fit(&mut m, split, cfg, seed, &mut rng)?;
            Ok((InflectionModel::Seq2Seq(Box::new(m)), log))
        }
        ModelKind::PointerGenerator => {
            let mut m = PointerGeneratorModel::new(vocab, dims, &mut rng);
            let log = fit(&mut m, split, cfg, seed, &mut rng)?;
            Ok((InflectionModel::PointerGenerator(Box::new(m)), log))
        }
    }
}

fn fit<T: Transducer>(
    model: &mut T,
    split: &DataSplit,
    cfg: &ResolvedConfig,
    seed: u64,
    rng: &mut ChaCha8Rng,
) -> Result<TrainingLog> {
    let encoded: Vec<(Source, Vec<usize>)> = split
        .train
        .iter()
        .map(|e| {
            let src = model.source(&e.lemma, e.slot)?;
            let target = src.target(model.vocab(), &e.form);
            Ok((src, target))
        })
        .collect::<Result<_>>()?;
    let eval_set = if split.dev.is_empty() { &split.train } else { &split.dev };
    let mut optimizer = OptimizerState::new(cfg.optimizer, model.store());
    let mut grads = model.store().zero_grads();
    let mut order: Vec<usize> = (0..encoded.len()).collect();
    let mut best_store = model.store().clone();
    let mut log = TrainingLog {
        records: Vec::new(),
        best_epoch: 0,
        best_accuracy: f64::NEG_INFINITY,
        on_dev: !split.dev.is_empty(),
    };
    let mut since_best = 0;
    let dropout = cfg.dropout;

    for epoch in 1..=cfg.epochs {
        order.shuffle(rng);
        let mut total_loss = 0.0;
        let mut total_symbols = 0usize;
        for batch in order.chunks(cfg.batch_size.max(1)) {
            grads.fill_zero();
            for &n in batch {
                let (src, target) = &encoded[n];
                let mut noise = if dropout > 0.0 {
                    Noise::new(dropout, splitmix(seed ^ ((epoch as u64) << 32) ^ n as u64))
                } else {
                    Noise::off()
                };
                let mut g = Graph::new(model.store());
                let loss = model.loss(&mut g, src, target, &mut noise)?;
                let value = g.scalar(loss);
                if !value.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, loss: value });
                }
                total_loss += value;
                total_symbols += target.len();
                g.backward(loss, &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            if let Some(max) = cfg.max_grad_norm {
                grads.clip_norm(max);
            }
            optimizer.step(model.store_mut(), &grads)?;
        }
        let accuracy = accuracy_of(model, eval_set)?;
        log.records.push(EpochRecord {
            epoch,
            loss: total_loss / total_symbols.max(1) as f64,
            accuracy,
        });
        if accuracy > log.best_accuracy {
            log.best_accuracy = accuracy;
            log.best_epoch = epoch;
            best_store = model.store().clone();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                break;
            }
        }
    }
    model.store_mut().copy_values_from(&best_store);
    Ok(log)
}

/// Which pointer-generator configuration(s) to train.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PolicyChoice {
    Fixed(PolicyMode),
    /// Train S and V and keep the better on dev accuracy (ties go to S).
    Select,
}

pub struct TrainOutcome {
    pub model: InflectionModel,
    pub log: TrainingLog,
    pub config: ResolvedConfig,
    /// Best accuracy of every variant trained, in training order.
    pub variants: Vec<(PolicyMode, f64)>,
}

pub fn train_with_policy(kind: ModelKind, choice: PolicyChoice, split: &DataSplit, seed: u64) -> Result<TrainOutcome> {
    let t = split.train.len();
    let modes: Vec<PolicyMode> = match (kind, choice) {
        (ModelKind::Seq2Seq, _) => vec![PolicyMode::S],
        (_, PolicyChoice::Fixed(m)) => vec![m],
        (_, PolicyChoice::Select) => {
            let s = resolve_hyperparams(PolicyMode::S, kind, t);
            let v = resolve_hyperparams(PolicyMode::V, kind, t);
            if (ResolvedConfig { mode: PolicyMode::S, ..v }) == s {
                vec![PolicyMode::S]
            } else {
                vec![PolicyMode::S, PolicyMode::V]
            }
        }
    };
    let mut best: Option<TrainOutcome> = None;
    let mut variants = Vec::new();
    for mode in modes {
        let config = resolve_hyperparams(mode, kind, t);
        let (model, log) = train(kind, split, &config, seed)?;
        variants.push((mode, log.best_accuracy));
        let better = best.as_ref().is_none_or(|b| log.best_accuracy > b.log.best_accuracy);
        if better {
            best = Some(TrainOutcome {
                model,
                log,
                config,
                variants: Vec::new(),
            });
        }
    }
    let mut out = best.expect("at least one variant is trained");
    out.variants = variants;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::OptimizerKind;

    fn small_cfg(kind: ModelKind) -> ResolvedConfig {
        ResolvedConfig {
            kind,
            mode: PolicyMode::S,
            embed: 12,
            hidden: 16,
            dropout: 0.0,
            epochs: 150,
            patience: 150,
            optimizer: OptimizerKind::adam(0.02),
            batch_size: 1,
            max_grad_norm: Some(5.0),
        }
    }

    fn walk_split() -> DataSplit {
        DataSplit {
            train: vec![InflectionExample::new("walk", 1, "walked")],
            dev: vec![],
            test: vec![],
            paradigm_size: 1,
        }
    }

    #[test]
    fn memorizes_single_example() {
        for kind in [ModelKind::Seq2Seq, ModelKind::PointerGenerator] {
            let (model, log) = train(kind, &walk_split(), &small_cfg(kind), 1).unwrap();
            assert_eq!(model.generate("walk", 1, 1).unwrap(), "walked", "{kind}");
            assert_eq!(log.best_accuracy, 1.0);
            assert!(!log.on_dev);
        }
    }

    #[test]
    fn patience_one_without_improvement_stops_at_epoch_two() {
        let mut cfg = small_cfg(ModelKind::PointerGenerator);
        cfg.optimizer = OptimizerKind::adam(0.0);
        cfg.patience = 1;
        let split = DataSplit {
            dev: vec![InflectionExample::new("talk", 1, "talked")],
            ..walk_split()
        };
        let (_, log) = train(ModelKind::PointerGenerator, &split, &cfg, 3).unwrap();
        assert_eq!(log.records.len(), 2);
        assert_eq!(log.best_epoch, 1);
        assert!(log.on_dev);
        assert_eq!(log.to_tsv().lines().count(), 2);
    }

    #[test]
    fn best_checkpoint_is_returned() {
        let split = DataSplit {
            dev: vec![InflectionExample::new("talk", 1, "talked")],
            ..walk_split()
        };
        let mut cfg = small_cfg(ModelKind::Seq2Seq);
        cfg.epochs = 20;
        let (model, log) = train(ModelKind::Seq2Seq, &split, &cfg, 5).unwrap();
        let best = log.records.iter().map(|r| r.accuracy).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(log.best_accuracy, best);
        assert_eq!(decode_accuracy(&model, &split.dev).unwrap(), best);
    }

    #[test]
    fn same_seed_same_model() {
        let mut cfg = small_cfg(ModelKind::PointerGenerator);
        cfg.epochs = 5;
        cfg.dropout = 0.3;
        let a = train(ModelKind::PointerGenerator, &walk_split(), &cfg, 11).unwrap();
        let b = train(ModelKind::PointerGenerator, &walk_split(), &cfg, 11).unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0.to_text(), b.0.to_text());
        let c = train(ModelKind::PointerGenerator, &walk_split(), &cfg, 12).unwrap();
        assert_ne!(a.0.to_text(), c.0.to_text());
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let cfg = small_cfg(ModelKind::Seq2Seq);
        assert!(matches!(
            train(ModelKind::Seq2Seq, &DataSplit::default(), &cfg, 0),
            Err(Error::EmptyTrainingSet)
        ));
    }
}
