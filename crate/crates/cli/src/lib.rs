//! Stage-by-stage driver for the paradigm completion pipeline.
//!
//! Work directory layout: `candidates.tsv`, `pseudo_lemmas.txt`,
//! `slots.tsv`, `coverage.tsv`, `train.tsv`, `dev.tsv`, `test.tsv`,
//! `model.pgen` or `model.seq2seq`, `train_log.tsv`, `predictions.tsv`,
//! `report.tsv`, and one `<stage>.manifest` per stage run.

pub mod config;
pub mod stages;

pub use config::{GeneratorKind, PipelineConfig};
pub use stages::{run_pipeline, run_stage, sha256_hex, write_synthetic, Stage, StageReport, SynthParams};
