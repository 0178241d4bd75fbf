//! Unsupervised morphological paradigm completion.
//!
//! Given raw text and a list of lemmas, the pipeline retrieves candidate
//! inflected forms through edit trees ([`retrieval`]), groups trees into
//! numbered paradigm slots ([`slots`]), builds training data ([`dataset`]),
//! trains a character-level generator ([`generators`]) and fills every
//! missing cell. [`evaluation`] scores the result against gold paradigms
//! with best-match accuracy.

pub mod corpus;
pub mod dataset;
pub mod edittree;
pub mod error;
pub mod evaluation;
pub mod generators;
pub mod neural;
pub mod retrieval;
pub mod slots;
pub mod synthetic;

pub use corpus::{load_corpus, load_lemmas, Corpus, LemmaList};
pub use dataset::{build_splits, DataSplit, InflectionExample, SplitOutcome};
pub use edittree::{apply_tree, build_tree, longest_common_substring, tree_key, CommonSubstring, EditTree};
pub use error::{Error, Result};
pub use evaluation::{accuracy, assignment_max, bmacc, BMAccReport, ParadigmTable};
pub use generators::{
    complete_paradigms, fallback_generate, resolve_hyperparams, train, train_with_policy, FormGenerator,
    InflectionModel, ModelKind, PolicyChoice, PolicyMode, ResolvedConfig, TreeGenerator,
};
pub use retrieval::{retrieve_additional_lemmas, retrieve_candidates, Candidate, CandidateTable, RetrievalConfig};
pub use slots::{assign_slot_ids, discover, DiscoveryConfig, Slot, SlotSystem};
