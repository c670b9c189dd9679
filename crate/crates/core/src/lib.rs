//! Toolkit for Arabic-English code-switched text.
//!
//! The crate bundles the non-neural machinery needed to work with labeled
//! code-switched corpora:
//!
//! - [`textproc`]: normalization, script detection, tokenization and light stemming
//! - [`corpus`]: CoNLL/IOB and `|||` segmentation corpora
//! - [`embeddings`]: static embedding tables, similarity queries and k-means clusters
//! - [`crf`]: linear-chain CRF named-entity tagger and the script-routing baseline
//! - [`seglid`]: semi-Markov joint segmentation and language identification, plus a
//!   Naive Bayes token-level baseline
//! - [`augment`]: EDA, embedding substitution and back-translation augmentation
//! - [`eval`]: token, entity and segmentation metrics
//!
//! Data-parallel loops go through [`exec`], which uses rayon when the `parallel`
//! feature is enabled and runs sequentially otherwise. Reductions always happen in a
//! fixed chunk order so results are bitwise identical for any thread count.

#![allow(clippy::needless_range_loop)]

pub mod augment;
pub mod corpus;
pub mod crf;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod exec;
pub mod math;
pub mod optim;
pub mod seglid;
pub mod textproc;

pub use error::{Error, Result};
