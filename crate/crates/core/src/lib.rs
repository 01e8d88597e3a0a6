//! Personality-class detection toolkit for labeled microblog corpora.
//!
//! The crate covers the whole pipeline: corpus ingestion and label
//! derivation ([`corpus`]), tweet cleaning ([`textproc`]), readability and
//! lexical-category features ([`readability`], [`lexicon`]), text and
//! entity embeddings ([`embeddings`]), tree-ensemble classifiers and the
//! ablation grid ([`model`]), and the per-class analysis tables
//! ([`analysis`]).

pub mod analysis;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod lexicon;
pub mod model;
pub mod readability;
pub mod resources;
pub mod rng;
pub mod synthetic;
pub mod textproc;

pub use corpus::{CorpusSplit, MbtiType, PersonalityClass, ProfileCounts, UserRecord};
pub use error::{Error, Result};
pub use lexicon::Lexicon;
pub use model::{AblationConfig, AblationReport, FeatureVector, Metrics};
pub use readability::ReadabilityScores;
