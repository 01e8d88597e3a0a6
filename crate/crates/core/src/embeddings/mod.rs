//! Text and entity embeddings.
//!
//! - [`wordvec`]: word-vector tables and averaged text encodings.
//! - [`tfidf`]: document-frequency-filtered tf-idf over per-user entity
//!   documents.
//! - [`network`]: the three-layer classifier whose second hidden layer is
//!   used as a 64-dim entity embedding.
//! - [`external`]: per-user vectors produced by encoders that run outside
//!   this crate.

pub mod external;
pub mod network;
pub mod tfidf;
pub mod wordvec;

pub use external::{import_external_encodings, write_external_encodings};
pub use network::{EntityEmbedder, TrainParams};
pub use tfidf::{SparseVector, TfidfModel};
pub use wordvec::{encode_text_avg, WordVectorTable};
