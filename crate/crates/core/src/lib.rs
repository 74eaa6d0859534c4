//! Unsupervised German→Czech machine translation toolkit.
//!
//! The pipeline translates between two languages using only monolingual
//! text: delexicalizing pre-processing, per-language subword models,
//! embedding spaces aligned through identical-string Procrustes, Kneser-Ney
//! n-gram language models, a unigram phrase table initialized from the
//! cross-lingual geometry, monotone beam decoding, and iterative
//! back-translation that lets the two directions improve each other.
//! Post-processing restores numbers, casing and quotes, replaces unknown
//! tokens, and rescores candidate translations by language-model
//! perplexity.
//!
//! Every stage is deterministic: fixed seeds, ordered containers at
//! serialization boundaries, and no wall-clock or environment inputs, so a
//! pipeline run is byte-reproducible.

pub mod cipher;
pub mod config;
pub mod embeddings;
pub mod error;
pub mod lm;
pub mod pipeline;
pub mod select;
pub mod smt;
pub mod subword;
pub mod textprep;
pub mod uwr;

pub use error::{Error, Result};
