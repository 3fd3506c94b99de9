//! Evaluation toolkit for scholarly-abstract simplification systems.
//!
//! Surface metrics (ARI, Flesch-Kincaid, sentence and word length, Special
//! English vocabulary ratio, word accessibility), SARI, embedding-based
//! semantic retention, paired significance testing, the parallel corpus
//! model and the fine-tuning / inference prompt templates.

pub mod corpus;
pub mod error;
pub mod lexicon;
pub mod metrics;
pub mod pipeline;
pub mod readability;
pub mod sari;
pub mod semantic;
pub mod simplifier;
pub mod stats;
pub mod text;

pub use error::{Error, Result};
