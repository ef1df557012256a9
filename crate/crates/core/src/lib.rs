//! Phonetics-aware pronunciation embeddings.
//!
//! * [`inventory`]: IPA attribute table and transcription parser.
//! * [`embedding`]: attribute-based (`xᵀW`) and lookup-table token embeddings.
//! * [`lexicon`]: pronunciation dictionaries, sentence conversion, corpus building.
//! * [`nonword`]: initial-consonant substitution nonwords.
//! * [`metrics`]: phoneme-space evaluation (silhouette, mAP, vowel rank correlation, PCA).
//! * [`teacher`]: teacher embedding tables (TEB1) and a synthetic teacher.
//! * [`model`]: the student pronunciation encoder, training and checkpoints.
//! * [`retrieval`]: prompted classification, nonword retrieval, human-similarity correlation.

pub mod embedding;
pub mod error;
pub mod inventory;
pub mod lexicon;
pub mod metrics;
pub mod model;
pub mod nonword;
pub mod par;
pub mod retrieval;
pub mod teacher;
pub mod tensor;

pub use error::{Error, Result};
pub use inventory::{AttributeTable, PronunciationSequence, TokenId};
