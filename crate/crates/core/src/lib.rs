//! Clinical-note knowledge extraction.
//!
//! Annotated notes go through subword tokenization and budgeted
//! segmentation, a transformer encoder with a CRF head tags drug-related
//! entities, a rule-based sieve resolves coreferent drug mentions, an
//! entity-masked CLS classifier links drugs to their attributes, and the
//! results populate a typed property graph (patients, posologies, drugs,
//! reasons, adverse events) with analyses and Cypher/GraphML/JSONL export.

pub mod analytics;
pub mod corpus;
pub mod coref;
pub mod crf_ner;
pub mod encoder;
pub mod error;
pub mod kgraph;
pub mod eval;
pub mod optim;
pub mod relex;
pub mod pipeline;
pub mod span;
pub mod tensor;
pub mod textprep;

pub use error::{Error, Result};
