//! Detection of Type-4 (semantic) clones among Solidity functions.
//!
//! The pipeline pairs functions whose code embeddings are dissimilar but
//! whose header comments are near-identical, samples the resulting pairs by
//! similarity stripe for human review, and fills documentation gaps with
//! LLM-generated summaries.
//!
//! Modules follow the pipeline order: [`corpus`] → [`extractor`] →
//! [`embed`] → [`pairs`] → [`sampling`] → [`review`], with [`llmdoc`] for
//! the LLM-backed steps.

pub mod corpus;
pub mod embed;
pub mod error;
pub mod extractor;
pub mod fsutil;
pub mod hashing;
pub mod llmdoc;
pub mod pairs;
pub mod par;
pub mod review;
pub mod sampling;

pub use error::{Error, Result};
pub use par::Execution;
