//! Template-aware train/test partitioning for template-generated
//! question-answering corpora.
//!
//! The pipeline: seeds are abstracted into [`synthesis::Template`]s, which
//! are instantiated against a [`kgstore::Graph`]; [`attribution`] recovers
//! which templates could have produced each instance; [`partitioner`]
//! builds either a random (leaky) split or a split whose test side only
//! holds instances of held-out templates; [`baselines`] and [`metrics`]
//! measure how much the difference matters.

pub mod attribution;
pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod experiment;
pub mod kgstore;
pub mod metrics;
pub mod partitioner;
pub mod qlang;
pub mod shuffle;
pub mod synthesis;
pub mod toy;
