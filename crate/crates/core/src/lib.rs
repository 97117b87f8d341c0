//! Function-level vulnerable code clone detection.
//!
//! The pipeline extracts functions from target repositories ([`corpus`]),
//! embeds their preprocessed text ([`normalize`], [`embed`]), retrieves
//! candidates of known vulnerable functions by exact inner-product search
//! ([`index`], [`detect`]), confirms them with a language model
//! ([`validate`]) and scores the ranked output ([`metrics`]). [`bench`]
//! builds the synthetic clone benchmark and [`baseline`] is the
//! abstraction-hash detector used for comparison.

pub mod baseline;
pub mod bench;
pub mod corpus;
pub mod detect;
pub mod embed;
pub mod error;
mod http;
pub mod index;
pub mod jsonl;
pub mod lexer;
pub mod metrics;
pub mod normalize;
pub mod pipeline;
pub mod validate;

pub use corpus::{FunctionPair, FunctionRecord, Language};
pub use error::{Error, Result};
pub use http::RetryPolicy;
