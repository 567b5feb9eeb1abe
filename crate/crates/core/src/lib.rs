//! Structured sentiment analysis as bi-lexical dependency graph parsing.
//!
//! Opinion tuples (holder, target, expression, polarity) are encoded as
//! labeled dependency graphs ([`codec`]), predicted by a biaffine graph
//! parser ([`parser`]), decoded back to tuples and scored with span, graph
//! and tuple-level metrics ([`metrics`]). File formats live in [`io`].

pub mod codec;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod parser;

pub use error::{Error, Result};
