//! Chain-of-thought sepsis prediction from ICU time series: cohort ingest,
//! Sepsis-3 scoring, forecasting, verbalization and chain evaluation.

pub mod catalog;
pub mod chain;
pub mod cohort;
pub mod corpus;
pub mod dense;
pub mod error;
pub mod forecast;
pub mod label;
pub mod numfmt;
pub mod observation;
pub mod sofa;
pub mod synth;
mod template;
pub mod verbalize;

pub use error::{Error, Result};
