//! Directional information flow between time series.
//!
//! The [`te`] module holds the estimators: quantile symbolization, plug-in
//! Shannon transfer entropy, effective transfer entropy (TE minus the mean
//! TE of shuffled-source surrogates) and a Markov-bootstrap null for standard
//! errors and p-values. [`market`] and [`trends`] turn daily OHLC bars and
//! per-keyword search-interest files into analysis series, [`pipeline`] runs
//! direction pairs, lag sweeps and window analyses, and [`synth`] generates
//! processes whose transfer entropy is known exactly.

pub mod error;
pub mod market;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod series;
pub mod synth;
pub mod te;
pub mod trends;

pub use error::{Error, Result};
pub use series::DatedSeries;
pub use te::{SymbolSeries, TeConfig, TeEstimate};
