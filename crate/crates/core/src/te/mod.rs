//! Discrete transfer entropy: symbolization, plug-in counting, the
//! shuffle-corrected estimator and its bootstrap null.

mod config;
mod counts;
mod inference;
mod symbols;

pub use config::{
    validate_cuts, TeConfig, DEFAULT_BOOTSTRAP, DEFAULT_QUANTILE_CUTS, DEFAULT_SEED,
    DEFAULT_SHUFFLES,
};
pub use counts::{
    count_transitions, decode_history, transfer_entropy, JointCounts, Transition, NEGATIVE_CLAMP,
};
pub use inference::{
    bootstrap_inference, direction_label, effective_transfer_entropy, estimate, observed_te,
    shuffle_surrogate_te, surrogate_te_with, BootstrapInference, TeEstimate,
};
pub use symbols::{quantile_sorted, symbolize, symbolize_values, SymbolSeries};
