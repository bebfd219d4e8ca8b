use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const DEFAULT_QUANTILE_CUTS: [f64; 2] = [0.05, 0.95];
pub const DEFAULT_SHUFFLES: usize = 100;
pub const DEFAULT_BOOTSTRAP: usize = 300;
pub const DEFAULT_SEED: u64 = 42;

/// Estimator configuration for one directional transfer entropy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeConfig {
    /// Target history length.
    pub k: usize,
    /// Source history length.
    pub l: usize,
    pub alphabet_size: usize,
    pub quantile_cuts: Vec<f64>,
    pub log_base: f64,
    pub n_shuffles: usize,
    /// Zero disables bootstrap inference.
    pub n_bootstrap: usize,
    /// Markov order of the source bootstrap.
    pub block_order: usize,
    pub seed: u64,
}

impl Default for TeConfig {
    fn default() -> Self {
        Self {
            k: 1,
            l: 1,
            alphabet_size: DEFAULT_QUANTILE_CUTS.len() + 1,
            quantile_cuts: DEFAULT_QUANTILE_CUTS.to_vec(),
            log_base: 2.0,
            n_shuffles: DEFAULT_SHUFFLES,
            n_bootstrap: DEFAULT_BOOTSTRAP,
            block_order: 1,
            seed: DEFAULT_SEED,
        }
    }
}

impl TeConfig {
    /// Sets both history lengths and keeps the bootstrap order tied to `l`.
    pub fn with_lag(mut self, lag: usize) -> Self {
        self.k = lag;
        self.l = lag;
        self.block_order = lag;
        self
    }

    pub fn with_histories(mut self, k: usize, l: usize) -> Self {
        self.k = k;
        self.l = l;
        self.block_order = l;
        self
    }

    pub fn with_quantile_cuts(mut self, cuts: Vec<f64>) -> Self {
        self.alphabet_size = cuts.len() + 1;
        self.quantile_cuts = cuts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_shuffles(mut self, n: usize) -> Self {
        self.n_shuffles = n;
        self
    }

    pub fn with_bootstrap(mut self, n: usize) -> Self {
        self.n_bootstrap = n;
        self
    }

    /// Longest history used by either side.
    pub fn max_history(&self) -> usize {
        self.k.max(self.l)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k == 0 || self.l == 0 {
            return bad(format!(
                "history lengths must be >= 1 (k={}, l={})",
                self.k, self.l
            ));
        }
        validate_cuts(&self.quantile_cuts)?;
        if self.alphabet_size != self.quantile_cuts.len() + 1 {
            return bad(format!(
                "alphabet_size {} does not match {} quantile cuts",
                self.alphabet_size,
                self.quantile_cuts.len()
            ));
        }
        if !(self.log_base.is_finite() && self.log_base > 1.0) {
            return bad(format!("log base must exceed 1, got {}", self.log_base));
        }
        if self.n_shuffles == 0 {
            return bad("n_shuffles must be >= 1".into());
        }
        if self.block_order == 0 {
            return bad("block_order must be >= 1".into());
        }
        Ok(())
    }

    /// Short stable hash of every field, used to tag report rows.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(canonical.as_bytes());
        hex::encode(&hash[..8])
    }
}

pub fn validate_cuts(cuts: &[f64]) -> Result<()> {
    if cuts.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one quantile cut is required".into(),
        ));
    }
    if cuts.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
        return Err(Error::InvalidConfig(format!(
            "quantile cuts must lie in (0, 1): {cuts:?}"
        )));
    }
    if cuts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(format!(
            "quantile cuts must be strictly ascending: {cuts:?}"
        )));
    }
    Ok(())
}
