//! Shuffle-corrected (effective) transfer entropy and bootstrap inference.
//!
//! Both resampling loops run replications in parallel; replication `r` draws
//! only from the substream `(seed, domain, r)` and results are collected in
//! index order, so output is identical for any thread count.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{domain, substream};
use crate::te::config::TeConfig;
use crate::te::counts::TransitionEncoder;
use crate::te::symbols::SymbolSeries;

/// One directional result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeEstimate {
    /// `"source → target"`.
    pub direction: String,
    pub te: f64,
    pub ete: f64,
    pub surrogate_mean: f64,
    /// `None` when bootstrap inference is disabled.
    pub std_err: Option<f64>,
    pub p_value: Option<f64>,
    pub n_effective: usize,
    pub config: TeConfig,
}

impl TeEstimate {
    pub fn with_direction(mut self, direction: impl Into<String>) -> Self {
        self.direction = direction.into();
        self
    }

    pub fn is_significant(&self, alpha: f64) -> bool {
        self.p_value.is_some_and(|p| p < alpha)
    }
}

/// Null-distribution summary from the source bootstrap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInference {
    pub std_err: f64,
    pub p_value: f64,
}

pub fn direction_label(source: &str, target: &str) -> String {
    format!("{source} → {target}")
}

/// Plug-in TE of the observed pair.
pub fn observed_te(target: &SymbolSeries, source: &SymbolSeries, config: &TeConfig) -> Result<f64> {
    TransitionEncoder::new(target, source, config.k, config.l)?
        .transfer_entropy(source.symbols(), config.log_base)
}

/// TE values for `config.n_shuffles` independent uniform permutations of the
/// source symbols. The target is never permuted.
pub fn shuffle_surrogate_te(
    target: &SymbolSeries,
    source: &SymbolSeries,
    config: &TeConfig,
) -> Result<Vec<f64>> {
    let seed = config.seed;
    surrogate_te_with(target, source, config, move |replicate, symbols| {
        symbols.shuffle(&mut substream(seed, domain::SHUFFLE, replicate));
    })
}

/// Like [`shuffle_surrogate_te`] with a caller-supplied permutation. The
/// closure receives the replication index and a fresh copy of the source.
pub fn surrogate_te_with<F>(
    target: &SymbolSeries,
    source: &SymbolSeries,
    config: &TeConfig,
    permute: F,
) -> Result<Vec<f64>>
where
    F: Fn(u64, &mut [u32]) + Sync,
{
    if config.n_shuffles == 0 {
        return Err(Error::InvalidConfig("n_shuffles must be >= 1".into()));
    }
    let encoder = TransitionEncoder::new(target, source, config.k, config.l)?;
    (0..config.n_shuffles as u64)
        .into_par_iter()
        .map(|replicate| {
            let mut symbols = source.symbols().to_vec();
            permute(replicate, &mut symbols);
            encoder.transfer_entropy(&symbols, config.log_base)
        })
        .collect()
}

/// TE, surrogate mean and `ete = te - surrogate_mean`. Inference fields are
/// left empty; see [`estimate`].
pub fn effective_transfer_entropy(
    target: &SymbolSeries,
    source: &SymbolSeries,
    config: &TeConfig,
) -> Result<TeEstimate> {
    config.validate()?;
    let encoder = TransitionEncoder::new(target, source, config.k, config.l)?;
    let te = encoder.transfer_entropy(source.symbols(), config.log_base)?;
    let surrogates = shuffle_surrogate_te(target, source, config)?;
    let surrogate_mean = surrogates.iter().sum::<f64>() / surrogates.len() as f64;
    Ok(TeEstimate {
        direction: String::new(),
        te,
        ete: te - surrogate_mean,
        surrogate_mean,
        std_err: None,
        p_value: None,
        n_effective: encoder.n_effective(),
        config: config.clone(),
    })
}

/// Null distribution from `config.n_bootstrap` Markov bootstrap copies of
/// the source at order `config.block_order`.
///
/// Each copy keeps the source's own transition structure but is generated
/// independently of the target. `p_value` is the fraction of null TEs at or
/// above the observed TE; `std_err` is the standard deviation of the null
/// TEs. Returns `None` when `n_bootstrap` is zero.
pub fn bootstrap_inference(
    target: &SymbolSeries,
    source: &SymbolSeries,
    config: &TeConfig,
) -> Result<Option<BootstrapInference>> {
    if config.n_bootstrap == 0 {
        return Ok(None);
    }
    let encoder = TransitionEncoder::new(target, source, config.k, config.l)?;
    let observed = encoder.transfer_entropy(source.symbols(), config.log_base)?;
    let null = bootstrap_null(&encoder, source, config)?;
    Ok(Some(summarize_null(observed, &null)))
}

fn bootstrap_null(
    encoder: &TransitionEncoder,
    source: &SymbolSeries,
    config: &TeConfig,
) -> Result<Vec<f64>> {
    let chain = MarkovResampler::fit(source, config.block_order)?;
    let seed = config.seed;
    (0..config.n_bootstrap as u64)
        .into_par_iter()
        .map(|replicate| {
            let mut rng = substream(seed, domain::BOOTSTRAP, replicate);
            let resampled = chain.generate(source.len(), &mut rng);
            encoder.transfer_entropy(&resampled, config.log_base)
        })
        .collect()
}

fn summarize_null(observed: f64, null: &[f64]) -> BootstrapInference {
    let n = null.len() as f64;
    let exceed = null.iter().filter(|&&v| v >= observed).count();
    let mean = null.iter().sum::<f64>() / n;
    let var = if null.len() > 1 {
        null.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    BootstrapInference {
        std_err: var.sqrt(),
        p_value: exceed as f64 / n,
    }
}

/// Full estimate: ETE plus bootstrap standard error and p-value.
pub fn estimate(
    direction: impl Into<String>,
    target: &SymbolSeries,
    source: &SymbolSeries,
    config: &TeConfig,
) -> Result<TeEstimate> {
    let mut est = effective_transfer_entropy(target, source, config)?;
    if let Some(inf) = bootstrap_inference(target, source, config)? {
        est.std_err = Some(inf.std_err);
        est.p_value = Some(inf.p_value);
    }
    Ok(est.with_direction(direction))
}

/// Empirical order-`b` Markov chain of a symbol series, read circularly so
/// that every observed state has at least one successor.
#[derive(Debug, Clone)]
pub(crate) struct MarkovResampler {
    order: usize,
    alphabet: u64,
    /// `alphabet^(order - 1)`, used to drop the oldest symbol from a state.
    top: u64,
    /// The fitted series; initial states are drawn from its blocks.
    observed: Vec<u32>,
    successors: HashMap<u64, Vec<u32>>,
}

impl MarkovResampler {
    pub fn fit(source: &SymbolSeries, order: usize) -> Result<Self> {
        let symbols = source.symbols();
        let n = symbols.len();
        if order == 0 {
            return Err(Error::InvalidConfig("block_order must be >= 1".into()));
        }
        if n <= order {
            return Err(Error::InsufficientData(format!(
                "source of length {n} has no order-{order} transitions"
            )));
        }
        let alphabet = source.alphabet_size().max(1) as u64;
        let top = alphabet
            .checked_pow(order as u32 - 1)
            .filter(|t| t.checked_mul(alphabet).is_some())
            .ok_or(Error::StateSpaceTooLarge {
                alphabet: alphabet as usize,
                exponent: order,
            })?;

        let at = |i: usize| symbols[i % n];
        let mut successors: HashMap<u64, Vec<u32>> = HashMap::new();
        let mut state = (0..order).fold(0u64, |code, i| code * alphabet + u64::from(at(i)));
        for i in 0..n {
            let next = at(i + order);
            successors.entry(state).or_default().push(next);
            state = (state % top) * alphabet + u64::from(next);
        }
        Ok(Self {
            order,
            alphabet,
            top,
            observed: symbols.to_vec(),
            successors,
        })
    }

    pub fn generate<R: Rng>(&self, len: usize, rng: &mut R) -> Vec<u32> {
        let mut out = Vec::with_capacity(len);
        let n = self.observed.len();
        let offset = rng.random_range(0..n);
        let mut state = 0u64;
        for i in 0..self.order {
            let s = self.observed[(offset + i) % n];
            if out.len() < len {
                out.push(s);
            }
            state = state * self.alphabet + u64::from(s);
        }
        while out.len() < len {
            let options = &self.successors[&state];
            let next = options[rng.random_range(0..options.len())];
            out.push(next);
            state = (state % self.top) * self.alphabet + u64::from(next);
        }
        out
    }

    #[cfg(test)]
    pub fn order(&self) -> usize {
        self.order
    }
}
