//! Plug-in transition counting and the transfer entropy sum.
//!
//! A transition at time `t` is the tuple
//! `(target[t], target[t-1..=t-k], source[t-1..=t-l])`: the next target
//! symbol is predicted from histories that both end at `t - 1`, so a
//! same-day source value never explains a same-day target value. Tuples are
//! formed for `t = max(k, l) ..= n - 1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::te::symbols::SymbolSeries;

/// Raw plug-in values below zero but above this are rounding noise.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

/// State spaces up to this size are counted in a dense buffer instead of by
/// sorting encoded keys.
const DENSE_LIMIT: u64 = 1 << 14;

/// One cell of the joint table. Histories are base-`alphabet` codes with the
/// most recent symbol as the least significant digit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub target_history: u64,
    pub source_history: u64,
    pub next: u32,
}

/// Plug-in frequency table of `(next, target history, source history)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCounts {
    pub counts: BTreeMap<Transition, u64>,
    pub k: usize,
    pub l: usize,
    pub target_alphabet: usize,
    pub source_alphabet: usize,
}

impl JointCounts {
    /// Total number of transition tuples.
    pub fn n_effective(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Decodes a history code into symbols, most recent first.
pub fn decode_history(code: u64, len: usize, alphabet: usize) -> Vec<u32> {
    let base = alphabet.max(1) as u64;
    let mut rest = code;
    (0..len)
        .map(|_| {
            let s = rest % base;
            rest /= base;
            s as u32
        })
        .collect()
}

fn encode_history(symbols: &[u32], t: usize, len: usize, alphabet: u64) -> u64 {
    let mut code = 0;
    for a in (0..len).rev() {
        code = code * alphabet + u64::from(symbols[t - 1 - a]);
    }
    code
}

fn checked_space(alphabet: usize, exponent: usize) -> Result<u64> {
    let too_large = Error::StateSpaceTooLarge { alphabet, exponent };
    let exp = u32::try_from(exponent).map_err(|_| too_large)?;
    (alphabet.max(1) as u64)
        .checked_pow(exp)
        .ok_or(Error::StateSpaceTooLarge { alphabet, exponent })
}

/// Precomputed target side of the transition table. The target part of every
/// key is fixed, so resampling only re-encodes the source side.
#[derive(Debug, Clone)]
pub(crate) struct TransitionEncoder {
    l: usize,
    start: usize,
    source_alphabet: u64,
    source_space: u64,
    target_alphabet: u64,
    space: u64,
    /// `target_history * source_space * target_alphabet + next` per tuple.
    target_part: Vec<u64>,
}

impl TransitionEncoder {
    pub fn new(target: &SymbolSeries, source: &SymbolSeries, k: usize, l: usize) -> Result<Self> {
        if k == 0 || l == 0 {
            return Err(Error::InvalidConfig(format!(
                "history lengths must be >= 1 (k={k}, l={l})"
            )));
        }
        if target.len() != source.len() {
            return Err(Error::LengthMismatch {
                left: target.len(),
                right: source.len(),
            });
        }
        let start = k.max(l);
        if target.len() <= start {
            return Err(Error::SeriesTooShort {
                needed: start,
                got: target.len(),
            });
        }

        let mt = target.alphabet_size();
        let ms = source.alphabet_size();
        let source_space = checked_space(ms, l)?;
        let space = checked_space(mt, k + 1)?.checked_mul(source_space).ok_or(
            Error::StateSpaceTooLarge {
                alphabet: mt.max(ms),
                exponent: k + l + 1,
            },
        )?;

        let stride = source_space * mt as u64;
        let symbols = target.symbols();
        let target_part = (start..symbols.len())
            .map(|t| {
                let history = encode_history(symbols, t, k, mt as u64);
                history * stride + u64::from(symbols[t])
            })
            .collect();
        Ok(Self {
            l,
            start,
            source_alphabet: ms as u64,
            source_space,
            target_alphabet: mt as u64,
            space,
            target_part,
        })
    }

    pub fn n_effective(&self) -> usize {
        self.target_part.len()
    }

    /// Possible `(next, target history, source history)` cells.
    #[cfg_attr(not(test), allow(dead_code))]
    pub fn space(&self) -> u64 {
        self.space
    }

    fn key(&self, index: usize, source_history: u64) -> u64 {
        self.target_part[index] + source_history * self.target_alphabet
    }

    /// Occupied cells as `(key, count)` in ascending key order.
    pub fn runs(&self, source: &[u32]) -> Vec<(u64, u64)> {
        let keys = (self.start..source.len())
            .enumerate()
            .map(|(i, t)| self.key(i, encode_history(source, t, self.l, self.source_alphabet)));
        if self.space <= DENSE_LIMIT {
            let mut dense = vec![0u64; self.space as usize];
            for key in keys {
                dense[key as usize] += 1;
            }
            dense
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c > 0)
                .map(|(key, c)| (key as u64, c))
                .collect()
        } else {
            let mut keys: Vec<u64> = keys.collect();
            keys.sort_unstable();
            let mut runs: Vec<(u64, u64)> = Vec::new();
            for key in keys {
                match runs.last_mut() {
                    Some((last, count)) if *last == key => *count += 1,
                    _ => runs.push((key, 1)),
                }
            }
            runs
        }
    }

    pub fn transfer_entropy(&self, source: &[u32], log_base: f64) -> Result<f64> {
        let runs = self.runs(source);
        te_from_runs(&runs, self.source_space, self.target_alphabet, log_base)
    }

    pub fn split_key(&self, key: u64) -> Transition {
        let next = key % self.target_alphabet;
        let rest = key / self.target_alphabet;
        Transition {
            target_history: rest / self.source_space,
            source_history: rest % self.source_space,
            next: next as u32,
        }
    }
}

/// Builds the plug-in count table for `source -> target`.
pub fn count_transitions(
    target: &SymbolSeries,
    source: &SymbolSeries,
    k: usize,
    l: usize,
) -> Result<JointCounts> {
    let encoder = TransitionEncoder::new(target, source, k, l)?;
    let counts = encoder
        .runs(source.symbols())
        .into_iter()
        .map(|(key, c)| (encoder.split_key(key), c))
        .collect();
    Ok(JointCounts {
        counts,
        k,
        l,
        target_alphabet: target.alphabet_size(),
        source_alphabet: source.alphabet_size(),
    })
}

/// Plug-in transfer entropy `Σ p(i+, i, j) log[p(i+ | i, j) / p(i+ | i)]` in
/// units of `log_base`.
pub fn transfer_entropy(counts: &JointCounts, log_base: f64) -> Result<f64> {
    if counts.is_empty() {
        return Err(Error::EmptyCounts);
    }
    let source_space = checked_space(counts.source_alphabet, counts.l)?;
    let mt = counts.target_alphabet.max(1) as u64;
    let runs: Vec<(u64, u64)> = counts
        .counts
        .iter()
        .map(|(cell, &c)| {
            let key = (cell.target_history * source_space + cell.source_history) * mt
                + u64::from(cell.next);
            (key, c)
        })
        .collect();
    te_from_runs(&runs, source_space, mt, log_base)
}

/// Evaluates the plug-in sum over key-sorted runs. Keys order cells by
/// target history, then source history, then next symbol, so each target
/// history and each `(target, source)` context is a contiguous block.
fn te_from_runs(
    runs: &[(u64, u64)],
    source_space: u64,
    target_alphabet: u64,
    log_base: f64,
) -> Result<f64> {
    if runs.is_empty() {
        return Err(Error::EmptyCounts);
    }
    let context_of = |key: u64| key / target_alphabet;
    let target_history_of = |key: u64| key / (target_alphabet * source_space);

    let total: u64 = runs.iter().map(|&(_, c)| c).sum();
    let mut next_given_history = vec![0u64; target_alphabet as usize];
    let mut sum = 0.0;

    let mut block_start = 0;
    while block_start < runs.len() {
        let history = target_history_of(runs[block_start].0);
        let block_end = block_start
            + runs[block_start..]
                .iter()
                .take_while(|&&(key, _)| target_history_of(key) == history)
                .count();
        let block = &runs[block_start..block_end];

        next_given_history.iter_mut().for_each(|c| *c = 0);
        let mut history_total = 0u64;
        for &(key, c) in block {
            next_given_history[(key % target_alphabet) as usize] += c;
            history_total += c;
        }

        let mut ctx_start = 0;
        while ctx_start < block.len() {
            let context = context_of(block[ctx_start].0);
            let ctx_end = ctx_start
                + block[ctx_start..]
                    .iter()
                    .take_while(|&&(key, _)| context_of(key) == context)
                    .count();
            let context_total: u64 = block[ctx_start..ctx_end].iter().map(|&(_, c)| c).sum();
            for &(key, c) in &block[ctx_start..ctx_end] {
                let marginal = next_given_history[(key % target_alphabet) as usize];
                let ratio =
                    (c as f64 * history_total as f64) / (context_total as f64 * marginal as f64);
                sum += c as f64 * ratio.ln();
            }
            ctx_start = ctx_end;
        }
        block_start = block_end;
    }

    let te = sum / total as f64 / log_base.ln();
    clamp_non_negative(te)
}

fn clamp_non_negative(te: f64) -> Result<f64> {
    if te >= 0.0 {
        Ok(te)
    } else if te > -NEGATIVE_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::NumericalInconsistency(te))
    }
}
