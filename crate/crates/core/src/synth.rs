//! Synthetic source/target pairs with known information flow.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{domain, substream};
use crate::series::DatedSeries;

const BURN_IN: usize = 200;
const MAX_PATHS: usize = 1 << 22;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessKind {
    /// Independent fair coins.
    IidBinary,
    /// `target_t = source_{t-delay}`, flipped with probability `noise`.
    Copy { delay: usize, noise: f64 },
    /// Joint chain over `(target, source)` pairs, state index
    /// `target * states + source`; `table` is `states² × states²`.
    CoupledMarkov { states: usize, table: Vec<Vec<f64>> },
    /// Source is AR(1) with coefficient `phi`; target is AR(1) with the same
    /// coefficient plus `coupling * source_{t-1}`.
    GaussianAr1 { phi: f64, coupling: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub kind: ProcessKind,
    pub length: usize,
    pub seed: u64,
}

/// Generated pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticPair {
    pub source: Vec<f64>,
    pub target: Vec<f64>,
    /// Alphabet size for the discrete kinds.
    pub alphabet: Option<usize>,
}

impl SyntheticPair {
    /// Symbol codes for discrete kinds.
    pub fn symbols(&self) -> Option<(Vec<u32>, Vec<u32>)> {
        self.alphabet?;
        let cast = |v: &[f64]| v.iter().map(|&x| x as u32).collect();
        Some((cast(&self.source), cast(&self.target)))
    }

    /// Both series dated on consecutive days from `start`.
    pub fn to_series(&self, start: NaiveDate) -> Result<(DatedSeries, DatedSeries)> {
        Ok((
            DatedSeries::daily("source", start, self.source.clone())?,
            DatedSeries::daily("target", start, self.target.clone())?,
        ))
    }
}

pub fn default_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 1, 1).expect("valid date")
}

impl ProcessSpec {
    pub fn new(kind: ProcessKind, length: usize, seed: u64) -> Self {
        Self { kind, length, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.length == 0 {
            return bad("length must be >= 1".into());
        }
        match &self.kind {
            ProcessKind::IidBinary => Ok(()),
            ProcessKind::Copy { delay, noise } => {
                if *delay == 0 {
                    return bad("copy delay must be >= 1".into());
                }
                if !(0.0..=0.5).contains(noise) {
                    return bad(format!("copy noise {noise} outside [0, 0.5]"));
                }
                Ok(())
            }
            ProcessKind::CoupledMarkov { states, table } => {
                let size = states * states;
                if *states < 1 || table.len() != size || table.iter().any(|r| r.len() != size) {
                    return bad(format!("transition table must be {size}x{size}"));
                }
                for (i, row) in table.iter().enumerate() {
                    if row.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
                        return bad(format!("row {i} has a negative or non-finite entry"));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > 1e-9 {
                        return bad(format!("row {i} sums to {sum}"));
                    }
                }
                Ok(())
            }
            ProcessKind::GaussianAr1 { phi, coupling } => {
                if phi.is_nan() || phi.abs() >= 1.0 {
                    return bad(format!("|phi| must be < 1, got {phi}"));
                }
                if !coupling.is_finite() {
                    return bad("coupling must be finite".into());
                }
                Ok(())
            }
        }
    }
}

/// Deterministic in `spec.seed`.
pub fn generate(spec: &ProcessSpec) -> Result<SyntheticPair> {
    spec.validate()?;
    let mut rng = substream(spec.seed, domain::SYNTH, 0);
    let n = spec.length;
    let pair = match &spec.kind {
        ProcessKind::IidBinary => {
            let source = (0..n).map(|_| coin(&mut rng)).collect();
            let target = (0..n).map(|_| coin(&mut rng)).collect();
            SyntheticPair {
                source,
                target,
                alphabet: Some(2),
            }
        }
        ProcessKind::Copy { delay, noise } => {
            let source: Vec<f64> = (0..n).map(|_| coin(&mut rng)).collect();
            let target = (0..n)
                .map(|t| {
                    if t < *delay {
                        coin(&mut rng)
                    } else {
                        let flip = rng.random_bool(*noise);
                        if flip {
                            1.0 - source[t - delay]
                        } else {
                            source[t - delay]
                        }
                    }
                })
                .collect();
            SyntheticPair {
                source,
                target,
                alphabet: Some(2),
            }
        }
        ProcessKind::CoupledMarkov { states, table } => {
            let size = states * states;
            let mut state = rng.random_range(0..size);
            let step = |state: usize, rng: &mut rand_chacha::ChaCha8Rng| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (next, &p) in table[state].iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return next;
                    }
                }
                // rounding at the top of the row
                table[state]
                    .iter()
                    .rposition(|&p| p > 0.0)
                    .unwrap_or(size - 1)
            };
            for _ in 0..BURN_IN {
                state = step(state, &mut rng);
            }
            let mut source = Vec::with_capacity(n);
            let mut target = Vec::with_capacity(n);
            for _ in 0..n {
                target.push((state / states) as f64);
                source.push((state % states) as f64);
                state = step(state, &mut rng);
            }
            SyntheticPair {
                source,
                target,
                alphabet: Some(*states),
            }
        }
        ProcessKind::GaussianAr1 { phi, coupling } => {
            let mut noise = || -> f64 { StandardNormal.sample(&mut rng) };
            let (mut s, mut y) = (0.0, 0.0);
            for _ in 0..BURN_IN {
                let s_prev = s;
                s = phi * s + noise();
                y = phi * y + coupling * s_prev + noise();
            }
            let mut source = Vec::with_capacity(n);
            let mut target = Vec::with_capacity(n);
            for _ in 0..n {
                source.push(s);
                target.push(y);
                let s_prev = s;
                s = phi * s + noise();
                y = phi * y + coupling * s_prev + noise();
            }
            SyntheticPair {
                source,
                target,
                alphabet: None,
            }
        }
    };
    Ok(pair)
}

fn coin<R: Rng>(rng: &mut R) -> f64 {
    if rng.random_bool(0.5) {
        1.0
    } else {
        0.0
    }
}

/// Binary entropy in bits.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
    }
}

/// Exact stationary transfer entropy `source -> target` in bits, using the
/// same timing convention as the estimator (histories end one step before
/// the predicted target symbol).
pub fn population_te(spec: &ProcessSpec, k: usize, l: usize) -> Result<f64> {
    spec.validate()?;
    if k == 0 || l == 0 {
        return Err(Error::InvalidConfig("history lengths must be >= 1".into()));
    }
    match &spec.kind {
        ProcessKind::IidBinary => Ok(0.0),
        ProcessKind::Copy { delay, noise } => Ok(if l >= *delay {
            1.0 - binary_entropy(*noise)
        } else {
            0.0
        }),
        ProcessKind::CoupledMarkov { states, table } => markov_te(*states, table, k, l),
        ProcessKind::GaussianAr1 { .. } => Err(Error::NoClosedForm(
            "gaussian_ar1 after symbolization; estimate it by long simulation".into(),
        )),
    }
}

fn markov_te(states: usize, table: &[Vec<f64>], k: usize, l: usize) -> Result<f64> {
    let size = states * states;
    let horizon = k.max(l);
    let paths = (size as u128).pow(horizon as u32 + 1);
    if paths > MAX_PATHS as u128 {
        return Err(Error::NoClosedForm(format!(
            "{paths} paths to enumerate for k={k}, l={l}"
        )));
    }
    let pi = stationary_distribution(table)?;

    // p(next, target history, source history), histories most recent first.
    let mut joint: BTreeMap<(Vec<usize>, Vec<usize>, usize), f64> = BTreeMap::new();
    let mut path = vec![0usize; horizon + 1];
    for index in 0..paths as usize {
        let mut rest = index;
        for slot in path.iter_mut() {
            *slot = rest % size;
            rest /= size;
        }
        // path[0] is the oldest state, path[horizon] the predicted one.
        let mut p = pi[path[0]];
        for w in path.windows(2) {
            p *= table[w[0]][w[1]];
        }
        if p == 0.0 {
            continue;
        }
        let target_hist = (1..=k).map(|a| path[horizon - a] / states).collect();
        let source_hist = (1..=l).map(|a| path[horizon - a] % states).collect();
        *joint
            .entry((target_hist, source_hist, path[horizon] / states))
            .or_insert(0.0) += p;
    }

    let mut p_hist_src: BTreeMap<(&[usize], &[usize]), f64> = BTreeMap::new();
    let mut p_next_hist: BTreeMap<(usize, &[usize]), f64> = BTreeMap::new();
    let mut p_hist: BTreeMap<&[usize], f64> = BTreeMap::new();
    for ((th, sh, next), &p) in &joint {
        *p_hist_src.entry((th, sh)).or_insert(0.0) += p;
        *p_next_hist.entry((*next, th)).or_insert(0.0) += p;
        *p_hist.entry(th).or_insert(0.0) += p;
    }
    let te = joint
        .iter()
        .map(|((th, sh, next), &p)| {
            let cond_full = p / p_hist_src[&(th.as_slice(), sh.as_slice())];
            let cond_own = p_next_hist[&(*next, th.as_slice())] / p_hist[th.as_slice()];
            p * (cond_full / cond_own).log2()
        })
        .sum::<f64>();
    Ok(te.max(0.0))
}

/// Solves `pi P = pi`, `sum(pi) = 1` by Gaussian elimination.
fn stationary_distribution(table: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = table.len();
    // Rows 0..n-1 of (P^T - I), last row replaced by the normalization.
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n)
                .map(|j| table[j][i] - if i == j { 1.0 } else { 0.0 })
                .collect();
            row.push(0.0);
            row
        })
        .collect();
    a[n - 1] = vec![1.0; n + 1];

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("non-empty");
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::InvalidSpec(
                "transition table has no unique stationary distribution".into(),
            ));
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let factor = a[row][col] / a[col][col];
                if factor != 0.0 {
                    let pivot_row = a[col].clone();
                    for (cell, p) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                        *cell -= factor * p;
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| (a[i][n] / a[i][i]).max(0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(0.5), 1.0);
        // -0.11 log2 0.11 - 0.89 log2 0.89 evaluated with natural logs
        let h = -(0.11f64 * 0.11f64.ln() + 0.89 * 0.89f64.ln()) / std::f64::consts::LN_2;
        assert!((binary_entropy(0.11) - h).abs() < 1e-15);
        assert!((binary_entropy(0.11) - 0.499916).abs() < 1e-6);
    }

    #[test]
    fn copy_population_values() {
        let spec = |noise| ProcessSpec::new(ProcessKind::Copy { delay: 1, noise }, 10, 0);
        assert_eq!(population_te(&spec(0.0), 1, 1).unwrap(), 1.0);
        assert_eq!(population_te(&spec(0.5), 1, 1).unwrap(), 0.0);
        assert!((population_te(&spec(0.11), 1, 1).unwrap() - 0.5).abs() < 1e-4);
        let delayed = ProcessSpec::new(
            ProcessKind::Copy {
                delay: 2,
                noise: 0.0,
            },
            10,
            0,
        );
        assert_eq!(population_te(&delayed, 1, 1).unwrap(), 0.0);
        assert_eq!(population_te(&delayed, 1, 2).unwrap(), 1.0);
    }

    #[test]
    fn copy_generation_follows_definition() {
        let spec = ProcessSpec::new(
            ProcessKind::Copy {
                delay: 3,
                noise: 0.0,
            },
            500,
            9,
        );
        let pair = generate(&spec).unwrap();
        for t in 3..500 {
            assert_eq!(pair.target[t], pair.source[t - 3]);
        }
        assert_eq!(generate(&spec).unwrap(), pair);
    }

    #[test]
    fn invalid_specs() {
        let bad = [
            ProcessKind::Copy {
                delay: 0,
                noise: 0.1,
            },
            ProcessKind::Copy {
                delay: 1,
                noise: 0.6,
            },
            ProcessKind::GaussianAr1 {
                phi: 1.0,
                coupling: 0.0,
            },
            ProcessKind::CoupledMarkov {
                states: 2,
                table: vec![vec![0.5, 0.5, 0.0, 0.0]; 3],
            },
            ProcessKind::CoupledMarkov {
                states: 2,
                table: vec![vec![0.5, 0.6, 0.0, 0.0]; 4],
            },
        ];
        for kind in bad {
            assert!(matches!(
                generate(&ProcessSpec::new(kind, 10, 0)),
                Err(Error::InvalidSpec(_))
            ));
        }
    }

    #[test]
    fn gaussian_has_no_closed_form() {
        let spec = ProcessSpec::new(
            ProcessKind::GaussianAr1 {
                phi: 0.3,
                coupling: 0.5,
            },
            10,
            0,
        );
        assert!(matches!(
            population_te(&spec, 1, 1),
            Err(Error::NoClosedForm(_))
        ));
        assert_eq!(generate(&spec).unwrap().source.len(), 10);
    }

    #[test]
    fn stationary_of_two_state_chain() {
        let pi = stationary_distribution(&[vec![0.9, 0.1], vec![0.3, 0.7]]).unwrap();
        assert!((pi[0] - 0.75).abs() < 1e-12);
        assert!((pi[1] - 0.25).abs() < 1e-12);
    }
}
