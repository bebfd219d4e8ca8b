//! Quantile symbolization of real-valued series.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::DatedSeries;
use crate::te::config::validate_cuts;

/// A series over the alphabet `0..alphabet_size` with the bin edges that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolSeries {
    symbols: Vec<u32>,
    alphabet_size: usize,
    bin_edges: Vec<f64>,
    /// Set when every input value was identical and a single-symbol series
    /// was produced.
    pub degenerate: bool,
    /// Set when coincident quantiles were merged, shrinking the alphabet
    /// below `cuts + 1`.
    pub merged_bins: bool,
}

impl SymbolSeries {
    /// Wraps already-discrete symbols, e.g. binary synthetic processes.
    pub fn from_symbols(symbols: Vec<u32>, alphabet_size: usize) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::InvalidConfig("alphabet_size must be >= 1".into()));
        }
        if let Some(bad) = symbols.iter().find(|&&s| s as usize >= alphabet_size) {
            return Err(Error::InvalidConfig(format!(
                "symbol {bad} outside alphabet of size {alphabet_size}"
            )));
        }
        // Edges sit halfway between consecutive symbols so the series can be
        // re-derived from its own codes.
        let bin_edges = (1..alphabet_size).map(|s| s as f64 - 0.5).collect();
        Ok(Self {
            symbols,
            alphabet_size,
            bin_edges,
            degenerate: alphabet_size == 1,
            merged_bins: false,
        })
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Same edges and alphabet, different symbol order.
    pub(crate) fn with_symbols(&self, symbols: Vec<u32>) -> Self {
        Self {
            symbols,
            alphabet_size: self.alphabet_size,
            bin_edges: self.bin_edges.clone(),
            degenerate: self.degenerate,
            merged_bins: self.merged_bins,
        }
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        self.with_symbols(self.symbols[range].to_vec())
    }
}

/// Symbolizes the values of a dated series. See [`symbolize_values`].
pub fn symbolize(series: &DatedSeries, quantile_cuts: &[f64]) -> Result<SymbolSeries> {
    symbolize_values(series.values(), quantile_cuts)
}

/// Maps each value to the number of bin edges strictly below it, where the
/// edges are the empirical quantiles of `values` at `quantile_cuts`.
///
/// Quantiles use linear interpolation between order statistics at position
/// `(n - 1) * p`. Coincident edges are merged. A constant series yields a
/// single-symbol result with `degenerate` set.
pub fn symbolize_values(values: &[f64], quantile_cuts: &[f64]) -> Result<SymbolSeries> {
    validate_cuts(quantile_cuts)?;
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteValue { index });
    }
    if values.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 1,
            got: values.len(),
        });
    }

    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        log::warn!("symbolizing a constant series; every symbol is 0");
        return Ok(SymbolSeries {
            symbols: vec![0; values.len()],
            alphabet_size: 1,
            bin_edges: Vec::new(),
            degenerate: true,
            merged_bins: false,
        });
    }

    let mut edges: Vec<f64> = quantile_cuts
        .iter()
        .map(|&p| quantile_sorted(&sorted, p))
        .collect();
    let raw_edges = edges.len();
    edges.dedup();
    let merged_bins = edges.len() < raw_edges;
    if merged_bins {
        log::debug!(
            "merged {} coincident quantile edges",
            raw_edges - edges.len()
        );
    }

    let symbols = values
        .iter()
        .map(|&v| edges.partition_point(|&e| e < v) as u32)
        .collect();
    Ok(SymbolSeries {
        symbols,
        alphabet_size: edges.len() + 1,
        bin_edges: edges,
        degenerate: false,
        merged_bins,
    })
}

/// Linear-interpolation quantile of ascending `sorted` at probability `p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 || sorted[lo] == sorted[hi] {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn median_split_of_ramp() {
        let values: Vec<f64> = (1..=10).map(f64::from).collect();
        let s = symbolize_values(&values, &[0.5]).unwrap();
        assert_eq!(s.symbols(), &[0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(s.bin_edges(), &[5.5]);
        assert_eq!(s.alphabet_size(), 2);
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = symbolize_values(&[3.0, 3.0, 3.0], &[0.05, 0.95]).unwrap();
        assert_eq!(s.symbols(), &[0, 0, 0]);
        assert!(s.degenerate);
        assert_eq!(s.alphabet_size(), 1);
        assert!(s.bin_edges().is_empty());
    }

    #[test]
    fn tie_maps_to_lower_bin() {
        // Edge at the median lands exactly on 2.0; 2.0 is not strictly above it.
        let s = symbolize_values(&[1.0, 2.0, 3.0], &[0.5]).unwrap();
        assert_eq!(s.bin_edges(), &[2.0]);
        assert_eq!(s.symbols(), &[0, 0, 1]);
    }

    #[test]
    fn coincident_edges_merge() {
        let values = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 2.0];
        let s = symbolize_values(&values, &[0.1, 0.5, 0.95]).unwrap();
        assert!(s.merged_bins);
        assert_eq!(s.alphabet_size(), s.bin_edges().len() + 1);
        assert!(s.bin_edges().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_non_finite() {
        let err = symbolize_values(&[1.0, f64::NAN, 2.0], &[0.5]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { index: 1 }));
    }

    #[test]
    fn rejects_single_observation() {
        assert!(matches!(
            symbolize_values(&[1.0], &[0.5]),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    #[test]
    fn normal_tail_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let values: Vec<f64> = (0..10_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let s = symbolize_values(&values, &[0.05, 0.95]).unwrap();
        let mut counts = [0usize; 3];
        for &sym in s.symbols() {
            counts[sym as usize] += 1;
        }
        let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / 10_000.0).collect();
        for (f, expected) in freq.iter().zip([0.05, 0.90, 0.05]) {
            assert!((f - expected).abs() <= 0.01, "{freq:?}");
        }
    }

    #[test]
    fn from_symbols_checks_range() {
        assert!(SymbolSeries::from_symbols(vec![0, 2], 2).is_err());
        let s = SymbolSeries::from_symbols(vec![0, 1, 1], 2).unwrap();
        assert_eq!(s.bin_edges(), &[0.5]);
    }
}
