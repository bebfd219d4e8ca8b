//! Date alignment, direction pairs, lag sweeps and non-overlapping windows.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{AnalysisReport, LagCurve, WindowCurve, WindowEstimate};
use crate::rng::derive_seed;
use crate::series::DatedSeries;
use crate::te::{direction_label, estimate, symbolize, TeConfig, TeEstimate};
use crate::trends::first_difference;

/// Seed tags for the two directions of a pair.
const FORWARD: u64 = 0;
const BACKWARD: u64 = 1;

/// Below this many observed tuples per possible joint state a lag cell is
/// reported as sparse.
const MIN_TUPLES_PER_STATE: f64 = 5.0;

/// Minimum window length beyond the longest history.
const WINDOW_MARGIN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    Levels,
    FirstDifference,
}

impl Transform {
    pub fn apply(self, series: &DatedSeries) -> Result<DatedSeries> {
        match self {
            Transform::Levels => Ok(series.clone()),
            Transform::FirstDifference => first_difference(series),
        }
    }
}

/// How "lag" is interpreted in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagMode {
    /// `k = l = lag`.
    #[default]
    Joint,
    /// `k = l = 1` with the source delayed by `lag - 1` extra steps.
    SourceShift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowScheme {
    /// Split into this many equal windows.
    Count(usize),
    /// Windows of this many observations.
    Size(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSpec {
    pub source: String,
    pub target: String,
    /// Also estimate `target -> source`.
    pub both_ways: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSpec {
    pub pairs: Vec<PairSpec>,
    pub te_config: TeConfig,
    /// Emit the full-sample estimate of each pair.
    #[serde(default = "full_sample_default")]
    pub full_sample: bool,
    /// Inclusive lag interval for the sweep; `None` skips it.
    pub lag_range: Option<(usize, usize)>,
    #[serde(default)]
    pub lag_mode: LagMode,
    pub window_scheme: Option<WindowScheme>,
    /// Per-series transform by label; unlisted series enter in levels.
    #[serde(default)]
    pub transforms: BTreeMap<String, Transform>,
}

fn full_sample_default() -> bool {
    true
}

impl AnalysisSpec {
    pub fn validate(&self) -> Result<()> {
        self.te_config.validate()?;
        if let Some((lo, hi)) = self.lag_range {
            if lo == 0 || hi < lo {
                return Err(Error::InvalidConfig(format!(
                    "lag range must satisfy 1 <= lo <= hi, got {lo}..={hi}"
                )));
            }
        }
        match self.window_scheme {
            Some(WindowScheme::Count(0)) => {
                Err(Error::InvalidConfig("window count must be >= 1".into()))
            }
            Some(WindowScheme::Size(len)) if len < min_window_len(&self.te_config) => {
                Err(Error::WindowTooSmall {
                    window_len: len,
                    minimum: min_window_len(&self.te_config),
                })
            }
            _ => Ok(()),
        }
    }
}

/// Smallest window that still leaves more than `max(k, l) + 10` observations.
pub fn min_window_len(config: &TeConfig) -> usize {
    config.max_history() + WINDOW_MARGIN + 1
}

/// Inner join on dates. Missing values are dropped first.
pub fn align(a: &DatedSeries, b: &DatedSeries) -> Result<(DatedSeries, DatedSeries)> {
    let a = a.drop_missing();
    let b = b.drop_missing();
    if a.dates() == b.dates() {
        if a.is_empty() {
            return Err(Error::EmptyIntersection);
        }
        return Ok((a, b));
    }
    let (mut i, mut j) = (0, 0);
    let (mut dates, mut va, mut vb) = (Vec::new(), Vec::new(), Vec::new());
    while i < a.len() && j < b.len() {
        match a.dates()[i].cmp(&b.dates()[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dates.push(a.dates()[i]);
                va.push(a.values()[i]);
                vb.push(b.values()[j]);
                i += 1;
                j += 1;
            }
        }
    }
    if dates.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok((
        DatedSeries::new(a.label.clone(), dates.clone(), va)?.with_units(a.units.clone()),
        DatedSeries::new(b.label.clone(), dates, vb)?.with_units(b.units.clone()),
    ))
}

/// Forward (`source -> target`) and backward (`target -> source`) results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub forward: TeEstimate,
    pub backward: Option<TeEstimate>,
}

impl PairEstimate {
    pub fn estimates(&self) -> impl Iterator<Item = &TeEstimate> {
        std::iter::once(&self.forward).chain(self.backward.as_ref())
    }
}

fn direction_config(config: &TeConfig, tag: u64) -> TeConfig {
    config.clone().with_seed(derive_seed(config.seed, tag))
}

fn check_aligned(source: &DatedSeries, target: &DatedSeries) -> Result<()> {
    if source.dates() != target.dates() {
        return Err(Error::InvalidConfig(format!(
            "'{}' and '{}' are not aligned; call align first",
            source.label, target.label
        )));
    }
    Ok(())
}

/// Estimates both directions of an aligned pair. Each series is symbolized
/// on its own quantiles; each direction draws from its own seed derived
/// from `config.seed`, so the two results do not depend on evaluation order.
pub fn run_pair(
    source: &DatedSeries,
    target: &DatedSeries,
    config: &TeConfig,
) -> Result<PairEstimate> {
    run_pair_directed(source, target, config, true)
}

fn run_pair_directed(
    source: &DatedSeries,
    target: &DatedSeries,
    config: &TeConfig,
    both_ways: bool,
) -> Result<PairEstimate> {
    config.validate()?;
    check_aligned(source, target)?;
    if source.len() <= config.max_history() + 1 {
        return Err(Error::SeriesTooShort {
            needed: config.max_history() + 1,
            got: source.len(),
        });
    }
    let src = symbolize(source, &config.quantile_cuts)?;
    let tgt = symbolize(target, &config.quantile_cuts)?;
    warn_if_sparse(&src, &tgt, config, &source.label, &target.label);

    let forward_label = direction_label(&source.label, &target.label);
    let backward_label = direction_label(&target.label, &source.label);
    let (forward, backward) = rayon::join(
        || {
            estimate(
                forward_label,
                &tgt,
                &src,
                &direction_config(config, FORWARD),
            )
        },
        || {
            both_ways
                .then(|| {
                    estimate(
                        backward_label,
                        &src,
                        &tgt,
                        &direction_config(config, BACKWARD),
                    )
                })
                .transpose()
        },
    );
    Ok(PairEstimate {
        forward: forward?,
        backward: backward?,
    })
}

fn warn_if_sparse(
    src: &crate::te::SymbolSeries,
    tgt: &crate::te::SymbolSeries,
    config: &TeConfig,
    source: &str,
    target: &str,
) -> bool {
    let m = src.alphabet_size().max(tgt.alphabet_size()) as f64;
    let states = m.powi((config.k + config.l + 1) as i32);
    let tuples = src.len().saturating_sub(config.max_history()) as f64;
    let sparse = tuples / states < MIN_TUPLES_PER_STATE;
    if sparse {
        log::warn!(
            "{source}/{target}: {tuples} tuples over {states} joint states at k={}, l={}; estimates are sparse",
            config.k,
            config.l
        );
    }
    sparse
}

/// Runs both directions for every lag in `lags`.
///
/// In [`LagMode::Joint`] each cell uses `k = l = lag` (and the same
/// bootstrap order), so lag 1 reproduces [`run_pair`]. In
/// [`LagMode::SourceShift`] histories stay at one step and the source is
/// delayed instead.
pub fn lag_sweep(
    source: &DatedSeries,
    target: &DatedSeries,
    config: &TeConfig,
    lags: std::ops::RangeInclusive<usize>,
    mode: LagMode,
) -> Result<(LagCurve, LagCurve)> {
    if *lags.start() == 0 || lags.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "lag range must start at >= 1, got {lags:?}"
        )));
    }
    check_aligned(source, target)?;
    let cells: Vec<(usize, PairEstimate)> = lags
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|lag| {
            let cell = match mode {
                LagMode::Joint => run_pair(source, target, &config.clone().with_lag(lag))?,
                LagMode::SourceShift => {
                    let shift = lag - 1;
                    if source.len() <= shift {
                        return Err(Error::SeriesTooShort {
                            needed: shift,
                            got: source.len(),
                        });
                    }
                    let n = source.len();
                    let shifted_source = DatedSeries::new(
                        source.label.clone(),
                        target.dates()[shift..].to_vec(),
                        source.values()[..n - shift].to_vec(),
                    )?;
                    let trimmed_target = target.slice(shift..n);
                    run_pair(
                        &shifted_source,
                        &trimmed_target,
                        &config.clone().with_lag(1),
                    )?
                }
            };
            Ok((lag, cell))
        })
        .collect::<Result<_>>()?;

    let label_f = direction_label(&source.label, &target.label);
    let label_b = direction_label(&target.label, &source.label);
    let mut forward = LagCurve::new(label_f);
    let mut backward = LagCurve::new(label_b);
    for (lag, cell) in cells {
        forward.points.push((lag, cell.forward));
        if let Some(b) = cell.backward {
            backward.points.push((lag, b));
        }
    }
    Ok((forward, backward))
}

/// Consecutive, equal, non-overlapping windows over an aligned pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub window_len: usize,
    pub ranges: Vec<std::ops::Range<usize>>,
    /// Trailing observations left out so every window has the same length.
    pub dropped: usize,
}

pub fn plan_windows(total: usize, scheme: WindowScheme, config: &TeConfig) -> Result<WindowPlan> {
    let minimum = min_window_len(config);
    let (count, window_len) = match scheme {
        WindowScheme::Count(0) | WindowScheme::Size(0) => {
            return Err(Error::InvalidConfig(
                "window count and size must be >= 1".into(),
            ))
        }
        WindowScheme::Count(count) => (count, total / count),
        WindowScheme::Size(len) => (total / len, len),
    };
    if window_len < minimum || count == 0 {
        return Err(Error::WindowTooSmall {
            window_len: if count == 0 { total } else { window_len },
            minimum,
        });
    }
    let ranges = (0..count)
        .map(|w| w * window_len..(w + 1) * window_len)
        .collect();
    Ok(WindowPlan {
        window_len,
        ranges,
        dropped: total - count * window_len,
    })
}

/// Full pair estimate per window; symbolization uses each window's own
/// quantiles.
pub fn window_analysis(
    source: &DatedSeries,
    target: &DatedSeries,
    config: &TeConfig,
    scheme: WindowScheme,
) -> Result<(WindowCurve, WindowCurve, WindowPlan)> {
    check_aligned(source, target)?;
    let plan = plan_windows(source.len(), scheme, config)?;
    if plan.dropped > 0 {
        log::info!(
            "{} trailing observations dropped to keep {} windows of {}",
            plan.dropped,
            plan.ranges.len(),
            plan.window_len
        );
    }
    let cells: Vec<(usize, NaiveDate, NaiveDate, PairEstimate)> = plan
        .ranges
        .par_iter()
        .enumerate()
        .map(|(index, range)| {
            let s = source.slice(range.clone());
            let t = target.slice(range.clone());
            let start = s.first_date().expect("non-empty window");
            let end = s.last_date().expect("non-empty window");
            Ok((index, start, end, run_pair(&s, &t, config)?))
        })
        .collect::<Result<_>>()?;

    let mut forward = WindowCurve::new(direction_label(&source.label, &target.label));
    let mut backward = WindowCurve::new(direction_label(&target.label, &source.label));
    for (index, start, end, cell) in cells {
        forward.windows.push(WindowEstimate {
            index,
            start,
            end,
            estimate: cell.forward,
        });
        if let Some(b) = cell.backward {
            backward.windows.push(WindowEstimate {
                index,
                start,
                end,
                estimate: b,
            });
        }
    }
    Ok((forward, backward, plan))
}

/// Runs every pair of `spec` over the named series.
pub fn run_analysis(
    spec: &AnalysisSpec,
    series: &BTreeMap<String, DatedSeries>,
) -> Result<AnalysisReport> {
    spec.validate()?;
    let mut report = AnalysisReport::default();
    for pair in &spec.pairs {
        let prepare = |label: &str| -> Result<DatedSeries> {
            let raw = series
                .get(label)
                .ok_or_else(|| Error::InvalidConfig(format!("no series named '{label}'")))?;
            let transform = spec.transforms.get(label).copied().unwrap_or_default();
            Ok(transform.apply(raw)?.with_label(label))
        };
        let (source, target) = align(&prepare(&pair.source)?, &prepare(&pair.target)?)?;

        if spec.full_sample {
            let base = run_pair_directed(&source, &target, &spec.te_config, pair.both_ways)?;
            report.rows.extend(base.estimates().cloned());
        }

        if let Some((lo, hi)) = spec.lag_range {
            let (f, b) = lag_sweep(&source, &target, &spec.te_config, lo..=hi, spec.lag_mode)?;
            report.lag_curves.push(f);
            if pair.both_ways {
                report.lag_curves.push(b);
            }
        }
        if let Some(scheme) = spec.window_scheme {
            let (f, b, plan) = window_analysis(&source, &target, &spec.te_config, scheme)?;
            report.dropped_observations = report.dropped_observations.max(plan.dropped);
            report.window_results.push(f);
            if pair.both_ways {
                report.window_results.push(b);
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(n: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 3, n).unwrap()
    }

    fn series(label: &str, days: &[u32]) -> DatedSeries {
        DatedSeries::new(
            label,
            days.iter().map(|&d| day(d)).collect(),
            days.iter().map(|&d| d as f64).collect(),
        )
        .unwrap()
    }

    #[test]
    fn align_cases() {
        let a = series("a", &[1, 2, 3]);
        let b = series("b", &[10, 11]);
        assert!(matches!(align(&a, &b), Err(Error::EmptyIntersection)));

        let (x, y) = align(&a, &series("b", &[1, 2, 3])).unwrap();
        assert_eq!(x, a);
        assert_eq!(y.dates(), a.dates());

        let week = series("a", &[2, 3, 4, 5, 6, 7, 8]);
        let weekdays = series("b", &[2, 3, 4, 5, 6, 8]);
        let (x, y) = align(&week, &weekdays).unwrap();
        assert_eq!(x.len(), 6);
        assert_eq!(x.dates(), y.dates());
    }

    #[test]
    fn window_partition_arithmetic() {
        let config = TeConfig::default();
        let plan = plan_windows(2300, WindowScheme::Count(4), &config).unwrap();
        assert_eq!(plan.window_len, 575);
        assert_eq!(plan.ranges.len(), 4);
        assert_eq!(plan.dropped, 0);

        let plan = plan_windows(2303, WindowScheme::Count(4), &config).unwrap();
        assert_eq!(plan.window_len, 575);
        assert_eq!(plan.dropped, 3);
        assert_eq!(plan.ranges.last().unwrap().end, 2300);

        let plan = plan_windows(1000, WindowScheme::Size(300), &config).unwrap();
        assert_eq!(plan.ranges.len(), 3);
        assert_eq!(plan.dropped, 100);

        assert!(matches!(
            plan_windows(40, WindowScheme::Count(4), &config),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn spec_validation() {
        let mut spec = AnalysisSpec {
            pairs: vec![],
            te_config: TeConfig::default(),
            full_sample: true,
            lag_range: Some((0, 3)),
            lag_mode: LagMode::Joint,
            window_scheme: None,
            transforms: BTreeMap::new(),
        };
        assert!(spec.validate().is_err());
        spec.lag_range = Some((1, 3));
        spec.validate().unwrap();
        spec.window_scheme = Some(WindowScheme::Size(5));
        assert!(matches!(spec.validate(), Err(Error::WindowTooSmall { .. })));
    }
}
