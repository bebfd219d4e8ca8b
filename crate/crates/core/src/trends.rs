//! Per-keyword search-interest series and composite attention indices.
//!
//! Inputs are already-continuous daily files; stitching of short export
//! windows is not done here.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{parse_date_value_rows, DatedSeries};

/// Built-in cryptocurrency keyword presets, smallest last.
pub const PRESETS: [(&str, &str); 4] = [
    ("full", include_str!("../presets/full.txt")),
    ("subset1", include_str!("../presets/subset1.txt")),
    ("subset2", include_str!("../presets/subset2.txt")),
    ("subset3", include_str!("../presets/subset3.txt")),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSet {
    pub name: String,
    keywords: Vec<String>,
}

impl KeywordSet {
    /// Keywords are trimmed and must be unique ignoring case.
    pub fn new(name: impl Into<String>, keywords: Vec<String>) -> Result<Self> {
        let keywords: Vec<String> = keywords
            .into_iter()
            .map(|k| k.trim().to_string())
            .filter(|k| !k.is_empty())
            .collect();
        if keywords.is_empty() {
            return Err(Error::EmptyKeywordSet);
        }
        let mut seen = BTreeSet::new();
        for k in &keywords {
            if !seen.insert(normalize(k)) {
                return Err(Error::DuplicateKeyword(k.clone()));
            }
        }
        Ok(Self {
            name: name.into(),
            keywords,
        })
    }

    /// One keyword per line; blank lines and `#` comments are skipped.
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let keywords = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect();
        Self::new(name, keywords)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path.file_stem().map_or_else(
            || "custom".to_string(),
            |s| s.to_string_lossy().into_owned(),
        );
        Self::parse(name, &text)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let wanted = name.trim().to_ascii_lowercase();
        PRESETS
            .iter()
            .find(|(n, _)| *n == wanted)
            .map(|(n, text)| Self::parse(*n, text))
            .unwrap_or_else(|| {
                Err(Error::UnknownPreset {
                    name: name.to_string(),
                    available: preset_names().join(", "),
                })
            })
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

fn normalize(keyword: &str) -> String {
    keyword.trim().to_lowercase()
}

/// File stem for a keyword: lower-cased with whitespace runs replaced by `_`.
/// `"Proof of Work"` becomes `proof_of_work`, `"Mt. Gox"` becomes `mt._gox`.
pub fn keyword_slug(keyword: &str) -> String {
    normalize(keyword)
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
}

fn has_export_preamble(text: &str) -> bool {
    text.lines().next().is_some_and(|l| {
        l.trim_start_matches('\u{feff}')
            .trim()
            .to_ascii_lowercase()
            .starts_with("category:")
    })
}

/// Reads a `date,value` search-interest file with values in `[0, 100]`.
///
/// With `tolerant` set, a leading export preamble (a `Category:` line
/// followed by a blank line) is skipped and any two-column header is
/// accepted.
pub fn load_trend_csv(
    path: impl AsRef<Path>,
    keyword: &str,
    tolerant: bool,
) -> Result<DatedSeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let skip = if tolerant && has_export_preamble(&text) {
        text.lines()
            .position(|l| l.trim().is_empty())
            .map_or(1, |blank| blank + 1)
    } else {
        0
    };
    let rows = parse_date_value_rows(path, &text, skip, !tolerant)?;

    let mut previous: Option<NaiveDate> = None;
    for row in &rows {
        if !row.value.is_nan() && !(0.0..=100.0).contains(&row.value) {
            return Err(Error::ValueOutOfRange {
                date: row.date,
                value: row.value,
            });
        }
        if let Some(prev) = previous {
            if row.date <= prev {
                return Err(Error::parse(
                    path,
                    row.line,
                    format!(
                        "dates must be strictly increasing: {} follows {prev}",
                        row.date
                    ),
                ));
            }
        }
        previous = Some(row.date);
    }
    let points = rows.into_iter().map(|r| (r.date, r.value)).collect();
    Ok(DatedSeries::from_points(keyword, points)?.with_units("search interest"))
}

/// Composite index: per-date arithmetic mean of the constituents present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeIndex {
    pub levels: DatedSeries,
    pub constituents: KeywordSet,
    /// Number of keywords contributing on each date of `levels`.
    pub coverage: Vec<usize>,
    /// Keywords of the set with no series at all.
    pub missing_keywords: Vec<String>,
}

/// Averages the series of `set`'s keywords date by date.
///
/// Keywords are matched to map keys ignoring case. Dates where no keyword
/// has a value are omitted; elsewhere the mean runs over the keywords
/// present, and `coverage` records how many there were. Values are summed in
/// a canonical keyword order, so the result does not depend on the order of
/// the keyword list.
pub fn build_composite(
    series_by_keyword: &BTreeMap<String, DatedSeries>,
    set: &KeywordSet,
) -> Result<CompositeIndex> {
    let by_norm: BTreeMap<String, &DatedSeries> = series_by_keyword
        .iter()
        .map(|(k, s)| (normalize(k), s))
        .collect();

    let mut missing_keywords = Vec::new();
    let mut members: BTreeMap<String, &DatedSeries> = BTreeMap::new();
    for keyword in set.keywords() {
        match by_norm.get(&normalize(keyword)) {
            Some(series) => {
                members.insert(normalize(keyword), series);
            }
            None => missing_keywords.push(keyword.clone()),
        }
    }
    if !missing_keywords.is_empty() {
        log::warn!(
            "set '{}': no data for {} of {} keywords ({})",
            set.name,
            missing_keywords.len(),
            set.len(),
            missing_keywords.join(", ")
        );
    }

    let mut per_date: BTreeMap<NaiveDate, (f64, usize)> = BTreeMap::new();
    for series in members.values() {
        for (date, value) in series.iter().filter(|(_, v)| !v.is_nan()) {
            let slot = per_date.entry(date).or_insert((0.0, 0));
            slot.0 += value;
            slot.1 += 1;
        }
    }
    if per_date.is_empty() {
        return Err(Error::NoConstituentData(set.name.clone()));
    }

    let mut dates = Vec::with_capacity(per_date.len());
    let mut values = Vec::with_capacity(per_date.len());
    let mut coverage = Vec::with_capacity(per_date.len());
    for (date, (sum, count)) in per_date {
        dates.push(date);
        values.push(sum / count as f64);
        coverage.push(count);
    }
    let levels = DatedSeries::new(set.name.clone(), dates, values)?.with_units("search interest");
    Ok(CompositeIndex {
        levels,
        constituents: set.clone(),
        coverage,
        missing_keywords,
    })
}

/// `d_t = v_t - v_{t-1}` over consecutive observations, dated at `t`.
pub fn first_difference(series: &DatedSeries) -> Result<DatedSeries> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 1,
            got: series.len(),
        });
    }
    let values = series.values().windows(2).map(|w| w[1] - w[0]).collect();
    Ok(
        DatedSeries::new(series.label.clone(), series.dates()[1..].to_vec(), values)?
            .with_units(format!("{} (first difference)", series.units)),
    )
}

/// Inverse of [`first_difference`]: levels starting from `first`.
pub fn cumulative_sum(
    first_date: NaiveDate,
    first: f64,
    differences: &DatedSeries,
) -> Result<DatedSeries> {
    let mut dates = vec![first_date];
    dates.extend_from_slice(differences.dates());
    let mut values = Vec::with_capacity(dates.len());
    let mut level = first;
    values.push(level);
    for &d in differences.values() {
        level += d;
        values.push(level);
    }
    DatedSeries::new(differences.label.clone(), dates, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(n: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2017, 12, n).unwrap()
    }

    fn series(label: &str, points: &[(u32, f64)]) -> DatedSeries {
        DatedSeries::from_points(label, points.iter().map(|&(d, v)| (day(d), v)).collect()).unwrap()
    }

    #[test]
    fn preset_sizes() {
        assert_eq!(KeywordSet::preset("full").unwrap().len(), 38);
        assert_eq!(KeywordSet::preset("subset1").unwrap().len(), 21);
        assert_eq!(KeywordSet::preset("subset2").unwrap().len(), 10);
        assert_eq!(KeywordSet::preset("Subset3").unwrap().len(), 5);
        match KeywordSet::preset("gtu") {
            Err(Error::UnknownPreset { available, .. }) => assert!(available.contains("subset2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn smaller_presets_are_nested_in_full() {
        let full: BTreeSet<String> = KeywordSet::preset("full")
            .unwrap()
            .keywords()
            .iter()
            .map(|k| normalize(k))
            .collect();
        for name in ["subset1", "subset2", "subset3"] {
            for k in KeywordSet::preset(name).unwrap().keywords() {
                assert!(full.contains(&normalize(k)), "{name}: {k}");
            }
        }
    }

    #[test]
    fn keyword_uniqueness_ignores_case() {
        let err = KeywordSet::new("x", vec!["Bitcoin".into(), " bitcoin ".into()]);
        assert!(matches!(err, Err(Error::DuplicateKeyword(_))));
        assert!(matches!(
            KeywordSet::new("x", vec![]),
            Err(Error::EmptyKeywordSet)
        ));
    }

    #[test]
    fn slugs() {
        assert_eq!(keyword_slug("Proof of Work"), "proof_of_work");
        assert_eq!(keyword_slug("Mt. Gox"), "mt._gox");
        assert_ne!(keyword_slug("Mt Gox"), keyword_slug("Mt. Gox"));
    }

    #[test]
    fn composite_means_and_coverage() {
        let mut map = BTreeMap::new();
        map.insert("a".to_string(), series("a", &[(1, 40.0), (2, 10.0)]));
        map.insert("B".to_string(), series("B", &[(1, 60.0)]));
        let set = KeywordSet::new("ab", vec!["A".into(), "b".into(), "c".into()]).unwrap();
        let idx = build_composite(&map, &set).unwrap();
        assert_eq!(idx.levels.values(), &[50.0, 10.0]);
        assert_eq!(idx.coverage, vec![2, 1]);
        assert_eq!(idx.missing_keywords, vec!["c".to_string()]);
    }

    #[test]
    fn composite_of_five() {
        let mut map = BTreeMap::new();
        let words = ["Bitcoin", "blockchain", "BTC", "cryptocurrency", "crypto"];
        for (i, w) in words.iter().enumerate() {
            map.insert(w.to_string(), series(w, &[(5, 10.0 * (i + 1) as f64)]));
        }
        let idx = build_composite(&map, &KeywordSet::preset("subset3").unwrap()).unwrap();
        assert_eq!(idx.levels.values(), &[30.0]);
        assert_eq!(idx.coverage, vec![5]);
    }

    #[test]
    fn composite_without_data() {
        let set = KeywordSet::new("x", vec!["a".into()]).unwrap();
        assert!(matches!(
            build_composite(&BTreeMap::new(), &set),
            Err(Error::NoConstituentData(_))
        ));
    }

    #[test]
    fn differencing() {
        let flat = series("g", &[(1, 50.0), (2, 50.0), (3, 50.0)]);
        assert_eq!(first_difference(&flat).unwrap().values(), &[0.0, 0.0]);
        let two = series("g", &[(1, 10.0), (2, 35.0)]);
        let d = first_difference(&two).unwrap();
        assert_eq!(d.values(), &[25.0]);
        assert_eq!(d.dates(), &[day(2)]);
        assert!(matches!(
            first_difference(&series("g", &[(1, 1.0)])),
            Err(Error::SeriesTooShort { .. })
        ));
    }
}
