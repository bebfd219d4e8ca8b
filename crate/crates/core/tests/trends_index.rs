use std::collections::BTreeMap;
use std::fs;

use chrono::NaiveDate;
use proptest::prelude::*;
use teflow::trends::{
    build_composite, cumulative_sum, first_difference, keyword_slug, load_trend_csv, preset_names,
    KeywordSet,
};
use teflow::{DatedSeries, Error};

fn day(n: u64) -> NaiveDate {
    NaiveDate::from_ymd_opt(2017, 12, 1).unwrap() + chrono::Days::new(n)
}

fn write(text: &str) -> tempfile::NamedTempFile {
    let file = tempfile::NamedTempFile::new().unwrap();
    fs::write(file.path(), text).unwrap();
    file
}

#[test]
fn single_row() {
    let file = write("date,value\n2017-12-10,100\n");
    let s = load_trend_csv(file.path(), "bitcoin", false).unwrap();
    assert_eq!(s.values(), [100.0]);
    assert_eq!(s.dates(), [NaiveDate::from_ymd_opt(2017, 12, 10).unwrap()]);
}

#[test]
fn out_of_range_value() {
    let file = write("date,value\n2017-12-10,103\n");
    assert!(matches!(
        load_trend_csv(file.path(), "bitcoin", false),
        Err(Error::ValueOutOfRange { value, .. }) if value == 103.0
    ));
}

#[test]
fn export_preamble_matches_clean_file() {
    let rows = "2017-12-10,61\n2017-12-11,70\n2017-12-12,100\n2017-12-13,88\n";
    let clean = write(&format!("date,value\n{rows}"));
    let export = write(&format!(
        "Category: All categories\n\nDay,bitcoin: (Worldwide)\n{rows}"
    ));
    let a = load_trend_csv(clean.path(), "bitcoin", false).unwrap();
    let b = load_trend_csv(export.path(), "bitcoin", true).unwrap();
    assert_eq!(a, b);
    assert!(load_trend_csv(export.path(), "bitcoin", false).is_err());
}

#[test]
fn presets_ship_both_small_subsets() {
    assert_eq!(preset_names(), ["full", "subset1", "subset2", "subset3"]);
    assert_eq!(KeywordSet::preset("subset2").unwrap().len(), 10);
    assert_eq!(KeywordSet::preset("subset3").unwrap().len(), 5);
    assert_eq!(KeywordSet::preset("full").unwrap().len(), 38);
    match KeywordSet::preset("subset9") {
        Err(Error::UnknownPreset { available, .. }) => assert!(available.contains("subset2")),
        other => panic!("{other:?}"),
    }
    assert_eq!(keyword_slug("Proof of Work"), "proof_of_work");
}

#[test]
fn composite_examples() {
    let mut data = BTreeMap::new();
    data.insert(
        "a".to_string(),
        DatedSeries::new("a", vec![day(0), day(1)], vec![40.0, 10.0]).unwrap(),
    );
    data.insert(
        "b".to_string(),
        DatedSeries::new("b", vec![day(0)], vec![60.0]).unwrap(),
    );
    let set = KeywordSet::new("ab", vec!["a".into(), "b".into(), "c".into()]).unwrap();
    let index = build_composite(&data, &set).unwrap();
    assert_eq!(index.levels.values(), [50.0, 10.0]);
    assert_eq!(index.coverage, [2, 1]);
    assert_eq!(index.missing_keywords, ["c"]);

    let five: BTreeMap<String, DatedSeries> = KeywordSet::preset("subset3")
        .unwrap()
        .keywords()
        .iter()
        .zip([10.0, 20.0, 30.0, 40.0, 50.0])
        .map(|(k, v)| {
            (
                k.clone(),
                DatedSeries::new(k.clone(), vec![day(0)], vec![v]).unwrap(),
            )
        })
        .collect();
    let index = build_composite(&five, &KeywordSet::preset("subset3").unwrap()).unwrap();
    assert_eq!(index.levels.values(), [30.0]);
}

#[test]
fn difference_examples() {
    let s = |v: Vec<f64>| DatedSeries::daily("g", day(0), v).unwrap();
    assert_eq!(
        first_difference(&s(vec![50.0; 3])).unwrap().values(),
        [0.0, 0.0]
    );
    assert_eq!(
        first_difference(&s(vec![10.0, 35.0])).unwrap().values(),
        [25.0]
    );
}

fn keyword_table() -> impl Strategy<Value = Vec<Vec<Option<u8>>>> {
    (1usize..6, 1usize..30).prop_flat_map(|(k, n)| {
        proptest::collection::vec(
            proptest::collection::vec(proptest::option::weighted(0.8, 0u8..=100), n),
            k,
        )
    })
}

fn to_map(table: &[Vec<Option<u8>>]) -> BTreeMap<String, DatedSeries> {
    table
        .iter()
        .enumerate()
        .map(|(i, col)| {
            let points = col
                .iter()
                .enumerate()
                .filter_map(|(d, v)| v.map(|v| (day(d as u64), f64::from(v))))
                .collect();
            let name = format!("kw{i}");
            (
                name.clone(),
                DatedSeries::from_points(name, points).unwrap(),
            )
        })
        .collect()
}

proptest! {
    #[test]
    fn composite_properties(table in keyword_table(), rotate in 0usize..6) {
        let map = to_map(&table);
        let mut names: Vec<String> = map.keys().cloned().collect();
        let set = KeywordSet::new("s", names.clone()).unwrap();
        let Ok(index) = build_composite(&map, &set) else {
            prop_assert!(table.iter().all(|c| c.iter().all(Option::is_none)));
            return Ok(());
        };
        for ((date, level), &coverage) in index.levels.iter().zip(&index.coverage) {
            let present: Vec<f64> = map
                .values()
                .filter_map(|s| s.iter().find(|(d, _)| *d == date).map(|(_, v)| v))
                .collect();
            prop_assert_eq!(coverage, present.len());
            let lo = present.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = present.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(level >= lo - 1e-9 && level <= hi + 1e-9);
            let mean = present.iter().sum::<f64>() / present.len() as f64;
            prop_assert!((level - mean).abs() < 1e-9);
        }

        let len = names.len();
        names.rotate_left(rotate % len);
        names.reverse();
        let permuted = build_composite(&map, &KeywordSet::new("s", names).unwrap()).unwrap();
        prop_assert_eq!(permuted.levels, index.levels);

        let single = KeywordSet::new("kw0", vec!["kw0".into()]).unwrap();
        if let Ok(one) = build_composite(&map, &single) {
            prop_assert_eq!(one.levels.values(), map["kw0"].values());
            prop_assert_eq!(one.levels.dates(), map["kw0"].dates());
        }
    }

    #[test]
    fn difference_then_sum_is_identity(values in proptest::collection::vec(0u8..=100, 2..50)) {
        let levels = DatedSeries::daily("g", day(0), values.iter().map(|&v| f64::from(v)).collect()).unwrap();
        let diffs = first_difference(&levels).unwrap();
        let back = cumulative_sum(day(0), levels.values()[0], &diffs).unwrap();
        prop_assert_eq!(back.values(), levels.values());
        prop_assert_eq!(back.dates(), levels.dates());
        let again = first_difference(&back).unwrap();
        prop_assert_eq!(again.values(), diffs.values());
    }
}
