//! Dated observation series and the canonical two-column `date,value` CSV.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Ordered `(date, value)` observations.
///
/// Dates are strictly increasing. Values are finite, except that `NaN` marks
/// an observation explicitly flagged as missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatedSeries {
    pub label: String,
    pub units: String,
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl DatedSeries {
    pub fn new(label: impl Into<String>, dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: dates.len(),
                right: values.len(),
            });
        }
        for pair in dates.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::UnorderedDates {
                    previous: pair[0],
                    date: pair[1],
                });
            }
        }
        if let Some(index) = values.iter().position(|v| v.is_infinite()) {
            return Err(Error::NonFiniteValue { index });
        }
        Ok(Self {
            label: label.into(),
            units: String::new(),
            dates,
            values,
        })
    }

    pub fn from_points(label: impl Into<String>, points: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let (dates, values) = points.into_iter().unzip();
        Self::new(label, dates, values)
    }

    /// Consecutive daily dates starting at `start`.
    pub fn daily(label: impl Into<String>, start: NaiveDate, values: Vec<f64>) -> Result<Self> {
        let dates = start.iter_days().take(values.len()).collect();
        Self::new(label, dates, values)
    }

    pub fn with_units(mut self, units: impl Into<String>) -> Self {
        self.units = units.into();
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.dates.iter().copied().zip(self.values.iter().copied())
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    /// Drops observations flagged missing.
    pub fn drop_missing(&self) -> Self {
        let (dates, values) = self.iter().filter(|(_, v)| !v.is_nan()).unzip();
        Self {
            label: self.label.clone(),
            units: self.units.clone(),
            dates,
            values,
        }
    }

    /// Sub-series over the index range `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            label: self.label.clone(),
            units: self.units.clone(),
            dates: self.dates[range.clone()].to_vec(),
            values: self.values[range].to_vec(),
        }
    }

    /// Applies `f` to every value, keeping dates.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            label: self.label.clone(),
            units: self.units.clone(),
            dates: self.dates.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("date,value\n");
        for (date, value) in self.iter() {
            out.push_str(&date.format(DATE_FORMAT).to_string());
            out.push(',');
            if !value.is_nan() {
                out.push_str(&value.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_csv_string().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    /// Reads a canonical `date,value` file. Empty values are read as missing.
    pub fn read_csv(path: impl AsRef<Path>, label: impl Into<String>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rows = parse_date_value_rows(path, &text, 0, true)?;
        let points = rows.into_iter().map(|r| (r.date, r.value)).collect();
        Self::from_points(label, points).map_err(|e| match e {
            Error::UnorderedDates { previous, date } => Error::parse(
                path,
                0,
                format!("dates must be strictly increasing: {date} follows {previous}"),
            ),
            other => other,
        })
    }
}

pub fn parse_date(text: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(text.trim(), DATE_FORMAT).ok()
}

pub(crate) struct DateValueRow {
    pub line: u64,
    pub date: NaiveDate,
    pub value: f64,
}

/// Parses `date,value` rows from `text`, skipping the first `skip_lines`
/// physical lines. The first remaining line is the header; when
/// `strict_header` is set it must read `date,value`.
pub(crate) fn parse_date_value_rows(
    path: &Path,
    text: &str,
    skip_lines: usize,
    strict_header: bool,
) -> Result<Vec<DateValueRow>> {
    let body: String = text
        .split_inclusive('\n')
        .skip(skip_lines)
        .collect::<Vec<_>>()
        .concat();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let line_offset = skip_lines as u64;
    let header_line = line_offset + 1;

    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, header_line, e.to_string()))?
        .clone();
    if headers.len() != 2 {
        return Err(Error::parse(
            path,
            header_line,
            format!("expected 2 columns, found {}", headers.len()),
        ));
    }
    if strict_header
        && !(headers[0].eq_ignore_ascii_case("date") && headers[1].eq_ignore_ascii_case("value"))
    {
        return Err(Error::parse(
            path,
            header_line,
            "expected header 'date,value'",
        ));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line()) + line_offset;
            Error::parse(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line()) + line_offset;
        if record.len() != 2 {
            return Err(Error::parse(path, line, "expected 2 fields"));
        }
        let date = parse_date(&record[0])
            .ok_or_else(|| Error::parse(path, line, format!("bad date '{}'", &record[0])))?;
        let value = if record[1].is_empty() {
            f64::NAN
        } else {
            let v: f64 = record[1]
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad value '{}'", &record[1])))?;
            if !v.is_finite() {
                return Err(Error::parse(path, line, "non-finite value"));
            }
            v
        };
        rows.push(DateValueRow { line, date, value });
    }
    Ok(rows)
}
