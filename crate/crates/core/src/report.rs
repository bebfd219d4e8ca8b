//! Analysis reports: one row per directional estimate, as CSV and JSON, plus
//! plot-ready lag and window tables.

use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{parse_date, DATE_FORMAT};
use crate::te::TeEstimate;

pub const REPORT_COLUMNS: [&str; 10] = [
    "direction",
    "lag",
    "window_start",
    "window_end",
    "te",
    "ete",
    "std_err",
    "p_value",
    "n_effective",
    "config_digest",
];

/// Written in place of a disabled standard error or p-value.
pub const ABSENT: &str = "NA";

/// Significance level used for plot flags.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagCurve {
    pub direction: String,
    pub points: Vec<(usize, TeEstimate)>,
}

impl LagCurve {
    pub fn new(direction: impl Into<String>) -> Self {
        Self {
            direction: direction.into(),
            points: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimate {
    pub index: usize,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub estimate: TeEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCurve {
    pub direction: String,
    pub windows: Vec<WindowEstimate>,
}

impl WindowCurve {
    pub fn new(direction: impl Into<String>) -> Self {
        Self {
            direction: direction.into(),
            windows: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    /// Full-sample estimates, one per direction.
    pub rows: Vec<TeEstimate>,
    pub lag_curves: Vec<LagCurve>,
    pub window_results: Vec<WindowCurve>,
    /// Trailing observations left out of the window analysis.
    pub dropped_observations: usize,
}

/// One flattened CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRecord {
    pub direction: String,
    pub lag: usize,
    pub window_start: Option<NaiveDate>,
    pub window_end: Option<NaiveDate>,
    pub te: f64,
    pub ete: f64,
    pub std_err: Option<f64>,
    pub p_value: Option<f64>,
    pub n_effective: usize,
    pub config_digest: String,
}

impl ReportRecord {
    fn from_estimate(est: &TeEstimate, lag: usize, window: Option<(NaiveDate, NaiveDate)>) -> Self {
        Self {
            direction: est.direction.clone(),
            lag,
            window_start: window.map(|w| w.0),
            window_end: window.map(|w| w.1),
            te: est.te,
            ete: est.ete,
            std_err: est.std_err,
            p_value: est.p_value,
            n_effective: est.n_effective,
            config_digest: est.config.digest(),
        }
    }

    fn fields(&self) -> [String; 10] {
        let opt = |v: Option<f64>| v.map_or_else(|| ABSENT.to_string(), |x| x.to_string());
        let date = |d: Option<NaiveDate>| {
            d.map_or_else(String::new, |d| d.format(DATE_FORMAT).to_string())
        };
        [
            self.direction.clone(),
            self.lag.to_string(),
            date(self.window_start),
            date(self.window_end),
            self.te.to_string(),
            self.ete.to_string(),
            opt(self.std_err),
            opt(self.p_value),
            self.n_effective.to_string(),
            self.config_digest.clone(),
        ]
    }
}

impl AnalysisReport {
    /// Every estimate in output order: full-sample rows, lag cells, windows.
    pub fn records(&self) -> Vec<ReportRecord> {
        let mut out: Vec<ReportRecord> = self
            .rows
            .iter()
            .map(|e| ReportRecord::from_estimate(e, e.config.l, None))
            .collect();
        for curve in &self.lag_curves {
            out.extend(
                curve
                    .points
                    .iter()
                    .map(|(lag, e)| ReportRecord::from_estimate(e, *lag, None)),
            );
        }
        for curve in &self.window_results {
            out.extend(curve.windows.iter().map(|w| {
                ReportRecord::from_estimate(
                    &w.estimate,
                    w.estimate.config.l,
                    Some((w.start, w.end)),
                )
            }));
        }
        out
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let write_err = |e: csv::Error| Error::Serialize(e.to_string());
        writer.write_record(REPORT_COLUMNS).map_err(write_err)?;
        for record in self.records() {
            writer.write_record(record.fields()).map_err(write_err)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::Serialize(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Serialize(e.to_string()))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Serialize(e.to_string()))
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<()> {
        write_text(&dir.join(format!("{stem}.csv")), &self.to_csv_string()?)?;
        write_text(&dir.join(format!("{stem}.json")), &self.to_json_string()?)
    }

    /// Plot tables: lag vs ETE per direction.
    pub fn lag_plot_csv(curve: &LagCurve) -> String {
        let mut out = String::from("lag,ete,p_value,significant\n");
        for (lag, e) in &curve.points {
            out.push_str(&format!(
                "{lag},{},{},{}\n",
                e.ete,
                e.p_value
                    .map_or_else(|| ABSENT.to_string(), |p| p.to_string()),
                e.is_significant(ALPHA)
            ));
        }
        out
    }

    /// Plot tables: window index vs ETE per direction.
    pub fn window_plot_csv(curve: &WindowCurve) -> String {
        let mut out = String::from("window,start,end,ete,p_value,significant\n");
        for w in &curve.windows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                w.index,
                w.start.format(DATE_FORMAT),
                w.end.format(DATE_FORMAT),
                w.estimate.ete,
                w.estimate
                    .p_value
                    .map_or_else(|| ABSENT.to_string(), |p| p.to_string()),
                w.estimate.is_significant(ALPHA)
            ));
        }
        out
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a report CSV written by [`AnalysisReport::to_csv_string`].
pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<ReportRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    if headers.iter().ne(REPORT_COLUMNS) {
        return Err(Error::parse(path, 1, "unexpected report header"));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::parse(path, 0, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |field: &str| Error::parse(path, line, format!("bad {field}"));
        let num =
            |i: usize| -> Result<f64> { record[i].parse().map_err(|_| bad(REPORT_COLUMNS[i])) };
        let opt_num = |i: usize| -> Result<Option<f64>> {
            if &record[i] == ABSENT {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let opt_date = |i: usize| -> Result<Option<NaiveDate>> {
            if record[i].is_empty() {
                Ok(None)
            } else {
                parse_date(&record[i])
                    .map(Some)
                    .ok_or_else(|| bad(REPORT_COLUMNS[i]))
            }
        };
        out.push(ReportRecord {
            direction: record[0].to_string(),
            lag: record[1].parse().map_err(|_| bad("lag"))?,
            window_start: opt_date(2)?,
            window_end: opt_date(3)?,
            te: num(4)?,
            ete: num(5)?,
            std_err: opt_num(6)?,
            p_value: opt_num(7)?,
            n_effective: record[8].parse().map_err(|_| bad("n_effective"))?,
            config_digest: record[9].to_string(),
        });
    }
    Ok(out)
}
