//! Daily OHLC bars, log returns and range-based volatility.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{parse_date, DatedSeries, DATE_FORMAT};

pub const OHLC_HEADER: [&str; 5] = ["date", "open", "high", "low", "close"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl OhlcBar {
    pub fn new(date: NaiveDate, open: f64, high: f64, low: f64, close: f64) -> Result<Self> {
        let bar = Self {
            date,
            open,
            high,
            low,
            close,
        };
        bar.validate()?;
        Ok(bar)
    }

    pub fn validate(&self) -> Result<()> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite()) {
            return Err(self.violation("non-finite price"));
        }
        if prices.iter().any(|&p| p <= 0.0) {
            return Err(Error::NonPositivePrice { date: self.date });
        }
        if self.high < self.low {
            return Err(self.violation(format!("high {} < low {}", self.high, self.low)));
        }
        if self.high < self.open.max(self.close) {
            return Err(self.violation(format!("high {} below open/close", self.high)));
        }
        if self.low > self.open.min(self.close) {
            return Err(self.violation(format!("low {} above open/close", self.low)));
        }
        Ok(())
    }

    fn violation(&self, message: impl Into<String>) -> Error {
        Error::InvariantViolation {
            date: self.date,
            message: message.into(),
        }
    }

    /// All four prices multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            date: self.date,
            open: self.open * factor,
            high: self.high * factor,
            low: self.low * factor,
            close: self.close * factor,
        }
    }
}

/// Validated bars with strictly increasing dates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OhlcSeries {
    bars: Vec<OhlcBar>,
}

impl OhlcSeries {
    /// Sorts by date, then validates every bar and rejects duplicate dates.
    pub fn new(mut bars: Vec<OhlcBar>) -> Result<Self> {
        bars.sort_by_key(|b| b.date);
        for bar in &bars {
            bar.validate()?;
        }
        if let Some(pair) = bars.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::InvariantViolation {
                date: pair[1].date,
                message: "duplicate date".into(),
            });
        }
        Ok(Self { bars })
    }

    pub fn bars(&self) -> &[OhlcBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = OHLC_HEADER.join(",");
        out.push('\n');
        for b in &self.bars {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                b.date.format(DATE_FORMAT),
                b.open,
                b.high,
                b.low,
                b.close
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_csv_string().as_bytes())
            .map_err(|e| Error::io(path, e))
    }

    fn derive(
        &self,
        label: &str,
        units: &str,
        f: impl Fn(&OhlcBar) -> Result<f64>,
    ) -> Result<DatedSeries> {
        let values = self.bars.iter().map(f).collect::<Result<Vec<_>>>()?;
        let dates = self.bars.iter().map(|b| b.date).collect();
        Ok(DatedSeries::new(label, dates, values)?.with_units(units))
    }
}

/// Reads `date,open,high,low,close` with ISO-8601 dates.
pub fn load_ohlc_csv(path: impl AsRef<Path>) -> Result<OhlcSeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?;
    let matches = headers.len() == OHLC_HEADER.len()
        && headers
            .iter()
            .zip(OHLC_HEADER)
            .all(|(h, want)| h.eq_ignore_ascii_case(want));
    if !matches {
        return Err(Error::parse(
            path,
            1,
            format!("expected header '{}'", OHLC_HEADER.join(",")),
        ));
    }

    let mut bars = Vec::new();
    for record in reader.records() {
        let record = record
            .map_err(|e| Error::parse(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let date = parse_date(&record[0])
            .ok_or_else(|| Error::parse(path, line, format!("bad date '{}'", &record[0])))?;
        let mut prices = [0.0; 4];
        for (slot, (field, name)) in prices
            .iter_mut()
            .zip(record.iter().skip(1).zip(&OHLC_HEADER[1..]))
        {
            *slot = field
                .parse()
                .map_err(|_| Error::parse(path, line, format!("bad {name} '{field}'")))?;
        }
        let [open, high, low, close] = prices;
        bars.push(OhlcBar::new(date, open, high, low, close)?);
    }
    OhlcSeries::new(bars)
}

/// `ln(close_t / close_{t-1})`, dated at `t`.
pub fn log_returns(series: &OhlcSeries) -> Result<DatedSeries> {
    let bars = series.bars();
    if bars.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 1,
            got: bars.len(),
        });
    }
    let mut dates = Vec::with_capacity(bars.len() - 1);
    let mut values = Vec::with_capacity(bars.len() - 1);
    for pair in bars.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if prev.close <= 0.0 || cur.close <= 0.0 {
            return Err(Error::NonPositivePrice { date: cur.date });
        }
        dates.push(cur.date);
        values.push((cur.close / prev.close).ln());
    }
    Ok(DatedSeries::new("Return", dates, values)?.with_units("log return"))
}

/// Parkinson daily range volatility `sqrt(ln(H/L)^2 / (4 ln 2))`.
pub fn parkinson_volatility(series: &OhlcSeries) -> Result<DatedSeries> {
    series.derive("Volatility", "parkinson", |b| {
        let range = log_range(b)?;
        Ok((range * range / (4.0 * std::f64::consts::LN_2)).sqrt())
    })
}

/// Garman–Klass daily volatility
/// `sqrt(0.5 ln(H/L)^2 - (2 ln 2 - 1) ln(C/O)^2)`.
///
/// A negative radicand can only come from inconsistent bars; such days are
/// flagged missing (`NaN`).
pub fn garman_klass_volatility(series: &OhlcSeries) -> Result<DatedSeries> {
    series.derive("Volatility", "garman-klass", |b| {
        let range = log_range(b)?;
        let body = (b.close / b.open).ln();
        let radicand = 0.5 * range * range - (2.0 * std::f64::consts::LN_2 - 1.0) * body * body;
        Ok(if radicand < 0.0 {
            f64::NAN
        } else {
            radicand.sqrt()
        })
    })
}

fn log_range(b: &OhlcBar) -> Result<f64> {
    if b.open <= 0.0 || b.high <= 0.0 || b.low <= 0.0 || b.close <= 0.0 {
        return Err(Error::NonPositivePrice { date: b.date });
    }
    Ok((b.high / b.low).ln())
}
