//! Daily close-price series: loading, validation, summary statistics and
//! plot-ready exports.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{mean, median};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRecord {
    pub date: NaiveDate,
    /// 0-based position among available records.
    pub index: usize,
    pub close: f64,
}

/// Validated daily close prices, sorted by date, indexed 0..len.
///
/// Non-trading days are simply absent; the index counts available records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    records: Vec<PriceRecord>,
}

impl PriceSeries {
    /// Builds a series from unsorted `(date, close)` pairs. Closes must be
    /// finite and strictly positive; dates must be unique.
    pub fn from_pairs(mut pairs: Vec<(NaiveDate, f64)>) -> Result<Self> {
        for (i, &(date, close)) in pairs.iter().enumerate() {
            check_close(close).map_err(|message| Error::Row {
                line: i as u64 + 1,
                message: format!("{date}: {message}"),
            })?;
        }
        pairs.sort_by_key(|&(d, _)| d);
        for (i, w) in pairs.windows(2).enumerate() {
            if w[0].0 == w[1].0 {
                return Err(Error::DuplicateDate {
                    date: w[1].0.to_string(),
                    line: i as u64 + 2,
                });
            }
        }
        Ok(Self::from_sorted(pairs))
    }

    /// Convenience constructor for synthetic data: consecutive calendar days
    /// starting at 2000-01-01.
    pub fn from_closes(closes: &[f64]) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
        let pairs = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| (start + chrono::Days::new(i as u64), c))
            .collect();
        Self::from_pairs(pairs)
    }

    fn from_sorted(pairs: Vec<(NaiveDate, f64)>) -> Self {
        let records = pairs
            .into_iter()
            .enumerate()
            .map(|(index, (date, close))| PriceRecord { date, index, close })
            .collect();
        Self { records }
    }

    pub fn records(&self) -> &[PriceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn closes(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.close).collect()
    }

    pub fn close(&self, index: usize) -> f64 {
        self.records[index].close
    }

    /// `close_t - close_{t-1}` for t >= 1.
    pub fn changes(&self) -> Vec<f64> {
        self.records.windows(2).map(|w| w[1].close - w[0].close).collect()
    }

    /// `100 * (close_t - close_{t-1}) / close_{t-1}` for t >= 1.
    pub fn pct_changes(&self) -> Vec<f64> {
        self.records
            .windows(2)
            .map(|w| 100.0 * (w[1].close - w[0].close) / w[0].close)
            .collect()
    }

    /// Writes `Date,Index,Close`. Closes use the shortest round-trip decimal
    /// form, so reloading reproduces the series bit for bit.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["Date", "Index", "Close"])?;
        for r in &self.records {
            w.write_record([r.date.to_string(), r.index.to_string(), r.close.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn check_close(close: f64) -> std::result::Result<(), String> {
    if !close.is_finite() {
        Err(format!("close {close} is not finite"))
    } else if close <= 0.0 {
        Err(format!("close {close} is not strictly positive"))
    } else {
        Ok(())
    }
}

/// Names of the date and close columns in an input CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub date: String,
    pub close: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            date: "Date".into(),
            close: "Close".into(),
        }
    }
}

/// Loads a header-row CSV with ISO-8601 dates and decimal closes. Rows are
/// sorted by date before indices are assigned.
pub fn load_csv(path: impl AsRef<Path>, columns: &ColumnMap) -> Result<PriceSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let date_col = find(&columns.date)?;
    let close_col = find(&columns.close)?;

    let mut pairs = Vec::new();
    let mut seen: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let field = |col: usize, what: &str| {
            row.get(col).ok_or_else(|| Error::Row {
                line,
                message: format!("missing {what} field"),
            })
        };
        let raw_date = field(date_col, "date")?;
        let date = NaiveDate::parse_from_str(raw_date, "%Y-%m-%d").map_err(|e| Error::Row {
            line,
            message: format!("unparsable date {raw_date:?}: {e}"),
        })?;
        let raw_close = field(close_col, "close")?;
        let close: f64 = raw_close.parse().map_err(|_| Error::Row {
            line,
            message: format!("non-numeric close {raw_close:?}"),
        })?;
        check_close(close).map_err(|message| Error::Row { line, message })?;
        if seen.insert(date, line).is_some() {
            return Err(Error::DuplicateDate {
                date: date.to_string(),
                line,
            });
        }
        pairs.push((date, close));
    }
    pairs.sort_by_key(|&(d, _)| d);
    Ok(PriceSeries::from_sorted(pairs))
}

/// Summary figures of daily absolute and percentage changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub mean_change: f64,
    pub median_change: f64,
    pub max_change: f64,
    pub min_change: f64,
    pub mean_pct: f64,
    pub median_pct: f64,
    pub max_pct: f64,
    pub min_pct: f64,
}

pub fn summary_stats(series: &PriceSeries) -> Result<SeriesStats> {
    if series.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: series.len(),
        });
    }
    let changes = series.changes();
    let pct = series.pct_changes();
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SeriesStats {
        mean_change: mean(&changes),
        median_change: median(&changes),
        max_change: max(&changes),
        min_change: min(&changes),
        mean_pct: mean(&pct),
        median_pct: median(&pct),
        max_pct: max(&pct),
        min_pct: min(&pct),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    Close,
    YearlyBox,
    HistogramChange,
    HistogramPct,
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "close" => Ok(PlotKind::Close),
            "yearly-box" => Ok(PlotKind::YearlyBox),
            "histogram-change" => Ok(PlotKind::HistogramChange),
            "histogram-pct" => Ok(PlotKind::HistogramPct),
            other => Err(Error::param("kind", format!("unknown plot kind {other:?}"))),
        }
    }
}

/// One equal-width histogram bin. The last bin is closed on the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::param("bins", "must be at least 1"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin {
            low: lo + width * b as f64,
            high: if b + 1 == bins { hi } else { lo + width * (b + 1) as f64 },
            count: 0,
        })
        .collect();
    for &v in values {
        let slot = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        out[slot].count += 1;
    }
    Ok(out)
}

/// Five-number summary per calendar year (quartiles by linear interpolation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YearBox {
    pub year: i32,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub count: usize,
}

pub fn yearly_boxes(series: &PriceSeries) -> Vec<YearBox> {
    let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for r in series.records() {
        by_year.entry(r.date.year()).or_default().push(r.close);
    }
    by_year
        .into_iter()
        .map(|(year, mut v)| {
            v.sort_by(f64::total_cmp);
            YearBox {
                year,
                min: v[0],
                q1: quantile_sorted(&v, 0.25),
                median: quantile_sorted(&v, 0.5),
                q3: quantile_sorted(&v, 0.75),
                max: v[v.len() - 1],
                count: v.len(),
            }
        })
        .collect()
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Writes CSV data for one of the exploratory figures.
pub fn emit_plot_data<W: Write>(series: &PriceSeries, kind: PlotKind, bins: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match kind {
        PlotKind::Close => {
            w.write_record(["date", "index", "close"])?;
            for r in series.records() {
                w.write_record([r.date.to_string(), r.index.to_string(), r.close.to_string()])?;
            }
        }
        PlotKind::YearlyBox => {
            w.write_record(["year", "min", "q1", "median", "q3", "max", "count"])?;
            for b in yearly_boxes(series) {
                w.write_record([
                    b.year.to_string(),
                    b.min.to_string(),
                    b.q1.to_string(),
                    b.median.to_string(),
                    b.q3.to_string(),
                    b.max.to_string(),
                    b.count.to_string(),
                ])?;
            }
        }
        PlotKind::HistogramChange | PlotKind::HistogramPct => {
            let values = if kind == PlotKind::HistogramChange {
                series.changes()
            } else {
                series.pct_changes()
            };
            w.write_record(["bin_low", "bin_high", "count"])?;
            for b in histogram(&values, bins)? {
                w.write_record([b.low.to_string(), b.high.to_string(), b.count.to_string()])?;
            }
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
