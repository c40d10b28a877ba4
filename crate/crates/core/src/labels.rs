//! Big-jump detection and the seven-close sliding-window dataset with its
//! binary regime target θ.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market_data::PriceSeries;

/// Closes per feature row.
pub const WINDOW_LEN: usize = 7;
/// Days after the window that are scanned for jumps.
pub const HORIZON: usize = 7;
/// Jumps needed inside the horizon for θ = 1.
pub const MIN_JUMPS: usize = 2;

/// Indices t where the close fell by at least `k_percent` percent from the
/// previous record. Rises never count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSet {
    pub k_percent: f64,
    pub jump_indices: Vec<usize>,
}

impl JumpSet {
    pub fn contains(&self, index: usize) -> bool {
        self.jump_indices.binary_search(&index).is_ok()
    }
}

pub fn is_drop_jump(prev: f64, cur: f64, k_percent: f64) -> bool {
    100.0 * (prev - cur) / prev >= k_percent
}

pub fn detect_jumps(series: &PriceSeries, k_percent: f64) -> Result<JumpSet> {
    if !(k_percent > 0.0) || !k_percent.is_finite() {
        return Err(Error::param("k_percent", format!("must be positive, got {k_percent}")));
    }
    let jump_indices = series
        .records()
        .windows(2)
        .filter(|w| is_drop_jump(w[0].close, w[1].close, k_percent))
        .map(|w| w[1].index)
        .collect();
    Ok(JumpSet {
        k_percent,
        jump_indices,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRow {
    pub features: [f64; WINDOW_LEN],
    pub start_index: usize,
    pub theta: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDataset {
    pub rows: Vec<WindowRow>,
    pub window_len: usize,
    pub horizon: usize,
    pub k_percent: f64,
}

impl WindowDataset {
    pub fn empty(k_percent: f64) -> Self {
        Self {
            rows: Vec::new(),
            window_len: WINDOW_LEN,
            horizon: HORIZON,
            k_percent,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.theta).collect()
    }

    pub fn features(&self) -> Vec<[f64; WINDOW_LEN]> {
        self.rows.iter().map(|r| r.features).collect()
    }

    /// `(count θ=0, count θ=1)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.rows.iter().filter(|r| r.theta == 1).count();
        (self.rows.len() - ones, ones)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..WINDOW_LEN).map(|i| format!("close_{i}")).collect();
        header.push("start_index".into());
        header.push("theta".into());
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.features.iter().map(|v| v.to_string()).collect();
            rec.push(r.start_index.to_string());
            rec.push(r.theta.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads the format produced by [`WindowDataset::write_csv`].
    pub fn read_csv<R: Read>(input: R, k_percent: f64) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let bad = |m: String| Error::Row { line, message: m };
            if rec.len() != WINDOW_LEN + 2 {
                return Err(bad(format!("expected {} fields, got {}", WINDOW_LEN + 2, rec.len())));
            }
            let mut features = [0.0; WINDOW_LEN];
            for (i, slot) in features.iter_mut().enumerate() {
                *slot = rec[i].parse().map_err(|_| bad(format!("bad feature {:?}", &rec[i])))?;
            }
            let start_index = rec[WINDOW_LEN]
                .parse()
                .map_err(|_| bad(format!("bad start_index {:?}", &rec[WINDOW_LEN])))?;
            let theta: u8 = rec[WINDOW_LEN + 1]
                .parse()
                .map_err(|_| bad(format!("bad theta {:?}", &rec[WINDOW_LEN + 1])))?;
            if theta > 1 {
                return Err(bad(format!("theta {theta} is not binary")));
            }
            rows.push(WindowRow {
                features,
                start_index,
                theta,
            });
        }
        Ok(Self {
            rows,
            window_len: WINDOW_LEN,
            horizon: HORIZON,
            k_percent,
        })
    }
}

/// Stride-1 windows of seven closes. A row starting at `i` is labelled θ = 1
/// iff at least two jumps fall on indices `i+7..=i+13`; rows whose horizon
/// runs past the end of the series are dropped.
pub fn build_dataset(series: &PriceSeries, jumps: &JumpSet) -> WindowDataset {
    let n = series.len();
    let span = WINDOW_LEN + HORIZON;
    if n < span {
        return WindowDataset::empty(jumps.k_percent);
    }
    // prefix[j] = number of jumps with index < j
    let mut prefix = vec![0usize; n + 1];
    for t in 0..n {
        prefix[t + 1] = prefix[t] + usize::from(jumps.contains(t));
    }
    let closes = series.closes();
    let rows = (0..=n - span)
        .map(|i| {
            let mut features = [0.0; WINDOW_LEN];
            features.copy_from_slice(&closes[i..i + WINDOW_LEN]);
            let in_horizon = prefix[i + span] - prefix[i + WINDOW_LEN];
            WindowRow {
                features,
                start_index: i,
                theta: u8::from(in_horizon >= MIN_JUMPS),
            }
        })
        .collect();
    WindowDataset {
        rows,
        window_len: WINDOW_LEN,
        horizon: HORIZON,
        k_percent: jumps.k_percent,
    }
}

/// Inclusive range of series indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexRange {
    pub lo: usize,
    pub hi: usize,
}

impl IndexRange {
    pub fn new(lo: usize, hi: usize) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, i: usize) -> bool {
        self.lo <= i && i <= self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    fn overlaps(&self, other: &IndexRange) -> bool {
        !self.is_empty() && !other.is_empty() && self.lo <= other.hi && other.lo <= self.hi
    }
}

impl std::fmt::Display for IndexRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.lo, self.hi)
    }
}

impl std::str::FromStr for IndexRange {
    type Err = Error;

    /// Parses `A:B` (also accepts `A-B` and `A..B`).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = if s.contains("..") {
            s.splitn(2, "..").collect()
        } else {
            s.splitn(2, [':', '-']).collect()
        };
        let bad = || Error::InvalidSplit(format!("cannot parse range {s:?}, expected A:B"));
        if parts.len() != 2 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse().map_err(|_| bad())?;
        let hi = parts[1].trim().parse().map_err(|_| bad())?;
        Ok(Self { lo, hi })
    }
}

/// Maps report-style date-index ranges ("train 100–500, test 501–600") onto
/// inclusive `start_index` ranges.
///
/// The test block opens on the last training day: test rows are
/// `start_index ∈ [test.lo − 1, test.hi]` and training rows stop one earlier.
/// On the bundled WTI fixture this gives a 501–600 test block with
/// supports 57/44.
pub fn row_ranges(train: IndexRange, test: IndexRange) -> (IndexRange, IndexRange) {
    let test_rows = IndexRange::new(test.lo.saturating_sub(1), test.hi);
    let train_rows = if train.lo < test_rows.lo && train.hi >= test_rows.lo {
        IndexRange::new(train.lo, test_rows.lo - 1)
    } else {
        train
    };
    (train_rows, test_rows)
}

/// Assigns rows to train/test by `start_index` alone; rows whose horizon
/// crosses the boundary stay with their start.
pub fn split_by_date(
    dataset: &WindowDataset,
    series: &PriceSeries,
    train: IndexRange,
    test: IndexRange,
) -> Result<(WindowDataset, WindowDataset)> {
    for (name, r) in [("train", train), ("test", test)] {
        if !r.is_empty() && r.hi >= series.len() {
            return Err(Error::InvalidSplit(format!(
                "{name} range {r} outside series of length {}",
                series.len()
            )));
        }
    }
    if train.overlaps(&test) {
        return Err(Error::InvalidSplit(format!("train {train} overlaps test {test}")));
    }
    let pick = |r: IndexRange| WindowDataset {
        rows: dataset
            .rows
            .iter()
            .filter(|row| r.contains(row.start_index))
            .cloned()
            .collect(),
        ..WindowDataset::empty(dataset.k_percent)
    };
    Ok((pick(train), pick(test)))
}
