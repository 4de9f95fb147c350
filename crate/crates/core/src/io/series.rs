use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ensure, Error, Result};

/// How a dataset file is laid out.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SeriesFormat {
    /// One number per line; blank lines and lines starting with `#` are skipped.
    Plain,
    /// CSV with a header row; the column is picked by name or zero-based index.
    Csv { column: ColumnSelector },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Normalization {
    None,
    /// `(v - min) / (max - min)` with `min`, `max` taken from the fit range.
    Minmax01 { min: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub source: Option<PathBuf>,
    /// Hex SHA-256 of the source bytes, or of the little-endian values for
    /// generated series.
    pub sha256: String,
    pub normalization: Normalization,
    pub raw_min: f64,
    pub raw_max: f64,
}

impl TimeSeries {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        ensure(!values.is_empty(), || "series is empty".into())?;
        ensure(values.iter().all(|v| v.is_finite()), || "series contains non-finite values".into())?;
        let mut h = Sha256::new();
        for v in &values {
            h.update(v.to_le_bytes());
        }
        let (raw_min, raw_max) = min_max(&values);
        Ok(Self {
            values,
            source: None,
            sha256: hex::encode(h.finalize()),
            normalization: Normalization::None,
            raw_min,
            raw_max,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Maps a normalized value back to the raw scale.
    pub fn denormalize(&self, v: f64) -> f64 {
        match self.normalization {
            Normalization::None => v,
            Normalization::Minmax01 { min, max } => min + v * (max - min),
        }
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Reads a series from disk and records the file hash.
pub fn load_series(path: &Path, format: &SeriesFormat) -> Result<TimeSeries> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: "file is not valid UTF-8".into(),
    })?;
    let values = match format {
        SeriesFormat::Plain => parse_plain(path, &text)?,
        SeriesFormat::Csv { column } => parse_csv(path, &text, column)?,
    };
    if values.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "no values found".into(),
        });
    }
    let (raw_min, raw_max) = min_max(&values);
    Ok(TimeSeries {
        values,
        source: Some(path.to_path_buf()),
        sha256: hex::encode(Sha256::digest(&bytes)),
        normalization: Normalization::None,
        raw_min,
        raw_max,
    })
}

fn parse_value(path: &Path, line: usize, field: &str) -> Result<f64> {
    match field.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("cannot parse '{}' as a finite number", field.trim()),
        }),
    }
}

fn parse_plain(path: &Path, text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(parse_value(path, i + 1, t)?);
    }
    Ok(out)
}

fn parse_csv(path: &Path, text: &str, column: &ColumnSelector) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let idx = match column {
        ColumnSelector::Index(i) => *i,
        ColumnSelector::Name(name) => headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("no column named '{name}'"),
        })?,
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = rec.get(idx).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("missing column {idx}"),
        })?;
        out.push(parse_value(path, line, field)?);
    }
    Ok(out)
}

/// Min-max scaling fitted on `fit` only and applied to every value. Values
/// that land outside `[0, 1]` are clipped and counted in a warning.
pub fn normalize_minmax01(series: &TimeSeries, fit: Range<usize>) -> Result<TimeSeries> {
    ensure(fit.start < fit.end && fit.end <= series.len(), || {
        format!("fit range {:?} invalid for a series of length {}", fit, series.len())
    })?;
    let raw: Vec<f64> = series.values.iter().map(|&v| series.denormalize(v)).collect();
    let (min, max) = min_max(&raw[fit]);
    ensure(max > min, || "cannot normalize: fit range is constant".into())?;
    let mut clipped = 0usize;
    let values = raw
        .iter()
        .map(|&v| {
            let s = (v - min) / (max - min);
            if !(0.0..=1.0).contains(&s) {
                clipped += 1;
            }
            s.clamp(0.0, 1.0)
        })
        .collect();
    if clipped > 0 {
        log::warn!("{clipped} value(s) outside the normalization fit range were clipped to [0, 1]");
    }
    Ok(TimeSeries {
        values,
        normalization: Normalization::Minmax01 { min, max },
        ..series.clone()
    })
}

/// Washout, training and test lengths of a one-step forecast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Split {
    pub washout: usize,
    pub train: usize,
    pub test: usize,
}

impl Default for Split {
    fn default() -> Self {
        Self {
            washout: 300,
            train: 3000,
            test: 700,
        }
    }
}

impl Split {
    /// Number of input samples consumed.
    pub fn total(&self) -> usize {
        self.washout + self.train + self.test
    }

    /// Series length needed: every input needs its successor as target.
    pub fn required_len(&self) -> usize {
        self.total() + 1
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        ensure(self.train > 0 && self.test > 0, || "train and test lengths must be positive".into())?;
        ensure(len >= self.required_len(), || {
            format!(
                "series of length {len} too short for washout {} + train {} + test {} (+1 target)",
                self.washout, self.train, self.test
            )
        })
    }
}
