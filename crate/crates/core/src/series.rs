//! Labeled univariate series, delimited-text ingestion and per-series
//! standardization.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, non-empty sequence of samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidSeries("series must have at least one sample".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSeries(format!(
                "non-finite sample {} at index {i}",
                values[i]
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Circular shift by `c`: `out[n] = x[(n - c) mod N]`. Negative `c`
    /// shifts left.
    pub fn circular_shift(&self, c: i64) -> TimeSeries {
        let n = self.0.len() as i64;
        let c = c.rem_euclid(n) as usize;
        let mut out = Vec::with_capacity(self.0.len());
        out.extend_from_slice(&self.0[self.0.len() - c..]);
        out.extend_from_slice(&self.0[..self.0.len() - c]);
        TimeSeries(out)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        TimeSeries::new(values)
    }
}

impl From<TimeSeries> for Vec<f64> {
    fn from(s: TimeSeries) -> Self {
        s.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSeries {
    pub label: String,
    pub series: TimeSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    instances: Vec<LabeledSeries>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, instances: Vec<LabeledSeries>) -> Result<Self> {
        if instances.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Self {
            name: name.into(),
            instances,
        })
    }

    pub fn instances(&self) -> &[LabeledSeries] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.instances.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn series(&self) -> impl Iterator<Item = &TimeSeries> {
        self.instances.iter().map(|s| &s.series)
    }

    pub fn min_len(&self) -> usize {
        self.series().map(TimeSeries::len).min().unwrap_or(0)
    }

    pub fn max_len(&self) -> usize {
        self.series().map(TimeSeries::len).max().unwrap_or(0)
    }

    /// Returns the common length, or a dimension error if lengths vary.
    pub fn common_len(&self) -> Result<usize> {
        let (lo, hi) = (self.min_len(), self.max_len());
        if lo != hi {
            return Err(Error::Dimension(format!(
                "dataset {:?} has series lengths between {lo} and {hi}",
                self.name
            )));
        }
        Ok(lo)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    #[default]
    Auto,
    Comma,
    Tab,
}

impl Delimiter {
    fn char(self) -> Option<char> {
        match self {
            Delimiter::Auto => None,
            Delimiter::Comma => Some(','),
            Delimiter::Tab => Some('\t'),
        }
    }
}

/// Where a parsed instance came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RowProvenance {
    /// Data row index (comments excluded), as used in parse errors.
    pub row: usize,
    /// 1-based line number in the source text.
    pub line: usize,
}

/// Parses `label,v_0,...,v_{N-1}` rows. Lines starting with `#` are skipped.
pub fn parse_dataset(
    text: &str,
    name: &str,
    delimiter: Delimiter,
) -> Result<(Dataset, Vec<RowProvenance>)> {
    let mut delim = delimiter.char();
    let mut instances = Vec::new();
    let mut provenance = Vec::new();
    let mut row = 0usize;

    for (line_idx, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim_start().starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            return Err(Error::Parse {
                row,
                field: 0,
                message: "empty row".into(),
            });
        }
        let d = match delim {
            Some(d) => d,
            None => {
                let d = if line.contains('\t') { '\t' } else { ',' };
                delim = Some(d);
                d
            }
        };
        let other = if d == ',' { '\t' } else { ',' };
        if line.contains(other) {
            return Err(Error::Parse {
                row,
                field: 0,
                message: format!("inconsistent delimiter: found {other:?}, expected {d:?}"),
            });
        }

        let mut fields = line.split(d);
        let label = fields.next().unwrap_or_default().trim().to_string();
        if label.is_empty() {
            return Err(Error::Parse {
                row,
                field: 0,
                message: "missing label".into(),
            });
        }
        let mut values = Vec::new();
        for (i, f) in fields.enumerate() {
            let f = f.trim();
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                row,
                field: i + 1,
                message: format!("non-numeric sample {f:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    field: i + 1,
                    message: format!("non-finite sample {f:?}"),
                });
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::Parse {
                row,
                field: 1,
                message: "row has no samples".into(),
            });
        }
        instances.push(LabeledSeries {
            label,
            series: TimeSeries(values),
        });
        provenance.push(RowProvenance {
            row,
            line: line_idx + 1,
        });
        row += 1;
    }

    Ok((Dataset::new(name, instances)?, provenance))
}

pub fn load_dataset(path: &Path, delimiter: Delimiter) -> Result<Dataset> {
    load_dataset_with_provenance(path, delimiter).map(|(ds, _)| ds)
}

pub fn load_dataset_with_provenance(
    path: &Path,
    delimiter: Delimiter,
) -> Result<(Dataset, Vec<RowProvenance>)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_dataset(&text, &name, delimiter)
}

/// Serializes with shortest round-trip float formatting, so values parse back
/// bit-exactly.
pub fn write_dataset(ds: &Dataset, delimiter: Delimiter) -> String {
    let d = delimiter.char().unwrap_or(',');
    let mut out = String::new();
    for inst in ds.instances() {
        out.push_str(&inst.label);
        for v in inst.series.values() {
            out.push(d);
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub series: TimeSeries,
    /// Set when the input was constant and the output is all zeros.
    pub degenerate: bool,
}

/// Zero mean, unit population variance.
///
/// Sums run over the sorted samples, which makes the result bit-identical for
/// any permutation of the input (circular shifts in particular).
pub fn standardize(x: &TimeSeries) -> Standardized {
    let v = x.values();
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Standardized {
            series: TimeSeries(vec![0.0; v.len()]),
            degenerate: true,
        };
    }
    let n = v.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    Standardized {
        series: TimeSeries(v.iter().map(|s| (s - mean) / sd).collect()),
        degenerate: false,
    }
}
