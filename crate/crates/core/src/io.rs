//! CSV ingestion: bare point files and labeled datasets such as the UCI
//! wall-following robot navigation data (`sensor_readings_4.data`).
//!
//! Files are comma separated with no header and no quoting. Row and column
//! numbers in errors are 1-based.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::PointCloud;

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path)?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .quoting(false)
        .from_reader(file))
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let row = err.position().map_or(0, |p| p.line() as usize);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Parse {
            path: path.to_path_buf(),
            row,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

fn parse_field(path: &Path, row: usize, column: usize, field: &str) -> Result<f64> {
    let value: f64 = field.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message: format!("not a number: {field:?}"),
    })?;
    if !value.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            column,
            message: format!("non-finite value {field:?}"),
        });
    }
    Ok(value)
}

fn record_line(record: &csv::StringRecord, fallback: usize) -> usize {
    record.position().map_or(fallback, |p| p.line() as usize)
}

/// Reads one point per row. When `dim` is given every row must have exactly
/// that many columns; otherwise the first row fixes it.
pub fn load_points(path: impl AsRef<Path>, dim: Option<usize>) -> Result<PointCloud> {
    let path = path.as_ref();
    let mut expected = dim;
    let mut data = Vec::new();
    for (n, record) in reader(path)?.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record_line(&record, n + 1);
        let width = *expected.get_or_insert(record.len());
        if record.len() != width {
            return Err(Error::RaggedRows {
                path: path.to_path_buf(),
                row,
                expected: width,
                found: record.len(),
            });
        }
        for (col, field) in record.iter().enumerate() {
            data.push(parse_field(path, row, col + 1, field)?);
        }
    }
    match expected {
        Some(d) if !data.is_empty() => PointCloud::new(d, data),
        _ => Err(Error::EmptyCloud),
    }
}

/// Writes one point per row using shortest round-trip decimal formatting, so
/// [`load_points`] reads back identical values.
pub fn save_points(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_points(cloud, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_points<W: Write>(cloud: &PointCloud, out: &mut W) -> Result<()> {
    for point in cloud.points() {
        let line: Vec<String> = point.iter().map(|v| format!("{v:?}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

/// Where the class token sits in a labeled row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    /// Zero-based column index.
    Index(usize),
}

/// Feature rows with one class token each.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: PointCloud,
    pub labels: Vec<String>,
    pub class_counts: BTreeMap<String, usize>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Row indices carrying `class`, in file order.
    pub fn rows_of(&self, class: &str) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| *l == class)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn load_labeled(path: impl AsRef<Path>, label_column: LabelColumn) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let mut width: Option<usize> = None;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for (n, record) in reader(path)?.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record_line(&record, n + 1);
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRows {
                path: path.to_path_buf(),
                row,
                expected,
                found: record.len(),
            });
        }
        let label_at = match label_column {
            LabelColumn::Last => record.len().checked_sub(1),
            LabelColumn::Index(i) => (i < record.len()).then_some(i),
        };
        let label_at = match label_at {
            Some(i) if record.len() >= 2 && !record[i].is_empty() => i,
            _ => {
                return Err(Error::LabelMissing {
                    path: path.to_path_buf(),
                    row,
                })
            }
        };
        for (col, field) in record.iter().enumerate() {
            if col != label_at {
                data.push(parse_field(path, row, col + 1, field)?);
            }
        }
        labels.push(record[label_at].to_string());
    }
    let Some(width) = width else {
        return Err(Error::EmptyCloud);
    };
    let features = PointCloud::new(width - 1, data)?;
    let mut class_counts = BTreeMap::new();
    for label in &labels {
        *class_counts.entry(label.clone()).or_insert(0) += 1;
    }
    Ok(LabeledDataset {
        features,
        labels,
        class_counts,
    })
}

/// Splits out the rows of two classes as the samples `(X, Y)`.
pub fn class_pair(
    ds: &LabeledDataset,
    class_a: &str,
    class_b: &str,
) -> Result<(PointCloud, PointCloud)> {
    if class_a == class_b {
        return Err(Error::InvalidPair(class_a.to_string()));
    }
    for class in [class_a, class_b] {
        if !ds.class_counts.contains_key(class) {
            return Err(Error::UnknownClass(class.to_string()));
        }
    }
    let x = ds.features.select(&ds.rows_of(class_a))?;
    let y = ds.features.select(&ds.rows_of(class_b))?;
    Ok((x, y))
}
