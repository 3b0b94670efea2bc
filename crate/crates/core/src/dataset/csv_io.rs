//! CSV loading and writing for batch streams.
//!
//! Expected layout: UTF-8, comma-separated, header row. One column holds the
//! period (non-negative integer), one the binary label; every other column is
//! parsed as a 64-bit float feature.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dataset::{BatchStream, FeatureMatrix, LabeledBatch};
use crate::error::{Error, Result};

/// Loads a CSV file into a stream, grouping rows by their period value.
///
/// Distinct period values are re-indexed to 0..P-1 in ascending order; row
/// order inside a period follows the file.
pub fn load_csv_stream(
    path: &Path,
    label_column: &str,
    period_column: &str,
) -> Result<BatchStream> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::Schema(format!("missing label column `{label_column}`")))?;
    let period_idx = headers
        .iter()
        .position(|h| h == period_column)
        .ok_or_else(|| Error::Schema(format!("missing period column `{period_column}`")))?;
    if label_idx == period_idx {
        return Err(Error::Schema(
            "label and period must be distinct columns".into(),
        ));
    }

    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| i != label_idx && i != period_idx)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::Schema("no feature columns present".into()));
    }
    let feature_names: Vec<String> = feature_cols
        .iter()
        .map(|&i| headers[i].to_string())
        .collect();

    // period value -> (row-major features, labels), insertion keeps file order
    let mut groups: BTreeMap<u64, (Vec<f64>, Vec<u8>)> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let raw_period = record.get(period_idx).unwrap_or("");
        let period: u64 = raw_period.parse().map_err(|_| Error::Parse {
            line,
            message: format!("period value `{raw_period}` is not a non-negative integer"),
        })?;
        let raw_label = record.get(label_idx).unwrap_or("");
        let label_value: f64 = raw_label.parse().map_err(|_| Error::Parse {
            line,
            message: format!("label value `{raw_label}` is not numeric"),
        })?;
        let label = if label_value == 0.0 {
            0u8
        } else if label_value == 1.0 {
            1u8
        } else {
            return Err(Error::Validation(format!(
                "label value `{raw_label}` at line {line} is not binary"
            )));
        };
        let entry = groups.entry(period).or_default();
        for &col in &feature_cols {
            let raw = record.get(col).unwrap_or("");
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("feature `{}` value `{raw}` is not numeric", &headers[col]),
            })?;
            entry.0.push(value);
        }
        entry.1.push(label);
    }

    let mut batches = Vec::with_capacity(groups.len());
    for (new_period, (_, (values, labels))) in groups.into_iter().enumerate() {
        let rows = labels.len();
        let features = FeatureMatrix::new(values, rows, feature_cols.len(), feature_names.clone())?;
        batches.push(LabeledBatch::new(new_period, features, labels)?);
    }
    BatchStream::new(batches)
}

/// Writes a stream back out in the layout `load_csv_stream` reads.
pub fn write_csv_stream(stream: &BatchStream, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let names = stream
        .feature_names()
        .ok_or_else(|| Error::Validation("cannot write an empty stream".into()))?;
    let mut header = vec!["period".to_string(), "label".to_string()];
    header.extend(names.iter().cloned());
    writer
        .write_record(&header)
        .map_err(|e| csv_error(path, e))?;
    for batch in stream.batches() {
        for r in 0..batch.len() {
            let mut record = vec![batch.period.to_string(), batch.labels[r].to_string()];
            record.extend(batch.features.row(r).iter().map(|v| v.to_string()));
            writer
                .write_record(&record)
                .map_err(|e| csv_error(path, e))?;
        }
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Validation(format!("csv error on {}: {other:?}", path.display())),
    }
}
