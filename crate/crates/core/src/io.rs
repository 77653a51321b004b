//! CSV datasets and atomic file output.
//!
//! Load errors report `row` as the 1-based line number in the file (the
//! header is line 1) and `column` as the header name.

use std::io::Write;
use std::path::Path;

use crate::data::{Dataset, Matrix, Probabilities};
use crate::error::{Error, Result};

pub const DEFAULT_LABEL: &str = "y";

/// Writes `bytes` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn load_csv(path: &Path, label: &str) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label)
}

pub fn read_csv<R: std::io::Read>(reader: R, label: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let load = |row: usize, column: &str, reason: String| Error::Load { row, column: column.to_string(), reason };
    let header = rdr.headers().map_err(|e| load(1, "", e.to_string()))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(load(1, "", "empty file or missing header".into()));
    }
    let names: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    let label_at = names
        .iter()
        .position(|h| h == label)
        .ok_or_else(|| load(1, label, format!("label column '{label}' not found")))?;
    let feature_names: Vec<String> = names.iter().enumerate().filter(|&(j, _)| j != label_at).map(|(_, h)| h.clone()).collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| load(line, "", e.to_string()))?;
        if record.len() != names.len() {
            return Err(load(line, "", format!("expected {} fields, found {}", names.len(), record.len())));
        }
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                return Err(load(line, &names[j], "missing value".into()));
            }
            let v: f64 = cell.parse().map_err(|_| load(line, &names[j], format!("'{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(load(line, &names[j], format!("'{cell}' is not finite")));
            }
            if j == label_at {
                if v != 0.0 && v != 1.0 {
                    return Err(load(line, &names[j], format!("label must be 0 or 1, found {cell}")));
                }
                labels.push(v as u8);
            } else {
                values.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(load(2, "", "no data rows".into()));
    }
    let features = Matrix::new(labels.len(), feature_names.len(), values)?;
    Dataset::new(features, labels, feature_names)
}

/// Reads the columns named in `names`, in that order, ignoring any others
/// (such as a label column).
pub fn load_features_csv(path: &Path, names: &[String]) -> Result<Matrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_features_csv(file, names)
}

pub fn read_features_csv<R: std::io::Read>(reader: R, names: &[String]) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let load = |row: usize, column: &str, reason: String| Error::Load { row, column: column.to_string(), reason };
    let header = rdr.headers().map_err(|e| load(1, "", e.to_string()))?.clone();
    let columns = names
        .iter()
        .map(|n| header.iter().position(|h| h.trim() == n).ok_or_else(|| load(1, n, format!("column '{n}' not found"))))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| load(line, "", e.to_string()))?;
        for (&j, name) in columns.iter().zip(names) {
            let cell = record.get(j).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| load(line, name, format!("'{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(load(line, name, format!("'{cell}' is not finite")));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(load(2, "", "no data rows".into()));
    }
    Matrix::new(rows, names.len(), values)
}

/// Features in order, then the label column. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn dataset_csv(data: &Dataset, label: &str) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = data.feature_names().iter().map(String::as_str).collect();
    header.push(label);
    w.write_record(&header).map_err(csv_err)?;
    let mut fields = Vec::with_capacity(header.len());
    for (row, &y) in data.features().row_iter().zip(data.labels()) {
        fields.clear();
        fields.extend(row.iter().map(|v| v.to_string()));
        fields.push(y.to_string());
        w.write_record(&fields).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Document(e.to_string()))
}

pub fn write_dataset_csv(path: &Path, data: &Dataset, label: &str) -> Result<()> {
    write_atomic(path, &dataset_csv(data, label)?)
}

/// One `p` column, one row per prediction.
pub fn probabilities_csv(probs: &Probabilities) -> Vec<u8> {
    let mut out = String::from("p\n");
    for v in probs.values() {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out.into_bytes()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Document(e.to_string())
}
