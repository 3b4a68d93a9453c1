//! Numeric CSV ingestion and export.
//!
//! Comma-separated, mandatory header row, UTF-8, '.' decimal separator.

use std::path::Path;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// How to locate the target column in a CSV header. Serialized untagged, so
/// a JSON string selects by name and a JSON integer by position.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum TargetColumn {
    Index(usize),
    Name(String),
}

impl TargetColumn {
    fn resolve(&self, path: &str, headers: &[String]) -> Result<usize> {
        match self {
            TargetColumn::Name(name) => headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::MissingTargetColumn {
                    path: path.to_string(),
                    column: name.clone(),
                }),
            TargetColumn::Index(i) => {
                if *i < headers.len() {
                    Ok(*i)
                } else {
                    Err(Error::MissingTargetColumn {
                        path: path.to_string(),
                        column: format!("#{i}"),
                    })
                }
            }
        }
    }
}

/// Load a numeric CSV with a header row; the target column is removed from
/// the features. Row order is preserved.
pub fn load_csv(path: impl AsRef<Path>, target: &TargetColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let path_str = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let target_idx = target.resolve(&path_str, &headers)?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut targets: Vec<f64> = Vec::new();
    for (record_no, record) in reader.records().enumerate() {
        let record = record?;
        // 1-based file line: header is line 1
        let line = record_no + 2;
        let mut feat = Vec::with_capacity(headers.len().saturating_sub(1));
        let mut target_value = None;
        for (col, field) in record.iter().enumerate() {
            let column = headers
                .get(col)
                .cloned()
                .unwrap_or_else(|| format!("#{col}"));
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                path: path_str.clone(),
                row: line,
                column: column.clone(),
                message: if field.is_empty() {
                    "empty cell".to_string()
                } else {
                    format!("not a number: '{field}'")
                },
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    path: path_str.clone(),
                    row: line,
                    column,
                    message: format!("non-finite value: '{field}'"),
                });
            }
            if col == target_idx {
                target_value = Some(value);
            } else {
                feat.push(value);
            }
        }
        match target_value {
            Some(t) => targets.push(t),
            None => {
                return Err(Error::Parse {
                    path: path_str.clone(),
                    row: line,
                    column: headers[target_idx].clone(),
                    message: "row too short, target cell missing".to_string(),
                })
            }
        }
        rows.push(feat);
    }

    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "csv".to_string());
    Dataset::new(name, Matrix::from_rows(&rows)?, targets)
}

/// Write a dataset as CSV with header `x1..xf,y`. Values use the shortest
/// round-trip decimal form, so a reload reproduces them bit-exactly.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let f = dataset.feature_count();
    let mut header: Vec<String> = (1..=f).map(|j| format!("x{j}")).collect();
    header.push("y".to_string());
    writer.write_record(&header)?;
    for i in 0..dataset.len() {
        let mut record: Vec<String> = dataset.features.row(i).iter().map(|v| v.to_string()).collect();
        record.push(dataset.targets[i].to_string());
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn single_row() {
        let f = write_tmp("a,b,y\n1,2,3\n");
        let d = load_csv(f.path(), &TargetColumn::Name("y".into())).unwrap();
        assert_eq!(d.features.row(0), &[1.0, 2.0]);
        assert_eq!(d.targets, vec![3.0]);
        assert_eq!(d.feature_count(), 2);
    }

    #[test]
    fn blank_cell_names_the_cell() {
        let f = write_tmp("a,b,y\n1,,3\n");
        let err = load_csv(f.path(), &TargetColumn::Name("y".into())).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn non_numeric_cell() {
        let f = write_tmp("a,y\nfoo,3\n");
        let err = load_csv(f.path(), &TargetColumn::Index(1)).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn missing_target_column() {
        let f = write_tmp("a,b\n1,2\n");
        let err = load_csv(f.path(), &TargetColumn::Name("y".into())).unwrap_err();
        assert!(matches!(err, Error::MissingTargetColumn { .. }), "{err}");
    }

    #[test]
    fn missing_file() {
        let err = load_csv("/no/such/file.csv", &TargetColumn::Index(0)).unwrap_err();
        assert!(matches!(err, Error::Csv(_) | Error::Io(_)), "{err}");
    }

    #[test]
    fn roundtrip_is_exact() {
        let d = crate::data::generate_test_function(25, 3, 0.0).unwrap();
        let tmp = tempfile::NamedTempFile::new().unwrap();
        write_csv(&d, tmp.path()).unwrap();
        let back = load_csv(tmp.path(), &TargetColumn::Name("y".into())).unwrap();
        assert_eq!(d.features, back.features);
        assert_eq!(d.targets, back.targets);
    }
}
