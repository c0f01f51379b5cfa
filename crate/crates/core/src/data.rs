//! CSV ingestion and export of tabular datasets.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::rules::Task;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub x: Array2<f64>,
    /// Real targets, or `{0, 1}` for classification.
    pub y: Vec<f64>,
    pub task: Task,
    /// Raw labels mapped to 0 and 1, in that order.
    pub class_labels: Option<[String; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadSummary {
    pub rows: usize,
    pub skipped_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty()
        || c == "?"
        || ["na", "n/a", "nan", "null"].contains(&c.to_ascii_lowercase().as_str())
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Rows `idx` (with repetition) as a new dataset.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(ndarray::Axis(0), idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            ..self.clone()
        }
    }

    pub fn from_parts(
        name: impl Into<String>,
        x: Array2<f64>,
        y: Vec<f64>,
        task: Task,
    ) -> Result<Dataset> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                got: y.len(),
            });
        }
        if task == Task::Classification {
            if let Some(v) = y.iter().find(|v| **v != 0.0 && **v != 1.0) {
                return Err(Error::InvalidLabel(*v));
            }
        }
        let feature_names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Ok(Dataset {
            name: name.into(),
            feature_names,
            target_name: "y".into(),
            x,
            y,
            task,
            class_labels: None,
        })
    }
}

/// Reads a headed CSV. Rows with a missing cell are skipped and counted;
/// a non-numeric feature cell is an error carrying its line number.
pub fn load_csv(
    path: impl AsRef<Path>,
    target_column: &str,
    task: Task,
) -> Result<(Dataset, LoadSummary)> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let target = headers
        .iter()
        .position(|h| h.trim() == target_column)
        .ok_or_else(|| Error::Parse {
            path: display.clone(),
            line: 1,
            message: format!("target column {target_column:?} not found"),
        })?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != target)
        .map(|(_, h)| h.trim().to_string())
        .collect();

    let mut values = Vec::new();
    let mut raw_targets = Vec::new();
    let mut skipped = 0;
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(Error::Parse {
                path: display,
                line,
                message: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        if record.iter().any(is_missing) {
            skipped += 1;
            continue;
        }
        for (j, cell) in record.iter().enumerate() {
            if j == target {
                continue;
            }
            let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                path: display.clone(),
                line,
                message: format!("non-numeric value {cell:?} in column {:?}", &headers[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: display.clone(),
                    line,
                    message: format!("non-finite value in column {:?}", &headers[j]),
                });
            }
            values.push(v);
        }
        raw_targets.push((line, record[target].trim().to_string()));
    }
    let rows = raw_targets.len();
    if rows < 2 {
        return Err(Error::DatasetTooSmall(rows));
    }

    let (y, class_labels) = match task {
        Task::Regression => {
            let y = raw_targets
                .iter()
                .map(|(line, v)| {
                    v.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::Parse {
                            path: display.clone(),
                            line: *line,
                            message: format!("non-numeric target {v:?}"),
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            (y, None)
        }
        Task::Classification => {
            let mut labels: Vec<&str> = raw_targets.iter().map(|(_, v)| v.as_str()).collect();
            labels.sort_unstable();
            labels.dedup();
            if labels.len() != 2 {
                return Err(Error::Parse {
                    path: display,
                    line: 1,
                    message: format!(
                        "classification target needs 2 distinct labels, found {}",
                        labels.len()
                    ),
                });
            }
            let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.parse().ok()).collect();
            if let Some(nums) = numeric {
                if nums[1] < nums[0] {
                    labels.swap(0, 1);
                }
            }
            let pair = [labels[0].to_string(), labels[1].to_string()];
            let y = raw_targets
                .iter()
                .map(|(_, v)| f64::from(u8::from(*v == pair[1])))
                .collect();
            (y, Some(pair))
        }
    };

    let x = Array2::from_shape_vec((rows, feature_names.len()), values)
        .expect("row-major feature buffer");
    let name = path.file_stem().map_or_else(
        || "dataset".to_string(),
        |s| s.to_string_lossy().into_owned(),
    );
    Ok((
        Dataset {
            name,
            feature_names,
            target_name: headers[target].trim().to_string(),
            x,
            y,
            task,
            class_labels,
        },
        LoadSummary {
            rows,
            skipped_rows: skipped,
        },
    ))
}

/// Writes features then the target column; class targets use their raw labels.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = dataset.feature_names.clone();
    header.push(dataset.target_name.clone());
    writer.write_record(&header)?;
    for (row, y) in dataset.x.rows().into_iter().zip(&dataset.y) {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(match &dataset.class_labels {
            Some(labels) => labels[usize::from(*y == 1.0)].clone(),
            None => y.to_string(),
        });
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
