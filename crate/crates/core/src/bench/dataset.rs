use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{ExplanationInstance, ModelSpec};

/// Tabular data to explain plus the baseline row that fills absent features.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub baseline_row: Vec<f64>,
}

/// Reads a headed numeric CSV of rows and a headed one-row baseline CSV.
pub fn load_dataset(csv_path: impl AsRef<Path>, baseline_path: impl AsRef<Path>) -> Result<Dataset> {
    let csv_path = csv_path.as_ref();
    let (features, rows) = read_numeric_csv(csv_path)?;
    let (_, baseline_rows) = read_numeric_csv(baseline_path.as_ref())?;
    let baseline_row = match baseline_rows.as_slice() {
        [row] => row.clone(),
        other => {
            return Err(Error::data(format!(
                "{}: baseline must have exactly one row, found {}",
                baseline_path.as_ref().display(),
                other.len()
            )))
        }
    };
    if baseline_row.len() != features.len() {
        return Err(Error::data(format!(
            "baseline has {} columns but {} has {}",
            baseline_row.len(),
            csv_path.display(),
            features.len()
        )));
    }
    let name = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(Dataset { name, features, rows, baseline_row })
}

/// Header plus numeric rows. Row numbers in errors are 1-based data rows.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::data(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::data(format!("{}: missing header row", path.display())));
    }
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row_no = idx + 1;
        let record = record.map_err(|e| Error::data(format!("{}: row {row_no}: {e}", path.display())))?;
        if record.len() != header.len() {
            return Err(Error::data(format!(
                "{}: row {row_no} has {} fields, header has {}",
                path.display(),
                record.len(),
                header.len()
            )));
        }
        let values = record
            .iter()
            .enumerate()
            .map(|(col, cell)| {
                cell.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    Error::data(format!(
                        "{}: row {row_no}, column {:?}: {cell:?} is not a finite number",
                        path.display(),
                        header[col]
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    Ok((header, rows))
}

impl Dataset {
    pub fn d(&self) -> usize {
        self.features.len()
    }

    /// Instances for each row, optionally keeping only rows whose model
    /// output is below `negative_below` (the adverse-decision rows).
    pub fn instances(
        &self,
        model: &Arc<ModelSpec>,
        negative_below: Option<f64>,
        max_rows: Option<usize>,
    ) -> Result<Vec<(usize, ExplanationInstance)>> {
        if model.input_dim() != self.d() {
            return Err(Error::data(format!(
                "model expects {} features, dataset {} has {}",
                model.input_dim(),
                self.name,
                self.d()
            )));
        }
        let mut out = Vec::new();
        for (idx, row) in self.rows.iter().enumerate() {
            if max_rows.is_some_and(|m| out.len() >= m) {
                break;
            }
            if let Some(threshold) = negative_below {
                if model.evaluate(row)? >= threshold {
                    continue;
                }
            }
            let inst = ExplanationInstance::new(Arc::clone(model), row.clone(), self.baseline_row.clone())?;
            out.push((idx, inst));
        }
        Ok(out)
    }
}
