use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, Provenance};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Rows with an L2 norm below this cannot be normalized.
pub const NEAR_ZERO_NORM: f64 = 1e-12;

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationModel {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl StandardizationModel {
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            return Err(Error::invalid(format!(
                "model has {} features, matrix has {}",
                self.mean.len(),
                x.cols()
            )));
        }
        let mut z = x.clone();
        for i in 0..z.rows() {
            for (j, v) in z.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
        Ok(z)
    }
}

/// Reads the named columns of a headed CSV file, in the order given.
///
/// When `label_column` is set, that column is read as non-negative integer
/// truth labels. Empty, non-numeric and non-finite cells are errors; row
/// numbers in errors count data rows from 1.
pub fn load_csv(
    path: impl AsRef<Path>,
    feature_names: &[String],
    label_column: Option<&str>,
) -> Result<DataMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let data = read_csv(file, feature_names, label_column)?;
    Ok(data.with_provenance(Provenance::external(format!("csv:{}", path.display()))))
}

/// Column names in the header row of a CSV file.
pub fn csv_columns(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect())
}

/// [`load_csv`] over any reader.
pub fn read_csv<R: std::io::Read>(
    input: R,
    feature_names: &[String],
    label_column: Option<&str>,
) -> Result<DataMatrix> {
    if feature_names.is_empty() {
        return Err(Error::invalid("no feature columns requested"));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = reader.headers()?.clone();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let columns = feature_names
        .iter()
        .map(|name| find(name))
        .collect::<Result<Vec<_>>>()?;
    let label_idx = label_column.map(find).transpose()?;

    let mut values = Vec::new();
    let mut labels = label_idx.map(|_| Vec::new());
    let mut n = 0;
    for record in reader.records() {
        let record = record?;
        n += 1;
        for (name, &c) in feature_names.iter().zip(&columns) {
            let cell = record.get(c).unwrap_or("").trim();
            let parsed = cell.parse::<f64>().ok().filter(|v| v.is_finite());
            match parsed {
                Some(v) => values.push(v),
                None => {
                    return Err(Error::Parse {
                        row: n,
                        column: name.clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        if let (Some(c), Some(labels)) = (label_idx, labels.as_mut()) {
            let cell = record.get(c).unwrap_or("").trim();
            match cell.parse::<usize>() {
                Ok(v) => labels.push(v),
                Err(_) => {
                    return Err(Error::Parse {
                        row: n,
                        column: label_column.unwrap_or_default().to_string(),
                        value: cell.to_string(),
                    })
                }
            }
        }
    }
    if n == 0 {
        return Err(Error::invalid("the CSV file has no data rows"));
    }
    DataMatrix::new(
        Matrix::new(n, feature_names.len(), values)?,
        feature_names.to_vec(),
        labels,
        Provenance::external("csv"),
    )
}

/// Z-scores every column with its mean and population standard deviation.
pub fn standardize(x: &DataMatrix) -> Result<(DataMatrix, StandardizationModel)> {
    let m = x.values();
    let n = m.rows() as f64;
    let mean = m.column_means();
    let mut scale = vec![0.0; m.cols()];
    for row in m.row_iter() {
        for (j, v) in row.iter().enumerate() {
            let c = v - mean[j];
            scale[j] += c * c;
        }
    }
    for (j, s) in scale.iter_mut().enumerate() {
        *s = (*s / n).sqrt();
        if !s.is_finite() || !mean[j].is_finite() {
            return Err(Error::Numeric(format!(
                "feature `{}` overflows when standardized",
                x.feature_names()[j]
            )));
        }
        // A constant column can leave rounding noise after centering.
        if !(*s > 1e-12 * mean[j].abs()) {
            return Err(Error::ZeroVariance(x.feature_names()[j].clone()));
        }
    }
    let model = StandardizationModel { mean, scale };
    let z = model.apply(m)?;
    Ok((x.with_values(z)?, model))
}

/// Scales every row to unit L2 norm.
pub fn normalize_rows(z: &DataMatrix) -> Result<DataMatrix> {
    z.with_values(normalize_matrix_rows(z.values())?)
}

pub fn normalize_matrix_rows(m: &Matrix) -> Result<Matrix> {
    let mut out = m.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let norm = crate::linalg::norm(row);
        if !(norm >= NEAR_ZERO_NORM) {
            return Err(Error::NearZeroRow(i));
        }
        for v in row.iter_mut() {
            *v /= norm;
        }
    }
    Ok(out)
}
