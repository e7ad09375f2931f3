use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Where a data matrix came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Generator id (`random`, `cytometer`, ...) or `csv:<path>` for loaded files.
    pub generator: String,
    pub params: Vec<(String, f64)>,
    pub seed: Option<u64>,
    pub stream_index: Option<u64>,
}

impl Provenance {
    pub fn external(source: impl Into<String>) -> Self {
        Provenance {
            generator: source.into(),
            params: Vec::new(),
            seed: None,
            stream_index: None,
        }
    }
}

/// An `n x d` observation table with named features and optional
/// ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Matrix,
    feature_names: Vec<String>,
    truth_labels: Option<Vec<usize>>,
    provenance: Provenance,
}

/// `f1, f2, ..., fd`.
pub fn default_feature_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("f{j}")).collect()
}

impl DataMatrix {
    pub fn new(
        values: Matrix,
        feature_names: Vec<String>,
        truth_labels: Option<Vec<usize>>,
        provenance: Provenance,
    ) -> Result<Self> {
        if feature_names.len() != values.cols() {
            return Err(Error::invalid(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                values.cols()
            )));
        }
        if let Some(labels) = &truth_labels {
            if labels.len() != values.rows() {
                return Err(Error::invalid(format!(
                    "{} truth labels for {} rows",
                    labels.len(),
                    values.rows()
                )));
            }
        }
        Ok(DataMatrix {
            values,
            feature_names,
            truth_labels,
            provenance,
        })
    }

    /// Wraps a bare matrix with default names and no labels.
    pub fn from_matrix(values: Matrix) -> Self {
        let names = default_feature_names(values.cols());
        DataMatrix {
            values,
            feature_names: names,
            truth_labels: None,
            provenance: Provenance::external("matrix"),
        }
    }

    pub fn n(&self) -> usize {
        self.values.rows()
    }

    pub fn d(&self) -> usize {
        self.values.cols()
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn truth_labels(&self) -> Option<&[usize]> {
        self.truth_labels.as_deref()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Same names, labels and provenance around transformed values.
    pub fn with_values(&self, values: Matrix) -> Result<Self> {
        if values.rows() != self.n() || values.cols() != self.d() {
            return Err(Error::invalid(
                "transformed values changed the matrix shape",
            ));
        }
        Ok(DataMatrix {
            values,
            ..self.clone()
        })
    }

    pub fn with_provenance(self, provenance: Provenance) -> Self {
        DataMatrix { provenance, ..self }
    }

    /// Writes `name1,..,named[,label]` followed by one line per row. Numbers
    /// use the shortest representation that round-trips.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        if self.truth_labels.is_some() {
            header.push("label");
        }
        w.write_record(&header)?;
        let mut record = Vec::with_capacity(header.len());
        for i in 0..self.n() {
            record.clear();
            record.extend(self.values.row(i).iter().map(|v| v.to_string()));
            if let Some(labels) = &self.truth_labels {
                record.push(labels[i].to_string());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}
