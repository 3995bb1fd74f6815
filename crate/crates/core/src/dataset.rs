//! In-memory tabular data with explicit missingness.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("response column `{0}` not found")]
    MissingResponseColumn(String),
    #[error("response column has a missing value at row {row}")]
    MissingInResponse { row: usize },
    #[error("duplicate column name `{0}`")]
    DuplicateColumnName(String),
    #[error("column {0} has an empty name")]
    EmptyColumnName(usize),
    #[error("column `{name}` has {found} rows, expected {expected}")]
    RaggedColumn {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{found} row labels for {expected} rows")]
    RowLabelCount { expected: usize, found: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },
    #[error("dataset needs at least 2 rows, found {0}")]
    TooFewRows(usize),
    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("division by zero at position {0}")]
    DivisionByZero(usize),
    #[error("series needs at least 2 values")]
    TooShort,
}

/// Summary statistics over the non-missing entries of a column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub missing_count: usize,
}

impl ColumnStats {
    /// Returns `None` when every entry is missing.
    pub fn compute(values: &[Option<f64>]) -> Option<ColumnStats> {
        let present: Vec<f64> = values.iter().flatten().copied().collect();
        if present.is_empty() {
            return None;
        }
        let n = present.len();
        let mean = present.iter().sum::<f64>() / n as f64;
        let ss: f64 = present.iter().map(|v| (v - mean) * (v - mean)).sum();
        let std_dev = if n > 1 {
            libm::sqrt(ss / (n - 1) as f64)
        } else {
            0.0
        };
        let min = present.iter().copied().fold(f64::INFINITY, f64::min);
        let max = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(ColumnStats {
            mean,
            std_dev,
            min,
            max,
            count: n,
            missing_count: values.len() - n,
        })
    }
}

/// Named numeric columns, one of which is the response.
///
/// Storage is column-major. Cells are `None` when missing; the response
/// column never contains missing cells. Instances are immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    column_names: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
    response_index: usize,
    row_labels: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        column_names: Vec<String>,
        columns: Vec<Vec<Option<f64>>>,
        response_index: usize,
        row_labels: Option<Vec<String>>,
    ) -> Result<Self, DatasetError> {
        assert_eq!(
            column_names.len(),
            columns.len(),
            "one name per column required"
        );
        for (i, name) in column_names.iter().enumerate() {
            if name.is_empty() {
                return Err(DatasetError::EmptyColumnName(i));
            }
            if column_names[..i].contains(name) {
                return Err(DatasetError::DuplicateColumnName(name.clone()));
            }
        }
        if response_index >= column_names.len() {
            return Err(DatasetError::MissingResponseColumn(alloc::format!(
                "#{response_index}"
            )));
        }
        let n_rows = columns[response_index].len();
        for (name, col) in column_names.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(DatasetError::RaggedColumn {
                    name: name.clone(),
                    expected: n_rows,
                    found: col.len(),
                });
            }
        }
        for (c, col) in columns.iter().enumerate() {
            for (r, v) in col.iter().enumerate() {
                if let Some(x) = v {
                    if !x.is_finite() {
                        return Err(DatasetError::NonFiniteValue { row: r, col: c });
                    }
                }
            }
        }
        if let Some(row) = columns[response_index].iter().position(Option::is_none) {
            return Err(DatasetError::MissingInResponse { row });
        }
        if n_rows < 2 {
            return Err(DatasetError::TooFewRows(n_rows));
        }
        if let Some(labels) = &row_labels {
            if labels.len() != n_rows {
                return Err(DatasetError::RowLabelCount {
                    expected: n_rows,
                    found: labels.len(),
                });
            }
        }
        Ok(Dataset {
            column_names,
            columns,
            response_index,
            row_labels,
        })
    }

    /// Builds a dataset from named columns, locating the response by name.
    pub fn from_columns(
        named: Vec<(String, Vec<Option<f64>>)>,
        response: &str,
    ) -> Result<Self, DatasetError> {
        let response_index = named
            .iter()
            .position(|(n, _)| n == response)
            .ok_or_else(|| DatasetError::MissingResponseColumn(response.into()))?;
        let (names, columns) = named.into_iter().unzip();
        Dataset::new(names, columns, response_index, None)
    }

    /// Convenience constructor for fully observed data.
    pub fn from_dense(
        predictors: &[(&str, &[f64])],
        response: (&str, &[f64]),
    ) -> Result<Self, DatasetError> {
        let mut named: Vec<(String, Vec<Option<f64>>)> = Vec::with_capacity(predictors.len() + 1);
        named.push((response.0.into(), response.1.iter().map(|&v| Some(v)).collect()));
        for (name, values) in predictors {
            named.push(((*name).into(), values.iter().map(|&v| Some(v)).collect()));
        }
        Dataset::from_columns(named, response.0)
    }

    pub fn with_row_labels(self, labels: Vec<String>) -> Result<Self, DatasetError> {
        Dataset::new(
            self.column_names,
            self.columns,
            self.response_index,
            Some(labels),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.columns[self.response_index].len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn n_predictors(&self) -> usize {
        self.columns.len() - 1
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn response_index(&self) -> usize {
        self.response_index
    }

    pub fn response_name(&self) -> &str {
        &self.column_names[self.response_index]
    }

    pub fn row_labels(&self) -> Option<&[String]> {
        self.row_labels.as_deref()
    }

    pub fn column(&self, index: usize) -> &[Option<f64>] {
        &self.columns[index]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|n| n == name)
    }

    pub fn response(&self) -> Vec<f64> {
        self.columns[self.response_index]
            .iter()
            .map(|v| v.expect("response is complete"))
            .collect()
    }

    /// Column indices of all predictors, in file order.
    pub fn predictor_indices(&self) -> Vec<usize> {
        (0..self.n_cols())
            .filter(|&i| i != self.response_index)
            .collect()
    }

    pub fn predictor_names(&self) -> Vec<String> {
        self.predictor_indices()
            .into_iter()
            .map(|i| self.column_names[i].clone())
            .collect()
    }

    /// Predictor columns in file order, as consumed by trees and models.
    pub fn features(&self) -> FeatureMatrix {
        let idx = self.predictor_indices();
        FeatureMatrix {
            n_rows: self.n_rows(),
            names: idx.iter().map(|&i| self.column_names[i].clone()).collect(),
            columns: idx.iter().map(|&i| self.columns[i].clone()).collect(),
        }
    }

    /// Keeps the response and the named predictors (in the order given).
    pub fn select_predictors<S: AsRef<str>>(&self, names: &[S]) -> Result<Dataset, DatasetError> {
        let mut new_names = Vec::with_capacity(names.len() + 1);
        let mut new_cols = Vec::with_capacity(names.len() + 1);
        new_names.push(self.response_name().into());
        new_cols.push(self.columns[self.response_index].clone());
        for name in names {
            let name = name.as_ref();
            let idx = self
                .column_index(name)
                .filter(|&i| i != self.response_index)
                .ok_or_else(|| DatasetError::UnknownColumn(name.into()))?;
            new_names.push(name.into());
            new_cols.push(self.columns[idx].clone());
        }
        Dataset::new(new_names, new_cols, 0, self.row_labels.clone())
    }

    pub fn column_stats(&self, index: usize) -> Option<ColumnStats> {
        ColumnStats::compute(&self.columns[index])
    }

    /// Rescales every predictor to mean 0 and sample standard deviation 1
    /// over its non-missing entries. Missing cells stay missing. The
    /// response is rescaled too when `include_response` is set.
    pub fn standardize(&self, include_response: bool) -> Result<Dataset, DatasetError> {
        let mut columns = self.columns.clone();
        for (i, col) in columns.iter_mut().enumerate() {
            if i == self.response_index && !include_response {
                continue;
            }
            let stats = ColumnStats::compute(col)
                .filter(|s| s.std_dev > 0.0)
                .ok_or_else(|| DatasetError::ZeroVariance(self.column_names[i].clone()))?;
            for v in col.iter_mut().flatten() {
                *v = (*v - stats.mean) / stats.std_dev;
            }
        }
        Dataset::new(
            self.column_names.clone(),
            columns,
            self.response_index,
            self.row_labels.clone(),
        )
    }
}

/// Column-major predictor matrix with missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    names: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
}

impl FeatureMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<Option<f64>>>) -> Result<Self, DatasetError> {
        assert_eq!(names.len(), columns.len(), "one name per column required");
        let n_rows = columns.first().map_or(0, Vec::len);
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(DatasetError::RaggedColumn {
                    name: name.clone(),
                    expected: n_rows,
                    found: col.len(),
                });
            }
        }
        Ok(FeatureMatrix {
            n_rows,
            names,
            columns,
        })
    }

    /// Fully observed matrix from dense columns, named `x0, x1, ...`.
    pub fn from_dense(columns: &[Vec<f64>]) -> Self {
        let names = (0..columns.len()).map(|i| alloc::format!("x{i}")).collect();
        let cols = columns
            .iter()
            .map(|c| c.iter().map(|&v| Some(v)).collect())
            .collect();
        FeatureMatrix::new(names, cols).expect("dense columns must have equal length")
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    #[inline]
    pub fn get(&self, row: usize, feature: usize) -> Option<f64> {
        self.columns[feature][row]
    }

    pub fn column(&self, feature: usize) -> &[Option<f64>] {
        &self.columns[feature]
    }

    pub fn row(&self, row: usize) -> Vec<Option<f64>> {
        self.columns.iter().map(|c| c[row]).collect()
    }

    pub(crate) fn column_mut(&mut self, feature: usize) -> &mut [Option<f64>] {
        &mut self.columns[feature]
    }
}

/// Percent change between consecutive observations:
/// `100 * (s[t+1] - s[t]) / s[t]`.
pub fn yoy_transform(series: &[f64]) -> Result<Vec<f64>, DatasetError> {
    if series.len() < 2 {
        return Err(DatasetError::TooShort);
    }
    series
        .windows(2)
        .enumerate()
        .map(|(t, w)| {
            if w[0] == 0.0 {
                Err(DatasetError::DivisionByZero(t))
            } else {
                Ok(100.0 * (w[1] - w[0]) / w[0])
            }
        })
        .collect()
}
