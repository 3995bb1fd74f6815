//! Regression baselines: OLS significance screening, beta weights,
//! usefulness, general dominance and relative weights.
//!
//! All estimators work on complete cases: rows with a missing cell in the
//! response or any predictor are dropped (and reported) before fitting.

mod dominance;
mod ols;
mod relweights;
pub mod student_t;

use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::dataset::Dataset;

pub use dominance::{dominance_analysis, DominanceResult, MAX_DOMINANCE_PREDICTORS};
pub use ols::{ols_fit, significant_features, usefulness, usefulness_all, CoefficientRow, RegressionSummary};
pub use relweights::{relative_weights, RelativeWeightsResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconometricsError {
    #[error("design matrix is rank deficient (columns: {0:?})")]
    RankDeficient(Vec<String>),
    #[error("{n_used} complete rows cannot fit {n_params} parameters with residual degrees of freedom")]
    InsufficientRows { n_used: usize, n_params: usize },
    #[error("response has zero variance over the complete rows")]
    ConstantResponse,
    #[error("dataset has no predictors")]
    NoPredictors,
    #[error("{0} predictors exceed the dominance analysis limit")]
    TooManyPredictors(usize),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("alpha must lie strictly between 0 and 1, got {0}")]
    InvalidAlpha(f64),
}

/// Complete-case view: response and predictor columns restricted to rows
/// with no missing cell.
#[derive(Debug, Clone)]
pub(crate) struct CompleteCases {
    pub names: Vec<String>,
    pub y: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub dropped: Vec<usize>,
}

impl CompleteCases {
    pub fn from_dataset(dataset: &Dataset) -> Self {
        let predictors = dataset.predictor_indices();
        let response = dataset.response();
        let mut y = Vec::with_capacity(dataset.n_rows());
        let mut x = alloc::vec![Vec::with_capacity(dataset.n_rows()); predictors.len()];
        let mut dropped = Vec::new();
        for (r, &yv) in response.iter().enumerate() {
            let row: Option<Vec<f64>> = predictors.iter().map(|&c| dataset.column(c)[r]).collect();
            match row {
                Some(values) => {
                    y.push(yv);
                    for (col, v) in x.iter_mut().zip(values) {
                        col.push(v);
                    }
                }
                None => dropped.push(r),
            }
        }
        CompleteCases {
            names: dataset.predictor_names(),
            y,
            x,
            dropped,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.len()
    }

    /// Errors unless there are more rows than intercept + predictors.
    pub fn require_rows(&self) -> Result<(), EconometricsError> {
        if self.p() == 0 {
            return Err(EconometricsError::NoPredictors);
        }
        if self.n() <= self.p() + 1 {
            return Err(EconometricsError::InsufficientRows {
                n_used: self.n(),
                n_params: self.p() + 1,
            });
        }
        Ok(())
    }

    pub fn sst(&self) -> Result<f64, EconometricsError> {
        let mean = mean(&self.y);
        let sst: f64 = self.y.iter().map(|v| (v - mean) * (v - mean)).sum();
        if sst == 0.0 {
            Err(EconometricsError::ConstantResponse)
        } else {
            Ok(sst)
        }
    }

    /// R² of the intercept model plus the predictors selected by `mask`.
    pub fn r_squared_subset(&self, mask: u64, sst: f64) -> Result<f64, EconometricsError> {
        let cols: Vec<&[f64]> = (0..self.p())
            .filter(|j| mask & (1 << j) != 0)
            .map(|j| self.x[j].as_slice())
            .collect();
        if cols.is_empty() {
            return Ok(0.0);
        }
        let fit = ols::least_squares(&self.y, &cols).map_err(|bad| {
            let names = (0..self.p())
                .filter(|j| mask & (1 << j) != 0)
                .map(|j| self.names[j].clone())
                .collect::<Vec<_>>();
            EconometricsError::RankDeficient(bad.into_iter().map(|k| names[k].clone()).collect())
        })?;
        Ok((1.0 - fit.sse / sst).clamp(0.0, 1.0))
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n - 1).
pub(crate) fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    libm::sqrt(v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64)
}

pub(crate) fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / libm::sqrt(saa * sbb)
}
