//! Univariate partial dependence.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::gbm::{GbmError, GbmModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdpError {
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("feature `{0}` has no observed values")]
    AllMissingFeature(String),
    #[error("grid size must be at least 2")]
    InvalidGridSize,
    #[error(transparent)]
    Model(#[from] GbmError),
}

/// Centered partial dependence of the response on one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpCurve {
    pub feature: String,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub n_records_averaged: usize,
}

/// Grid over the observed values of a column: the sorted distinct values
/// when there are at most `grid_size` of them, else `grid_size` evenly
/// spaced points from min to max.
pub fn feature_grid(column: &[Option<f64>], grid_size: usize) -> Option<Vec<f64>> {
    let mut distinct: Vec<f64> = column.iter().flatten().copied().collect();
    if distinct.is_empty() {
        return None;
    }
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() <= grid_size {
        return Some(distinct);
    }
    let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
    let step = (hi - lo) / (grid_size - 1) as f64;
    let mut grid: Vec<f64> = (0..grid_size).map(|i| lo + step * i as f64).collect();
    grid[grid_size - 1] = hi;
    Some(grid)
}

/// Sweeps `feature` over its grid for every record (other columns held at
/// the record's values), averages the per-record curves pointwise and
/// subtracts the mean of the averaged curve.
pub fn partial_dependence(
    model: &GbmModel,
    dataset: &Dataset,
    feature: &str,
    grid_size: usize,
) -> Result<PdpCurve, PdpError> {
    if grid_size < 2 {
        return Err(PdpError::InvalidGridSize);
    }
    let features = model.matching_features(dataset)?;
    let f = model
        .feature_names
        .iter()
        .position(|n| n == feature)
        .ok_or_else(|| PdpError::UnknownFeature(feature.into()))?;
    let grid = feature_grid(features.column(f), grid_size)
        .ok_or_else(|| PdpError::AllMissingFeature(feature.into()))?;

    let n = features.n_rows();
    let mut values: Vec<f64> = grid
        .iter()
        .map(|&g| {
            let total: f64 = (0..n)
                .map(|r| {
                    model.predict_with(|j| if j == f { Some(g) } else { features.get(r, j) })
                })
                .sum();
            total / n as f64
        })
        .collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in &mut values {
        *v -= mean;
    }
    Ok(PdpCurve {
        feature: feature.into(),
        grid,
        values,
        n_records_averaged: n,
    })
}
