//! Stochastic gradient boosting of regression trees under squared loss.
//!
//! The model starts from the mean of the response. Each stage draws a row
//! subsample without replacement, fits a tree to the current residuals on
//! that subsample, and adds the tree with its leaves scaled by the learn
//! rate. Leaf values are per-leaf residual means, which is the exact line
//! search for squared loss, so the step length is always 1.

use alloc::string::String;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, FeatureMatrix};
use crate::numeric::shifted_mean;
use crate::rng;
use crate::tree::{grow_tree, RegressionTree, TreeConfig, TreeError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GbmError {
    #[error("invalid boosting config: {0}")]
    InvalidConfig(&'static str),
    #[error("subsample of {subsample} rows cannot hold two leaves of {min_obs_leaf}")]
    SubsampleTooSmall { subsample: usize, min_obs_leaf: usize },
    #[error("expected {expected} predictor values, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("dataset predictors do not match the model's features")]
    FeatureMismatch,
    #[error("response has zero variance")]
    ZeroVarianceResponse,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// Boosting hyperparameters. The default is the 50,000-tree, 0.0001
/// learn-rate, 0.95 subsample, six-leaf, three-per-leaf configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmConfig {
    pub n_trees: usize,
    pub learn_rate: f64,
    pub subsample_fraction: f64,
    pub max_leaves: usize,
    pub min_obs_leaf: usize,
    pub seed: u64,
    /// Training MSE is recorded every this many stages.
    pub mse_trace_stride: usize,
}

impl Default for GbmConfig {
    fn default() -> Self {
        GbmConfig {
            n_trees: 50_000,
            learn_rate: 0.0001,
            subsample_fraction: 0.95,
            max_leaves: 6,
            min_obs_leaf: 3,
            seed: 1,
            mse_trace_stride: 100,
        }
    }
}

impl GbmConfig {
    pub fn validate(&self) -> Result<(), GbmError> {
        if self.n_trees == 0 {
            return Err(GbmError::InvalidConfig("n_trees must be at least 1"));
        }
        if !(self.learn_rate > 0.0 && self.learn_rate <= 1.0) {
            return Err(GbmError::InvalidConfig("learn_rate must be in (0, 1]"));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(GbmError::InvalidConfig("subsample_fraction must be in (0, 1]"));
        }
        if self.max_leaves == 0 {
            return Err(GbmError::InvalidConfig("max_leaves must be at least 1"));
        }
        if self.min_obs_leaf == 0 {
            return Err(GbmError::InvalidConfig("min_obs_leaf must be at least 1"));
        }
        if self.mse_trace_stride == 0 {
            return Err(GbmError::InvalidConfig("mse_trace_stride must be at least 1"));
        }
        Ok(())
    }

    /// Rows drawn per stage for a training set of `n_rows`.
    pub fn subsample_size(&self, n_rows: usize) -> usize {
        (libm::round(self.subsample_fraction * n_rows as f64) as usize).min(n_rows)
    }

    fn tree_config(&self) -> TreeConfig {
        TreeConfig {
            max_leaves: self.max_leaves,
            min_obs_leaf: self.min_obs_leaf,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MseTracePoint {
    pub iteration: usize,
    pub mse: f64,
}

/// A fitted ensemble. Shrinkage is already folded into the leaf values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub config: GbmConfig,
    pub baseline: f64,
    pub feature_names: Vec<String>,
    pub trees: Vec<RegressionTree>,
    pub mse_trace: Vec<MseTracePoint>,
}

/// Fits the ensemble on all predictors of `dataset`.
pub fn fit_gbm(dataset: &Dataset, config: &GbmConfig) -> Result<GbmModel, GbmError> {
    fit_gbm_features(&dataset.features(), &dataset.response(), config)
}

/// Fits the ensemble on an explicit feature matrix and response.
pub fn fit_gbm_features(
    features: &FeatureMatrix,
    response: &[f64],
    config: &GbmConfig,
) -> Result<GbmModel, GbmError> {
    config.validate()?;
    let n = response.len();
    assert_eq!(features.n_rows(), n, "feature rows must match the response");
    let subsample = config.subsample_size(n);
    if subsample < 2 * config.min_obs_leaf {
        return Err(GbmError::SubsampleTooSmall {
            subsample,
            min_obs_leaf: config.min_obs_leaf,
        });
    }

    let baseline = shifted_mean(response.iter().copied());
    let mut fitted = alloc::vec![baseline; n];
    let mut residuals = alloc::vec![0.0; n];
    let mut trees = Vec::with_capacity(config.n_trees);
    let mut mse_trace = Vec::with_capacity(config.n_trees / config.mse_trace_stride + 2);
    mse_trace.push(MseTracePoint {
        iteration: 0,
        mse: mse(response, &fitted),
    });

    for stage in 1..=config.n_trees {
        let mut stream = rng::stage_stream(config.seed, stage as u64);
        let mut rows = rng::sample_without_replacement(&mut stream, n, subsample);
        rows.sort_unstable();
        for (r, (y, f)) in residuals.iter_mut().zip(response.iter().zip(&fitted)) {
            *r = y - f;
        }
        let mut tree = grow_tree(features, &residuals, &rows, config.tree_config())?;
        tree.scale_leaves(config.learn_rate);
        for (i, f) in fitted.iter_mut().enumerate() {
            *f += tree.predict_row(features, i);
        }
        trees.push(tree);
        if stage % config.mse_trace_stride == 0 || stage == config.n_trees {
            mse_trace.push(MseTracePoint {
                iteration: stage,
                mse: mse(response, &fitted),
            });
        }
    }

    Ok(GbmModel {
        config: *config,
        baseline,
        feature_names: features.names().to_vec(),
        trees,
        mse_trace,
    })
}

fn mse(y: &[f64], fitted: &[f64]) -> f64 {
    y.iter()
        .zip(fitted)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / y.len() as f64
}

impl GbmModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Prediction for one row of predictor values in model feature order.
    pub fn predict(&self, row: &[Option<f64>]) -> Result<f64, GbmError> {
        if row.len() != self.n_features() {
            return Err(GbmError::ArityMismatch {
                expected: self.n_features(),
                found: row.len(),
            });
        }
        Ok(self.predict_with(|f| row[f]))
    }

    /// Prediction with feature values supplied by a lookup.
    #[inline]
    pub fn predict_with<F: Fn(usize) -> Option<f64>>(&self, value: F) -> f64 {
        self.baseline + self.trees.iter().map(|t| t.predict_with(&value)).sum::<f64>()
    }

    /// Prediction using only the first `stages` trees.
    pub fn predict_staged(&self, row: &[Option<f64>], stages: usize) -> f64 {
        self.baseline
            + self.trees[..stages]
                .iter()
                .map(|t| t.predict(row))
                .sum::<f64>()
    }

    pub fn predict_row(&self, features: &FeatureMatrix, row: usize) -> f64 {
        self.predict_with(|f| features.get(row, f))
    }

    pub fn predict_all(&self, features: &FeatureMatrix) -> Vec<f64> {
        (0..features.n_rows())
            .map(|r| self.predict_row(features, r))
            .collect()
    }

    /// Predictor matrix of `dataset` checked against the model's features.
    pub fn matching_features(&self, dataset: &Dataset) -> Result<FeatureMatrix, GbmError> {
        let features = dataset.features();
        if features.n_features() != self.n_features() {
            return Err(GbmError::ArityMismatch {
                expected: self.n_features(),
                found: features.n_features(),
            });
        }
        if features.names() != self.feature_names.as_slice() {
            return Err(GbmError::FeatureMismatch);
        }
        Ok(features)
    }

    pub fn final_mse(&self) -> f64 {
        self.mse_trace.last().map_or(f64::NAN, |p| p.mse)
    }

    /// Training MSE recorded at `iteration`, if it is a trace point.
    pub fn mse_at(&self, iteration: usize) -> Option<f64> {
        self.mse_trace
            .iter()
            .find(|p| p.iteration == iteration)
            .map(|p| p.mse)
    }

    /// First trace iteration whose MSE is within `tolerance` (relative) of
    /// the final MSE and stays there for the rest of the trace.
    pub fn flatline_iteration(&self, tolerance: f64) -> Option<usize> {
        let last = self.final_mse();
        let band = tolerance * last.abs();
        let mut candidate = None;
        for p in &self.mse_trace {
            if (p.mse - last).abs() <= band {
                candidate.get_or_insert(p.iteration);
            } else {
                candidate = None;
            }
        }
        candidate
    }
}

/// `1 - SSE / SST` of the model's predictions on `dataset`.
pub fn r_squared(model: &GbmModel, dataset: &Dataset) -> Result<f64, GbmError> {
    let features = model.matching_features(dataset)?;
    let y = dataset.response();
    let predictions = model.predict_all(&features);
    r_squared_of(&y, &predictions)
}

pub(crate) fn r_squared_of(y: &[f64], predictions: &[f64]) -> Result<f64, GbmError> {
    let mean = shifted_mean(y.iter().copied());
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if sst == 0.0 {
        return Err(GbmError::ZeroVarianceResponse);
    }
    let sse: f64 = y
        .iter()
        .zip(predictions)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(1.0 - sse / sst)
}
